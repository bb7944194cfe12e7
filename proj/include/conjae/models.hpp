// The four architectures compared in the experiments, behind one
// predict / loss / train-batch interface:
//
//   ConjugacyAE  encoder -> phi^{-1}(T(phi(.))) -> decoder, latent transform fixed
//   LogisticAE   encoder -> c1 y + c2 y^2 -> decoder, c1/c2 trainable
//   FNN          plain supervised dense net
//   PINN         dense net with a map-residual penalty in the loss

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "maps.hpp"
#include "net.hpp"

namespace conjae {

enum class ModelVariant { ConjugacyAE, LogisticAE, FNN, PINN };

inline const char* model_variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::ConjugacyAE: return "conjugacy-ae";
        case ModelVariant::LogisticAE: return "logistic-ae";
        case ModelVariant::FNN: return "fnn";
        case ModelVariant::PINN: return "pinn";
    }
    return "?";
}

inline ModelVariant model_variant_from_name(const std::string& s) {
    if (s == "conjugacy-ae" || s == "model1") return ModelVariant::ConjugacyAE;
    if (s == "logistic-ae" || s == "model2") return ModelVariant::LogisticAE;
    if (s == "fnn" || s == "model3") return ModelVariant::FNN;
    if (s == "pinn" || s == "model4") return ModelVariant::PINN;
    throw std::invalid_argument("unknown model name: " + s);
}

struct ModelConfig {
    ModelVariant variant = ModelVariant::ConjugacyAE;
    std::vector<int> encoder_dims;  // the single net's dims for FNN/PINN
    std::vector<int> decoder_dims;  // unused for FNN/PINN
    Activation activation = Activation::SeLU;
    double c1_init = 3.5, c2_init = -3.5;  // LogisticAE only
    MapSpec target;                        // PINN residual target (and data source)
    double lambda_res = 1.0;               // PINN residual weight
    double recon_weight = 1.0, pred_weight = 1.0;
    double latent_clamp_eps = 1e-7;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double dropout_p = 0.0;  // train-time drop probability on hidden layers
    // The latent is the encoder's last layer output; when true that layer is
    // activated like a hidden layer, so the latent is a width-sized activated
    // representation rather than a linear scalar readout.
    bool latent_activated = false;

    bool is_autoencoder() const {
        return variant == ModelVariant::ConjugacyAE || variant == ModelVariant::LogisticAE;
    }
};

struct ModelState {
    ModelConfig cfg;
    DenseNet enc;  // the single net for FNN/PINN
    DenseNet dec;  // empty for FNN/PINN
    double c1 = 0.0, c2 = 0.0;
    OptimizerState opt_enc, opt_dec;
    ScalarAdam adam_c1, adam_c2;
};

inline ModelState init_model(const ModelConfig& cfg, double learning_rate, std::uint64_t seed) {
    ModelState st;
    st.cfg = cfg;
    st.enc = init_net(cfg.encoder_dims, cfg.activation, seed);
    st.opt_enc = OptimizerState::for_net(st.enc, learning_rate, cfg.optimizer);
    if (cfg.is_autoencoder()) {
        if (cfg.encoder_dims.back() != cfg.decoder_dims.front())
            throw std::invalid_argument("encoder output and decoder input dimensions must match");
        if (cfg.decoder_dims.back() != 1)
            throw std::invalid_argument("autoencoder decoder must produce scalars");
        if (cfg.latent_activated) st.enc.layers.back().act = cfg.activation;
        st.dec = init_net(cfg.decoder_dims, cfg.activation, seed ^ 0x9e3779b97f4a7c15ull);
        st.opt_dec = OptimizerState::for_net(st.dec, learning_rate, cfg.optimizer);
        st.c1 = cfg.c1_init;
        st.c2 = cfg.c2_init;
    }
    return st;
}

namespace detail {

// Latent transform of the conjugacy autoencoder applied to a 1xN latent row.
// Values are clamped into [eps, 1-eps] first; the clamp passes gradients
// through unchanged inside the interval and zeroes them outside.
struct LatentStep {
    Matrix value;
    Matrix deriv;  // d value / d latent
};

inline LatentStep conjugacy_latent(const Matrix& y, double eps) {
    LatentStep out;
    out.value = Matrix(y.rows(), y.cols());
    out.deriv = Matrix(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double v = y(i, j);
            bool inside = (v > eps) && (v < 1.0 - eps);
            double yc = inside ? v : (v <= eps ? eps : 1.0 - eps);
            out.value(i, j) = latent_logistic_step(yc);
            out.deriv(i, j) = inside ? latent_logistic_step_deriv(yc) : 0.0;
        }
    }
    return out;
}

}  // namespace detail

// Deterministic (dropout-free) prediction over a batch.
inline Matrix predict(const ModelState& st, const Matrix& x, const DropoutSpec* dropout = nullptr,
                      std::mt19937_64* rng = nullptr) {
    GradientTape t1, t2;
    // An activated latent is a hidden representation, so it is dropout-eligible.
    DropoutSpec enc_drop;
    const DropoutSpec* enc_dp = dropout;
    if (dropout && st.cfg.latent_activated) {
        enc_drop = *dropout;
        enc_drop.mask_final = true;
        enc_dp = &enc_drop;
    }
    switch (st.cfg.variant) {
        case ModelVariant::ConjugacyAE: {
            Matrix y = forward(st.enc, x, t1, enc_dp, rng);
            Matrix z = detail::conjugacy_latent(y, st.cfg.latent_clamp_eps).value;
            return forward(st.dec, z, t2, dropout, rng);
        }
        case ModelVariant::LogisticAE: {
            Matrix y = forward(st.enc, x, t1, enc_dp, rng);
            Matrix z = st.c1 * y + st.c2 * y.cwiseProduct(y);
            return forward(st.dec, z, t2, dropout, rng);
        }
        case ModelVariant::FNN:
        case ModelVariant::PINN:
            return forward(st.enc, x, t1, dropout, rng);
    }
    throw std::logic_error("unreachable model variant");
}

struct LossBreakdown {
    double recon = 0.0;
    double pred = 0.0;
    double total = 0.0;
};

inline double mse(const Matrix& a, const Matrix& b) {
    return (a - b).squaredNorm() / double(a.size());
}

// Loss decomposition without gradients: recon = MSE(U, dec(enc(U))) for the
// autoencoders (0 otherwise), pred = MSE(U, predict(x)), total = recon + pred
// at the configured weights. The PINN's residual term lives in model4_loss
// and in train_batch, not here.
inline LossBreakdown model_loss(const ModelState& st, const Matrix& x, const Matrix& y_true) {
    LossBreakdown out;
    Matrix p = predict(st, x);
    if (!p.allFinite()) throw std::runtime_error("non-finite model prediction");
    out.pred = mse(p, y_true);
    if (st.cfg.is_autoencoder() && st.enc.input_dim() == 1) {
        GradientTape t1, t2;
        Matrix rec = forward(st.dec, forward(st.enc, y_true, t1), t2);
        out.recon = mse(rec, y_true);
    }
    out.total = st.cfg.recon_weight * out.recon + st.cfg.pred_weight * out.pred;
    return out;
}

// PINN training objective on a batch: data mismatch plus map-residual term.
inline double model4_loss(const ModelState& st, const Matrix& x, const Matrix& y_true) {
    if (st.cfg.variant != ModelVariant::PINN) throw std::invalid_argument("model4_loss needs a PINN");
    Matrix p = predict(st, x);
    Matrix f(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        f(0, j) = eval_map(st.cfg.target, mod1(x(x.rows() - 1, j)));
    return mse(p, y_true) + st.cfg.lambda_res * mse(p, f);
}

struct BatchStats {
    double recon = 0.0;
    double pred = 0.0;
    double total = 0.0;
    double max_grad = 0.0;
};

namespace detail {

inline void accumulate(Gradients& into, const Gradients& g) {
    if (into.dW.empty()) {
        into = g;
        return;
    }
    for (std::size_t k = 0; k < g.dW.size(); ++k) {
        into.dW[k] += g.dW[k];
        into.db[k] += g.db[k];
    }
}

}  // namespace detail

// Loss-gradient bundle for one batch: averaged over the batch, with the
// reconstruction and prediction paths' contributions to the shared encoder
// and decoder summed.
struct ModelGradients {
    BatchStats stats;
    Gradients enc, dec;
    double dc1 = 0.0, dc2 = 0.0;
};

inline ModelGradients model_gradients(const ModelState& st, const Matrix& x, const Matrix& y_true,
                                      std::mt19937_64* drop_rng = nullptr) {
    const double invn = 1.0 / double(y_true.cols());
    const DropoutSpec drop{1.0 - st.cfg.dropout_p};
    const DropoutSpec enc_drop{1.0 - st.cfg.dropout_p, st.cfg.latent_activated};
    const DropoutSpec* dp = (st.cfg.dropout_p > 0.0 && drop_rng) ? &drop : nullptr;
    const DropoutSpec* enc_dp = (st.cfg.dropout_p > 0.0 && drop_rng) ? &enc_drop : nullptr;

    ModelGradients out;
    BatchStats& stats = out.stats;
    Gradients& g_enc = out.enc;
    Gradients& g_dec = out.dec;
    double& dc1 = out.dc1;
    double& dc2 = out.dc2;
    std::mt19937_64* rng_ptr = drop_rng;

    if (st.cfg.is_autoencoder()) {
        // prediction path
        GradientTape te, td;
        Matrix y = forward(st.enc, x, te, enc_dp, rng_ptr);
        Matrix z, dz_dy;
        if (st.cfg.variant == ModelVariant::ConjugacyAE) {
            auto ls = detail::conjugacy_latent(y, st.cfg.latent_clamp_eps);
            z = std::move(ls.value);
            dz_dy = std::move(ls.deriv);
        } else {
            z = st.c1 * y + st.c2 * y.cwiseProduct(y);
        }
        Matrix p = forward(st.dec, z, td, dp, rng_ptr);
        stats.pred = mse(p, y_true);
        Matrix dp_out = st.cfg.pred_weight * 2.0 * invn * (p - y_true);
        Gradients gd;
        Matrix dz = backward(st.dec, td, dp_out, gd);
        detail::accumulate(g_dec, gd);
        Matrix dy;
        if (st.cfg.variant == ModelVariant::ConjugacyAE) {
            dy = dz.cwiseProduct(dz_dy);
        } else {
            dc1 += dz.cwiseProduct(y).sum();
            dc2 += dz.cwiseProduct(y.cwiseProduct(y)).sum();
            dy = dz.cwiseProduct((st.c1 + 2.0 * st.c2 * y.array()).matrix());
        }
        Gradients ge;
        backward(st.enc, te, dy, ge);
        detail::accumulate(g_enc, ge);

        // reconstruction path: decoder(encoder(U(x))) vs U(x). Only defined
        // when the encoder consumes scalars (dropped in window mode).
        if (st.enc.input_dim() == 1 && st.cfg.recon_weight > 0.0) {
            GradientTape re, rd;
            Matrix h = forward(st.enc, y_true, re, enc_dp, rng_ptr);
            Matrix rec = forward(st.dec, h, rd, dp, rng_ptr);
            stats.recon = mse(rec, y_true);
            Matrix drec = st.cfg.recon_weight * 2.0 * invn * (rec - y_true);
            Gradients gd2, ge2;
            Matrix dh = backward(st.dec, rd, drec, gd2);
            backward(st.enc, re, dh, ge2);
            detail::accumulate(g_dec, gd2);
            detail::accumulate(g_enc, ge2);
        }
    } else {
        GradientTape t;
        Matrix p = forward(st.enc, x, t, dp, rng_ptr);
        stats.pred = mse(p, y_true);
        Matrix dp_out = 2.0 * invn * (p - y_true);
        if (st.cfg.variant == ModelVariant::PINN) {
            Matrix f(1, x.cols());
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                f(0, j) = eval_map(st.cfg.target, mod1(x(x.rows() - 1, j)));
            stats.pred += st.cfg.lambda_res * mse(p, f);
            dp_out += st.cfg.lambda_res * 2.0 * invn * (p - f);
        }
        Gradients g;
        backward(st.enc, t, dp_out, g);
        detail::accumulate(g_enc, g);
    }

    stats.total = st.cfg.recon_weight * stats.recon + st.cfg.pred_weight * stats.pred;
    stats.max_grad = g_enc.max_abs();
    if (!g_dec.dW.empty()) stats.max_grad = std::max(stats.max_grad, g_dec.max_abs());
    if (st.cfg.variant == ModelVariant::LogisticAE)
        stats.max_grad = std::max({stats.max_grad, std::abs(dc1), std::abs(dc2)});
    return out;
}

// One optimizer step on a batch (columns = samples). Returns the pre-update
// losses and the max absolute parameter gradient (vanishing-gradient probe).
inline BatchStats train_batch(ModelState& st, const Matrix& x, const Matrix& y_true,
                              std::mt19937_64& rng) {
    ModelGradients g = model_gradients(st, x, y_true, &rng);
    adam_step(st.enc, g.enc, st.opt_enc);
    if (st.cfg.is_autoencoder()) {
        adam_step(st.dec, g.dec, st.opt_dec);
        if (st.cfg.variant == ModelVariant::LogisticAE) {
            st.c1 += st.adam_c1.delta(g.dc1, st.opt_enc);
            st.c2 += st.adam_c2.delta(g.dc2, st.opt_enc);
        }
    }
    return g.stats;
}

// ---- checkpoints ---------------------------------------------------------

inline nlohmann::json map_spec_to_json(const MapSpec& s) {
    return {{"kind", map_kind_name(s.kind)}, {"mu", s.mu}, {"r", s.r}, {"z", s.z}, {"a", s.a}};
}

inline MapSpec map_spec_from_json(const nlohmann::json& j) {
    MapSpec s;
    s.kind = map_kind_from_name(j.at("kind").get<std::string>());
    s.mu = j.at("mu").get<double>();
    s.r = j.at("r").get<double>();
    s.z = j.at("z").get<double>();
    s.a = j.at("a").get<double>();
    return s;
}

inline nlohmann::json model_to_json(const ModelState& st) {
    nlohmann::json j;
    j["variant"] = model_variant_name(st.cfg.variant);
    j["c1"] = st.c1;
    j["c2"] = st.c2;
    j["target_spec"] = map_spec_to_json(st.cfg.target);
    j["activation"] = activation_name(st.cfg.activation);
    j["lambda_res"] = st.cfg.lambda_res;
    j["recon_weight"] = st.cfg.recon_weight;
    j["pred_weight"] = st.cfg.pred_weight;
    j["dropout_p"] = st.cfg.dropout_p;
    j["latent_activated"] = st.cfg.latent_activated;
    j["encoder"] = net_to_json(st.enc);
    j["optimizer_enc"] = optimizer_to_json(st.opt_enc);
    if (st.cfg.is_autoencoder()) {
        j["decoder"] = net_to_json(st.dec);
        j["optimizer_dec"] = optimizer_to_json(st.opt_dec);
    }
    return j;
}

inline ModelState model_from_json(const nlohmann::json& j) {
    ModelState st;
    st.cfg.variant = model_variant_from_name(j.at("variant").get<std::string>());
    st.cfg.activation = activation_from_name(j.at("activation").get<std::string>());
    st.cfg.target = map_spec_from_json(j.at("target_spec"));
    st.cfg.lambda_res = j.at("lambda_res").get<double>();
    st.cfg.recon_weight = j.at("recon_weight").get<double>();
    st.cfg.pred_weight = j.at("pred_weight").get<double>();
    st.cfg.dropout_p = j.at("dropout_p").get<double>();
    st.cfg.latent_activated = j.value("latent_activated", false);
    st.c1 = j.at("c1").get<double>();
    st.c2 = j.at("c2").get<double>();
    st.cfg.c1_init = st.c1;
    st.cfg.c2_init = st.c2;
    st.enc = net_from_json(j.at("encoder"));
    st.opt_enc = optimizer_from_json(j.at("optimizer_enc"), st.enc);
    std::vector<int> edims = j.at("encoder").at("layer_dims").get<std::vector<int>>();
    st.cfg.encoder_dims = edims;
    if (j.contains("decoder")) {
        st.dec = net_from_json(j.at("decoder"));
        st.opt_dec = optimizer_from_json(j.at("optimizer_dec"), st.dec);
        st.cfg.decoder_dims = j.at("decoder").at("layer_dims").get<std::vector<int>>();
    }
    return st;
}

}  // namespace conjae
