// Seeded data generation, the epoch loop, Appendix hyperparameter presets,
// evaluation, and the sliding-window orbit experiment.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "models.hpp"

namespace conjae {

// Seeded (x, U(x)) sample pairs with an 80/20 train/test split. Columns of X
// are inputs (scalar for the main experiments, orbit windows otherwise);
// Y holds the next-step targets.
struct Dataset {
    Matrix X;  // [d x n]
    Matrix Y;  // [1 x n]
    std::size_t split_index = 0;  // first `split_index` columns are train
    std::uint64_t seed = 0;
    MapSpec source;

    std::size_t size() const { return std::size_t(X.cols()); }
    std::size_t train_size() const { return split_index; }
    std::size_t test_size() const { return size() - split_index; }
};

inline Dataset make_dataset(const MapSpec& spec, std::size_t n, std::uint64_t seed) {
    validate_spec(spec);
    if (n < 10) throw std::invalid_argument("dataset needs at least 10 samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(n);
    for (auto& x : xs) x = u(rng);
    std::shuffle(xs.begin(), xs.end(), rng);

    Dataset d;
    d.seed = seed;
    d.source = spec;
    d.X = Matrix(1, Eigen::Index(n));
    d.Y = Matrix(1, Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
        d.X(0, Eigen::Index(i)) = xs[i];
        d.Y(0, Eigen::Index(i)) = eval_map(spec, xs[i]);
    }
    d.split_index = (n * 8) / 10;
    return d;
}

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 1000;
    double learning_rate = 0.005;
    int layer_width = 256;
    int layers_in = 1;   // hidden layers building the encoder
    int layers_out = 1;  // hidden layers building the decoder
    Activation activation = Activation::SeLU;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double dropout_p = 0.0;
};

// Per-map training hyperparameters. Piecewise maps use ReLU and the deeper,
// slower-learning settings; continuous maps use SeLU.
inline TrainConfig preset_for(MapKind kind) {
    TrainConfig c;
    switch (kind) {
        case MapKind::Logistic:
        case MapKind::Custom:
        case MapKind::KatsuraFukuda:
            c = {64, 1000, 0.005, 256, 1, 1, Activation::SeLU, 0};
            break;
        case MapKind::Doubling:
            c = {64, 2000, 0.001, 256, 3, 3, Activation::ReLU, 0};
            break;
        case MapKind::PomeauManneville:
            c = {64, 2000, 0.001, 64, 3, 3, Activation::ReLU, 0};
            break;
        case MapKind::Tent:
            c = {64, 1000, 0.005, 256, 1, 1, Activation::ReLU, 0};
            break;
    }
    return c;
}

// Layer shapes for a variant: autoencoders get a width-sized activated latent
// (encoder [in, width x layers_in], decoder [width, ..., 1]); the single-net
// models get all hidden layers in one stack so parameter counts stay
// comparable.
inline ModelConfig make_model_config(ModelVariant variant, const MapSpec& target,
                                     const TrainConfig& cfg, int input_dim = 1) {
    ModelConfig mc;
    mc.variant = variant;
    mc.activation = cfg.activation;
    mc.target = target;
    mc.dropout_p = cfg.dropout_p;
    mc.optimizer = cfg.optimizer;
    auto stack = [&](int in, int hidden) {
        std::vector<int> dims{in};
        for (int i = 0; i < hidden; ++i) dims.push_back(cfg.layer_width);
        dims.push_back(1);
        return dims;
    };
    if (mc.is_autoencoder()) {
        // The latent is the encoder's last width-sized activated layer
        // (h(x) = sigma(Wx+b)); the latent map applies elementwise and the
        // decoder reads the transformed representation back down to a scalar.
        mc.encoder_dims = {input_dim};
        for (int i = 0; i < cfg.layers_in; ++i) mc.encoder_dims.push_back(cfg.layer_width);
        mc.latent_activated = true;
        mc.decoder_dims = {cfg.layer_width};
        for (int i = 1; i < cfg.layers_out; ++i) mc.decoder_dims.push_back(cfg.layer_width);
        mc.decoder_dims.push_back(1);
        if (input_dim != 1) mc.recon_weight = 0.0;  // no scalar reconstruction in window mode
    } else {
        mc.encoder_dims = stack(input_dim, cfg.layers_in + cfg.layers_out);
    }
    return mc;
}

enum class TrainStatus { Completed, VanishingGradient, NumericalFailure };

inline const char* train_status_name(TrainStatus s) {
    switch (s) {
        case TrainStatus::Completed: return "completed";
        case TrainStatus::VanishingGradient: return "vanishing-gradient";
        case TrainStatus::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

struct TrainReport {
    std::vector<double> epoch_total, epoch_recon, epoch_pred;
    double final_train_mse = 0.0;
    double final_test_mse = 0.0;
    double wall_seconds = 0.0;
    TrainStatus status = TrainStatus::Completed;
};

enum class Partition { Train, Test };

inline double evaluate(const ModelState& st, const Dataset& data, Partition p) {
    const Eigen::Index n = Eigen::Index(data.size());
    const Eigen::Index s = Eigen::Index(data.split_index);
    Eigen::Index lo = (p == Partition::Train) ? 0 : s;
    Eigen::Index count = (p == Partition::Train) ? s : n - s;
    Matrix pred = predict(st, data.X.middleCols(lo, count));
    return mse(pred, data.Y.middleCols(lo, count));
}

// Gradient magnitudes below this for 50 consecutive epochs flag the run as a
// vanishing-gradient stall.
inline constexpr double kVanishingGradThreshold = 1e-12;
inline constexpr int kVanishingGradEpochs = 50;

// Runs the epoch loop on an already-initialized state (checkpoint resumes,
// custom initializations); the ModelConfig overload below is the common entry.
inline std::pair<ModelState, TrainReport> train(ModelState st, const Dataset& data,
                                                const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;

    const std::size_t ntrain = data.train_size();
    std::vector<Eigen::Index> idx(ntrain);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(cfg.seed ^ 0xdf900294d8f554a5ull);

    int stall_epochs = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double sum_total = 0, sum_recon = 0, sum_pred = 0, epoch_max_grad = 0;
        std::size_t nbatches = 0;
        try {
            for (std::size_t off = 0; off < ntrain; off += cfg.batch_size) {
                const std::size_t bn = std::min(cfg.batch_size, ntrain - off);
                Matrix xb(data.X.rows(), Eigen::Index(bn));
                Matrix yb(1, Eigen::Index(bn));
                for (std::size_t j = 0; j < bn; ++j) {
                    xb.col(Eigen::Index(j)) = data.X.col(idx[off + j]);
                    yb(0, Eigen::Index(j)) = data.Y(0, idx[off + j]);
                }
                BatchStats bs = train_batch(st, xb, yb, rng);
                sum_total += bs.total;
                sum_recon += bs.recon;
                sum_pred += bs.pred;
                epoch_max_grad = std::max(epoch_max_grad, bs.max_grad);
                ++nbatches;
            }
        } catch (const std::runtime_error&) {
            report.status = TrainStatus::NumericalFailure;
            break;
        }
        report.epoch_total.push_back(sum_total / double(nbatches));
        report.epoch_recon.push_back(sum_recon / double(nbatches));
        report.epoch_pred.push_back(sum_pred / double(nbatches));

        stall_epochs = (epoch_max_grad < kVanishingGradThreshold) ? stall_epochs + 1 : 0;
        if (stall_epochs >= kVanishingGradEpochs) {
            report.status = TrainStatus::VanishingGradient;
            break;
        }
    }

    if (report.status == TrainStatus::Completed && cfg.epochs > 0) {
        try {
            report.final_train_mse = evaluate(st, data, Partition::Train);
            report.final_test_mse = evaluate(st, data, Partition::Test);
        } catch (const std::runtime_error&) {
            report.status = TrainStatus::NumericalFailure;
        }
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(st), std::move(report)};
}

inline std::pair<ModelState, TrainReport> train(const ModelConfig& model, const Dataset& data,
                                                const TrainConfig& cfg) {
    return train(init_model(model, cfg.learning_rate, cfg.seed), data, cfg);
}

// ---- step-window orbit experiment ---------------------------------------

// Sliding windows over one orbit: column i holds [x_i .. x_{i+w-1}], target
// x_{i+w}; length - window windows total, split 80/20 in orbit order after a
// seeded shuffle.
inline Dataset make_window_dataset(const MapSpec& spec, double x0, std::size_t window,
                                   std::size_t length, std::uint64_t seed) {
    if (window < 1 || length <= window) throw std::invalid_argument("need length > window >= 1");
    std::vector<double> orb = orbit(spec, x0, length);
    const std::size_t m = length - window;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Dataset d;
    d.seed = seed;
    d.source = spec;
    d.X = Matrix(Eigen::Index(window), Eigen::Index(m));
    d.Y = Matrix(1, Eigen::Index(m));
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t i = order[c];
        for (std::size_t k = 0; k < window; ++k)
            d.X(Eigen::Index(k), Eigen::Index(c)) = orb[i + k];
        d.Y(0, Eigen::Index(c)) = orb[i + window];
    }
    d.split_index = (m * 8) / 10;
    return d;
}

struct WindowResult {
    ModelVariant variant;
    std::size_t window = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    TrainStatus status = TrainStatus::Completed;
    std::vector<double> test_true, test_pred;  // trace for plotting
    bool degenerate_orbit = false;
};

inline std::vector<WindowResult> window_experiment(const MapSpec& spec, double x0,
                                                   std::size_t window, std::size_t length,
                                                   const std::vector<ModelVariant>& variants,
                                                   const TrainConfig& cfg) {
    std::vector<double> orb = orbit(spec, x0, length);
    bool degenerate = false;
    for (std::size_t i = 1; i < orb.size(); ++i)
        if (orb[i] == orb[i - 1]) degenerate = true;  // fixed point reached

    Dataset data = make_window_dataset(spec, x0, window, length, cfg.seed);
    std::vector<WindowResult> results;
    for (ModelVariant v : variants) {
        ModelConfig mc = make_model_config(v, spec, cfg, int(window));
        auto [st, rep] = train(mc, data, cfg);
        WindowResult r;
        r.variant = v;
        r.window = window;
        r.status = rep.status;
        r.degenerate_orbit = degenerate;
        if (rep.status == TrainStatus::Completed) {
            r.train_mse = rep.final_train_mse;
            r.test_mse = rep.final_test_mse;
            const Eigen::Index s = Eigen::Index(data.split_index);
            Matrix p = predict(st, data.X.middleCols(s, Eigen::Index(data.test_size())));
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                r.test_true.push_back(data.Y(0, s + j));
                r.test_pred.push_back(p(0, j));
            }
        }
        results.push_back(std::move(r));
    }
    return results;
}

// ---- file formats --------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_dataset_csv(const Dataset& d, std::ostream& os) {
    if (d.X.rows() != 1) throw std::invalid_argument("csv datasets are scalar-input only");
    os << "x,ux\n";
    for (Eigen::Index j = 0; j < d.X.cols(); ++j)
        os << format_g17(d.X(0, j)) << ',' << format_g17(d.Y(0, j)) << '\n';
}

inline Dataset read_dataset_csv(std::istream& is, const MapSpec& source, std::uint64_t seed = 0) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,ux", 0) != 0)
        throw std::runtime_error("dataset csv missing 'x,ux' header");
    std::vector<double> xs, ys;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed dataset row: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        ys.push_back(std::stod(line.substr(comma + 1)));
    }
    Dataset d;
    d.seed = seed;
    d.source = source;
    d.X = Matrix(1, Eigen::Index(xs.size()));
    d.Y = Matrix(1, Eigen::Index(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d.X(0, Eigen::Index(i)) = xs[i];
        d.Y(0, Eigen::Index(i)) = ys[i];
    }
    d.split_index = (xs.size() * 8) / 10;
    return d;
}

inline nlohmann::json report_to_json(const TrainReport& r) {
    return {{"status", train_status_name(r.status)},
            {"final_train_mse", r.final_train_mse},
            {"final_test_mse", r.final_test_mse},
            {"wall_seconds", r.wall_seconds},
            {"epoch_total", r.epoch_total},
            {"epoch_recon", r.epoch_recon},
            {"epoch_pred", r.epoch_pred}};
}

}  // namespace conjae
