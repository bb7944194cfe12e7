// Minimal dense-network engine: affine layers with SeLU/ReLU/identity
// activations, reverse-mode gradients, adaptive-moment (and plain SGD)
// updates, inverted dropout, and a JSON checkpoint format.
//
// All math is double precision. Batches are column-major: one sample per
// column, so a forward pass over a batch is a single matrix product per layer.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace conjae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { SeLU, ReLU, Identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::SeLU: return "selu";
        case Activation::ReLU: return "relu";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "selu") return Activation::SeLU;
    if (s == "relu") return Activation::ReLU;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation: " + s);
}

// Standard self-normalizing constants.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

inline double apply_activation(Activation a, double z) {
    switch (a) {
        case Activation::SeLU:
            return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
        case Activation::ReLU:
            return z > 0.0 ? z : 0.0;
        case Activation::Identity:
            return z;
    }
    return z;
}

inline double activation_deriv(Activation a, double z) {
    switch (a) {
        case Activation::SeLU:
            return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
        case Activation::ReLU:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::Identity:
            return 1.0;
    }
    return 1.0;
}

struct Layer {
    Matrix W;  // [out x in]
    Vector b;  // [out]
    Activation act = Activation::Identity;
};

struct DenseNet {
    std::vector<Layer> layers;
    std::uint64_t rng_seed = 0;

    Eigen::Index input_dim() const { return layers.front().W.cols(); }
    Eigen::Index output_dim() const { return layers.back().W.rows(); }
};

// Bernoulli unit masking with inverted scaling (kept activations divided by
// p_keep). p_keep = 1 is the identity.
struct DropoutSpec {
    double p_keep = 1.0;
    // Also mask the final layer's post-activation. Used for encoders whose
    // last layer is an activated latent rather than a linear readout.
    bool mask_final = false;
};

// Per-forward cache: inputs, pre-activations, post-activations, and the
// dropout masks actually drawn. Consumed by exactly one backward pass.
struct GradientTape {
    Matrix input;
    std::vector<Matrix> pre;    // z_k = W_k a_{k-1} + b_k
    std::vector<Matrix> post;   // a_k after activation (and dropout)
    std::vector<Matrix> masks;  // empty when no dropout; scaled mask per hidden layer
    bool consumed = false;
};

struct Gradients {
    std::vector<Matrix> dW;
    std::vector<Vector> db;

    double max_abs() const {
        double m = 0.0;
        for (const auto& g : dW) m = std::max(m, g.cwiseAbs().maxCoeff());
        for (const auto& g : db) m = std::max(m, g.cwiseAbs().maxCoeff());
        return m;
    }
    bool finite() const {
        for (const auto& g : dW)
            if (!g.allFinite()) return false;
        for (const auto& g : db)
            if (!g.allFinite()) return false;
        return true;
    }
};

// Forward pass over a batch (one sample per column). Dropout, when given,
// masks post-activations of every layer except the last (the last too when
// the spec asks for it).
inline Matrix forward(const DenseNet& net, const Matrix& x, GradientTape& tape,
                      const DropoutSpec* dropout = nullptr, std::mt19937_64* rng = nullptr) {
    if (x.rows() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
    tape.input = x;
    tape.pre.clear();
    tape.post.clear();
    tape.masks.clear();
    tape.consumed = false;

    const bool drop = dropout && dropout->p_keep < 1.0;
    if (drop && !rng) throw std::invalid_argument("dropout requires an rng");
    std::bernoulli_distribution keep(drop ? dropout->p_keep : 1.0);

    Matrix a = x;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const Layer& layer = net.layers[k];
        Matrix z = (layer.W * a).colwise() + layer.b;
        Matrix act = z.unaryExpr([&](double v) { return apply_activation(layer.act, v); });
        if (drop && (k + 1 < net.layers.size() || dropout->mask_final)) {
            Matrix mask(act.rows(), act.cols());
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                for (Eigen::Index i = 0; i < mask.rows(); ++i)
                    mask(i, j) = keep(*rng) ? 1.0 / dropout->p_keep : 0.0;
            act = act.cwiseProduct(mask);
            tape.masks.push_back(std::move(mask));
        }
        tape.pre.push_back(std::move(z));
        tape.post.push_back(act);
        a = std::move(act);
    }
    return tape.post.back();
}

inline Matrix forward(const DenseNet& net, const Matrix& x) {
    GradientTape tape;
    return forward(net, x, tape);
}

// Reverse-mode gradients of a scalar loss given dLoss/dOutput. Gradient sums
// run over the batch columns; the caller bakes any 1/N averaging into dy.
// Returns dLoss/dInput; parameter gradients land in `grads`.
inline Matrix backward(const DenseNet& net, GradientTape& tape, const Matrix& dy, Gradients& grads) {
    if (tape.consumed) throw std::logic_error("gradient tape already consumed");
    tape.consumed = true;

    const std::size_t n = net.layers.size();
    grads.dW.assign(n, Matrix());
    grads.db.assign(n, Vector());

    Matrix delta = dy;
    for (std::size_t k = n; k-- > 0;) {
        const Layer& layer = net.layers[k];
        if (k < tape.masks.size()) delta = delta.cwiseProduct(tape.masks[k]);
        Matrix dz = delta.cwiseProduct(
            tape.pre[k].unaryExpr([&](double v) { return activation_deriv(layer.act, v); }));
        const Matrix& a_prev = (k == 0) ? tape.input : tape.post[k - 1];
        grads.dW[k] = dz * a_prev.transpose();
        grads.db[k] = dz.rowwise().sum();
        delta = layer.W.transpose() * dz;
    }
    return delta;
}

// Uniform fan-based initialization: W ~ U[-s, s], s = sqrt(6/(fan_in+fan_out)),
// biases zero. Hidden layers take `act`, the final layer is linear.
inline DenseNet init_net(const std::vector<int>& dims, Activation act, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("need at least one layer");
    for (int d : dims)
        if (d <= 0) throw std::invalid_argument("layer dims must be positive");

    DenseNet net;
    net.rng_seed = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Layer layer;
        const int fan_in = dims[k], fan_out = dims[k + 1];
        const double s = std::sqrt(6.0 / double(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-s, s);
        layer.W = Matrix(fan_out, fan_in);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = u(rng);
        layer.b = Vector::Zero(fan_out);
        layer.act = (k + 2 < dims.size()) ? act : Activation::Identity;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

enum class OptimizerKind { Adam, Sgd };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix> m_W, v_W;
    std::vector<Vector> m_b, v_b;

    static OptimizerState for_net(const DenseNet& net, double lr,
                                  OptimizerKind kind = OptimizerKind::Adam) {
        OptimizerState s;
        s.kind = kind;
        s.learning_rate = lr;
        for (const auto& layer : net.layers) {
            s.m_W.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
            s.v_W.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
            s.m_b.push_back(Vector::Zero(layer.b.size()));
            s.v_b.push_back(Vector::Zero(layer.b.size()));
        }
        return s;
    }
};

namespace detail {
template <typename T>
void adam_update(T& p, const T& g, T& m, T& v, const OptimizerState& s, double bc1, double bc2) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    p.array() -= s.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.eps);
}
}  // namespace detail

// One bias-corrected adaptive-moment step (or plain SGD). Rejects non-finite
// gradients, leaving parameters untouched.
inline void adam_step(DenseNet& net, const Gradients& grads, OptimizerState& state) {
    if (grads.dW.size() != net.layers.size()) throw std::invalid_argument("gradient shape mismatch");
    if (!grads.finite()) throw std::runtime_error("non-finite gradient; parameters unchanged");

    if (state.kind == OptimizerKind::Sgd) {
        ++state.step;
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            net.layers[k].W -= state.learning_rate * grads.dW[k];
            net.layers[k].b -= state.learning_rate * grads.db[k];
        }
        return;
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        detail::adam_update(net.layers[k].W, grads.dW[k], state.m_W[k], state.v_W[k], state, bc1, bc2);
        detail::adam_update(net.layers[k].b, grads.db[k], state.m_b[k], state.v_b[k], state, bc1, bc2);
    }
    for (const auto& layer : net.layers) {
        if (!layer.W.allFinite() || !layer.b.allFinite())
            throw std::runtime_error("parameter update produced non-finite values");
    }
}

// Adam state for a single trainable scalar (the learnable latent coefficients).
struct ScalarAdam {
    double m = 0.0, v = 0.0;
    long step = 0;

    double delta(double g, const OptimizerState& ref) {
        ++step;
        if (ref.kind == OptimizerKind::Sgd) return -ref.learning_rate * g;
        m = ref.beta1 * m + (1.0 - ref.beta1) * g;
        v = ref.beta2 * v + (1.0 - ref.beta2) * g * g;
        const double bc1 = 1.0 - std::pow(ref.beta1, double(step));
        const double bc2 = 1.0 - std::pow(ref.beta2, double(step));
        return -ref.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + ref.eps);
    }
};

// ---- checkpoint serialization -------------------------------------------

inline nlohmann::json net_to_json(const DenseNet& net) {
    nlohmann::json j;
    std::vector<int> dims;
    dims.push_back(int(net.input_dim()));
    for (const auto& layer : net.layers) dims.push_back(int(layer.W.rows()));
    j["layer_dims"] = dims;
    j["seed"] = net.rng_seed;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json lj;
        lj["activation"] = activation_name(layer.act);
        std::vector<double> w;  // row-major
        w.reserve(std::size_t(layer.W.size()));
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index jx = 0; jx < layer.W.cols(); ++jx) w.push_back(layer.W(i, jx));
        lj["weights"] = w;
        lj["biases"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

inline DenseNet net_from_json(const nlohmann::json& j) {
    DenseNet net;
    net.rng_seed = j.at("seed").get<std::uint64_t>();
    std::vector<int> dims = j.at("layer_dims").get<std::vector<int>>();
    const auto& layers = j.at("layers");
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Layer layer;
        layer.act = activation_from_name(layers.at(k).at("activation").get<std::string>());
        std::vector<double> w = layers.at(k).at("weights").get<std::vector<double>>();
        std::vector<double> b = layers.at(k).at("biases").get<std::vector<double>>();
        layer.W = Matrix(dims[k + 1], dims[k]);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index jx = 0; jx < layer.W.cols(); ++jx)
                layer.W(i, jx) = w[std::size_t(i * layer.W.cols() + jx)];
        layer.b = Eigen::Map<Vector>(b.data(), Eigen::Index(b.size()));
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline nlohmann::json optimizer_to_json(const OptimizerState& s) {
    nlohmann::json j;
    j["kind"] = (s.kind == OptimizerKind::Adam) ? "adam" : "sgd";
    j["learning_rate"] = s.learning_rate;
    j["beta1"] = s.beta1;
    j["beta2"] = s.beta2;
    j["eps"] = s.eps;
    j["step"] = s.step;
    auto mats = [](const std::vector<Matrix>& ms) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : ms) {
            std::vector<double> flat;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index jx = 0; jx < m.cols(); ++jx) flat.push_back(m(i, jx));
            arr.push_back(flat);
        }
        return arr;
    };
    auto vecs = [](const std::vector<Vector>& vs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : vs) arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
        return arr;
    };
    j["m_W"] = mats(s.m_W);
    j["v_W"] = mats(s.v_W);
    j["m_b"] = vecs(s.m_b);
    j["v_b"] = vecs(s.v_b);
    return j;
}

inline OptimizerState optimizer_from_json(const nlohmann::json& j, const DenseNet& net) {
    OptimizerState s = OptimizerState::for_net(
        net, j.at("learning_rate").get<double>(),
        j.at("kind").get<std::string>() == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd);
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    s.step = j.at("step").get<long>();
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto fill = [&](Matrix& m, const nlohmann::json& arr) {
            std::vector<double> flat = arr.get<std::vector<double>>();
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index jx = 0; jx < m.cols(); ++jx)
                    m(i, jx) = flat[std::size_t(i * m.cols() + jx)];
        };
        fill(s.m_W[k], j.at("m_W").at(k));
        fill(s.v_W[k], j.at("v_W").at(k));
        std::vector<double> mb = j.at("m_b").at(k).get<std::vector<double>>();
        std::vector<double> vb = j.at("v_b").at(k).get<std::vector<double>>();
        s.m_b[k] = Eigen::Map<Vector>(mb.data(), Eigen::Index(mb.size()));
        s.v_b[k] = Eigen::Map<Vector>(vb.data(), Eigen::Index(vb.size()));
    }
    return s;
}

}  // namespace conjae
