// Confidence intervals over trained models: MC dropout (stochastic forward
// passes through one model) and deep ensembles (independently initialized
// retrainings). Standard deviations use the population form (divide by the
// number of passes/members), matching the plain averages in the interval
// definitions.

#pragma once

#include "train.hpp"

namespace conjae {

enum class UqMethod { McDropout, Ensemble };

struct UqConfig {
    UqMethod method = UqMethod::McDropout;
    std::size_t passes = 100;       // forward passes (MC dropout)
    std::size_t ensemble_size = 5;  // trained members (ensemble)
    double dropout_p = 0.2;         // inference-time drop probability
    double z_value = 1.96;          // 95% interval multiplier
    bool sample_std = false;        // divide by N-1 instead of N
    std::uint64_t seed = 0;
};

struct PredictionSummary {
    std::vector<double> x;  // scalar inputs (first window component otherwise)
    std::vector<double> y_true;
    std::vector<double> mean, std_dev, lower, upper;
    double mean_ci_width = 0.0;
    std::size_t members_used = 0;  // passes or surviving ensemble members
    std::size_t members_failed = 0;
};

namespace detail {

inline PredictionSummary summarize(const std::vector<Matrix>& passes, const Dataset& data,
                                   const UqConfig& cfg) {
    const Eigen::Index s = Eigen::Index(data.split_index);
    const Eigen::Index nt = Eigen::Index(data.test_size());
    const double n = double(passes.size());

    PredictionSummary out;
    out.members_used = passes.size();
    double width_sum = 0.0;
    for (Eigen::Index j = 0; j < nt; ++j) {
        double m = 0.0, lo = passes.front()(0, j), hi = lo;
        for (const auto& p : passes) {
            m += p(0, j);
            lo = std::min(lo, p(0, j));
            hi = std::max(hi, p(0, j));
        }
        m /= n;
        // identical passes must yield exactly zero spread; the accumulated
        // mean is not bit-exact, so guard before taking deviations from it
        double var = 0.0;
        if (hi > lo) {
            for (const auto& p : passes) var += (p(0, j) - m) * (p(0, j) - m);
            var /= cfg.sample_std ? (n - 1.0) : n;
        } else {
            m = lo;
        }
        const double sd = std::sqrt(var);
        out.x.push_back(data.X(0, s + j));
        out.y_true.push_back(data.Y(0, s + j));
        out.mean.push_back(m);
        out.std_dev.push_back(sd);
        out.lower.push_back(m - cfg.z_value * sd);
        out.upper.push_back(m + cfg.z_value * sd);
        width_sum += 2.0 * cfg.z_value * sd;
    }
    out.mean_ci_width = nt > 0 ? width_sum / double(nt) : 0.0;
    return out;
}

}  // namespace detail

// `passes` stochastic forwards over the test partition with fresh Bernoulli
// masks on every hidden layer. dropout_p = 0 degenerates to identical passes
// and a zero-width interval.
inline PredictionSummary mc_dropout_summary(const ModelState& st, const Dataset& data,
                                            const UqConfig& cfg) {
    if (cfg.passes < 2) throw std::invalid_argument("MC dropout needs at least 2 passes");
    if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0))
        throw std::invalid_argument("dropout probability must lie in [0,1)");

    const Eigen::Index s = Eigen::Index(data.split_index);
    Matrix xtest = data.X.middleCols(s, Eigen::Index(data.test_size()));
    std::mt19937_64 rng(cfg.seed ^ 0xa24baed4963ee407ull);
    DropoutSpec drop{1.0 - cfg.dropout_p};

    std::vector<Matrix> passes;
    passes.reserve(cfg.passes);
    for (std::size_t i = 0; i < cfg.passes; ++i)
        passes.push_back(predict(st, xtest, cfg.dropout_p > 0.0 ? &drop : nullptr, &rng));
    return detail::summarize(passes, data, cfg);
}

// Trains one model per seed and aggregates their deterministic predictions.
// Members whose training fails (vanishing gradient, numerical failure) are
// excluded and counted; fewer than 2 survivors is an error.
inline PredictionSummary ensemble_summary(const std::vector<std::uint64_t>& seeds,
                                          const ModelConfig& model, const Dataset& data,
                                          const TrainConfig& train_cfg, const UqConfig& cfg) {
    if (seeds.size() < 2) throw std::invalid_argument("ensemble needs at least 2 seeds");

    const Eigen::Index s = Eigen::Index(data.split_index);
    Matrix xtest = data.X.middleCols(s, Eigen::Index(data.test_size()));

    std::vector<Matrix> passes;
    std::size_t failed = 0;
    for (std::uint64_t seed : seeds) {
        TrainConfig tc = train_cfg;
        tc.seed = seed;
        auto [st, rep] = train(model, data, tc);
        if (rep.status != TrainStatus::Completed) {
            ++failed;
            continue;
        }
        passes.push_back(predict(st, xtest));
    }
    if (passes.size() < 2)
        throw std::runtime_error("insufficient ensemble: fewer than 2 members survived training");
    PredictionSummary out = detail::summarize(passes, data, cfg);
    out.members_failed = failed;
    return out;
}

// Aggregates an ensemble over already-trained (or hand-planted) members.
inline PredictionSummary ensemble_summary_from_states(const std::vector<ModelState>& members,
                                                      const Dataset& data, const UqConfig& cfg) {
    if (members.size() < 2)
        throw std::runtime_error("insufficient ensemble: fewer than 2 members survived training");
    const Eigen::Index s = Eigen::Index(data.split_index);
    Matrix xtest = data.X.middleCols(s, Eigen::Index(data.test_size()));
    std::vector<Matrix> passes;
    for (const auto& st : members) passes.push_back(predict(st, xtest));
    return detail::summarize(passes, data, cfg);
}

inline void write_summary_csv(const PredictionSummary& s, std::ostream& os) {
    os << "x,true,mean,std,lower,upper\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        os << format_g17(s.x[i]) << ',' << format_g17(s.y_true[i]) << ',' << format_g17(s.mean[i])
           << ',' << format_g17(s.std_dev[i]) << ',' << format_g17(s.lower[i]) << ','
           << format_g17(s.upper[i]) << '\n';
    }
}

inline nlohmann::json summary_sidecar_json(const PredictionSummary& s, const UqConfig& cfg) {
    return {{"method", cfg.method == UqMethod::McDropout ? "mc-dropout" : "ensemble"},
            {"passes", cfg.passes},
            {"ensemble_size", cfg.ensemble_size},
            {"dropout_p", cfg.dropout_p},
            {"z_value", cfg.z_value},
            {"members_used", s.members_used},
            {"members_failed", s.members_failed},
            {"mean_ci_width", s.mean_ci_width}};
}

}  // namespace conjae
