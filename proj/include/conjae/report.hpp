// Experiment orchestration: the error-table grid over all maps and models,
// a bounded worker pool for its cells, and small hand-rolled CSV/SVG emitters
// for diagnostics plots.

#pragma once

#include <atomic>
#include <functional>
#include <iomanip>
#include <optional>
#include <thread>

#include "uncertainty.hpp"

namespace conjae {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- error-table plan ----------------------------------------------------

struct MapRow {
    std::string label;
    std::string param_label;  // "-" when the map has no tuned parameter
    MapSpec spec;
};

struct ModelColumn {
    std::string label;
    ModelVariant variant;
    double c1 = 0.0, c2 = 0.0;  // LogisticAE initialization
};

// The five learnable-latent initializations swept in the comparison table.
inline const std::vector<std::pair<double, double>>& logistic_ae_inits() {
    static const std::vector<std::pair<double, double>> inits = {
        {3.0, -3.0}, {3.1, -3.1}, {3.5, -3.5}, {3.9, -3.9}, {4.0, -4.0}};
    return inits;
}

inline std::vector<MapRow> table1_rows() {
    return {
        {"logistic", "4.00", MapSpec::logistic(4.0)},
        {"logistic", "3.90", MapSpec::logistic(3.9)},
        {"logistic", "3.57", MapSpec::logistic(3.57)},
        {"custom", "-", MapSpec::custom()},
        {"katsura-fukuda", "0.50", MapSpec::katsura_fukuda(0.5)},
        {"doubling", "-", MapSpec::doubling()},
        {"pomeau-manneville", "1.50", MapSpec::pomeau_manneville(1.5)},
    };
}

inline std::vector<ModelColumn> table1_columns() {
    std::vector<ModelColumn> cols;
    cols.push_back({"model1", ModelVariant::ConjugacyAE});
    for (const auto& [c1, c2] : logistic_ae_inits()) {
        std::ostringstream label;
        label << "model2_c1=" << std::fixed << std::setprecision(1) << c1;
        cols.push_back({label.str(), ModelVariant::LogisticAE, c1, c2});
    }
    cols.push_back({"model3", ModelVariant::FNN});
    cols.push_back({"model4", ModelVariant::PINN});
    return cols;
}

struct Table1Options {
    std::uint64_t seed_base = 7;
    std::size_t replicates = 5;
    std::size_t samples = 1000;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::size_t> epochs_override;  // cheap smoke/determinism runs
    std::vector<std::string> map_filter;         // empty = all rows
};

struct CellResult {
    std::vector<double> test_mses;  // completed replicates only
    std::size_t vanished = 0;
    std::size_t failed = 0;
    std::size_t replicates = 0;

    // A cell renders "-" when at least half its replicates stalled.
    bool is_vanishing_cell() const { return 2 * vanished >= replicates && replicates > 0; }
    std::string render() const {
        if (is_vanishing_cell()) return "-";
        if (test_mses.empty()) return "x";
        std::ostringstream os;
        os << std::scientific << std::setprecision(3) << median(test_mses);
        return os.str();
    }
};

struct Table1Result {
    std::vector<MapRow> rows;
    std::vector<ModelColumn> cols;
    std::vector<std::vector<CellResult>> cells;  // [row][col]
};

// Runs every (map, model, replicate) training job on a bounded worker pool.
// The dataset is shared per (map, replicate) across model columns, and every
// seed derives deterministically from seed_base, so the result is independent
// of scheduling.
inline Table1Result run_table1(const Table1Options& opt,
                               const std::function<void(const std::string&)>& log = {}) {
    Table1Result res;
    for (const auto& row : table1_rows()) {
        if (!opt.map_filter.empty()) {
            std::string key = row.label + ":" + row.param_label;
            bool keep = false;
            for (const auto& f : opt.map_filter)
                if (f == row.label || f == key) keep = true;
            if (!keep) continue;
        }
        res.rows.push_back(row);
    }
    res.cols = table1_columns();
    res.cells.assign(res.rows.size(), std::vector<CellResult>(res.cols.size()));

    struct Job {
        std::size_t row, col, rep;
    };
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < res.rows.size(); ++r)
        for (std::size_t c = 0; c < res.cols.size(); ++c)
            for (std::size_t k = 0; k < opt.replicates; ++k) jobs.push_back({r, c, k});

    struct Outcome {
        TrainStatus status = TrainStatus::Completed;
        double test_mse = 0.0;
    };
    std::vector<Outcome> outcomes(jobs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            const MapRow& row = res.rows[job.row];
            const ModelColumn& col = res.cols[job.col];

            TrainConfig tc = preset_for(row.spec.kind);
            if (opt.epochs_override) tc.epochs = *opt.epochs_override;
            tc.seed = splitmix64(opt.seed_base ^ splitmix64(job.row * 131 + job.col * 17 + job.rep));
            const std::uint64_t data_seed =
                splitmix64(opt.seed_base * 1000003ull + job.row * 257 + job.rep);
            Dataset data = make_dataset(row.spec, opt.samples, data_seed);

            ModelConfig mc = make_model_config(col.variant, row.spec, tc);
            mc.c1_init = col.c1;
            mc.c2_init = col.c2;
            auto [st, rep] = train(mc, data, tc);
            outcomes[i] = {rep.status, rep.final_test_mse};
            if (log) {
                std::ostringstream os;
                os << row.label << "(" << row.param_label << ") " << col.label << " rep " << job.rep
                   << ": " << train_status_name(rep.status);
                if (rep.status == TrainStatus::Completed)
                    os << " test_mse=" << std::scientific << std::setprecision(3)
                       << rep.final_test_mse;
                log(os.str());
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(opt.jobs, jobs.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        CellResult& cell = res.cells[jobs[i].row][jobs[i].col];
        ++cell.replicates;
        switch (outcomes[i].status) {
            case TrainStatus::Completed:
                cell.test_mses.push_back(outcomes[i].test_mse);
                break;
            case TrainStatus::VanishingGradient:
                ++cell.vanished;
                break;
            case TrainStatus::NumericalFailure:
                ++cell.failed;
                break;
        }
    }
    return res;
}

inline void write_table1_csv(const Table1Result& t, std::ostream& os) {
    os << "map,parameter";
    for (const auto& c : t.cols) os << ',' << c.label;
    os << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << t.rows[r].label << ',' << t.rows[r].param_label;
        for (std::size_t c = 0; c < t.cols.size(); ++c) {
            const CellResult& cell = t.cells[r][c];
            if (cell.is_vanishing_cell())
                os << ",-";
            else if (cell.test_mses.empty())
                os << ",x";
            else
                os << ',' << format_g17(median(cell.test_mses));
        }
        os << '\n';
    }
}

inline void render_table1_text(const Table1Result& t, std::ostream& os) {
    os << std::left << std::setw(20) << "map" << std::setw(10) << "param";
    for (const auto& c : t.cols) os << std::setw(15) << c.label;
    os << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << std::left << std::setw(20) << t.rows[r].label << std::setw(10)
           << t.rows[r].param_label;
        for (std::size_t c = 0; c < t.cols.size(); ++c) os << std::setw(15) << t.cells[r][c].render();
        os << '\n';
    }
}

// ---- SVG emission --------------------------------------------------------

// Minimal plotting surface: fixed viewport, data mapped through a linear
// scale, polylines and filled band polygons only.
class SvgPlot {
public:
    SvgPlot(double xmin, double xmax, double ymin, double ymax, int width = 720, int height = 480)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), w_(width), h_(height) {
        body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
              << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
              << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color, double stroke_width = 1.5) {
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
              << stroke_width << "\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            body_ << px(xs[i]) << ',' << py(ys[i]) << ' ';
        body_ << "\"/>\n";
    }

    // Shaded band between lower and upper, one polygon.
    void band(const std::vector<double>& xs, const std::vector<double>& lower,
              const std::vector<double>& upper, const std::string& color, double opacity = 0.3) {
        body_ << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"" << opacity
              << "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            body_ << px(xs[i]) << ',' << py(upper[i]) << ' ';
        for (std::size_t i = xs.size(); i-- > 0;)
            body_ << px(xs[i]) << ',' << py(lower[i]) << ' ';
        body_ << "\"/>\n";
    }

    void dots(const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& color, double radius = 2.0) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            body_ << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"" << radius
                  << "\" fill=\"" << color << "\"/>\n";
    }

    void label(double x, double y, const std::string& text, const std::string& color = "black") {
        body_ << "<text x=\"" << px(x) << "\" y=\"" << py(y) << "\" fill=\"" << color
              << "\" font-size=\"12\">" << text << "</text>\n";
    }

    std::string finish() {
        body_ << "</svg>\n";
        return body_.str();
    }

private:
    double px(double x) const { return margin_ + (x - xmin_) / (xmax_ - xmin_) * (w_ - 2 * margin_); }
    double py(double y) const {
        return h_ - margin_ - (y - ymin_) / (ymax_ - ymin_) * (h_ - 2 * margin_);
    }

    double xmin_, xmax_, ymin_, ymax_;
    int w_, h_;
    double margin_ = 40.0;
    std::ostringstream body_;
};

// Truth, mean, and shaded interval over the test points, sorted by x.
inline std::string summary_band_svg(const PredictionSummary& s, const std::string& title) {
    std::vector<std::size_t> order(s.x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });

    std::vector<double> xs, yt, ym, lo, hi;
    double ymin = 0.0, ymax = 1.0;
    for (std::size_t i : order) {
        xs.push_back(s.x[i]);
        yt.push_back(s.y_true[i]);
        ym.push_back(s.mean[i]);
        lo.push_back(s.lower[i]);
        hi.push_back(s.upper[i]);
        ymin = std::min({ymin, s.lower[i]});
        ymax = std::max({ymax, s.upper[i]});
    }
    SvgPlot plot(0.0, 1.0, ymin, ymax);
    plot.band(xs, lo, hi, "steelblue");
    plot.polyline(xs, yt, "black");
    plot.polyline(xs, ym, "crimson");
    plot.label(0.02, ymax - 0.04 * (ymax - ymin), title);
    return plot.finish();
}

}  // namespace conjae
