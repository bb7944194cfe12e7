// Command-line surface for the conjugacy-autoencoder experiments:
// data generation, training, evaluation, the full error-table run,
// confidence intervals, and the step-window orbit study.
//
// Exit codes: 0 success, 1 usage/config error, 2 flagged numerical condition
// (vanishing gradient or NaN during training).

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "conjae/report.hpp"

namespace fs = std::filesystem;
using namespace conjae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFlagged = 2;

std::string default_out_dir() {
    const char* env = std::getenv("CONJAE_OUT_DIR");
    return env ? env : ".";
}

MapSpec spec_from_flags(const std::string& map, double param, double a) {
    MapKind kind = map_kind_from_name(map);
    MapSpec s;
    switch (kind) {
        case MapKind::Tent: s = MapSpec::tent(param); break;
        case MapKind::Logistic: s = MapSpec::logistic(param); break;
        case MapKind::Custom: s = MapSpec::custom(); break;
        case MapKind::KatsuraFukuda: s = MapSpec::katsura_fukuda(param); break;
        case MapKind::Doubling: s = MapSpec::doubling(); break;
        case MapKind::PomeauManneville: s = MapSpec::pomeau_manneville(param, a); break;
    }
    validate_spec(s);
    return s;
}

// -1 sentinel: draw from entropy and report the drawn value.
std::uint64_t resolve_seed(long long flag, bool& drawn) {
    drawn = flag < 0;
    if (!drawn) return std::uint64_t(flag);
    std::random_device rd;
    return (std::uint64_t(rd()) << 32) | rd();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

struct TrainFlags {
    std::string map = "logistic";
    double param = 4.0;
    double pm_a = 1.0;
    std::string model = "conjugacy-ae";
    double c1 = 3.5, c2 = -3.5;
    double lambda_res = 1.0;
    double dropout_p = 0.0;
    std::size_t n = 1000;
    long long seed = -1;
    long long data_seed = -1;
    long long epochs = -1;  // -1: preset
    long long width = -1;
    long long layers_in = -1;
    long long layers_out = -1;
    double lr = -1.0;
    std::string activation;  // empty: preset
    std::string optimizer = "adam";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--map", map, "map name (logistic, custom, katsura-fukuda, doubling, pomeau-manneville, tent)");
        cmd->add_option("--param", param, "map parameter (r, mu or z)");
        cmd->add_option("--a", pm_a, "Pomeau-Manneville coefficient a");
        cmd->add_option("--model", model, "model1..model4 or conjugacy-ae/logistic-ae/fnn/pinn");
        cmd->add_option("--c1", c1, "latent c1 init (model2)");
        cmd->add_option("--c2", c2, "latent c2 init (model2)");
        cmd->add_option("--lambda-res", lambda_res, "residual loss weight (model4)");
        cmd->add_option("--dropout-p", dropout_p, "train-time dropout probability");
        cmd->add_option("--n", n, "dataset size");
        cmd->add_option("--seed", seed, "model seed (-1: entropy)");
        cmd->add_option("--data-seed", data_seed, "dataset seed (-1: entropy)");
        cmd->add_option("--epochs", epochs, "override preset epoch count");
        cmd->add_option("--width", width, "override preset layer width");
        cmd->add_option("--layers-in", layers_in, "override encoder hidden layers");
        cmd->add_option("--layers-out", layers_out, "override decoder hidden layers");
        cmd->add_option("--lr", lr, "override preset learning rate");
        cmd->add_option("--activation", activation, "selu | relu (preset default)");
        cmd->add_option("--optimizer", optimizer, "adam | sgd");
    }

    TrainConfig resolve(const MapSpec& spec, std::uint64_t model_seed) const {
        TrainConfig tc = preset_for(spec.kind);
        if (epochs >= 0) tc.epochs = std::size_t(epochs);
        if (width > 0) tc.layer_width = int(width);
        if (layers_in > 0) tc.layers_in = int(layers_in);
        if (layers_out > 0) tc.layers_out = int(layers_out);
        if (lr > 0) tc.learning_rate = lr;
        if (!activation.empty()) tc.activation = activation_from_name(activation);
        tc.optimizer = (optimizer == "sgd") ? OptimizerKind::Sgd : OptimizerKind::Adam;
        tc.dropout_p = dropout_p;
        tc.seed = model_seed;
        return tc;
    }
};

int cmd_gen_data(const std::string& map, double param, double a, std::size_t n, long long seed_flag,
                 const std::string& out) {
    MapSpec spec = spec_from_flags(map, param, a);
    bool drawn = false;
    std::uint64_t seed = resolve_seed(seed_flag, drawn);
    Dataset d = make_dataset(spec, n, seed);
    std::ostringstream os;
    write_dataset_csv(d, os);
    write_file(out, os.str());
    if (drawn) std::cout << "drawn data seed: " << seed << "\n";
    std::cout << "wrote " << out << " (" << n << " rows)\n";
    return kExitOk;
}

int cmd_train(const TrainFlags& flags, const std::string& out_dir) {
    MapSpec spec = spec_from_flags(flags.map, flags.param, flags.pm_a);
    ModelVariant variant = model_variant_from_name(flags.model);
    bool seed_drawn = false, data_seed_drawn = false;
    std::uint64_t model_seed = resolve_seed(flags.seed, seed_drawn);
    std::uint64_t data_seed = resolve_seed(flags.data_seed, data_seed_drawn);

    TrainConfig tc = flags.resolve(spec, model_seed);
    Dataset data = make_dataset(spec, flags.n, data_seed);
    ModelConfig mc = make_model_config(variant, spec, tc);
    mc.c1_init = flags.c1;
    mc.c2_init = flags.c2;
    mc.lambda_res = flags.lambda_res;

    auto [st, rep] = train(mc, data, tc);

    fs::create_directories(out_dir);
    nlohmann::json ckpt = model_to_json(st);
    ckpt["train"] = {{"map", map_kind_name(spec.kind)},
                     {"map_spec", map_spec_to_json(spec)},
                     {"model_seed", model_seed},
                     {"data_seed", data_seed},
                     {"n", flags.n},
                     {"epochs", tc.epochs},
                     {"batch_size", tc.batch_size},
                     {"learning_rate", tc.learning_rate},
                     {"layer_width", tc.layer_width},
                     {"layers_in", tc.layers_in},
                     {"layers_out", tc.layers_out},
                     {"status", train_status_name(rep.status)}};
    write_file(fs::path(out_dir) / "checkpoint.json", ckpt.dump(2));
    write_file(fs::path(out_dir) / "report.json", report_to_json(rep).dump(2));

    std::ostringstream loss_csv;
    loss_csv << "epoch,total,recon,pred\n";
    for (std::size_t e = 0; e < rep.epoch_total.size(); ++e)
        loss_csv << e << ',' << format_g17(rep.epoch_total[e]) << ','
                 << format_g17(rep.epoch_recon[e]) << ',' << format_g17(rep.epoch_pred[e]) << '\n';
    write_file(fs::path(out_dir) / "loss.csv", loss_csv.str());

    std::cout << "status: " << train_status_name(rep.status) << "\n";
    if (rep.status == TrainStatus::Completed)
        std::cout << "train mse: " << format_g17(rep.final_train_mse)
                  << "\ntest mse: " << format_g17(rep.final_test_mse) << "\n";
    return rep.status == TrainStatus::Completed ? kExitOk : kExitFlagged;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& partition) {
    std::ifstream cs(checkpoint);
    if (!cs) {
        std::cerr << "missing checkpoint: " << checkpoint << "\n";
        return kExitUsage;
    }
    nlohmann::json j;
    cs >> j;
    ModelState st = model_from_json(j);

    std::ifstream ds(data_path);
    if (!ds) {
        std::cerr << "missing dataset: " << data_path << "\n";
        return kExitUsage;
    }
    Dataset data = read_dataset_csv(ds, st.cfg.target);
    Partition p = (partition == "train") ? Partition::Train : Partition::Test;
    std::cout << format_g17(evaluate(st, data, p)) << "\n";
    return kExitOk;
}

int cmd_table1(std::uint64_t seed_base, std::size_t replicates, std::size_t samples,
               std::size_t jobs, long long epochs, const std::vector<std::string>& maps,
               bool dry_run, bool verbose, const std::string& out_dir) {
    Table1Options opt;
    opt.seed_base = seed_base;
    opt.replicates = replicates;
    opt.samples = samples;
    opt.jobs = jobs;
    if (epochs >= 0) opt.epochs_override = std::size_t(epochs);
    opt.map_filter = maps;

    if (dry_run) {
        std::cout << "plan: " << replicates << " replicate(s), seed base " << seed_base << "\n";
        for (const auto& row : table1_rows()) {
            if (!maps.empty()) {
                bool keep = false;
                for (const auto& f : maps)
                    if (f == row.label || f == row.label + ":" + row.param_label) keep = true;
                if (!keep) continue;
            }
            for (const auto& col : table1_columns())
                std::cout << "  " << row.label << "(" << row.param_label << ") x " << col.label
                          << "\n";
        }
        return kExitOk;
    }

    auto log = verbose ? std::function<void(const std::string&)>(
                             [](const std::string& s) { std::cout << s << "\n"; })
                       : std::function<void(const std::string&)>{};
    Table1Result res = run_table1(opt, log);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    write_table1_csv(res, csv);
    write_file(fs::path(out_dir) / "table1.csv", csv.str());
    render_table1_text(res, std::cout);
    return kExitOk;
}

int cmd_uq(const std::vector<std::string>& checkpoints, std::size_t n, long long data_seed_flag,
           std::size_t passes, std::size_t ensemble_size, double dropout_p,
           long long ensemble_seed_base, long long train_epochs, const std::string& out_dir) {
    std::vector<ModelState> states;
    std::vector<nlohmann::json> metas;
    for (const auto& path : checkpoints) {
        std::ifstream is(path);
        if (!is) {
            std::cerr << "missing checkpoint: " << path << "\n";
            return kExitUsage;
        }
        nlohmann::json j;
        is >> j;
        states.push_back(model_from_json(j));
        metas.push_back(j);
    }
    if (states.empty()) {
        std::cerr << "at least one --checkpoint required\n";
        return kExitUsage;
    }

    bool drawn = false;
    std::uint64_t data_seed = resolve_seed(data_seed_flag, drawn);
    fs::create_directories(out_dir);

    for (int method = 0; method < 2; ++method) {
        const bool mc = (method == 0);
        std::vector<PredictionSummary> summaries;
        std::vector<std::string> names;
        UqConfig uq;
        uq.method = mc ? UqMethod::McDropout : UqMethod::Ensemble;
        uq.passes = passes;
        uq.ensemble_size = ensemble_size;
        uq.dropout_p = dropout_p;
        uq.seed = data_seed;

        for (std::size_t i = 0; i < states.size(); ++i) {
            const ModelState& st = states[i];
            Dataset data = make_dataset(st.cfg.target, n, data_seed);
            PredictionSummary s;
            if (mc) {
                s = mc_dropout_summary(st, data, uq);
            } else {
                std::vector<std::uint64_t> seeds;
                for (std::size_t m = 0; m < ensemble_size; ++m)
                    seeds.push_back(splitmix64(std::uint64_t(ensemble_seed_base) + m));
                TrainConfig tc = preset_for(st.cfg.target.kind);
                if (train_epochs >= 0) tc.epochs = std::size_t(train_epochs);
                ModelConfig mcfg = st.cfg;
                s = ensemble_summary(seeds, mcfg, data, tc, uq);
            }
            std::string name = model_variant_name(st.cfg.variant);
            names.push_back(name);
            summaries.push_back(std::move(s));

            const std::string stem =
                std::string("uq_") + (mc ? "mcdropout" : "ensemble") + "_" + name;
            std::ostringstream csv;
            write_summary_csv(summaries.back(), csv);
            write_file(fs::path(out_dir) / (stem + ".csv"), csv.str());
            write_file(fs::path(out_dir) / (stem + ".json"),
                       summary_sidecar_json(summaries.back(), uq).dump(2));
        }

        // one SVG per method, one band per model
        std::ostringstream svg;
        for (std::size_t i = 0; i < summaries.size(); ++i)
            svg << summary_band_svg(summaries[i],
                                    names[i] + (mc ? " / mc-dropout" : " / ensemble"));
        write_file(fs::path(out_dir) / (std::string("uq_") + (mc ? "mcdropout" : "ensemble") + ".svg"),
                   svg.str());
        for (std::size_t i = 0; i < summaries.size(); ++i)
            std::cout << (mc ? "mc-dropout " : "ensemble ") << names[i]
                      << " mean CI width: " << format_g17(summaries[i].mean_ci_width) << "\n";
    }
    if (drawn) std::cout << "drawn data seed: " << data_seed << "\n";
    return kExitOk;
}

int cmd_orbit(const std::string& map, double param, double a, double x0, std::size_t length,
              std::vector<std::size_t> windows, long long seed_flag, long long epochs,
              const std::string& out_dir) {
    MapSpec spec = spec_from_flags(map, param, a);
    bool drawn = false;
    std::uint64_t seed = resolve_seed(seed_flag, drawn);
    if (windows.empty()) windows = {2, 5, 7};

    const std::vector<ModelVariant> variants = {ModelVariant::ConjugacyAE, ModelVariant::LogisticAE,
                                                ModelVariant::FNN, ModelVariant::PINN};
    fs::create_directories(out_dir);
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t w : windows) {
        TrainConfig tc = preset_for(spec.kind);
        if (epochs >= 0) tc.epochs = std::size_t(epochs);
        tc.seed = seed;
        auto results = window_experiment(spec, x0, w, length, variants, tc);

        std::ostringstream csv;
        csv << "index,true";
        for (const auto& r : results) csv << ",pred_" << model_variant_name(r.variant);
        csv << '\n';
        const std::size_t rows = results.front().test_true.size();
        for (std::size_t i = 0; i < rows; ++i) {
            csv << i << ',' << format_g17(results.front().test_true[i]);
            for (const auto& r : results)
                csv << ',' << (i < r.test_pred.size() ? format_g17(r.test_pred[i]) : "nan");
            csv << '\n';
        }
        write_file(fs::path(out_dir) / ("orbit_window" + std::to_string(w) + ".csv"), csv.str());

        for (const auto& r : results) {
            summary.push_back({{"window", w},
                               {"model", model_variant_name(r.variant)},
                               {"status", train_status_name(r.status)},
                               {"train_mse", r.train_mse},
                               {"test_mse", r.test_mse},
                               {"degenerate_orbit", r.degenerate_orbit}});
            std::cout << "window " << w << " " << model_variant_name(r.variant) << ": "
                      << train_status_name(r.status) << " test_mse=" << format_g17(r.test_mse)
                      << "\n";
        }
    }
    if (drawn) summary.push_back({{"drawn_seed", seed}});
    write_file(fs::path(out_dir) / "orbit_summary.json", summary.dump(2));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conjugacy-autoencoder chaotic map learning"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "sample (x, U(x)) pairs to CSV");
    std::string gd_map = "logistic", gd_out = "data.csv";
    double gd_param = 4.0, gd_a = 1.0;
    std::size_t gd_n = 1000;
    long long gd_seed = -1;
    gen->add_option("--map", gd_map);
    gen->add_option("--param", gd_param);
    gen->add_option("--a", gd_a);
    gen->add_option("--n", gd_n);
    gen->add_option("--seed", gd_seed);
    gen->add_option("--out", gd_out);

    // train
    auto* tr = app.add_subcommand("train", "train one (model, map, seed) cell");
    TrainFlags tf;
    tf.add_to(tr);
    std::string tr_out = default_out_dir();
    tr->add_option("--out-dir", tr_out);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset CSV");
    std::string ev_ckpt, ev_data, ev_part = "test";
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--partition", ev_part)->check(CLI::IsMember({"train", "test"}));

    // table1
    auto* tb = app.add_subcommand("table1", "run the full error-comparison grid");
    long long tb_seed_base = 7, tb_epochs = -1;
    std::size_t tb_reps = 5, tb_n = 1000, tb_jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> tb_maps;
    bool tb_dry = false, tb_verbose = false;
    std::string tb_out = default_out_dir();
    tb->add_option("--seed-base", tb_seed_base);
    tb->add_option("--replicates", tb_reps);
    tb->add_option("--n", tb_n);
    tb->add_option("--jobs", tb_jobs);
    tb->add_option("--epochs", tb_epochs, "override preset epochs (smoke runs)");
    tb->add_option("--maps", tb_maps, "restrict to these map rows");
    tb->add_flag("--dry-run", tb_dry);
    tb->add_flag("--verbose", tb_verbose);
    tb->add_option("--out-dir", tb_out);

    // uq
    auto* uq = app.add_subcommand("uq", "confidence intervals from MC dropout and ensembles");
    std::vector<std::string> uq_ckpts;
    std::size_t uq_n = 1000, uq_passes = 100, uq_members = 5;
    double uq_p = 0.2;
    long long uq_data_seed = -1, uq_seed_base = 7, uq_epochs = -1;
    std::string uq_out = default_out_dir();
    uq->add_option("--checkpoint", uq_ckpts)->required();
    uq->add_option("--n", uq_n);
    uq->add_option("--data-seed", uq_data_seed);
    uq->add_option("--passes", uq_passes);
    uq->add_option("--ensemble-size", uq_members);
    uq->add_option("--dropout-p", uq_p);
    uq->add_option("--seed-base", uq_seed_base);
    uq->add_option("--epochs", uq_epochs, "override ensemble training epochs");
    uq->add_option("--out-dir", uq_out);

    // orbit
    auto* ob = app.add_subcommand("orbit", "step-window experiment along one orbit");
    std::string ob_map = "logistic";
    double ob_param = 4.0, ob_a = 1.0, ob_x0 = 0.4;
    std::size_t ob_len = 300;
    std::vector<std::size_t> ob_windows;
    long long ob_seed = -1, ob_epochs = -1;
    std::string ob_out = default_out_dir();
    ob->add_option("--map", ob_map);
    ob->add_option("--param", ob_param);
    ob->add_option("--a", ob_a);
    ob->add_option("--x0", ob_x0);
    ob->add_option("--length", ob_len);
    ob->add_option("--windows", ob_windows);
    ob->add_option("--seed", ob_seed);
    ob->add_option("--epochs", ob_epochs);
    ob->add_option("--out-dir", ob_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gd_map, gd_param, gd_a, gd_n, gd_seed, gd_out);
        if (tr->parsed()) return cmd_train(tf, tr_out);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_part);
        if (tb->parsed())
            return cmd_table1(std::uint64_t(tb_seed_base), tb_reps, tb_n, tb_jobs, tb_epochs,
                              tb_maps, tb_dry, tb_verbose, tb_out);
        if (uq->parsed())
            return cmd_uq(uq_ckpts, uq_n, uq_data_seed, uq_passes, uq_members, uq_p, uq_seed_base,
                          uq_epochs, uq_out);
        if (ob->parsed())
            return cmd_orbit(ob_map, ob_param, ob_a, ob_x0, ob_len, ob_windows, ob_seed, ob_epochs,
                             ob_out);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlagged;
    }
    return kExitUsage;
}
