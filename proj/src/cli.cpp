#include "latgraph/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "latgraph/config.hpp"
#include "latgraph/errors.hpp"
#include "latgraph/version.hpp"

namespace latgraph {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void require_writable(const fs::path& path, bool force) {
    if (fs::exists(path) && !force) {
        throw ConfigError(path.string() + " exists; pass --force to overwrite");
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void inject_world_seed(nlohmann::json& doc) {
    if (!doc.contains("seed")) doc["seed"] = global_seed_fallback();
}

nlohmann::json load_world_doc(const fs::path& path) {
    nlohmann::json doc = load_json_file(path);
    inject_world_seed(doc);
    return doc;
}

nlohmann::json load_experiment_doc(const fs::path& path) {
    nlohmann::json doc = load_json_file(path);
    if (doc.contains("world")) inject_world_seed(doc["world"]);
    return doc;
}

struct GenerateOptions {
    std::string config_path;
    std::string out_dir;
    int slots = 1;
    int samples_per_vertex = 30;
    bool force = false;
};

void cmd_generate(const GenerateOptions& opt) {
    const WorldConfig config = load_world_doc(opt.config_path).get<WorldConfig>();
    const SimWorld world = generate_world(config);
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);

    RunManifest manifest;
    manifest.command = "generate";
    manifest.config = nlohmann::json(config);
    manifest.seeds = {config.seed};
    manifest.artifacts = {"world.json"};
    char name[32];
    for (int t = 0; t < opt.slots; ++t) {
        std::snprintf(name, sizeof(name), "slot_%04d.csv", t);
        manifest.artifacts.emplace_back(name);
    }
    manifest.created_utc = utc_timestamp();
    require_writable(out / "world.json", opt.force);
    write_manifest(out / "manifest.json", manifest);

    write_json_file(out / "world.json", nlohmann::json(config));
    for (int t = 0; t < opt.slots; ++t) {
        std::snprintf(name, sizeof(name), "slot_%04d.csv", t);
        require_writable(out / name, opt.force);
        const auto samples = sample_slot(world, t, opt.samples_per_vertex);
        write_csv(out / name, samples);
    }
    manifest.completed_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);
}

struct BuildGraphOptions {
    std::string traces_path;
    std::string world_path;
    std::string out_path;
    double eta = 0.25;
    int f_dim = 30;
    BinSpec bins;
    long slot = -1;  // -1: pool all slots
    double train_frac = 0.15;
    double val_frac = 0.05;
    std::uint64_t split_seed = 1;
    bool force = false;
};

std::vector<LatencySample> ingest_traces(const fs::path& path) {
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            const auto name = entry.path().filename().string();
            if (entry.is_regular_file() && name.starts_with("slot_") && name.ends_with(".csv")) {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) throw IoError("no slot_*.csv traces under " + path.string());
        std::sort(files.begin(), files.end());
        std::vector<LatencySample> all;
        for (const auto& f : files) {
            auto part = ingest_csv(f);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    return ingest_csv(path);
}

void cmd_build_graph(const BuildGraphOptions& opt) {
    const WorldConfig world_config = load_world_doc(opt.world_path).get<WorldConfig>();
    const auto samples = ingest_traces(opt.traces_path);
    const int n = world_config.n_vertices;
    const auto grouped =
        rtt_by_vertex(samples, n, opt.slot >= 0 ? std::optional<long>(opt.slot) : std::nullopt);
    for (int v = 0; v < n; ++v) {
        if (grouped[static_cast<std::size_t>(v)].empty()) {
            throw InsufficientDataError("vertex " + std::to_string(v) + " has no samples");
        }
    }

    std::vector<EmpiricalPdf> pdfs;
    pdfs.reserve(static_cast<std::size_t>(n));
    for (const auto& vs : grouped) pdfs.push_back(build_empirical_pdf(vs, opt.bins));

    const auto features = build_features(grouped, opt.f_dim);
    const SimWorld world = generate_world(world_config);  // road-neighbor relation
    LatencyGraph graph = build_graph(pdfs, world.grid_edges(), opt.eta, features.x);
    graph.norm_constant = features.norm_constant;

    for (int v = 0; v < n; ++v) {
        graph.labels[static_cast<std::size_t>(v)] =
            level_index(classify_service_level(pdfs[static_cast<std::size_t>(v)]));
    }

    Rng split_rng(opt.split_seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(split_rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const int train_count = std::max(1, static_cast<int>(std::lround(opt.train_frac * n)));
    const int val_count = std::max(1, static_cast<int>(std::lround(opt.val_frac * n)));
    graph.train_mask.assign(static_cast<std::size_t>(n), 0);
    graph.val_mask.assign(static_cast<std::size_t>(n), 0);
    graph.test_mask.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const auto v = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        if (i < train_count) {
            graph.train_mask[v] = 1;
        } else if (i < train_count + val_count) {
            graph.val_mask[v] = 1;
        } else {
            graph.test_mask[v] = 1;
        }
    }

    require_writable(opt.out_path, opt.force);
    if (fs::path(opt.out_path).has_parent_path()) ensure_dir(fs::path(opt.out_path).parent_path());
    save_graph(opt.out_path, graph);
}

struct TrainGcnOptions {
    std::string graph_path;
    std::string out_dir;
    GcnHyper hyper;
    bool force = false;
};

void cmd_train_gcn(const TrainGcnOptions& opt) {
    const LatencyGraph graph = load_graph(opt.graph_path);
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);
    require_writable(out / "checkpoint.json", opt.force);
    require_writable(out / "history.csv", opt.force);

    const PropagationMatrix prop = renormalize(graph.adjacency);
    const TrainResult result = train(graph, prop, opt.hyper);
    save_checkpoint(out / "checkpoint.json", result.model);
    write_history_csv(out / "history.csv", result.history);

    double test_acc = -1.0;
    if (std::count(graph.test_mask.begin(), graph.test_mask.end(), 1) > 0 &&
        std::none_of(graph.labels.begin(), graph.labels.end(),
                     [](int label) { return label == kUnobservedLabel; })) {
        test_acc = accuracy(predict(result.model, prop, graph.features), graph.labels,
                            graph.test_mask);
    }
    nlohmann::json summary{{"epochs_run", result.history.size()},
                           {"best_epoch", result.best_epoch},
                           {"best_val_loss", result.best_val_loss}};
    if (test_acc >= 0.0) summary["test_accuracy"] = test_acc;
    write_json_file(out / "train_summary.json", summary);
    std::cout << summary.dump(2) << '\n';
}

struct SimulateOptions {
    std::string config_path;
    std::string manifest_path;
    std::string out_dir;
    std::string policy = "both";
    std::vector<std::uint64_t> seeds;
    long slots = -1;
    std::vector<std::string> overrides;
    bool timing = false;
    bool force = false;
};

void cmd_simulate(const SimulateOptions& opt) {
    nlohmann::json doc;
    if (!opt.manifest_path.empty()) {
        doc = read_manifest(opt.manifest_path).config;
    } else {
        doc = load_experiment_doc(opt.config_path);
    }
    for (const auto& assignment : opt.overrides) apply_override(doc, assignment);
    if (!opt.seeds.empty()) doc["seeds"] = opt.seeds;
    if (opt.slots >= 0) doc["n_slots"] = opt.slots;
    if (opt.policy == "dqn") {
        doc["run_dqn"] = true;
        doc["compare_random"] = false;
    } else if (opt.policy == "random") {
        doc["run_dqn"] = false;
        doc["compare_random"] = true;
    } else if (opt.policy == "both") {
        doc["run_dqn"] = true;
        doc["compare_random"] = true;
    } else {
        throw ConfigError("unknown policy '" + opt.policy + "'");
    }
    if (opt.timing) doc["timing"] = true;

    const ExperimentConfig config = doc.get<ExperimentConfig>();
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);
    require_writable(out / "reports.csv", opt.force);
    require_writable(out / "summary.json", opt.force);

    // Manifest goes down before slot 0 runs; the snapshot is the resolved
    // config, so a --manifest re-run reproduces the artifacts byte-for-byte.
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config = nlohmann::json(config);
    manifest.seeds = config.seeds;
    manifest.artifacts = {"reports.csv", "summary.json"};
    manifest.created_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);

    const ExperimentResult result = run_experiment(config);
    write_reports_csv(out / "reports.csv", result.reports);
    write_json_file(out / "summary.json", result.summary);

    manifest.completed_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);
}

struct SweepOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<int> f_dims{5, 10, 20, 30};
    std::vector<std::string> overrides;
    bool force = false;
};

void cmd_sweep_features(const SweepOptions& opt) {
    nlohmann::json doc = load_experiment_doc(opt.config_path);
    for (const auto& assignment : opt.overrides) apply_override(doc, assignment);
    const ExperimentConfig config = doc.get<ExperimentConfig>();
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);
    require_writable(out / "feature_sweep.json", opt.force);

    RunManifest manifest;
    manifest.command = "sweep-features";
    manifest.config = nlohmann::json(config);
    manifest.config["f_dims"] = opt.f_dims;
    manifest.seeds = config.seeds;
    manifest.artifacts = {"feature_sweep.json"};
    manifest.created_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);

    const auto table = run_feature_sweep(config, opt.f_dims);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table) {
        rows.push_back({{"f_dim", row.f_dim},
                        {"mean_accuracy", row.mean_accuracy},
                        {"per_seed", row.per_seed}});
    }
    write_json_file(out / "feature_sweep.json",
                    nlohmann::json{{"seeds", config.seeds}, {"rows", rows}});
    manifest.completed_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);
}

struct CompareOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> overrides;
    bool force = false;
};

void cmd_compare_optimizers(const CompareOptions& opt) {
    nlohmann::json doc = load_experiment_doc(opt.config_path);
    for (const auto& assignment : opt.overrides) apply_override(doc, assignment);
    const ExperimentConfig config = doc.get<ExperimentConfig>();
    const std::vector<std::uint64_t> seeds = opt.seeds.empty() ? config.seeds : opt.seeds;
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);
    require_writable(out / "optimizer_comparison.json", opt.force);

    RunManifest manifest;
    manifest.command = "compare-optimizers";
    manifest.config = nlohmann::json(config);
    manifest.seeds = seeds;
    manifest.artifacts = {"optimizer_comparison.json"};
    manifest.created_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);

    const OptimizerComparison comparison = run_optimizer_comparison(config, seeds);
    for (const auto& run : comparison.runs) {
        char name[64];
        std::snprintf(name, sizeof(name), "history_%s_seed%llu.csv", run.optimizer.c_str(),
                      static_cast<unsigned long long>(run.seed));
        write_history_csv(out / name, run.history);
        manifest.artifacts.emplace_back(name);
    }
    write_json_file(out / "optimizer_comparison.json", comparison.summary);
    manifest.completed_utc = utc_timestamp();
    write_manifest(out / "manifest.json", manifest);
}

struct PlotdataOptions {
    std::string input_path;
    std::string kind;
    std::string out_path;
    bool force = false;
};

void write_band_csv(const fs::path& path, const std::string& x_name,
                    const std::vector<std::tuple<std::string, std::string, double, double, double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << x_name << ",series,mean,min,max\n";
    for (const auto& [x, series, mean, lo, hi] : rows) {
        out << x << ',' << series << ',' << fmt_double(mean) << ',' << fmt_double(lo) << ','
            << fmt_double(hi) << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

void cmd_plotdata(const PlotdataOptions& opt) {
    require_writable(opt.out_path, opt.force);
    if (opt.kind == "reward") {
        const auto reports = read_reports_csv(opt.input_path);
        // (policy, slot) -> accuracies across seeds
        std::map<std::pair<std::string, long>, std::vector<double>> cells;
        for (const auto& r : reports) {
            cells[{policy_name(r.policy), r.slot}].push_back(r.accuracy);
        }
        std::ofstream out(opt.out_path);
        if (!out) throw IoError("cannot write " + opt.out_path);
        out << "slot,policy,mean,min,max\n";
        for (const auto& [key, accs] : cells) {
            double sum = 0.0, mn = accs.front(), mx = accs.front();
            for (double a : accs) {
                sum += a;
                mn = std::min(mn, a);
                mx = std::max(mx, a);
            }
            out << key.second << ',' << key.first << ',' << fmt_double(sum / accs.size()) << ','
                << fmt_double(mn) << ',' << fmt_double(mx) << '\n';
        }
        if (!out) throw IoError("failed while writing " + opt.out_path);
        return;
    }

    if (opt.kind == "loss_curves" || opt.kind == "accuracy") {
        const nlohmann::json j = load_json_file(opt.input_path);
        const std::string prefix = opt.kind == "loss_curves" ? "val_loss" : "val_acc";
        std::vector<std::tuple<std::string, std::string, double, double, double>> rows;
        for (const std::string& name : {std::string("adam"), std::string("ngd")}) {
            if (!j.contains(name)) {
                throw ParseError("input is not an optimizer comparison (missing '" + name + "')");
            }
            const auto& mean = j.at(name).at(prefix + "_mean");
            const auto& lo = j.at(name).at(prefix + "_min");
            const auto& hi = j.at(name).at(prefix + "_max");
            for (std::size_t e = 0; e < mean.size(); ++e) {
                rows.emplace_back(std::to_string(e + 1), name, mean.at(e).get<double>(),
                                  lo.at(e).get<double>(), hi.at(e).get<double>());
            }
        }
        write_band_csv(opt.out_path, "epoch", rows);
        return;
    }

    if (opt.kind == "feature_sweep") {
        const nlohmann::json j = load_json_file(opt.input_path);
        if (!j.contains("rows")) throw ParseError("input is not a feature sweep (missing 'rows')");
        std::vector<std::tuple<std::string, std::string, double, double, double>> rows;
        for (const auto& row : j.at("rows")) {
            const auto per_seed = row.at("per_seed").get<std::vector<double>>();
            double mn = per_seed.front(), mx = per_seed.front();
            for (double a : per_seed) {
                mn = std::min(mn, a);
                mx = std::max(mx, a);
            }
            rows.emplace_back(std::to_string(row.at("f_dim").get<int>()), "gcn",
                              row.at("mean_accuracy").get<double>(), mn, mx);
        }
        write_band_csv(opt.out_path, "f_dim", rows);
        return;
    }

    throw ConfigError("unknown plot kind '" + opt.kind + "'");
}

struct ValidateOptions {
    std::string config_path;
    std::string kind = "auto";
};

void cmd_validate(const ValidateOptions& opt) {
    const nlohmann::json doc = load_json_file(opt.config_path);
    std::string kind = opt.kind;
    if (kind == "auto") kind = doc.contains("world") ? "experiment" : "world";
    if (kind == "world") {
        nlohmann::json world_doc = doc;
        inject_world_seed(world_doc);
        world_doc.get<WorldConfig>();
    } else if (kind == "experiment") {
        nlohmann::json exp_doc = doc;
        if (exp_doc.contains("world")) inject_world_seed(exp_doc["world"]);
        exp_doc.get<ExperimentConfig>();
    } else {
        throw ConfigError("unknown config kind '" + kind + "'");
    }
    std::cout << opt.config_path << ": valid " << kind << " config\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"latency-graph modeling and reconstruction toolkit"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* sub_gen = app.add_subcommand("generate", "generate a synthetic world and RTT traces");
    sub_gen->add_option("-c,--config", gen.config_path, "world config JSON")->required();
    sub_gen->add_option("-o,--out", gen.out_dir, "output directory")->required();
    sub_gen->add_option("--slots", gen.slots, "number of slots to emit")->check(CLI::NonNegativeNumber);
    sub_gen->add_option("--samples-per-vertex", gen.samples_per_vertex, "samples per vertex per slot")
        ->check(CLI::PositiveNumber);
    sub_gen->add_flag("--force", gen.force, "overwrite existing outputs");
    sub_gen->callback([&] { cmd_generate(gen); });

    BuildGraphOptions bg;
    auto* sub_bg = app.add_subcommand("build-graph", "build a latency graph from traces");
    sub_bg->add_option("-t,--traces", bg.traces_path, "trace CSV file or directory")->required();
    sub_bg->add_option("-w,--world", bg.world_path, "world config JSON (road relation)")->required();
    sub_bg->add_option("-o,--out", bg.out_path, "output graph JSON")->required();
    sub_bg->add_option("--eta", bg.eta, "JS pruning threshold (nats)");
    sub_bg->add_option("--f-dim", bg.f_dim, "feature dimension")->check(CLI::PositiveNumber);
    sub_bg->add_option("--slot", bg.slot, "restrict to one slot");
    sub_bg->add_option("--bin-lo", bg.bins.lo, "histogram lower edge (ms)");
    sub_bg->add_option("--bin-hi", bg.bins.hi, "histogram upper edge (ms)");
    sub_bg->add_option("--bin-count", bg.bins.count, "histogram bin count")->check(CLI::PositiveNumber);
    sub_bg->add_option("--train-frac", bg.train_frac, "train mask fraction");
    sub_bg->add_option("--val-frac", bg.val_frac, "validation mask fraction");
    sub_bg->add_option("--split-seed", bg.split_seed, "mask split seed");
    sub_bg->add_flag("--force", bg.force, "overwrite existing outputs");
    sub_bg->callback([&] { cmd_build_graph(bg); });

    TrainGcnOptions tg;
    std::string tg_optimizer = "adam";
    auto* sub_tg = app.add_subcommand("train-gcn", "train the classifier on a graph file");
    sub_tg->add_option("-g,--graph", tg.graph_path, "graph JSON")->required();
    sub_tg->add_option("-o,--out", tg.out_dir, "output directory")->required();
    sub_tg->add_option("--optimizer", tg_optimizer, "adam or ngd")
        ->check(CLI::IsMember({"adam", "ngd"}));
    sub_tg->add_option("--seed", tg.hyper.seed, "training seed");
    sub_tg->add_option("--hidden", tg.hyper.hidden, "hidden width")->check(CLI::PositiveNumber);
    sub_tg->add_option("--dropout", tg.hyper.dropout, "dropout rate after layer 1");
    sub_tg->add_option("--lr", tg.hyper.learning_rate, "learning rate");
    sub_tg->add_option("--max-epochs", tg.hyper.max_epochs, "epoch budget")->check(CLI::PositiveNumber);
    sub_tg->add_option("--patience", tg.hyper.patience, "early-stop patience")->check(CLI::PositiveNumber);
    sub_tg->add_flag("--force", tg.force, "overwrite existing outputs");
    sub_tg->callback([&] {
        tg.hyper.optimizer = tg_optimizer == "ngd" ? OptimizerKind::Ngd : OptimizerKind::Adam;
        cmd_train_gcn(tg);
    });

    SimulateOptions sim;
    auto* sub_sim = app.add_subcommand("simulate", "run the slotted reconstruction loop");
    auto* sim_config = sub_sim->add_option("-c,--config", sim.config_path, "experiment config JSON");
    auto* sim_manifest =
        sub_sim->add_option("--manifest", sim.manifest_path, "re-run from a manifest snapshot");
    sim_config->excludes(sim_manifest);
    sub_sim->add_option("-o,--out", sim.out_dir, "output directory")->required();
    sub_sim->add_option("--policy", sim.policy, "dqn, random, or both")
        ->check(CLI::IsMember({"dqn", "random", "both"}));
    sub_sim->add_option("--seeds", sim.seeds, "seed list")->delimiter(',');
    sub_sim->add_option("--slots", sim.slots, "number of loop slots");
    sub_sim->add_option("--set", sim.overrides, "config override path.to.field=value");
    sub_sim->add_flag("--timing", sim.timing, "record real wallclock_ms (non-reproducible)");
    sub_sim->add_flag("--force", sim.force, "overwrite existing outputs");
    sub_sim->callback([&] {
        if (sim.config_path.empty() && sim.manifest_path.empty()) {
            throw CLI::RequiredError("--config or --manifest");
        }
        cmd_simulate(sim);
    });

    SweepOptions sweep;
    auto* sub_sweep = app.add_subcommand("sweep-features", "accuracy across feature dimensions");
    sub_sweep->add_option("-c,--config", sweep.config_path, "experiment config JSON")->required();
    sub_sweep->add_option("-o,--out", sweep.out_dir, "output directory")->required();
    sub_sweep->add_option("--f-dims", sweep.f_dims, "feature dimensions")->delimiter(',');
    sub_sweep->add_option("--set", sweep.overrides, "config override path.to.field=value");
    sub_sweep->add_flag("--force", sweep.force, "overwrite existing outputs");
    sub_sweep->callback([&] { cmd_sweep_features(sweep); });

    CompareOptions cmp;
    auto* sub_cmp = app.add_subcommand("compare-optimizers", "adam vs ngd validation-loss curves");
    sub_cmp->add_option("-c,--config", cmp.config_path, "experiment config JSON")->required();
    sub_cmp->add_option("-o,--out", cmp.out_dir, "output directory")->required();
    sub_cmp->add_option("--seeds", cmp.seeds, "seed list")->delimiter(',');
    sub_cmp->add_option("--set", cmp.overrides, "config override path.to.field=value");
    sub_cmp->add_flag("--force", cmp.force, "overwrite existing outputs");
    sub_cmp->callback([&] { cmd_compare_optimizers(cmp); });

    PlotdataOptions plot;
    auto* sub_plot = app.add_subcommand("plotdata", "emit tidy plot-ready CSV");
    sub_plot->add_option("-i,--input", plot.input_path, "reports CSV or summary JSON")->required();
    sub_plot->add_option("-k,--kind", plot.kind, "loss_curves, accuracy, feature_sweep, or reward")
        ->required()
        ->check(CLI::IsMember({"loss_curves", "accuracy", "feature_sweep", "reward"}));
    sub_plot->add_option("-o,--out", plot.out_path, "output CSV")->required();
    sub_plot->add_flag("--force", plot.force, "overwrite existing outputs");
    sub_plot->callback([&] { cmd_plotdata(plot); });

    ValidateOptions val;
    auto* sub_val = app.add_subcommand("validate", "check a config file");
    sub_val->add_option("-c,--config", val.config_path, "config JSON")->required();
    sub_val->add_option("--kind", val.kind, "world, experiment, or auto")
        ->check(CLI::IsMember({"world", "experiment", "auto"}));
    sub_val->callback([&] { cmd_validate(val); });

    std::vector<const char*> argv;
    argv.push_back(kToolName);
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace latgraph
