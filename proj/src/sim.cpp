#include "latgraph/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "latgraph/errors.hpp"

namespace latgraph {

namespace {

constexpr std::uint64_t kStreamGcn = 0x51;
constexpr std::uint64_t kStreamDqn = 0x52;
constexpr std::uint64_t kStreamRandomPolicy = 0x53;
constexpr std::uint64_t kStreamProbeSplit = 0x54;
constexpr std::uint64_t kStreamStaticSplit = 0x55;

std::vector<int> shuffled_vertices(int n, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    return order;
}

}  // namespace

void ExperimentConfig::validate() const {
    world.validate();
    if (!(graph.eta >= 0.0)) throw ConfigError("eta must be non-negative");
    if (graph.f_dim < 1) throw ConfigError("f_dim must be >= 1");
    if (graph.f_dim > samples_per_vertex) {
        throw ConfigError("f_dim cannot exceed samples_per_vertex");
    }
    if (graph.f_dim > init_samples_per_vertex) {
        throw ConfigError("f_dim cannot exceed init_samples_per_vertex");
    }
    if (n_slots < 0) throw ConfigError("n_slots must be non-negative");
    if (seeds.empty()) throw ConfigError("at least one seed required");
    if (init_slots < 2) throw ConfigError("init_slots must be >= 2 to estimate transitions");
    if (init_samples_per_vertex < 1 || samples_per_vertex < 1) {
        throw ConfigError("samples per vertex must be positive");
    }
    const int m = selector.m_select > 0 ? selector.m_select : std::max(1, world.n_vertices / 10);
    if (m < 2) throw ConfigError("m_select must be >= 2 (one probed vertex is held out)");
    if (m >= world.n_vertices) throw ConfigError("m_select must be < n_vertices");
    if (!(probe_val_fraction > 0.0 && probe_val_fraction < 1.0)) {
        throw ConfigError("probe_val_fraction must lie in (0, 1)");
    }
    if (!(labeled_train_fraction > 0.0) || !(labeled_val_fraction > 0.0) ||
        labeled_train_fraction + labeled_val_fraction >= 1.0) {
        throw ConfigError("labeled fractions must be positive and sum below 1");
    }
    if (gcn.max_epochs < 1 || gcn.patience < 1) throw ConfigError("gcn epochs/patience must be >= 1");
    if (!run_dqn && !compare_random) throw ConfigError("no policy enabled");
}

std::string policy_name(Policy policy) { return policy == Policy::Dqn ? "dqn" : "random"; }

SlotPipeline::SlotPipeline(const ExperimentConfig& config, std::uint64_t seed, Policy policy,
                           TruthAudit* audit)
    : config_(config),
      seed_(seed),
      policy_(policy),
      audit_(audit),
      gcn_dropout_rng_(mix_seed(seed, kStreamGcn, 0x32)),
      random_policy_rng_(mix_seed(seed, kStreamRandomPolicy)) {
    config_.validate();
    world_ = generate_world(config_.world);
    const int n = world_.n_vertices();
    const int k = world_.k_classes();

    // Initialization: heavy sample collection at slot 0 gives the PDFs, the
    // edge structure, and the feature normalization constant.
    const auto init_samples = sample_slot(world_, 0, config_.init_samples_per_vertex);
    const auto grouped = rtt_by_vertex(init_samples, n);
    std::vector<EmpiricalPdf> pdfs;
    pdfs.reserve(static_cast<std::size_t>(n));
    for (const auto& vs : grouped) pdfs.push_back(build_empirical_pdf(vs, config_.graph.bins));
    auto features = build_features(grouped, config_.graph.f_dim);
    base_graph_ = build_graph(pdfs, world_.grid_edges(), config_.graph.eta, features.x);
    base_graph_.norm_constant = features.norm_constant;
    prop_ = renormalize(base_graph_.adjacency);

    // Burn-in label history (full observation) for the transition model.
    std::vector<std::vector<int>> history(static_cast<std::size_t>(n));
    for (long t = 0; t < config_.init_slots; ++t) {
        const auto classes = all_truth(t, TruthPhase::Init);
        for (int v = 0; v < n; ++v) history[static_cast<std::size_t>(v)].push_back(classes[static_cast<std::size_t>(v)]);
    }
    transition_model_ = config_.pooled_transitions
                            ? estimate_pooled_transition_model(history, k)
                            : estimate_transition_model(history, k);

    // Prior for the first loop slot: advance the last fully observed labels
    // one step through the estimated transition model.
    const auto last_classes = all_truth(config_.init_slots - 1, TruthPhase::Init);
    std::vector<int> all_vertices(static_cast<std::size_t>(n));
    std::iota(all_vertices.begin(), all_vertices.end(), 0);
    std::map<int, int> observed_all;
    for (int v = 0; v < n; ++v) observed_all[v] = last_classes[static_cast<std::size_t>(v)];
    state_ = transition(one_hot_state(last_classes, k), all_vertices, observed_all,
                        transition_model_);

    DqnConfig selector = config_.selector;
    selector.seed = mix_seed(seed_, kStreamDqn);
    if (policy_ == Policy::Dqn) {
        agent_ = std::make_unique<DqnAgent>(n, k, selector);
    } else {
        agent_ = nullptr;
    }
    GcnHyper hyper = config_.gcn;
    hyper.seed = mix_seed(seed_, kStreamGcn);
    gcn_model_ = init_model(config_.graph.f_dim, k, hyper);
}

int SlotPipeline::truth(int vertex, long abs_slot, TruthPhase phase) {
    if (audit_) audit_->queries.push_back({phase, abs_slot, vertex});
    return world_.true_class(vertex, abs_slot);
}

std::vector<int> SlotPipeline::all_truth(long abs_slot, TruthPhase phase) {
    std::vector<int> classes(static_cast<std::size_t>(world_.n_vertices()));
    for (int v = 0; v < world_.n_vertices(); ++v) classes[static_cast<std::size_t>(v)] = truth(v, abs_slot, phase);
    return classes;
}

SlotReport SlotPipeline::run_slot(long slot) {
    if (slot != next_slot_) {
        throw ValidationError("slots must run consecutively from 0 (expected " +
                              std::to_string(next_slot_) + ")");
    }
    ++next_slot_;
    const auto t0 = std::chrono::steady_clock::now();
    const long abs_slot = config_.init_slots + slot;
    const int n = world_.n_vertices();
    const int m = agent_ ? agent_->m_select()
                         : (config_.selector.m_select > 0 ? config_.selector.m_select
                                                          : std::max(1, n / 10));

    // Select the probe set.
    std::vector<int> action;
    if (policy_ == Policy::Dqn) {
        action = agent_->select_action(state_, epsilon_at(agent_->config(), slot));
    } else {
        auto order = shuffled_vertices(n, random_policy_rng_);
        action.assign(order.begin(), order.begin() + m);
        std::sort(action.begin(), action.end());
    }

    // Probe: draw this slot's samples everywhere (features) but reveal
    // ground-truth labels only for the probed vertices.
    const auto slot_samples = sample_slot(world_, abs_slot, config_.samples_per_vertex);
    const auto grouped = rtt_by_vertex(slot_samples, n);
    std::map<int, int> observed;
    for (int v : action) {
        if (config_.empirical_probe_labels) {
            const auto pdf = build_empirical_pdf(grouped[static_cast<std::size_t>(v)], config_.graph.bins);
            observed[v] = level_index(classify_service_level(pdf));
        } else {
            observed[v] = truth(v, abs_slot, TruthPhase::Probe);
        }
    }

    // Slot graph: fixed structure, fresh features, labels only where probed.
    LatencyGraph graph = base_graph_;
    graph.features = build_features(grouped, config_.graph.f_dim, graph.norm_constant).x;
    graph.labels.assign(static_cast<std::size_t>(n), kUnobservedLabel);
    graph.train_mask.assign(static_cast<std::size_t>(n), 0);
    graph.val_mask.assign(static_cast<std::size_t>(n), 0);
    graph.test_mask.assign(static_cast<std::size_t>(n), 0);
    for (const auto& [v, c] : observed) graph.labels[static_cast<std::size_t>(v)] = c;

    // Hold out part of the probe set for early stopping.
    Rng split_rng(mix_seed(seed_, kStreamProbeSplit, static_cast<std::uint64_t>(slot)));
    std::vector<int> probe_order = action;
    for (int i = static_cast<int>(probe_order.size()) - 1; i > 0; --i) {
        const auto j = static_cast<int>(split_rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(probe_order[static_cast<std::size_t>(i)], probe_order[static_cast<std::size_t>(j)]);
    }
    const int val_count = std::max(1, static_cast<int>(std::lround(
                                          config_.probe_val_fraction * static_cast<double>(m))));
    for (std::size_t i = 0; i < probe_order.size(); ++i) {
        const auto v = static_cast<std::size_t>(probe_order[i]);
        if (static_cast<int>(i) < val_count) {
            graph.val_mask[v] = 1;
        } else {
            graph.train_mask[v] = 1;
        }
    }
    for (int v = 0; v < n; ++v) {
        if (!observed.count(v)) graph.test_mask[static_cast<std::size_t>(v)] = 1;
    }

    if (on_slot_graph) on_slot_graph(graph, action);

    // Reconstruct all labels semi-supervised. The learner persists across
    // slots in warm-start mode (model plus optimizer state); a cold start
    // re-trains from scratch on this slot's labels alone.
    int epochs_run = 0;
    double val_loss = 0.0;
    if (config_.warm_start) {
        const bool use_dropout = config_.gcn.dropout > 0.0;
        for (int epoch = 0; epoch < config_.gcn.max_epochs; ++epoch) {
            ForwardCache cache =
                forward(gcn_model_, prop_, graph.features, use_dropout, gcn_dropout_rng_);
            Gradients grads = backward(cache, graph.labels, graph.train_mask, prop_, gcn_model_);
            if (config_.gcn.optimizer == OptimizerKind::Ngd) {
                grads = ngd_precondition(
                    grads, cache, prop_,
                    NgdState{config_.gcn.ngd_lambda, config_.gcn.ngd_epsilon, graph.train_mask});
                sgd_momentum_step(gcn_model_, grads, gcn_velocity_);
            } else {
                optimizer_step(gcn_model_, grads, gcn_adam_);
            }
            ++epochs_run;
        }
    } else {
        GcnHyper hyper = config_.gcn;
        hyper.seed = mix_seed(seed_, kStreamGcn, static_cast<std::uint64_t>(slot) + 1);
        const GcnModel fresh = init_model(config_.graph.f_dim, world_.k_classes(), hyper);
        TrainResult trained = train(graph, prop_, hyper, fresh);
        gcn_model_ = trained.final_model;
        epochs_run = static_cast<int>(trained.history.size());
    }
    std::vector<int> predicted;
    {
        Rng null_rng(0);
        const ForwardCache eval = forward(gcn_model_, prop_, graph.features, false, null_rng);
        val_loss = masked_cross_entropy(eval.probs, graph.labels, graph.val_mask);
        predicted.resize(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            Eigen::Index arg = 0;
            eval.probs.row(v).maxCoeff(&arg);
            predicted[static_cast<std::size_t>(v)] = static_cast<int>(arg);
        }
    }
    for (const auto& [v, c] : observed) predicted[static_cast<std::size_t>(v)] = c;

    // Score against ground truth and advance the MDP.
    const auto truth_labels = all_truth(abs_slot, TruthPhase::Reward);
    const double r = reward(predicted, truth_labels, action);
    SlotState next_state = transition(state_, action, observed, transition_model_);

    if (policy_ == Policy::Dqn) {
        agent_->remember(Experience{state_, action, r, next_state});
        agent_->learn();
    }
    state_ = std::move(next_state);

    SlotReport report;
    report.slot = slot;
    report.action = action;
    report.predicted = predicted;
    report.reconstruction_accuracy = r;
    report.gcn_epochs_run = epochs_run;
    report.val_loss = val_loss;
    if (config_.timing) {
        report.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
    }
    return report;
}

namespace {

nlohmann::json per_slot_band(const std::vector<std::vector<double>>& per_seed_curves) {
    // per_seed_curves[seed][slot]
    nlohmann::json mean = nlohmann::json::array();
    nlohmann::json stddev = nlohmann::json::array();
    nlohmann::json lo = nlohmann::json::array();
    nlohmann::json hi = nlohmann::json::array();
    if (per_seed_curves.empty()) {
        return {{"mean", mean}, {"std", stddev}, {"min", lo}, {"max", hi}};
    }
    const std::size_t n_slots = per_seed_curves.front().size();
    for (std::size_t t = 0; t < n_slots; ++t) {
        double sum = 0.0, sq = 0.0, mn = 0.0, mx = 0.0;
        for (std::size_t s = 0; s < per_seed_curves.size(); ++s) {
            const double v = per_seed_curves[s][t];
            sum += v;
            sq += v * v;
            mn = s == 0 ? v : std::min(mn, v);
            mx = s == 0 ? v : std::max(mx, v);
        }
        const double k = static_cast<double>(per_seed_curves.size());
        const double mu = sum / k;
        mean.push_back(mu);
        stddev.push_back(std::sqrt(std::max(0.0, sq / k - mu * mu)));
        lo.push_back(mn);
        hi.push_back(mx);
    }
    return {{"mean", mean}, {"std", stddev}, {"min", lo}, {"max", hi}};
}

double tail_mean(const std::vector<double>& xs, std::size_t window) {
    if (xs.empty()) return 0.0;
    const std::size_t n = std::min(window, xs.size());
    double sum = 0.0;
    for (std::size_t i = xs.size() - n; i < xs.size(); ++i) sum += xs[i];
    return sum / static_cast<double>(n);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, TruthAudit* audit) {
    config.validate();
    ExperimentResult result;
    std::vector<Policy> policies;
    if (config.run_dqn) policies.push_back(Policy::Dqn);
    if (config.compare_random) policies.push_back(Policy::Random);

    nlohmann::json policy_summaries;
    nlohmann::json final_window;
    std::map<std::string, std::vector<double>> final50_per_policy;

    for (Policy policy : policies) {
        std::vector<std::vector<double>> curves;
        for (std::uint64_t seed : config.seeds) {
            SlotPipeline pipeline(config, seed, policy, audit);
            std::vector<double> curve;
            for (long t = 0; t < config.n_slots; ++t) {
                const SlotReport report = pipeline.run_slot(t);
                curve.push_back(report.reconstruction_accuracy);
                result.reports.push_back(SlotRecord{report.slot, seed, policy,
                                                    report.reconstruction_accuracy,
                                                    report.gcn_epochs_run, report.val_loss,
                                                    report.wallclock_ms});
            }
            curves.push_back(std::move(curve));
        }
        nlohmann::json entry = per_slot_band(curves);
        nlohmann::json final50 = nlohmann::json::array();
        for (const auto& curve : curves) {
            const double tm = tail_mean(curve, 50);
            final50.push_back(tm);
            final50_per_policy[policy_name(policy)].push_back(tm);
        }
        entry["final50_mean_per_seed"] = final50;
        policy_summaries[policy_name(policy)] = std::move(entry);
    }

    result.summary = {{"n_slots", config.n_slots},
                      {"seeds", config.seeds},
                      {"policies", std::move(policy_summaries)}};
    if (config.run_dqn && config.compare_random && config.n_slots > 0) {
        const auto& dqn = final50_per_policy["dqn"];
        const auto& rnd = final50_per_policy["random"];
        int better = 0;
        for (std::size_t s = 0; s < dqn.size(); ++s) {
            if (dqn[s] > rnd[s]) ++better;
        }
        result.summary["dqn_vs_random"] = {{"final_window", 50},
                                           {"dqn_better_seeds", better},
                                           {"total_seeds", dqn.size()}};
    }
    return result;
}

StaticTaskResult run_static_task(const ExperimentConfig& config, std::uint64_t seed,
                                 OptimizerKind optimizer, std::optional<int> f_dim_override) {
    SimWorld world = generate_world(config.world);
    const int n = world.n_vertices();
    const int k = world.k_classes();
    const int f_dim = f_dim_override.value_or(config.graph.f_dim);
    if (f_dim < 1 || f_dim > config.init_samples_per_vertex) {
        throw ConfigError("f_dim " + std::to_string(f_dim) + " infeasible");
    }

    const auto samples = sample_slot(world, 0, config.init_samples_per_vertex);
    const auto grouped = rtt_by_vertex(samples, n);
    std::vector<EmpiricalPdf> pdfs;
    for (const auto& vs : grouped) pdfs.push_back(build_empirical_pdf(vs, config.graph.bins));
    auto features = build_features(grouped, f_dim);
    LatencyGraph graph = build_graph(pdfs, world.grid_edges(), config.graph.eta, features.x);
    graph.norm_constant = features.norm_constant;
    graph.labels = world.true_classes(0);

    // labeled split (default 15% train / 5% validation), remainder is test
    Rng split_rng(mix_seed(seed, kStreamStaticSplit));
    const auto order = shuffled_vertices(n, split_rng);
    const int train_count =
        std::max(1, static_cast<int>(std::lround(config.labeled_train_fraction * n)));
    const int val_count =
        std::max(1, static_cast<int>(std::lround(config.labeled_val_fraction * n)));
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

    GcnHyper hyper = config.gcn;
    hyper.optimizer = optimizer;
    hyper.seed = mix_seed(seed, kStreamGcn);
    const GcnModel initial = init_model(f_dim, k, hyper);

    StaticTaskResult result;
    {
        Rng null_rng(0);
        const ForwardCache eval = forward(initial, renormalize(graph.adjacency), graph.features,
                                          false, null_rng);
        result.initial_val_loss = masked_cross_entropy(eval.probs, graph.labels, graph.val_mask);
    }
    const PropagationMatrix prop = renormalize(graph.adjacency);
    result.train_result = train(graph, prop, hyper, initial);
    const auto predicted = predict(result.train_result.model, prop, graph.features);
    result.test_accuracy = accuracy(predicted, graph.labels, graph.test_mask);

    // Majority baseline: most frequent class among the labeled split.
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int v = 0; v < n; ++v) {
        if (graph.train_mask[static_cast<std::size_t>(v)] || graph.val_mask[static_cast<std::size_t>(v)]) {
            ++counts[static_cast<std::size_t>(graph.labels[static_cast<std::size_t>(v)])];
        }
    }
    const int majority = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::vector<int> constant(static_cast<std::size_t>(n), majority);
    result.majority_baseline = accuracy(constant, graph.labels, graph.test_mask);
    return result;
}

std::vector<FeatureSweepRow> run_feature_sweep(const ExperimentConfig& config,
                                               const std::vector<int>& f_dims) {
    if (f_dims.empty()) throw ConfigError("feature sweep needs at least one f_dim");
    std::vector<int> sorted = f_dims;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("duplicate f_dim in sweep");
    }
    for (int f : f_dims) {
        if (f < 1 || f > config.init_samples_per_vertex) {
            throw ConfigError("f_dim " + std::to_string(f) + " infeasible for the sweep");
        }
    }
    std::vector<FeatureSweepRow> table;
    for (int f : f_dims) {
        FeatureSweepRow row;
        row.f_dim = f;
        for (std::uint64_t seed : config.seeds) {
            row.per_seed.push_back(
                run_static_task(config, seed, config.gcn.optimizer, f).test_accuracy);
        }
        row.mean_accuracy = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) /
                            static_cast<double>(row.per_seed.size());
        table.push_back(std::move(row));
    }
    return table;
}

OptimizerComparison run_optimizer_comparison(const ExperimentConfig& config,
                                             const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() < 2) throw ConfigError("optimizer comparison needs >= 2 seeds");
    OptimizerComparison comparison;
    for (OptimizerKind kind : {OptimizerKind::Adam, OptimizerKind::Ngd}) {
        for (std::uint64_t seed : seeds) {
            const StaticTaskResult task = run_static_task(config, seed, kind);
            OptimizerRun run;
            run.optimizer = kind == OptimizerKind::Ngd ? "ngd" : "adam";
            run.seed = seed;
            run.initial_val_loss = task.initial_val_loss;
            run.best_test_accuracy = task.test_accuracy;
            run.history = task.train_result.history;
            const double threshold = 0.9 * task.initial_val_loss;
            for (const auto& e : run.history) {
                if (e.val_loss < threshold) {
                    run.threshold_epoch = e.epoch;
                    break;
                }
            }
            comparison.runs.push_back(std::move(run));
        }
    }

    nlohmann::json summary;
    for (const std::string& name : {std::string("adam"), std::string("ngd")}) {
        std::size_t max_len = 0;
        for (const auto& run : comparison.runs) {
            if (run.optimizer == name) max_len = std::max(max_len, run.history.size());
        }
        nlohmann::json mean = nlohmann::json::array();
        nlohmann::json lo = nlohmann::json::array();
        nlohmann::json hi = nlohmann::json::array();
        nlohmann::json acc_mean = nlohmann::json::array();
        nlohmann::json acc_lo = nlohmann::json::array();
        nlohmann::json acc_hi = nlohmann::json::array();
        for (std::size_t e = 0; e < max_len; ++e) {
            double sum = 0.0, mn = 0.0, mx = 0.0;
            double asum = 0.0, amn = 0.0, amx = 0.0;
            int count = 0;
            for (const auto& run : comparison.runs) {
                if (run.optimizer != name || e >= run.history.size()) continue;
                const double v = run.history[e].val_loss;
                const double a = run.history[e].val_acc;
                if (count == 0) {
                    mn = mx = v;
                    amn = amx = a;
                } else {
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                    amn = std::min(amn, a);
                    amx = std::max(amx, a);
                }
                sum += v;
                asum += a;
                ++count;
            }
            mean.push_back(sum / count);
            lo.push_back(mn);
            hi.push_back(mx);
            acc_mean.push_back(asum / count);
            acc_lo.push_back(amn);
            acc_hi.push_back(amx);
        }
        nlohmann::json best = nlohmann::json::array();
        nlohmann::json thresholds = nlohmann::json::array();
        for (const auto& run : comparison.runs) {
            if (run.optimizer != name) continue;
            best.push_back(run.best_test_accuracy);
            thresholds.push_back(run.threshold_epoch);
        }
        summary[name] = {{"val_loss_mean", mean},    {"val_loss_min", lo},
                         {"val_loss_max", hi},       {"val_acc_mean", acc_mean},
                         {"val_acc_min", acc_lo},    {"val_acc_max", acc_hi},
                         {"best_test_accuracy_per_seed", best},
                         {"threshold_epoch_per_seed", thresholds}};
    }
    summary["seeds"] = seeds;
    comparison.summary = std::move(summary);
    return comparison;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void write_reports_csv(const std::filesystem::path& path, std::span<const SlotRecord> reports) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write reports file " + path.string());
    out << "slot,seed,policy,accuracy,gcn_epochs,val_loss,wallclock_ms\n";
    for (const auto& r : reports) {
        out << r.slot << ',' << r.seed << ',' << policy_name(r.policy) << ','
            << fmt_double(r.accuracy) << ',' << r.gcn_epochs << ',' << fmt_double(r.val_loss) << ','
            << r.wallclock_ms << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<SlotRecord> read_reports_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reports file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "slot,seed,policy,accuracy,gcn_epochs,val_loss,wallclock_ms") {
        throw ParseError(path.string() + ": unexpected header '" + line + "'");
    }
    std::vector<SlotRecord> reports;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 7 fields");
        }
        try {
            SlotRecord r;
            r.slot = std::stol(fields[0]);
            r.seed = std::stoull(fields[1]);
            if (fields[2] == "dqn") {
                r.policy = Policy::Dqn;
            } else if (fields[2] == "random") {
                r.policy = Policy::Random;
            } else {
                throw ParseError("line " + std::to_string(line_no) + ": unknown policy '" +
                                 fields[2] + "'");
            }
            r.accuracy = std::stod(fields[3]);
            r.gcn_epochs = std::stoi(fields[4]);
            r.val_loss = std::stod(fields[5]);
            r.wallclock_ms = std::stol(fields[6]);
            reports.push_back(r);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed row");
        }
    }
    return reports;
}

}  // namespace latgraph
