#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "latgraph/dqn.hpp"
#include "latgraph/gcn.hpp"
#include "latgraph/graph.hpp"
#include "latgraph/stats.hpp"
#include "latgraph/trace_gen.hpp"

namespace latgraph {

struct GraphConfig {
    double eta = 0.25;
    BinSpec bins;
    int f_dim = 30;
};

struct ExperimentConfig {
    WorldConfig world;
    GraphConfig graph;
    GcnHyper gcn;
    DqnConfig selector;
    int n_slots = 100;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    bool run_dqn = true;          // run the learned selector
    bool compare_random = true;   // run the random-selection baseline alongside the DQN
    int init_slots = 20;          // full-observation burn-in for PDFs and transition history
    int init_samples_per_vertex = 2000;
    int samples_per_vertex = 30;  // per-slot draw used for features
    bool warm_start = true;       // per-slot GCN starts from the previous slot's weights
    bool empirical_probe_labels = false;  // classify probed labels from slot samples
    bool pooled_transitions = true;
    double probe_val_fraction = 0.2;
    // static snapshot task (sweeps, optimizer comparison)
    double labeled_train_fraction = 0.15;
    double labeled_val_fraction = 0.05;
    bool timing = false;  // real wallclock_ms in reports (breaks byte-reproducibility)

    void validate() const;
};

enum class Policy { Dqn, Random };
std::string policy_name(Policy policy);

struct SlotReport {
    long slot = 0;
    std::vector<int> action;
    std::vector<int> predicted;  // final per-vertex labels (probed overridden)
    double reconstruction_accuracy = 0.0;  // equals the MDP reward
    int gcn_epochs_run = 0;
    double val_loss = 0.0;
    long wallclock_ms = 0;
};

// One row of the reports CSV.
struct SlotRecord {
    long slot = 0;
    std::uint64_t seed = 0;
    Policy policy = Policy::Dqn;
    double accuracy = 0.0;
    int gcn_epochs = 0;
    double val_loss = 0.0;
    long wallclock_ms = 0;
};

// Ground-truth access instrumentation: the pipeline funnels every latent
// class read through here so tests can assert that unprobed labels never
// reach the learners.
enum class TruthPhase { Init, Probe, Reward };

struct TruthAudit {
    struct Query {
        TruthPhase phase;
        long slot;
        int vertex;
    };
    std::vector<Query> queries;
};

// Full per-seed pipeline: burn-in initialization then the slotted
// select -> probe -> label -> reconstruct -> reward -> learn loop.
class SlotPipeline {
public:
    SlotPipeline(const ExperimentConfig& config, std::uint64_t seed, Policy policy,
                 TruthAudit* audit = nullptr);

    SlotReport run_slot(long slot);  // loop-relative slot index, consecutive from 0

    const SimWorld& world() const { return world_; }
    const LatencyGraph& base_graph() const { return base_graph_; }
    const PropagationMatrix& propagation() const { return prop_; }
    const SlotState& state() const { return state_; }
    DqnAgent* agent() { return agent_ ? agent_.get() : nullptr; }

    // Test hook: observes each slot's training graph and probe set just
    // before GCN training.
    std::function<void(const LatencyGraph&, const std::vector<int>&)> on_slot_graph;

private:
    int truth(int vertex, long abs_slot, TruthPhase phase);
    std::vector<int> all_truth(long abs_slot, TruthPhase phase);

    ExperimentConfig config_;
    std::uint64_t seed_;
    Policy policy_;
    TruthAudit* audit_;
    SimWorld world_;
    LatencyGraph base_graph_;  // structure + norm constant; labels unset
    PropagationMatrix prop_;
    TransitionModel transition_model_;
    SlotState state_;
    // persistent online learner (warm-start mode)
    GcnModel gcn_model_;
    AdamState gcn_adam_;
    std::vector<Matrix> gcn_velocity_;
    std::unique_ptr<DqnAgent> agent_;
    Rng gcn_dropout_rng_;
    Rng random_policy_rng_;
    long next_slot_ = 0;
};

struct ExperimentResult {
    std::vector<SlotRecord> reports;
    nlohmann::json summary;
};

ExperimentResult run_experiment(const ExperimentConfig& config, TruthAudit* audit = nullptr);

// Static semi-supervised snapshot task (initialization scenario): full
// sample collection at slot 0, seeded label split, one GCN training run.
struct StaticTaskResult {
    TrainResult train_result;
    double test_accuracy = 0.0;
    double majority_baseline = 0.0;  // constant most-frequent-labeled-class predictor
    double initial_val_loss = 0.0;   // validation loss of the untouched initial model
};

StaticTaskResult run_static_task(const ExperimentConfig& config, std::uint64_t seed,
                                 OptimizerKind optimizer,
                                 std::optional<int> f_dim_override = std::nullopt);

struct FeatureSweepRow {
    int f_dim = 0;
    double mean_accuracy = 0.0;
    std::vector<double> per_seed;
};

std::vector<FeatureSweepRow> run_feature_sweep(const ExperimentConfig& config,
                                               const std::vector<int>& f_dims);

struct OptimizerRun {
    std::string optimizer;
    std::uint64_t seed = 0;
    double initial_val_loss = 0.0;
    int threshold_epoch = -1;  // first epoch with val_loss < 0.9 * initial_val_loss
    double best_test_accuracy = 0.0;
    std::vector<EpochStats> history;
};

struct OptimizerComparison {
    std::vector<OptimizerRun> runs;
    nlohmann::json summary;  // per-epoch mean/min/max band per optimizer
};

OptimizerComparison run_optimizer_comparison(const ExperimentConfig& config,
                                             const std::vector<std::uint64_t>& seeds);

void write_reports_csv(const std::filesystem::path& path, std::span<const SlotRecord> reports);
std::vector<SlotRecord> read_reports_csv(const std::filesystem::path& path);

}  // namespace latgraph
