#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "latgraph/optim.hpp"
#include "latgraph/rng.hpp"

namespace latgraph {

// Column-stochastic K x N matrix: column i holds the per-class probability
// vector of vertex i for the upcoming slot.
struct SlotState {
    Eigen::MatrixXd probs;

    int k_classes() const { return static_cast<int>(probs.rows()); }
    int n_vertices() const { return static_cast<int>(probs.cols()); }
    void validate() const;
};

SlotState one_hot_state(const std::vector<int>& classes, int k_classes);

// Per-vertex K x K row-stochastic matrices; entry (a, b) = Pr(class b next
// slot | class a this slot).
struct TransitionModel {
    std::vector<Eigen::MatrixXd> per_vertex;

    void validate() const;
};

// Row-normalized transition counts from per-vertex class sequences, with
// Laplace smoothing by default so no transition has probability zero.
TransitionModel estimate_transition_model(const std::vector<std::vector<int>>& label_history,
                                          int k_classes, double smoothing = 1.0);

// Pooled variant: counts are shared across vertices before normalization,
// trading per-vertex fidelity for sample efficiency.
TransitionModel estimate_pooled_transition_model(const std::vector<std::vector<int>>& label_history,
                                                 int k_classes, double smoothing = 1.0);

// One MDP step: probed columns collapse onto the transition row of the
// observed class, unprobed columns evolve by M^T p.
SlotState transition(const SlotState& state, const std::vector<int>& action,
                     const std::map<int, int>& observed, const TransitionModel& model);

// Fraction of correctly predicted labels over non-probed vertices.
double reward(const std::vector<int>& predicted, const std::vector<int>& truth,
              const std::vector<int>& action);

struct Experience {
    SlotState state;
    std::vector<int> action;
    double reward = 0.0;
    SlotState next_state;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Experience exp);
    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::vector<Experience> sample(Rng& rng, std::size_t batch_size) const;

private:
    std::size_t capacity_;
    std::deque<Experience> buffer_;
};

struct DqnConfig {
    int m_select = 0;          // probe budget; 0 means N/10 at agent construction
    double beta = 0.9;         // discount in the Q recursion
    double learning_rate = 1e-3;
    std::vector<int> hidden{128, 64};
    int replay_capacity = 10000;
    int batch_size = 32;
    int sync_every = 50;       // target-network refresh cadence, in train steps
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_slots = 500;
    int train_steps_per_slot = 1;
    std::uint64_t seed = 1;
};

// Geometric decay from epsilon_start to epsilon_end over the configured
// horizon; non-increasing in slot.
double epsilon_at(const DqnConfig& config, long slot);

// Fully connected scorer over the flattened SlotState: K*N -> hidden -> N.
// Parameters interleave weights and single-row biases.
struct QNetwork {
    std::vector<Eigen::MatrixXd> params;

    Eigen::VectorXd score(const SlotState& state) const;
    Eigen::MatrixXd score_batch(const Eigen::MatrixXd& inputs) const;
};

QNetwork init_q_network(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);

// Vertex-set selector: the combinatorial action space is factorized into
// per-vertex scores; the greedy action takes the top-m vertices.
class DqnAgent {
public:
    DqnAgent(int n_vertices, int k_classes, DqnConfig config);

    const DqnConfig& config() const { return config_; }
    int m_select() const { return m_select_; }

    // Epsilon-greedy subset selection; ties in the greedy branch break by
    // lowest vertex id.
    std::vector<int> select_action(const SlotState& state, double epsilon_greedy);

    void remember(Experience exp);
    std::size_t replay_size() const { return buffer_.size(); }

    // One TD step on a batch toward r + beta * max target score. Returns the
    // TD loss before the update. Refreshes the target network every
    // sync_every steps.
    double train_step(std::span<const Experience> batch, double beta);

    // Samples a batch from the replay buffer and runs train_step
    // config.train_steps_per_slot times; no-op until a batch is available.
    double learn();

    long steps_taken() const { return step_count_; }
    const QNetwork& predict_network() const { return predict_; }
    const QNetwork& target_network() const { return target_; }

    void save(const std::filesystem::path& path) const;
    static DqnAgent load(const std::filesystem::path& path);

private:
    void sync_target();

    DqnConfig config_;
    int n_vertices_;
    int k_classes_;
    int m_select_;
    QNetwork predict_, target_;
    AdamState adam_;
    ReplayBuffer buffer_;
    Rng explore_rng_;
    Rng sample_rng_;
    long step_count_ = 0;
};

}  // namespace latgraph
