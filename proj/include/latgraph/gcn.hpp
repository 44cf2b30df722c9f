#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "latgraph/graph.hpp"
#include "latgraph/optim.hpp"
#include "latgraph/rng.hpp"

namespace latgraph {

enum class OptimizerKind { Adam, Ngd };

struct GcnHyper {
    int hidden = 16;
    double dropout = 0.5;        // after the first layer only
    double learning_rate = 0.01;
    double weight_decay = 5e-4;  // L2 term in the loss
    double momentum = 0.9;       // first-moment coefficient of the adaptive rule
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_epochs = 200;
    int patience = 10;  // early stop after this many non-improving validation epochs
    OptimizerKind optimizer = OptimizerKind::Adam;
    // Preconditioner knobs: lambda weights unlabeled vertices in the
    // second-moment estimates, ngd_epsilon sets the eps^{-1/2} ridge.
    double ngd_lambda = 0.0;
    double ngd_epsilon = 100.0;
    std::uint64_t seed = 1;
};

// Two-layer graph convolutional classifier in the reference configuration;
// weights chain F -> hidden -> K. Each layer carries a bias row: latency
// classes are magnitude-coded, and a bias-free ReLU stack is positively
// homogeneous, which makes its argmax blind to feature scale.
struct GcnModel {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;  // 1 x d_out per layer
    GcnHyper hyper;

    int layer_count() const { return static_cast<int>(weights.size()); }
    void validate_shapes() const;
};

GcnModel init_model(int f_dim, int k_classes, const GcnHyper& hyper);

// Everything the backward pass and the preconditioner need from one forward
// evaluation. backward() additionally deposits the per-layer pre-activation
// gradients here (the u-vectors of the preconditioner).
struct ForwardCache {
    std::vector<Matrix> inputs;      // inputs[l]: layer-l input before aggregation
    std::vector<Matrix> aggregated;  // aggregated[l] = delta_a * inputs[l]
    std::vector<Matrix> preact;      // aggregated[l] * W_l
    Matrix dropout_scale;            // per-entry keep/scale factors, empty when inactive
    Matrix logits;                   // alias of preact.back()
    Matrix probs;                    // softmax rows of logits
    std::vector<Matrix> preact_grad;  // filled by backward()
    bool dropout_active = false;
};

ForwardCache forward(const GcnModel& model, const PropagationMatrix& prop, const Matrix& x,
                     bool dropout_active, Rng& rng);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& z);

// Mean negative log-probability of the true class over masked vertices.
double masked_cross_entropy(const Matrix& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
};

// Analytic gradients of masked_cross_entropy + (weight_decay/2)*||W||^2,
// replaying the cached dropout scaling. The decay term applies to weights
// only. Stores pre-activation gradients in the cache for the preconditioner.
Gradients backward(ForwardCache& cache, const std::vector<int>& labels,
                   const std::vector<std::uint8_t>& mask, const PropagationMatrix& prop,
                   const GcnModel& model);

struct NgdState {
    double lambda = 1.0;       // unlabeled-vertex cost weight
    double ngd_epsilon = 1.0;  // ridge is ngd_epsilon^{-1/2} * I
    std::vector<std::uint8_t> mask;  // training mask z

    int labeled_count() const;
};

// Transforms weight gradients into natural-gradient directions: per layer,
// (V_l + eps^{-1/2} I)^{-1} grad (U_l + eps^{-1/2} I)^{-1} with V_l/U_l the
// lambda-weighted second moments of aggregated inputs and pre-activation
// gradients. Bias gradients pass through untouched.
Gradients ngd_precondition(const Gradients& grads, const ForwardCache& cache,
                           const PropagationMatrix& prop, const NgdState& state);

// One diagonal-adaptive update along `direction` (the Adam arm).
void optimizer_step(GcnModel& model, const Gradients& direction, AdamState& state);

// Momentum-SGD update used for the natural-gradient arm; the velocity buffer
// covers weights then biases and is sized on first use.
void sgd_momentum_step(GcnModel& model, const Gradients& direction,
                       std::vector<Matrix>& velocity);

struct EpochStats {
    int epoch;  // 1-based
    double train_loss;
    double val_loss;
    double val_acc;
};

struct TrainResult {
    GcnModel model;        // best-validation-loss snapshot
    GcnModel final_model;  // weights after the last epoch (warm-start continuity)
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

TrainResult train(const LatencyGraph& graph, const PropagationMatrix& prop, const GcnHyper& hyper,
                  const std::optional<GcnModel>& warm_start = std::nullopt);

std::vector<int> predict(const GcnModel& model, const PropagationMatrix& prop, const Matrix& x);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask);

void save_checkpoint(const std::filesystem::path& path, const GcnModel& model);
GcnModel load_checkpoint(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochStats>& history);

}  // namespace latgraph
