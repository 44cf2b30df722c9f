#pragma once

#include <vector>

#include <Eigen/Dense>

namespace latgraph {

// Diagonal-adaptive first/second-moment update (Adam). Shared by the GCN
// trainer and the Q-network; weight decay is a loss term upstream, not part
// of this rule.
struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    AdamState() = default;

    // Applies one bias-corrected step along `direction` to `params`.
    // Shapes are pinned on first use.
    void step(std::vector<Eigen::MatrixXd>& params,
              const std::vector<Eigen::MatrixXd>& direction, const AdamConfig& config);

    long steps_taken() const { return t_; }

private:
    std::vector<Eigen::MatrixXd> m_, v_;
    long t_ = 0;
};

}  // namespace latgraph
