#include "latgraph/optim.hpp"

#include <cmath>

#include "latgraph/errors.hpp"

namespace latgraph {

void AdamState::step(std::vector<Eigen::MatrixXd>& params,
                     const std::vector<Eigen::MatrixXd>& direction, const AdamConfig& config) {
    if (direction.size() != params.size()) throw ShapeError("direction/parameter count mismatch");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
            v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < params.size(); ++l) {
        const auto& g = direction[l];
        if (g.rows() != params[l].rows() || g.cols() != params[l].cols()) {
            throw ShapeError("direction shape mismatch at layer " + std::to_string(l));
        }
        m_[l] = config.beta1 * m_[l] + (1.0 - config.beta1) * g;
        v_[l] = config.beta2 * v_[l] + (1.0 - config.beta2) * g.cwiseProduct(g);
        const Eigen::ArrayXXd m_hat = m_[l].array() / bc1;
        const Eigen::ArrayXXd v_hat = v_[l].array() / bc2;
        params[l].array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
    }
}

}  // namespace latgraph
