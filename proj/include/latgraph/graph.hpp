#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "latgraph/stats.hpp"

namespace latgraph {

using Matrix = Eigen::MatrixXd;

inline constexpr int kUnobservedLabel = -1;

// Latency graph: binary adjacency over the road-neighbor relation pruned by
// JS divergence, per-vertex features, and the semi-supervised label/mask
// state. Instances are immutable by convention; per-slot updates copy.
struct LatencyGraph {
    int n = 0;
    Matrix adjacency;                                  // N x N, 0/1, zero diagonal
    std::map<std::pair<int, int>, double> edge_weights;  // (i<j) -> JS divergence
    Matrix features;                                   // N x F
    std::vector<int> labels;                           // class index or kUnobservedLabel
    std::vector<std::uint8_t> train_mask, val_mask, test_mask;
    double norm_constant = 1.0;  // feature scale recorded for cross-slot comparability

    int feature_dim() const { return static_cast<int>(features.cols()); }
    void validate() const;
};

// Renormalized propagation operator D~^{-1/2} (A + I) D~^{-1/2}.
struct PropagationMatrix {
    Matrix delta_a;
};

// Edge (i, j) exists iff the road relation links i and j and the JS
// divergence of their latency PDFs falls strictly below eta.
LatencyGraph build_graph(const std::vector<EmpiricalPdf>& pdfs,
                         const std::vector<std::pair<int, int>>& neighbor_relation, double eta,
                         Matrix features);

PropagationMatrix renormalize(const Matrix& adjacency);

struct FeatureBuild {
    Matrix x;
    double norm_constant;
};

// Row i = first f_dim samples of vertex i divided by the normalization
// constant (99th-percentile RTT of the corpus unless one is supplied).
FeatureBuild build_features(const std::vector<std::vector<double>>& per_vertex_samples, int f_dim,
                            std::optional<double> norm_constant = std::nullopt);

void save_graph(const std::filesystem::path& path, const LatencyGraph& graph);
LatencyGraph load_graph(const std::filesystem::path& path);

nlohmann::json graph_to_json(const LatencyGraph& graph);
LatencyGraph graph_from_json(const nlohmann::json& j);

}  // namespace latgraph
