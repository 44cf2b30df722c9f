#include "latgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "latgraph/errors.hpp"

namespace latgraph {

void LatencyGraph::validate() const {
    if (n < 1) throw ValidationError("graph has no vertices");
    if (adjacency.rows() != n || adjacency.cols() != n) throw ShapeError("adjacency must be N x N");
    if (features.rows() != n) throw ShapeError("features must have N rows");
    if (static_cast<int>(labels.size()) != n) throw ShapeError("labels must have length N");
    auto check_mask = [&](const std::vector<std::uint8_t>& mask, const char* name) {
        if (!mask.empty() && static_cast<int>(mask.size()) != n) {
            throw ShapeError(std::string(name) + " mask must have length N");
        }
    };
    check_mask(train_mask, "train");
    check_mask(val_mask, "val");
    check_mask(test_mask, "test");
    for (int v = 0; v < n; ++v) {
        int roles = 0;
        if (!train_mask.empty() && train_mask[static_cast<std::size_t>(v)]) ++roles;
        if (!val_mask.empty() && val_mask[static_cast<std::size_t>(v)]) ++roles;
        if (!test_mask.empty() && test_mask[static_cast<std::size_t>(v)]) ++roles;
        if (roles > 1) throw ValidationError("masks must be disjoint (vertex " + std::to_string(v) + ")");
    }
}

LatencyGraph build_graph(const std::vector<EmpiricalPdf>& pdfs,
                         const std::vector<std::pair<int, int>>& neighbor_relation, double eta,
                         Matrix features) {
    const int n = static_cast<int>(pdfs.size());
    if (n < 1) throw ValidationError("need at least one pdf");
    if (!(eta >= 0.0)) throw ValidationError("eta must be non-negative");
    for (const auto& pdf : pdfs) {
        if (pdf.bin_edges != pdfs.front().bin_edges) {
            throw ShapeError("all pdfs must share bin_edges");
        }
    }
    if (features.rows() != n) throw ShapeError("features must have one row per vertex");

    LatencyGraph graph;
    graph.n = n;
    graph.adjacency = Matrix::Zero(n, n);
    graph.features = std::move(features);
    graph.labels.assign(static_cast<std::size_t>(n), kUnobservedLabel);

    for (auto [i, j] : neighbor_relation) {
        if (i == j) continue;
        if (i < 0 || j < 0 || i >= n || j >= n) {
            throw ValidationError("neighbor relation references vertex out of range");
        }
        if (i > j) std::swap(i, j);
        const double js = js_divergence(pdfs[static_cast<std::size_t>(i)],
                                        pdfs[static_cast<std::size_t>(j)]);
        if (js < eta) {
            graph.adjacency(i, j) = 1.0;
            graph.adjacency(j, i) = 1.0;
            graph.edge_weights[{i, j}] = js;
        }
    }
    return graph;
}

PropagationMatrix renormalize(const Matrix& adjacency) {
    const auto n = adjacency.rows();
    if (adjacency.cols() != n) throw ShapeError("adjacency must be square");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0) throw ValidationError("adjacency diagonal must be zero");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (adjacency(i, j) != adjacency(j, i)) {
                throw ValidationError("adjacency must be symmetric");
            }
        }
    }
    Matrix a_tilde = adjacency + Matrix::Identity(n, n);
    Eigen::VectorXd inv_sqrt_degree(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        inv_sqrt_degree(i) = 1.0 / std::sqrt(a_tilde.row(i).sum());
    }
    PropagationMatrix prop;
    prop.delta_a = inv_sqrt_degree.asDiagonal() * a_tilde * inv_sqrt_degree.asDiagonal();
    return prop;
}

FeatureBuild build_features(const std::vector<std::vector<double>>& per_vertex_samples, int f_dim,
                            std::optional<double> norm_constant) {
    const int n = static_cast<int>(per_vertex_samples.size());
    if (f_dim < 1) throw ValidationError("f_dim must be >= 1");
    for (int v = 0; v < n; ++v) {
        if (static_cast<int>(per_vertex_samples[static_cast<std::size_t>(v)].size()) < f_dim) {
            throw InsufficientDataError("vertex " + std::to_string(v) + " has only " +
                                        std::to_string(per_vertex_samples[static_cast<std::size_t>(v)].size()) +
                                        " samples, need " + std::to_string(f_dim));
        }
    }

    double scale;
    if (norm_constant) {
        scale = *norm_constant;
        if (!(scale > 0.0)) throw ValidationError("norm_constant must be positive");
    } else {
        // 99th-percentile RTT over the whole corpus (nearest rank).
        std::vector<double> all;
        for (const auto& vs : per_vertex_samples) all.insert(all.end(), vs.begin(), vs.end());
        std::sort(all.begin(), all.end());
        const std::size_t rank =
            std::min(all.size() - 1,
                     static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(all.size()))) - 1);
        scale = all[rank];
        if (!(scale > 0.0)) throw ValidationError("degenerate sample corpus, 99th percentile <= 0");
    }

    FeatureBuild build{Matrix(n, f_dim), scale};
    for (int v = 0; v < n; ++v) {
        for (int f = 0; f < f_dim; ++f) {
            build.x(v, f) = per_vertex_samples[static_cast<std::size_t>(v)][static_cast<std::size_t>(f)] / scale;
        }
    }
    return build;
}

namespace {

nlohmann::json mask_to_indices(const std::vector<std::uint8_t>& mask) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t v = 0; v < mask.size(); ++v) {
        if (mask[v]) out.push_back(v);
    }
    return out;
}

std::vector<std::uint8_t> indices_to_mask(const nlohmann::json& j, int n) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
    for (const auto& idx : j) {
        const int v = idx.get<int>();
        if (v < 0 || v >= n) throw ValidationError("mask index out of range");
        mask[static_cast<std::size_t>(v)] = 1;
    }
    return mask;
}

}  // namespace

nlohmann::json graph_to_json(const LatencyGraph& graph) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [key, weight] : graph.edge_weights) {
        edges.push_back({key.first, key.second, weight});
    }
    nlohmann::json features = nlohmann::json::array();
    for (int v = 0; v < graph.n; ++v) {
        nlohmann::json row = nlohmann::json::array();
        for (int f = 0; f < graph.feature_dim(); ++f) row.push_back(graph.features(v, f));
        features.push_back(std::move(row));
    }
    return nlohmann::json{{"n", graph.n},
                          {"edges", edges},
                          {"features", features},
                          {"labels", graph.labels},
                          {"masks",
                           {{"train", mask_to_indices(graph.train_mask)},
                            {"val", mask_to_indices(graph.val_mask)},
                            {"test", mask_to_indices(graph.test_mask)}}},
                          {"norm_constant", graph.norm_constant}};
}

LatencyGraph graph_from_json(const nlohmann::json& j) {
    LatencyGraph graph;
    try {
        graph.n = j.at("n").get<int>();
        if (graph.n < 1) throw ValidationError("graph has no vertices");
        graph.adjacency = Matrix::Zero(graph.n, graph.n);
        for (const auto& e : j.at("edges")) {
            const int a = e.at(0).get<int>();
            const int b = e.at(1).get<int>();
            if (a < 0 || b < 0 || a >= graph.n || b >= graph.n) {
                throw ValidationError("edge endpoint out of range");
            }
            graph.adjacency(a, b) = 1.0;
            graph.adjacency(b, a) = 1.0;
            graph.edge_weights[{std::min(a, b), std::max(a, b)}] = e.at(2).get<double>();
        }
        const auto& feats = j.at("features");
        const int f_dim = feats.empty() ? 0 : static_cast<int>(feats.at(0).size());
        graph.features = Matrix::Zero(graph.n, f_dim);
        for (int v = 0; v < graph.n; ++v) {
            const auto& row = feats.at(static_cast<std::size_t>(v));
            for (int f = 0; f < f_dim; ++f) {
                graph.features(v, f) = row.at(static_cast<std::size_t>(f)).get<double>();
            }
        }
        j.at("labels").get_to(graph.labels);
        graph.train_mask = indices_to_mask(j.at("masks").at("train"), graph.n);
        graph.val_mask = indices_to_mask(j.at("masks").at("val"), graph.n);
        graph.test_mask = indices_to_mask(j.at("masks").at("test"), graph.n);
        graph.norm_constant = j.at("norm_constant").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad graph file: ") + e.what());
    }
    graph.validate();
    return graph;
}

void save_graph(const std::filesystem::path& path, const LatencyGraph& graph) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file " + path.string());
    out << graph_to_json(graph).dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path.string());
}

LatencyGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return graph_from_json(j);
}

}  // namespace latgraph
