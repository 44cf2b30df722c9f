#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "latgraph/errors.hpp"
#include "latgraph/graph.hpp"
#include "latgraph/rng.hpp"
#include "latgraph/stats.hpp"

using namespace latgraph;

namespace {

EmpiricalPdf two_bin_pdf(double p0) {
    return EmpiricalPdf{{0.0, 50.0, 100.0}, {p0, 1.0 - p0}};
}

Matrix cycle_adjacency(int n) {
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

}  // namespace

TEST_CASE("renormalize matches hand-computed operators") {
    // isolated vertex: self-loop only
    const auto single = renormalize(Matrix::Zero(1, 1));
    CHECK(single.delta_a(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    // two connected vertices: D~ = diag(2, 2)
    Matrix pair = Matrix::Zero(2, 2);
    pair(0, 1) = pair(1, 0) = 1.0;
    const auto two = renormalize(pair);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(two.delta_a(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    }

    // 4-cycle: every entry on the support is 1/3
    const auto cyc = renormalize(cycle_adjacency(4));
    for (int i = 0; i < 4; ++i) {
        CHECK(cyc.delta_a(i, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(cyc.delta_a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("renormalized operator is symmetric with matching support") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(8));
        Matrix a = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (rng.uniform() < 0.4) a(i, j) = a(j, i) = 1.0;
            }
        }
        const auto prop = renormalize(a);
        CHECK((prop.delta_a - prop.delta_a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const bool support = i == j || a(i, j) != 0.0;
                CHECK((prop.delta_a(i, j) != 0.0) == support);
                CHECK(prop.delta_a(i, j) >= 0.0);
            }
        }
    }
}

TEST_CASE("renormalize rejects malformed adjacency") {
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    CHECK_THROWS_AS(renormalize(diag), ValidationError);
    Matrix asym = Matrix::Zero(2, 2);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(renormalize(asym), ValidationError);
}

TEST_CASE("row sums are exactly 1 on regular graphs") {
    for (int n : {3, 5, 8, 12}) {
        const auto prop = renormalize(cycle_adjacency(n));
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(prop.delta_a.row(i).sum() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("build_graph thresholds JS over the road relation") {
    // path 0-1-2 with a small and a large divergence
    const std::vector<EmpiricalPdf> pdfs{two_bin_pdf(0.50), two_bin_pdf(0.52), two_bin_pdf(0.99)};
    const std::vector<std::pair<int, int>> road{{0, 1}, {1, 2}};
    const double js01 = js_divergence(pdfs[0], pdfs[1]);
    const double js12 = js_divergence(pdfs[1], pdfs[2]);
    CHECK(js01 < 0.1);
    CHECK(js12 > 0.1);

    const auto graph = build_graph(pdfs, road, 0.1, Matrix::Zero(3, 1));
    CHECK(graph.edge_weights.size() == 1);
    CHECK(graph.adjacency(0, 1) == 1.0);
    CHECK(graph.adjacency(1, 2) == 0.0);
    CHECK(graph.edge_weights.at({0, 1}) == doctest::Approx(js01).epsilon(1e-12));

    // eta = 0: strict inequality leaves no edges
    const auto empty = build_graph(pdfs, road, 0.0, Matrix::Zero(3, 1));
    CHECK(empty.edge_weights.empty());

    // eta above ln 2: graph equals the road relation
    const auto full = build_graph(pdfs, road, std::log(2.0) + 0.01, Matrix::Zero(3, 1));
    CHECK(full.edge_weights.size() == road.size());
}

TEST_CASE("edge set grows monotonically with eta") {
    Rng rng(17);
    std::vector<EmpiricalPdf> pdfs;
    for (int v = 0; v < 8; ++v) pdfs.push_back(two_bin_pdf(rng.uniform()));
    std::vector<std::pair<int, int>> road;
    for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
            if (rng.uniform() < 0.5) road.emplace_back(i, j);
        }
    }
    std::size_t prev = 0;
    for (double eta : {0.0, 0.05, 0.1, 0.3, 0.7}) {
        const auto graph = build_graph(pdfs, road, eta, Matrix::Zero(8, 1));
        CHECK(graph.edge_weights.size() >= prev);
        prev = graph.edge_weights.size();
    }
}

TEST_CASE("build_graph is permutation-equivariant") {
    Rng rng(23);
    std::vector<EmpiricalPdf> pdfs;
    Matrix features(5, 2);
    for (int v = 0; v < 5; ++v) {
        pdfs.push_back(two_bin_pdf(rng.uniform()));
        features(v, 0) = rng.uniform();
        features(v, 1) = rng.uniform();
    }
    const std::vector<std::pair<int, int>> road{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
    const double eta = 0.08;
    const auto graph = build_graph(pdfs, road, eta, features);

    // permutation pi(v) = (v + 2) % 5
    auto pi = [](int v) { return (v + 2) % 5; };
    std::vector<EmpiricalPdf> ppdfs(5, two_bin_pdf(0.5));
    Matrix pfeatures(5, 2);
    for (int v = 0; v < 5; ++v) {
        ppdfs[static_cast<std::size_t>(pi(v))] = pdfs[static_cast<std::size_t>(v)];
        pfeatures.row(pi(v)) = features.row(v);
    }
    std::vector<std::pair<int, int>> proad;
    for (const auto& [i, j] : road) proad.emplace_back(pi(i), pi(j));
    const auto pgraph = build_graph(ppdfs, proad, eta, pfeatures);

    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            CHECK(graph.adjacency(i, j) == pgraph.adjacency(pi(i), pi(j)));
        }
    }
    for (const auto& [key, w] : graph.edge_weights) {
        const int a = pi(key.first);
        const int b = pi(key.second);
        CHECK(pgraph.edge_weights.at({std::min(a, b), std::max(a, b)}) ==
              doctest::Approx(w).epsilon(1e-15));
    }
}

TEST_CASE("build_graph rejects inconsistent pdf binning") {
    std::vector<EmpiricalPdf> pdfs{two_bin_pdf(0.5), EmpiricalPdf{{0.0, 60.0, 100.0}, {0.5, 0.5}}};
    CHECK_THROWS_AS(build_graph(pdfs, {{0, 1}}, 0.1, Matrix::Zero(2, 1)), ShapeError);
}

TEST_CASE("build_features normalizes by the 99th percentile") {
    std::vector<std::vector<double>> samples(150);
    for (int v = 0; v < 150; ++v) {
        for (int i = 0; i < 30; ++i) samples[static_cast<std::size_t>(v)].push_back(40.0 + v + i);
    }
    const auto build = build_features(samples, 30);
    CHECK(build.x.rows() == 150);
    CHECK(build.x.cols() == 30);
    CHECK(build.norm_constant > 0.0);
    CHECK(build.x(0, 0) == doctest::Approx(40.0 / build.norm_constant));

    // all samples equal to the constant -> all-ones matrix
    std::vector<std::vector<double>> flat(4, std::vector<double>(5, 70.0));
    const auto ones = build_features(flat, 5);
    CHECK(ones.norm_constant == 70.0);
    CHECK((ones.x.array() == 1.0).all());

    // explicit constant override
    const auto scaled = build_features(flat, 5, 35.0);
    CHECK((scaled.x.array() == 2.0).all());

    // f_dim in {5, 10, 20, 30} all feasible on a 30-sample corpus
    for (int f : {5, 10, 20, 30}) {
        CHECK(build_features(samples, f).x.cols() == f);
    }
}

TEST_CASE("build_features names the starved vertex") {
    std::vector<std::vector<double>> samples{{1.0, 2.0}, {3.0}};
    CHECK_THROWS_WITH_AS(build_features(samples, 2), doctest::Contains("vertex 1"),
                         InsufficientDataError);
}

TEST_CASE("graph json round trip preserves structure") {
    Rng rng(31);
    std::vector<EmpiricalPdf> pdfs;
    Matrix features(4, 3);
    for (int v = 0; v < 4; ++v) {
        pdfs.push_back(two_bin_pdf(0.4 + 0.05 * v));
        for (int f = 0; f < 3; ++f) features(v, f) = rng.uniform();
    }
    auto graph = build_graph(pdfs, {{0, 1}, {1, 2}, {2, 3}}, 0.5, features);
    graph.labels = {0, 1, kUnobservedLabel, 2};
    graph.train_mask = {1, 0, 0, 0};
    graph.val_mask = {0, 1, 0, 0};
    graph.test_mask = {0, 0, 1, 1};
    graph.norm_constant = 123.5;

    const auto path = std::filesystem::temp_directory_path() / "latgraph_tests" / "graph.json";
    std::filesystem::create_directories(path.parent_path());
    save_graph(path, graph);
    const auto back = load_graph(path);

    CHECK(back.n == graph.n);
    CHECK(back.adjacency == graph.adjacency);
    CHECK(back.features == graph.features);
    CHECK(back.labels == graph.labels);
    CHECK(back.train_mask == graph.train_mask);
    CHECK(back.val_mask == graph.val_mask);
    CHECK(back.test_mask == graph.test_mask);
    CHECK(back.norm_constant == graph.norm_constant);
    REQUIRE(back.edge_weights.size() == graph.edge_weights.size());
    for (const auto& [key, w] : graph.edge_weights) {
        CHECK(back.edge_weights.at(key) == w);
    }
}

TEST_CASE("graph validation rejects overlapping masks") {
    LatencyGraph graph;
    graph.n = 2;
    graph.adjacency = Matrix::Zero(2, 2);
    graph.features = Matrix::Zero(2, 1);
    graph.labels = {0, 1};
    graph.train_mask = {1, 0};
    graph.val_mask = {1, 0};
    CHECK_THROWS_AS(graph.validate(), ValidationError);
}
