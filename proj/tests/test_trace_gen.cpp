#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "latgraph/errors.hpp"
#include "latgraph/rng.hpp"
#include "latgraph/trace_gen.hpp"

using namespace latgraph;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    const auto dir = fs::temp_directory_path() / "latgraph_tests";
    fs::create_directories(dir);
    return dir / name;
}

double mean_abs_mu_gap(const SimWorld& world, const std::vector<std::pair<int, int>>& pairs) {
    double total = 0.0;
    for (const auto& [i, j] : pairs) {
        total += std::abs(world.per_vertex_dist()[static_cast<std::size_t>(i)][0].mu -
                          world.per_vertex_dist()[static_cast<std::size_t>(j)][0].mu);
    }
    return total / static_cast<double>(pairs.size());
}

}  // namespace

TEST_CASE("world config validation") {
    WorldConfig config = make_default_world_config(4, 4, 1);
    CHECK_NOTHROW(config.validate());

    WorldConfig bad = config;
    bad.n_vertices = 1;
    bad.grid = {1, 1};
    CHECK_THROWS_AS(generate_world(bad), ConfigError);

    bad = config;
    bad.drift_chain[0][0] = 0.5;  // row no longer sums to 1
    CHECK_THROWS_AS(generate_world(bad), ConfigError);

    bad = config;
    bad.grid.rows = 3;
    CHECK_THROWS_AS(generate_world(bad), ConfigError);
}

TEST_CASE("same config and seed give bit-identical worlds") {
    const WorldConfig config = make_default_world_config(5, 5, 42);
    const SimWorld a = generate_world(config);
    const SimWorld b = generate_world(config);
    REQUIRE(a.per_vertex_dist().size() == b.per_vertex_dist().size());
    for (std::size_t v = 0; v < a.per_vertex_dist().size(); ++v) {
        for (int k = 0; k < config.k_classes; ++k) {
            CHECK(a.per_vertex_dist()[v][static_cast<std::size_t>(k)].mu ==
                  b.per_vertex_dist()[v][static_cast<std::size_t>(k)].mu);
        }
    }
    for (long t : {0L, 3L, 17L}) {
        CHECK(a.true_classes(t) == b.true_classes(t));
    }
}

TEST_CASE("grid adjacency is a symmetric 4-neighborhood") {
    const SimWorld world = generate_world(make_default_world_config(3, 4, 7));
    std::set<std::pair<int, int>> edges(world.grid_edges().begin(), world.grid_edges().end());
    CHECK(edges.size() == 3 * 3 + 2 * 4);  // rows*(cols-1) + (rows-1)*cols
    for (const auto& [i, j] : edges) {
        CHECK(i < j);
        const int ri = i / 4, ci = i % 4, rj = j / 4, cj = j % 4;
        CHECK(std::abs(ri - rj) + std::abs(ci - cj) == 1);
    }
}

TEST_CASE("neighbors are closer in parameter space under high correlation") {
    WorldConfig config = make_default_world_config(4, 4, 11);
    config.spatial_correlation = 0.9;
    const SimWorld world = generate_world(config);

    std::vector<std::pair<int, int>> non_edges;
    std::set<std::pair<int, int>> edges(world.grid_edges().begin(), world.grid_edges().end());
    for (int i = 0; i < config.n_vertices; ++i) {
        for (int j = i + 1; j < config.n_vertices; ++j) {
            if (!edges.count({i, j})) non_edges.emplace_back(i, j);
        }
    }
    CHECK(mean_abs_mu_gap(world, world.grid_edges()) < mean_abs_mu_gap(world, non_edges));
}

TEST_CASE("zero correlation makes neighbor and non-neighbor gaps indistinguishable") {
    // Two-sample z test at alpha = 0.01 over 1000 sampled pairs each.
    WorldConfig config = make_default_world_config(20, 50, 5);
    config.spatial_correlation = 0.0;
    const SimWorld world = generate_world(config);

    Rng rng(99);
    std::set<std::pair<int, int>> edges(world.grid_edges().begin(), world.grid_edges().end());
    std::vector<double> edge_gaps, non_edge_gaps;
    const auto& all_edges = world.grid_edges();
    while (edge_gaps.size() < 1000) {
        const auto& e = all_edges[rng.uniform_index(all_edges.size())];
        edge_gaps.push_back(std::abs(world.per_vertex_dist()[static_cast<std::size_t>(e.first)][0].mu -
                                     world.per_vertex_dist()[static_cast<std::size_t>(e.second)][0].mu));
    }
    while (non_edge_gaps.size() < 1000) {
        const int i = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.n_vertices)));
        const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.n_vertices)));
        if (i == j || edges.count({std::min(i, j), std::max(i, j)})) continue;
        non_edge_gaps.push_back(std::abs(world.per_vertex_dist()[static_cast<std::size_t>(i)][0].mu -
                                         world.per_vertex_dist()[static_cast<std::size_t>(j)][0].mu));
    }
    auto moments = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        return std::pair{mean, var};
    };
    const auto [m1, v1] = moments(edge_gaps);
    const auto [m2, v2] = moments(non_edge_gaps);
    const double z = (m1 - m2) / std::sqrt(v1 / 1000.0 + v2 / 1000.0);
    CHECK(std::abs(z) < 2.576);
}

TEST_CASE("sample_slot yields N * samples_per_vertex positive deterministic samples") {
    const WorldConfig config = make_default_world_config(10, 15, 3);  // 150 subregions
    const SimWorld world = generate_world(config);
    const auto samples = sample_slot(world, 4, 30);
    CHECK(samples.size() == 150 * 30);
    for (const auto& s : samples) {
        CHECK(s.rtt_ms > 0.0);
        CHECK(s.slot == 4);
        CHECK(s.vertex_id < 150);
    }
    // 500 ms cadence timestamps, non-decreasing per vertex
    CHECK(samples[0].timestamp_ms == 0.0);
    CHECK(samples[1].timestamp_ms == 500.0);

    const auto replay = sample_slot(world, 4, 30);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].rtt_ms == replay[i].rtt_ms);
    }
    const auto other_slot = sample_slot(world, 5, 30);
    CHECK(other_slot[0].rtt_ms != samples[0].rtt_ms);
}

TEST_CASE("drift frequencies converge to the chain rows") {
    WorldConfig config = make_default_world_config(2, 2, 21);
    const SimWorld world = generate_world(config);
    const int k = config.k_classes;
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(k),
                                            std::vector<double>(static_cast<std::size_t>(k), 0.0));
    std::vector<int> prev = world.true_classes(0);
    for (long t = 1; t <= 10000; ++t) {
        const auto cur = world.true_classes(t);
        for (int v = 0; v < config.n_vertices; ++v) {
            counts[static_cast<std::size_t>(prev[static_cast<std::size_t>(v)])]
                  [static_cast<std::size_t>(cur[static_cast<std::size_t>(v)])] += 1.0;
        }
        prev = cur;
    }
    for (int a = 0; a < k; ++a) {
        double row_total = 0.0;
        for (int b = 0; b < k; ++b) row_total += counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        REQUIRE(row_total > 0.0);
        double l1 = 0.0;
        for (int b = 0; b < k; ++b) {
            l1 += std::abs(counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] / row_total -
                           config.drift_chain[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
        }
        CHECK(l1 < 0.05);
    }
}

TEST_CASE("initial classes are balanced") {
    const WorldConfig config = make_default_world_config(10, 10, 9);
    const SimWorld world = generate_world(config);
    std::vector<int> counts(4, 0);
    for (int c : world.true_classes(0)) ++counts[static_cast<std::size_t>(c)];
    for (int k = 0; k < 4; ++k) CHECK(counts[static_cast<std::size_t>(k)] == 25);
}

TEST_CASE("csv round trip") {
    const auto path = temp_file("roundtrip.csv");
    const std::vector<LatencySample> samples{
        {3, 7, 1500.0, 42.5, std::nullopt, std::nullopt},
        {4, 7, 2000.0, 57.25, std::nullopt, std::nullopt},
    };
    write_csv(path, samples);
    const auto back = ingest_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].vertex_id == 3);
    CHECK(back[0].slot == 7);
    CHECK(back[0].timestamp_ms == 1500.0);
    CHECK(back[0].rtt_ms == 42.5);
    CHECK_FALSE(back[0].lat.has_value());
}

TEST_CASE("csv round trip preserves gps pass-through columns") {
    const auto path = temp_file("roundtrip_gps.csv");
    const std::vector<LatencySample> samples{{0, 0, 0.0, 30.0, 30.52, 114.36}};
    write_csv(path, samples);
    const auto back = ingest_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].lat == doctest::Approx(30.52));
    CHECK(back[0].lon == doctest::Approx(114.36));
}

TEST_CASE("csv ingestion errors") {
    const auto path = temp_file("bad.csv");

    {
        std::ofstream out(path);
        out << "vertex_id,slot,timestamp_ms,rtt_ms\n";
    }
    CHECK(ingest_csv(path).empty());  // header-only file

    {
        std::ofstream out(path);
        out << "vertex_id,slot,timestamp_ms,rtt_ms\n3,7,1500,42.5\n";
    }
    const auto one = ingest_csv(path);
    REQUIRE(one.size() == 1);
    CHECK(one[0].vertex_id == 3);

    {
        std::ofstream out(path);
        out << "vertex_id,slot,timestamp_ms,rtt_ms\n0,0,0,-1\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ValidationError);

    {
        std::ofstream out(path);
        out << "vertex_id,slot,timestamp_ms,rtt_ms\n0,0,abc,10\n";
    }
    CHECK_THROWS_WITH_AS(ingest_csv(path), doctest::Contains("line 2"), ParseError);

    {
        std::ofstream out(path);
        out << "vertex_id,slot,timestamp_ms,rtt_ms\n0,0,10\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ParseError);

    {
        std::ofstream out(path);
        out << "bogus,header\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ParseError);

    CHECK_THROWS_AS(ingest_csv(temp_file("missing_file.csv")), IoError);
}

TEST_CASE("rtt_by_vertex groups and validates") {
    const std::vector<LatencySample> samples{
        {0, 0, 0.0, 10.0}, {1, 0, 0.0, 20.0}, {0, 1, 0.0, 30.0}};
    const auto all = rtt_by_vertex(samples, 2);
    CHECK(all[0].size() == 2);
    CHECK(all[1].size() == 1);
    const auto slot0 = rtt_by_vertex(samples, 2, 0);
    CHECK(slot0[0].size() == 1);
    CHECK_THROWS_AS(rtt_by_vertex(samples, 1), ValidationError);
}

TEST_CASE("world config json round trip") {
    const WorldConfig config = make_default_world_config(4, 4, 77);
    nlohmann::json j = config;
    const auto back = j.get<WorldConfig>();
    CHECK(back.n_vertices == config.n_vertices);
    CHECK(back.seed == config.seed);
    CHECK(back.drift_chain == config.drift_chain);
    CHECK(back.class_params[2].mu == config.class_params[2].mu);
    CHECK(back.offset_amplitude == config.offset_amplitude);
}
