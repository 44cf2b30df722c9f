#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace latgraph {

// One probe measurement: RTT recorded at a vertex within a time slot.
struct LatencySample {
    int vertex_id = 0;
    long slot = 0;
    double timestamp_ms = 0.0;  // offset within the slot
    double rtt_ms = 0.0;
    std::optional<double> lat;  // pass-through GPS columns, unused by the math
    std::optional<double> lon;
};

struct GridSpec {
    int rows = 0;
    int cols = 0;
};

struct LogNormalParams {
    double mu = 0.0;     // log-space mean
    double sigma = 1.0;  // log-space stddev
};

// Generative model parameters. Latency is log-normal per (vertex, class);
// per-vertex parameters blend a smooth field over the grid with iid noise,
// weighted by spatial_correlation, and latent classes drift per slot via a
// row-stochastic Markov chain.
struct WorldConfig {
    int n_vertices = 0;
    GridSpec grid;
    int k_classes = 0;
    std::vector<std::vector<double>> drift_chain;  // K x K, rows sum to 1
    double spatial_correlation = 0.8;
    std::vector<LogNormalParams> class_params;     // length K
    double offset_amplitude = 0.03;                // log-space per-vertex shift scale
    // class-independent interference spikes mixed into every draw
    double spike_prob = 0.0;
    double spike_lo_ms = 150.0;
    double spike_hi_ms = 500.0;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

// Reference configuration: k=4 classes whose distributions realize the three
// service levels plus a none-of-them class, and a slow mostly-stay drift.
WorldConfig make_default_world_config(int rows, int cols, std::uint64_t seed);

class SimWorld {
public:
    SimWorld() = default;

    const WorldConfig& config() const { return config_; }
    int n_vertices() const { return config_.n_vertices; }
    int k_classes() const { return config_.k_classes; }

    // Road-neighbor relation (4-neighborhood on the grid), i < j pairs.
    const std::vector<std::pair<int, int>>& grid_edges() const { return grid_edges_; }
    const std::vector<std::vector<int>>& adjacency_list() const { return adjacency_; }

    const std::vector<std::vector<LogNormalParams>>& per_vertex_dist() const {
        return per_vertex_dist_;
    }

    // Ground-truth latent class; deterministic in (config, slot, vertex).
    int true_class(int vertex, long slot) const;
    std::vector<int> true_classes(long slot) const;

private:
    friend SimWorld generate_world(const WorldConfig& config);

    struct TimelineCache;

    WorldConfig config_;
    std::vector<std::pair<int, int>> grid_edges_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<std::vector<LogNormalParams>> per_vertex_dist_;  // [vertex][class]
    std::vector<int> initial_class_;
    std::shared_ptr<TimelineCache> timeline_;  // lazily extended, shared by copies
};

SimWorld generate_world(const WorldConfig& config);

// Draws samples_per_vertex RTTs for every vertex from its current latent
// class distribution. Pure function of (world, slot); probes are timestamped
// on the 500 ms ping cadence.
std::vector<LatencySample> sample_slot(const SimWorld& world, long slot, int samples_per_vertex);

std::vector<LatencySample> ingest_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, std::span<const LatencySample> samples);

// Groups rtt values per vertex, optionally restricted to one slot.
std::vector<std::vector<double>> rtt_by_vertex(std::span<const LatencySample> samples,
                                               int n_vertices,
                                               std::optional<long> slot = std::nullopt);

void to_json(nlohmann::json& j, const WorldConfig& config);
void from_json(const nlohmann::json& j, WorldConfig& config);

}  // namespace latgraph
