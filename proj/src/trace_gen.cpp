#include "latgraph/trace_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "latgraph/errors.hpp"
#include "latgraph/rng.hpp"

namespace latgraph {

namespace {

// Stream tags so every consumer of the world seed draws from its own space.
constexpr std::uint64_t kStreamField = 0x11;
constexpr std::uint64_t kStreamOffsetNoise = 0x12;
constexpr std::uint64_t kStreamClassField = 0x13;
constexpr std::uint64_t kStreamClassNoise = 0x14;
constexpr std::uint64_t kStreamDrift = 0x21;
constexpr std::uint64_t kStreamSamples = 0x22;
constexpr std::uint64_t kStreamDriftField = 0x23;

constexpr double kPingCadenceMs = 500.0;

// Smooth scalar field over the grid: a few low-frequency cosines with random
// phases, standardized to zero mean / unit variance across vertices.
std::vector<double> smooth_field(const GridSpec& grid, std::uint64_t seed) {
    Rng rng(seed);
    struct Wave {
        double fr, fc, phase, amp;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 4; ++k) {
        // At most one cycle across the grid span so adjacent cells stay close.
        waves.push_back(Wave{rng.uniform(0.25, 1.0), rng.uniform(0.25, 1.0),
                             rng.uniform(0.0, 2.0 * M_PI), 1.0 / (1.0 + k)});
    }
    std::vector<double> field(static_cast<std::size_t>(grid.rows) * grid.cols);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            double v = 0.0;
            for (const auto& w : waves) {
                v += w.amp * std::cos(2.0 * M_PI * (w.fr * r / grid.rows + w.fc * c / grid.cols) +
                                      w.phase);
            }
            field[static_cast<std::size_t>(r) * grid.cols + c] = v;
        }
    }
    const double n = static_cast<double>(field.size());
    const double mean = std::accumulate(field.begin(), field.end(), 0.0) / n;
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= n;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (double& v : field) v = (v - mean) / sd;
    return field;
}

std::vector<double> blended_scores(const WorldConfig& config, std::uint64_t field_stream,
                                   std::uint64_t noise_stream) {
    const auto field = smooth_field(config.grid, mix_seed(config.seed, field_stream));
    Rng noise_rng(mix_seed(config.seed, noise_stream));
    const double rho = config.spatial_correlation;
    std::vector<double> scores(field.size());
    for (std::size_t v = 0; v < field.size(); ++v) {
        scores[v] = rho * field[v] + (1.0 - rho) * noise_rng.normal();
    }
    return scores;
}

int step_class(const std::vector<double>& row, double u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        acc += row[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(row.size()) - 1;
}

// Spatially smooth Gaussian field with exactly standard-normal marginals:
// box-filtered iid normals, each cell normalized by its own box size.
std::vector<double> box_gaussian_field(const GridSpec& grid, std::uint64_t seed, int radius) {
    Rng rng(seed);
    const int rows = grid.rows, cols = grid.cols;
    std::vector<double> white(static_cast<std::size_t>(rows) * cols);
    for (double& g : white) g = rng.normal();
    std::vector<double> field(white.size());
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int dr = -radius; dr <= radius; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
                    sum += white[static_cast<std::size_t>(rr) * cols + cc];
                    ++count;
                }
            }
            field[static_cast<std::size_t>(r) * cols + c] = sum / std::sqrt(static_cast<double>(count));
        }
    }
    return field;
}

}  // namespace

struct SimWorld::TimelineCache {
    std::mutex mutex;
    std::vector<std::vector<int>> by_slot;  // [slot][vertex]
};

void WorldConfig::validate() const {
    if (n_vertices < 2) throw ConfigError("world needs at least 2 vertices");
    if (k_classes < 2) throw ConfigError("world needs at least 2 classes");
    if (grid.rows < 1 || grid.cols < 1 || grid.rows * grid.cols != n_vertices) {
        throw ConfigError("grid rows*cols must equal n_vertices");
    }
    if (static_cast<int>(drift_chain.size()) != k_classes) {
        throw ConfigError("drift_chain must be K x K");
    }
    for (const auto& row : drift_chain) {
        if (static_cast<int>(row.size()) != k_classes) throw ConfigError("drift_chain must be K x K");
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0) throw ConfigError("drift_chain entries must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw ConfigError("drift_chain rows must sum to 1 (got " + std::to_string(sum) + ")");
        }
    }
    if (static_cast<int>(class_params.size()) != k_classes) {
        throw ConfigError("dist_params must list one (mu, sigma) per class");
    }
    for (const auto& p : class_params) {
        if (!(p.sigma > 0.0)) throw ConfigError("class sigma must be positive");
    }
    if (spatial_correlation < 0.0 || spatial_correlation > 1.0) {
        throw ConfigError("spatial_correlation must lie in [0, 1]");
    }
    if (offset_amplitude < 0.0) throw ConfigError("offset_amplitude must be non-negative");
    if (spike_prob < 0.0 || spike_prob > 1.0) throw ConfigError("spike_prob must lie in [0, 1]");
    if (spike_prob > 0.0 && !(0.0 < spike_lo_ms && spike_lo_ms < spike_hi_ms)) {
        throw ConfigError("spike range must satisfy 0 < lo < hi");
    }
}

WorldConfig make_default_world_config(int rows, int cols, std::uint64_t seed) {
    WorldConfig config;
    config.n_vertices = rows * cols;
    config.grid = {rows, cols};
    config.k_classes = 4;
    // Slow mostly-stay drift; statistics move between slots but not violently.
    config.drift_chain.assign(4, std::vector<double>(4, 0.02));
    for (int k = 0; k < 4; ++k) config.drift_chain[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = 0.94;
    config.spatial_correlation = 0.8;
    // Medians 35 / 51.5 / 68.7 / 110 ms; classes 0..2 realize service levels
    // 1..3 at the default binning, class 3 fails all of them.
    config.class_params = {{3.555, 0.15}, {3.942, 0.25}, {4.230, 0.20}, {4.700, 0.30}};
    config.offset_amplitude = 0.03;
    config.seed = seed;
    return config;
}

SimWorld generate_world(const WorldConfig& config) {
    config.validate();
    SimWorld world;
    world.config_ = config;

    const int rows = config.grid.rows;
    const int cols = config.grid.cols;
    world.adjacency_.assign(static_cast<std::size_t>(config.n_vertices), {});
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int v = r * cols + c;
            if (c + 1 < cols) world.grid_edges_.emplace_back(v, v + 1);
            if (r + 1 < rows) world.grid_edges_.emplace_back(v, v + cols);
        }
    }
    for (const auto& [i, j] : world.grid_edges_) {
        world.adjacency_[static_cast<std::size_t>(i)].push_back(j);
        world.adjacency_[static_cast<std::size_t>(j)].push_back(i);
    }

    // Per-vertex systematic latency shift in log space.
    const auto offsets = blended_scores(config, kStreamField, kStreamOffsetNoise);
    world.per_vertex_dist_.assign(static_cast<std::size_t>(config.n_vertices), {});
    for (int v = 0; v < config.n_vertices; ++v) {
        auto& dists = world.per_vertex_dist_[static_cast<std::size_t>(v)];
        dists.reserve(static_cast<std::size_t>(config.k_classes));
        for (int k = 0; k < config.k_classes; ++k) {
            const auto& base = config.class_params[static_cast<std::size_t>(k)];
            dists.push_back({base.mu + config.offset_amplitude * offsets[static_cast<std::size_t>(v)],
                             base.sigma});
        }
    }

    // Initial classes: rank-split a second blended field into K equal chunks,
    // giving balanced, spatially clustered label patches.
    const auto class_scores = blended_scores(config, kStreamClassField, kStreamClassNoise);
    std::vector<int> order(static_cast<std::size_t>(config.n_vertices));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double sa = class_scores[static_cast<std::size_t>(a)];
        const double sb = class_scores[static_cast<std::size_t>(b)];
        return sa < sb || (sa == sb && a < b);
    });
    world.initial_class_.assign(static_cast<std::size_t>(config.n_vertices), 0);
    for (int rank = 0; rank < config.n_vertices; ++rank) {
        const int k = std::min(config.k_classes - 1,
                               rank * config.k_classes / config.n_vertices);
        world.initial_class_[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = k;
    }

    world.timeline_ = std::make_shared<SimWorld::TimelineCache>();
    world.timeline_->by_slot.push_back(world.initial_class_);
    return world;
}

int SimWorld::true_class(int vertex, long slot) const {
    if (vertex < 0 || vertex >= n_vertices()) throw ValidationError("vertex out of range");
    if (slot < 0) throw ValidationError("slot must be non-negative");
    std::lock_guard<std::mutex> lock(timeline_->mutex);
    auto& by_slot = timeline_->by_slot;
    const double rho = config_.spatial_correlation;
    const double blend_sd = std::sqrt(rho * rho + (1.0 - rho) * (1.0 - rho));
    while (static_cast<long>(by_slot.size()) <= slot) {
        const long t = static_cast<long>(by_slot.size());
        const auto& prev = by_slot.back();
        // Neighboring vertices share a per-slot smooth field, so patches
        // tend to drift together; each vertex's marginal transition law is
        // still exactly its drift_chain row (the blended variate has an
        // exact standard-normal marginal and maps to a uniform via the CDF).
        const auto field = box_gaussian_field(
            config_.grid, mix_seed(config_.seed, kStreamDriftField, static_cast<std::uint64_t>(t)),
            2);
        std::vector<int> next(prev.size());
        for (int v = 0; v < n_vertices(); ++v) {
            Rng rng(mix_seed(config_.seed, kStreamDrift, static_cast<std::uint64_t>(t),
                             static_cast<std::uint64_t>(v)));
            const double z =
                (rho * field[static_cast<std::size_t>(v)] + (1.0 - rho) * rng.normal()) / blend_sd;
            const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
            next[static_cast<std::size_t>(v)] = step_class(
                config_.drift_chain[static_cast<std::size_t>(prev[static_cast<std::size_t>(v)])],
                std::min(u, 0.9999999999999999));
        }
        by_slot.push_back(std::move(next));
    }
    return by_slot[static_cast<std::size_t>(slot)][static_cast<std::size_t>(vertex)];
}

std::vector<int> SimWorld::true_classes(long slot) const {
    std::vector<int> classes(static_cast<std::size_t>(n_vertices()));
    // Single cache fill, then cheap per-vertex reads.
    true_class(0, slot);
    for (int v = 0; v < n_vertices(); ++v) classes[static_cast<std::size_t>(v)] = true_class(v, slot);
    return classes;
}

std::vector<LatencySample> sample_slot(const SimWorld& world, long slot, int samples_per_vertex) {
    if (samples_per_vertex < 1) throw ValidationError("samples_per_vertex must be >= 1");
    std::vector<LatencySample> samples;
    samples.reserve(static_cast<std::size_t>(world.n_vertices()) * samples_per_vertex);
    for (int v = 0; v < world.n_vertices(); ++v) {
        const int k = world.true_class(v, slot);
        const auto& dist = world.per_vertex_dist()[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
        Rng rng(mix_seed(world.config().seed, kStreamSamples, static_cast<std::uint64_t>(slot),
                         static_cast<std::uint64_t>(v)));
        const auto& cfg = world.config();
        for (int i = 0; i < samples_per_vertex; ++i) {
            double rtt;
            if (cfg.spike_prob > 0.0 && rng.uniform() < cfg.spike_prob) {
                rtt = rng.uniform(cfg.spike_lo_ms, cfg.spike_hi_ms);
            } else {
                rtt = rng.lognormal(dist.mu, dist.sigma);
            }
            samples.push_back(LatencySample{v, slot, i * kPingCadenceMs, rtt});
        }
    }
    return samples;
}

namespace {

double parse_field(const std::string& field, std::size_t line_no, const char* what) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
    if (pos != field.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

std::vector<LatencySample> ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool has_gps = line == "vertex_id,slot,timestamp_ms,rtt_ms,lat,lon";
    if (!has_gps && line != "vertex_id,slot,timestamp_ms,rtt_ms") {
        throw ParseError(path.string() + ": unexpected header '" + line + "'");
    }

    std::vector<LatencySample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::size_t expected = has_gps ? 6 : 4;
        if (fields.size() != expected) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " +
                             std::to_string(fields.size()));
        }
        LatencySample s;
        s.vertex_id = static_cast<int>(parse_field(fields[0], line_no, "vertex_id"));
        if (s.vertex_id < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative vertex_id");
        s.slot = static_cast<long>(parse_field(fields[1], line_no, "slot"));
        if (s.slot < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative slot");
        s.timestamp_ms = parse_field(fields[2], line_no, "timestamp_ms");
        s.rtt_ms = parse_field(fields[3], line_no, "rtt_ms");
        if (!(s.rtt_ms > 0.0)) {
            throw ValidationError("line " + std::to_string(line_no) + ": rtt_ms must be positive");
        }
        if (has_gps) {
            if (!fields[4].empty()) s.lat = parse_field(fields[4], line_no, "lat");
            if (!fields[5].empty()) s.lon = parse_field(fields[5], line_no, "lon");
        }
        samples.push_back(s);
    }
    return samples;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void write_csv(const std::filesystem::path& path, std::span<const LatencySample> samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file " + path.string());
    const bool has_gps = !samples.empty() &&
                         std::all_of(samples.begin(), samples.end(),
                                     [](const LatencySample& s) { return s.lat && s.lon; });
    out << "vertex_id,slot,timestamp_ms,rtt_ms" << (has_gps ? ",lat,lon" : "") << "\n";
    for (const auto& s : samples) {
        out << s.vertex_id << ',' << s.slot << ',' << fmt_double(s.timestamp_ms) << ','
            << fmt_double(s.rtt_ms);
        if (has_gps) out << ',' << fmt_double(*s.lat) << ',' << fmt_double(*s.lon);
        out << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<std::vector<double>> rtt_by_vertex(std::span<const LatencySample> samples,
                                               int n_vertices, std::optional<long> slot) {
    std::vector<std::vector<double>> grouped(static_cast<std::size_t>(n_vertices));
    for (const auto& s : samples) {
        if (s.vertex_id >= n_vertices) {
            throw ValidationError("sample vertex_id " + std::to_string(s.vertex_id) +
                                  " out of range for n=" + std::to_string(n_vertices));
        }
        if (slot && s.slot != *slot) continue;
        grouped[static_cast<std::size_t>(s.vertex_id)].push_back(s.rtt_ms);
    }
    return grouped;
}

void to_json(nlohmann::json& j, const WorldConfig& config) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& p : config.class_params) classes.push_back({{"mu", p.mu}, {"sigma", p.sigma}});
    j = nlohmann::json{{"n_vertices", config.n_vertices},
                       {"grid", {{"rows", config.grid.rows}, {"cols", config.grid.cols}}},
                       {"k_classes", config.k_classes},
                       {"drift_chain", config.drift_chain},
                       {"spatial_correlation", config.spatial_correlation},
                       {"dist_params",
                        {{"classes", classes},
                         {"offset_amplitude", config.offset_amplitude},
                         {"spike_prob", config.spike_prob},
                         {"spike_lo_ms", config.spike_lo_ms},
                         {"spike_hi_ms", config.spike_hi_ms}}},
                       {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, WorldConfig& config) {
    try {
        j.at("n_vertices").get_to(config.n_vertices);
        config.grid.rows = j.at("grid").at("rows").get<int>();
        config.grid.cols = j.at("grid").at("cols").get<int>();
        j.at("k_classes").get_to(config.k_classes);
        j.at("drift_chain").get_to(config.drift_chain);
        j.at("spatial_correlation").get_to(config.spatial_correlation);
        const auto& dist = j.at("dist_params");
        config.class_params.clear();
        for (const auto& c : dist.at("classes")) {
            config.class_params.push_back({c.at("mu").get<double>(), c.at("sigma").get<double>()});
        }
        config.offset_amplitude = dist.value("offset_amplitude", 0.03);
        config.spike_prob = dist.value("spike_prob", 0.0);
        config.spike_lo_ms = dist.value("spike_lo_ms", 150.0);
        config.spike_hi_ms = dist.value("spike_hi_ms", 500.0);
        j.at("seed").get_to(config.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad world config: ") + e.what());
    }
    config.validate();
}

}  // namespace latgraph
