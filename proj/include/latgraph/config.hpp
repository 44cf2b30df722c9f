#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "latgraph/sim.hpp"

namespace latgraph {

// JSON (de)serialization for the experiment tree. Absent fields keep their
// defaults; the LATGRAPH_SEED environment variable backs missing seeds.

void to_json(nlohmann::json& j, const GraphConfig& config);
void from_json(const nlohmann::json& j, GraphConfig& config);

void to_json(nlohmann::json& j, const GcnHyper& hyper);
void from_json(const nlohmann::json& j, GcnHyper& hyper);

void to_json(nlohmann::json& j, const DqnConfig& config);
void from_json(const nlohmann::json& j, DqnConfig& config);

void to_json(nlohmann::json& j, const ExperimentConfig& config);
void from_json(const nlohmann::json& j, ExperimentConfig& config);

nlohmann::json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Applies `path.to.leaf=value` overrides onto a JSON document. Values parse
// as JSON literals where possible and fall back to strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Seed fallback from LATGRAPH_SEED (1 if unset or unparsable).
std::uint64_t global_seed_fallback();

// Run provenance: written before any slot executes, finalized on success.
// The embedded config snapshot is sufficient to reproduce the artifacts.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> artifacts;
    std::string created_utc;
    std::string completed_utc;  // empty until finalized
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace latgraph
