#include "latgraph/config.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include "latgraph/errors.hpp"
#include "latgraph/version.hpp"

namespace latgraph {

void to_json(nlohmann::json& j, const GraphConfig& config) {
    j = nlohmann::json{{"eta", config.eta},
                       {"bins", {{"lo", config.bins.lo}, {"hi", config.bins.hi}, {"count", config.bins.count}}},
                       {"f_dim", config.f_dim}};
}

void from_json(const nlohmann::json& j, GraphConfig& config) {
    config.eta = j.value("eta", config.eta);
    if (j.contains("bins")) {
        const auto& b = j.at("bins");
        config.bins.lo = b.value("lo", config.bins.lo);
        config.bins.hi = b.value("hi", config.bins.hi);
        config.bins.count = b.value("count", config.bins.count);
    }
    config.f_dim = j.value("f_dim", config.f_dim);
}

void to_json(nlohmann::json& j, const GcnHyper& hyper) {
    j = nlohmann::json{{"hidden", hyper.hidden},
                       {"dropout", hyper.dropout},
                       {"learning_rate", hyper.learning_rate},
                       {"weight_decay", hyper.weight_decay},
                       {"momentum", hyper.momentum},
                       {"max_epochs", hyper.max_epochs},
                       {"patience", hyper.patience},
                       {"optimizer", hyper.optimizer == OptimizerKind::Ngd ? "ngd" : "adam"},
                       {"ngd_lambda", hyper.ngd_lambda},
                       {"ngd_epsilon", hyper.ngd_epsilon}};
}

void from_json(const nlohmann::json& j, GcnHyper& hyper) {
    hyper.hidden = j.value("hidden", hyper.hidden);
    hyper.dropout = j.value("dropout", hyper.dropout);
    hyper.learning_rate = j.value("learning_rate", hyper.learning_rate);
    hyper.weight_decay = j.value("weight_decay", hyper.weight_decay);
    hyper.momentum = j.value("momentum", hyper.momentum);
    hyper.max_epochs = j.value("max_epochs", hyper.max_epochs);
    hyper.patience = j.value("patience", hyper.patience);
    if (j.contains("optimizer")) {
        const auto name = j.at("optimizer").get<std::string>();
        if (name == "adam") {
            hyper.optimizer = OptimizerKind::Adam;
        } else if (name == "ngd") {
            hyper.optimizer = OptimizerKind::Ngd;
        } else {
            throw ConfigError("unknown optimizer '" + name + "'");
        }
    }
    hyper.ngd_lambda = j.value("ngd_lambda", hyper.ngd_lambda);
    hyper.ngd_epsilon = j.value("ngd_epsilon", hyper.ngd_epsilon);
}

void to_json(nlohmann::json& j, const DqnConfig& config) {
    j = nlohmann::json{{"m_select", config.m_select},
                       {"beta", config.beta},
                       {"learning_rate", config.learning_rate},
                       {"hidden", config.hidden},
                       {"replay_capacity", config.replay_capacity},
                       {"batch_size", config.batch_size},
                       {"sync_every", config.sync_every},
                       {"epsilon_start", config.epsilon_start},
                       {"epsilon_end", config.epsilon_end},
                       {"epsilon_decay_slots", config.epsilon_decay_slots},
                       {"train_steps_per_slot", config.train_steps_per_slot}};
}

void from_json(const nlohmann::json& j, DqnConfig& config) {
    config.m_select = j.value("m_select", config.m_select);
    config.beta = j.value("beta", config.beta);
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.hidden = j.value("hidden", config.hidden);
    config.replay_capacity = j.value("replay_capacity", config.replay_capacity);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.sync_every = j.value("sync_every", config.sync_every);
    config.epsilon_start = j.value("epsilon_start", config.epsilon_start);
    config.epsilon_end = j.value("epsilon_end", config.epsilon_end);
    config.epsilon_decay_slots = j.value("epsilon_decay_slots", config.epsilon_decay_slots);
    config.train_steps_per_slot = j.value("train_steps_per_slot", config.train_steps_per_slot);
}

void to_json(nlohmann::json& j, const ExperimentConfig& config) {
    j = nlohmann::json{{"world", config.world},
                       {"graph", config.graph},
                       {"gcn", config.gcn},
                       {"selector", config.selector},
                       {"n_slots", config.n_slots},
                       {"seeds", config.seeds},
                       {"run_dqn", config.run_dqn},
                       {"compare_random", config.compare_random},
                       {"init_slots", config.init_slots},
                       {"init_samples_per_vertex", config.init_samples_per_vertex},
                       {"samples_per_vertex", config.samples_per_vertex},
                       {"warm_start", config.warm_start},
                       {"empirical_probe_labels", config.empirical_probe_labels},
                       {"pooled_transitions", config.pooled_transitions},
                       {"probe_val_fraction", config.probe_val_fraction},
                       {"labeled_train_fraction", config.labeled_train_fraction},
                       {"labeled_val_fraction", config.labeled_val_fraction},
                       {"timing", config.timing}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& config) {
    try {
        j.at("world").get_to(config.world);
        if (j.contains("graph")) j.at("graph").get_to(config.graph);
        if (j.contains("gcn")) j.at("gcn").get_to(config.gcn);
        if (j.contains("selector")) j.at("selector").get_to(config.selector);
        config.n_slots = j.value("n_slots", config.n_slots);
        if (j.contains("seeds")) {
            j.at("seeds").get_to(config.seeds);
        } else {
            config.seeds = {global_seed_fallback()};
        }
        config.run_dqn = j.value("run_dqn", config.run_dqn);
        config.compare_random = j.value("compare_random", config.compare_random);
        config.init_slots = j.value("init_slots", config.init_slots);
        config.init_samples_per_vertex =
            j.value("init_samples_per_vertex", config.init_samples_per_vertex);
        config.samples_per_vertex = j.value("samples_per_vertex", config.samples_per_vertex);
        config.warm_start = j.value("warm_start", config.warm_start);
        config.empirical_probe_labels =
            j.value("empirical_probe_labels", config.empirical_probe_labels);
        config.pooled_transitions = j.value("pooled_transitions", config.pooled_transitions);
        config.probe_val_fraction = j.value("probe_val_fraction", config.probe_val_fraction);
        config.labeled_train_fraction =
            j.value("labeled_train_fraction", config.labeled_train_fraction);
        config.labeled_val_fraction = j.value("labeled_val_fraction", config.labeled_val_fraction);
        config.timing = j.value("timing", config.timing);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
    config.validate();
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path.string());
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like path.to.field=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ConfigError("empty key in override path: " + path);
        if (dot == std::string::npos) {
            nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
            (*node)[key] = value.is_discarded() ? nlohmann::json(raw) : value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::uint64_t global_seed_fallback() {
    if (const char* env = std::getenv("LATGRAPH_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    }
    return 1;
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
    return nlohmann::json{{"tool", kToolName},
                          {"version", kToolVersion},
                          {"command", manifest.command},
                          {"config", manifest.config},
                          {"seeds", manifest.seeds},
                          {"artifacts", manifest.artifacts},
                          {"created_utc", manifest.created_utc},
                          {"completed_utc", manifest.completed_utc}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest manifest;
    try {
        manifest.command = j.at("command").get<std::string>();
        manifest.config = j.at("config");
        manifest.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        manifest.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        manifest.created_utc = j.value("created_utc", "");
        manifest.completed_utc = j.value("completed_utc", "");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what());
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    write_json_file(path, manifest_to_json(manifest));
}

RunManifest read_manifest(const std::filesystem::path& path) {
    return manifest_from_json(load_json_file(path));
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace latgraph
