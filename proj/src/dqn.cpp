#include "latgraph/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "latgraph/errors.hpp"

namespace latgraph {

namespace {

constexpr std::uint64_t kStreamNetInit = 0x41;
constexpr std::uint64_t kStreamExplore = 0x42;
constexpr std::uint64_t kStreamReplay = 0x43;

Eigen::RowVectorXd flatten_state(const SlotState& state) {
    Eigen::RowVectorXd out(state.probs.size());
    Eigen::Index idx = 0;
    for (int v = 0; v < state.n_vertices(); ++v) {
        for (int k = 0; k < state.k_classes(); ++k) out(idx++) = state.probs(k, v);
    }
    return out;
}

void validate_action(const std::vector<int>& action, int n_vertices) {
    std::vector<int> sorted = action;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("action contains duplicate vertex ids");
    }
    if (!sorted.empty() && (sorted.front() < 0 || sorted.back() >= n_vertices)) {
        throw ValidationError("action vertex id out of range");
    }
}

}  // namespace

void SlotState::validate() const {
    for (int v = 0; v < n_vertices(); ++v) {
        double sum = 0.0;
        for (int k = 0; k < k_classes(); ++k) {
            const double p = probs(k, v);
            if (p < 0.0) throw ValidationError("state probabilities must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("state column " + std::to_string(v) + " sums to " +
                                  std::to_string(sum));
        }
    }
}

SlotState one_hot_state(const std::vector<int>& classes, int k_classes) {
    SlotState state;
    state.probs = Eigen::MatrixXd::Zero(k_classes, static_cast<Eigen::Index>(classes.size()));
    for (std::size_t v = 0; v < classes.size(); ++v) {
        if (classes[v] < 0 || classes[v] >= k_classes) {
            throw ValidationError("class index out of range in one_hot_state");
        }
        state.probs(classes[v], static_cast<Eigen::Index>(v)) = 1.0;
    }
    return state;
}

void TransitionModel::validate() const {
    for (const auto& m : per_vertex) {
        if (m.rows() != m.cols()) throw ValidationError("transition matrices must be square");
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            double sum = 0.0;
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (m(r, c) < 0.0) throw ValidationError("transition entries must be non-negative");
                sum += m(r, c);
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ValidationError("transition row sums to " + std::to_string(sum));
            }
        }
    }
}

namespace {

Eigen::MatrixXd normalize_counts(const Eigen::MatrixXd& counts, int k, double smoothing) {
    Eigen::MatrixXd m(k, k);
    for (int r = 0; r < k; ++r) {
        const double row_total = counts.row(r).sum() + smoothing * k;
        if (row_total <= 0.0) {
            // Class never observed and no smoothing: fall back to uniform.
            m.row(r).setConstant(1.0 / k);
            continue;
        }
        for (int c = 0; c < k; ++c) m(r, c) = (counts(r, c) + smoothing) / row_total;
    }
    return m;
}

}  // namespace

TransitionModel estimate_transition_model(const std::vector<std::vector<int>>& label_history,
                                          int k_classes, double smoothing) {
    if (k_classes < 2) throw ConfigError("need at least 2 classes");
    if (smoothing < 0.0) throw ConfigError("smoothing must be non-negative");
    TransitionModel model;
    for (std::size_t v = 0; v < label_history.size(); ++v) {
        const auto& seq = label_history[v];
        if (seq.size() < 2) {
            throw InsufficientDataError("vertex " + std::to_string(v) +
                                        " history too short to estimate transitions");
        }
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k_classes, k_classes);
        for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
            if (seq[t] < 0 || seq[t] >= k_classes || seq[t + 1] < 0 || seq[t + 1] >= k_classes) {
                throw ValidationError("label history contains out-of-range class");
            }
            counts(seq[t], seq[t + 1]) += 1.0;
        }
        model.per_vertex.push_back(normalize_counts(counts, k_classes, smoothing));
    }
    return model;
}

TransitionModel estimate_pooled_transition_model(const std::vector<std::vector<int>>& label_history,
                                                 int k_classes, double smoothing) {
    if (k_classes < 2) throw ConfigError("need at least 2 classes");
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k_classes, k_classes);
    for (std::size_t v = 0; v < label_history.size(); ++v) {
        const auto& seq = label_history[v];
        if (seq.size() < 2) {
            throw InsufficientDataError("vertex " + std::to_string(v) +
                                        " history too short to estimate transitions");
        }
        for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
            if (seq[t] < 0 || seq[t] >= k_classes || seq[t + 1] < 0 || seq[t + 1] >= k_classes) {
                throw ValidationError("label history contains out-of-range class");
            }
            counts(seq[t], seq[t + 1]) += 1.0;
        }
    }
    const Eigen::MatrixXd shared = normalize_counts(counts, k_classes, smoothing);
    TransitionModel model;
    model.per_vertex.assign(label_history.size(), shared);
    return model;
}

SlotState transition(const SlotState& state, const std::vector<int>& action,
                     const std::map<int, int>& observed, const TransitionModel& model) {
    const int n = state.n_vertices();
    const int k = state.k_classes();
    if (static_cast<int>(model.per_vertex.size()) != n) {
        throw ShapeError("transition model must cover every vertex");
    }
    validate_action(action, n);
    if (observed.size() != action.size()) {
        throw ValidationError("observed classes must cover exactly the action set");
    }
    for (int v : action) {
        if (!observed.count(v)) {
            throw ValidationError("vertex " + std::to_string(v) + " probed but not observed");
        }
    }

    SlotState next;
    next.probs = Eigen::MatrixXd::Zero(k, n);
    for (int v = 0; v < n; ++v) {
        const Eigen::MatrixXd& m = model.per_vertex[static_cast<std::size_t>(v)];
        const auto it = observed.find(v);
        if (it != observed.end()) {
            const int c = it->second;
            if (c < 0 || c >= k) throw ValidationError("observed class out of range");
            next.probs.col(v) = m.row(c).transpose();
        } else {
            next.probs.col(v) = m.transpose() * state.probs.col(v);
        }
    }
    return next;
}

double reward(const std::vector<int>& predicted, const std::vector<int>& truth,
              const std::vector<int>& action) {
    if (predicted.size() != truth.size()) throw ShapeError("predicted/truth length mismatch");
    const int n = static_cast<int>(truth.size());
    validate_action(action, n);
    if (static_cast<int>(action.size()) >= n) {
        throw ValidationError("reward undefined when every vertex is probed");
    }
    std::vector<std::uint8_t> probed(static_cast<std::size_t>(n), 0);
    for (int v : action) probed[static_cast<std::size_t>(v)] = 1;
    int hit = 0, total = 0;
    for (int v = 0; v < n; ++v) {
        if (probed[static_cast<std::size_t>(v)]) continue;
        ++total;
        if (predicted[static_cast<std::size_t>(v)] == truth[static_cast<std::size_t>(v)]) ++hit;
    }
    return static_cast<double>(hit) / total;
}

void ReplayBuffer::push(Experience exp) {
    buffer_.push_back(std::move(exp));
    while (buffer_.size() > capacity_) buffer_.pop_front();
}

std::vector<Experience> ReplayBuffer::sample(Rng& rng, std::size_t batch_size) const {
    if (buffer_.empty()) throw ValidationError("cannot sample from an empty replay buffer");
    std::vector<Experience> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        batch.push_back(buffer_[rng.uniform_index(buffer_.size())]);
    }
    return batch;
}

double epsilon_at(const DqnConfig& config, long slot) {
    if (slot < 0) throw ValidationError("slot must be non-negative");
    if (config.epsilon_decay_slots <= 0) return config.epsilon_end;
    const double ratio = config.epsilon_end / config.epsilon_start;
    const double eps = config.epsilon_start *
                       std::pow(ratio, static_cast<double>(slot) / config.epsilon_decay_slots);
    return std::max(config.epsilon_end, eps);
}

QNetwork init_q_network(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) {
    QNetwork net;
    std::vector<int> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int rows = dims[l];
        const int cols = dims[l + 1];
        const double bound = std::sqrt(6.0 / (rows + cols));
        Eigen::MatrixXd w(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
        }
        net.params.push_back(std::move(w));
        net.params.push_back(Eigen::MatrixXd::Zero(1, cols));
    }
    return net;
}

Eigen::MatrixXd QNetwork::score_batch(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd h = inputs;
    const std::size_t layers = params.size() / 2;
    for (std::size_t l = 0; l < layers; ++l) {
        h = (h * params[2 * l]).rowwise() + params[2 * l + 1].row(0);
        if (l + 1 < layers) h = h.cwiseMax(0.0);
    }
    return h;
}

Eigen::VectorXd QNetwork::score(const SlotState& state) const {
    return score_batch(flatten_state(state)).row(0).transpose();
}

DqnAgent::DqnAgent(int n_vertices, int k_classes, DqnConfig config)
    : config_(std::move(config)),
      n_vertices_(n_vertices),
      k_classes_(k_classes),
      m_select_(config_.m_select > 0 ? config_.m_select : std::max(1, n_vertices / 10)),
      buffer_(static_cast<std::size_t>(config_.replay_capacity)),
      explore_rng_(mix_seed(config_.seed, kStreamExplore)),
      sample_rng_(mix_seed(config_.seed, kStreamReplay)) {
    if (n_vertices_ < 2 || k_classes_ < 2) throw ConfigError("agent needs N >= 2, K >= 2");
    if (m_select_ > n_vertices_) {
        throw ConfigError("m_select exceeds the vertex count");
    }
    Rng init_rng(mix_seed(config_.seed, kStreamNetInit));
    predict_ = init_q_network(n_vertices_ * k_classes_, config_.hidden, n_vertices_, init_rng);
    target_ = predict_;
}

std::vector<int> DqnAgent::select_action(const SlotState& state, double epsilon_greedy) {
    if (epsilon_greedy < 0.0 || epsilon_greedy > 1.0) {
        throw ValidationError("epsilon must lie in [0, 1]");
    }
    if (state.n_vertices() != n_vertices_ || state.k_classes() != k_classes_) {
        throw ShapeError("state dimensions do not match the agent");
    }
    std::vector<int> action;
    if (explore_rng_.uniform() < epsilon_greedy) {
        // Uniform random m-subset via partial Fisher-Yates.
        std::vector<int> pool(static_cast<std::size_t>(n_vertices_));
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < m_select_; ++i) {
            const auto j = i + static_cast<int>(explore_rng_.uniform_index(
                                   static_cast<std::uint64_t>(n_vertices_ - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            action.push_back(pool[static_cast<std::size_t>(i)]);
        }
    } else {
        const Eigen::VectorXd scores = predict_.score(state);
        std::vector<int> order(static_cast<std::size_t>(n_vertices_));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
        });
        action.assign(order.begin(), order.begin() + m_select_);
    }
    std::sort(action.begin(), action.end());
    return action;
}

void DqnAgent::remember(Experience exp) {
    if (static_cast<int>(exp.action.size()) != m_select_) {
        throw ValidationError("experience action size must equal m_select");
    }
    validate_action(exp.action, n_vertices_);
    buffer_.push(std::move(exp));
}

double DqnAgent::train_step(std::span<const Experience> batch, double beta) {
    if (batch.empty()) throw ValidationError("train_step needs a non-empty batch");
    if (beta < 0.0 || beta >= 1.0) throw ValidationError("beta must lie in [0, 1)");
    const auto b = static_cast<Eigen::Index>(batch.size());
    const int input_dim = n_vertices_ * k_classes_;

    Eigen::MatrixXd states(b, input_dim);
    Eigen::MatrixXd next_states(b, input_dim);
    for (Eigen::Index i = 0; i < b; ++i) {
        states.row(i) = flatten_state(batch[static_cast<std::size_t>(i)].state);
        next_states.row(i) = flatten_state(batch[static_cast<std::size_t>(i)].next_state);
    }

    // Targets from the frozen network: r + beta * max vertex score.
    const Eigen::MatrixXd next_q = target_.score_batch(next_states);
    Eigen::VectorXd targets(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        targets(i) = batch[static_cast<std::size_t>(i)].reward + beta * next_q.row(i).maxCoeff();
    }

    // Forward with caches.
    const std::size_t layers = predict_.params.size() / 2;
    std::vector<Eigen::MatrixXd> activations{states};
    std::vector<Eigen::MatrixXd> preacts;
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z =
            (activations.back() * predict_.params[2 * l]).rowwise() +
            predict_.params[2 * l + 1].row(0);
        preacts.push_back(z);
        activations.push_back(l + 1 < layers ? z.cwiseMax(0.0).eval() : z);
    }
    const Eigen::MatrixXd& q = activations.back();

    // Squared TD error on the chosen vertices only.
    double loss = 0.0;
    Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(b, n_vertices_);
    const double scale = 1.0 / (static_cast<double>(b) * m_select_);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int v : batch[static_cast<std::size_t>(i)].action) {
            const double err = q(i, v) - targets(i);
            loss += err * err * scale;
            d_q(i, v) = 2.0 * err * scale;
        }
    }

    // Manual backprop through the dense stack.
    std::vector<Eigen::MatrixXd> grads(predict_.params.size());
    Eigen::MatrixXd delta = d_q;
    for (std::size_t l = layers; l-- > 0;) {
        grads[2 * l] = activations[l].transpose() * delta;
        grads[2 * l + 1] = delta.colwise().sum();
        if (l > 0) {
            delta = (delta * predict_.params[2 * l].transpose())
                        .cwiseProduct((preacts[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }

    AdamConfig adam_config{config_.learning_rate, 0.9, 0.999, 1e-8};
    adam_.step(predict_.params, grads, adam_config);

    ++step_count_;
    if (config_.sync_every > 0 && step_count_ % config_.sync_every == 0) sync_target();
    return loss;
}

double DqnAgent::learn() {
    if (buffer_.size() < static_cast<std::size_t>(config_.batch_size)) return 0.0;
    double loss = 0.0;
    for (int i = 0; i < config_.train_steps_per_slot; ++i) {
        const auto batch = buffer_.sample(sample_rng_, static_cast<std::size_t>(config_.batch_size));
        loss = train_step(batch, config_.beta);
    }
    return loss;
}

void DqnAgent::sync_target() { target_ = predict_; }

namespace {

nlohmann::json params_to_json(const std::vector<Eigen::MatrixXd>& params) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : params) {
        nlohmann::json data = nlohmann::json::array();
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) data.push_back(p(r, c));
        }
        out.push_back({{"rows", p.rows()}, {"cols", p.cols()}, {"data", data}});
    }
    return out;
}

std::vector<Eigen::MatrixXd> params_from_json(const nlohmann::json& j) {
    std::vector<Eigen::MatrixXd> params;
    for (const auto& layer : j) {
        Eigen::MatrixXd p(layer.at("rows").get<Eigen::Index>(), layer.at("cols").get<Eigen::Index>());
        const auto& data = layer.at("data");
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = data.at(i++).get<double>();
        }
        params.push_back(std::move(p));
    }
    return params;
}

}  // namespace

void DqnAgent::save(const std::filesystem::path& path) const {
    nlohmann::json j{{"n_vertices", n_vertices_},
                     {"k_classes", k_classes_},
                     {"step_count", step_count_},
                     {"config",
                      {{"m_select", config_.m_select},
                       {"beta", config_.beta},
                       {"learning_rate", config_.learning_rate},
                       {"hidden", config_.hidden},
                       {"replay_capacity", config_.replay_capacity},
                       {"batch_size", config_.batch_size},
                       {"sync_every", config_.sync_every},
                       {"epsilon_start", config_.epsilon_start},
                       {"epsilon_end", config_.epsilon_end},
                       {"epsilon_decay_slots", config_.epsilon_decay_slots},
                       {"train_steps_per_slot", config_.train_steps_per_slot},
                       {"seed", config_.seed}}},
                     {"predict", params_to_json(predict_.params)},
                     {"target", params_to_json(target_.params)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write agent checkpoint " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path.string());
}

DqnAgent DqnAgent::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open agent checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        const auto& c = j.at("config");
        DqnConfig config;
        config.m_select = c.at("m_select").get<int>();
        config.beta = c.at("beta").get<double>();
        config.learning_rate = c.at("learning_rate").get<double>();
        config.hidden = c.at("hidden").get<std::vector<int>>();
        config.replay_capacity = c.at("replay_capacity").get<int>();
        config.batch_size = c.at("batch_size").get<int>();
        config.sync_every = c.at("sync_every").get<int>();
        config.epsilon_start = c.at("epsilon_start").get<double>();
        config.epsilon_end = c.at("epsilon_end").get<double>();
        config.epsilon_decay_slots = c.at("epsilon_decay_slots").get<int>();
        config.train_steps_per_slot = c.at("train_steps_per_slot").get<int>();
        config.seed = c.at("seed").get<std::uint64_t>();
        DqnAgent agent(j.at("n_vertices").get<int>(), j.at("k_classes").get<int>(), config);
        agent.predict_.params = params_from_json(j.at("predict"));
        agent.target_.params = params_from_json(j.at("target"));
        agent.step_count_ = j.at("step_count").get<long>();
        return agent;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace latgraph
