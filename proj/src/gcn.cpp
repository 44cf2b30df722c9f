#include "latgraph/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "latgraph/errors.hpp"

namespace latgraph {

namespace {

constexpr std::uint64_t kStreamInit = 0x31;
constexpr std::uint64_t kStreamDropout = 0x32;

void require_shape_chain(const GcnModel& model, Eigen::Index f_dim) {
    model.validate_shapes();
    Eigen::Index d = f_dim;
    for (const auto& w : model.weights) {
        if (w.rows() != d) {
            throw ShapeError("weight chain broken: expected " + std::to_string(d) +
                             " input rows, got " + std::to_string(w.rows()));
        }
        d = w.cols();
    }
}

int masked_count(const std::vector<std::uint8_t>& mask) {
    int n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
}

}  // namespace

void GcnModel::validate_shapes() const {
    if (weights.empty()) throw ShapeError("model has no layers");
    if (biases.size() != weights.size()) throw ShapeError("each layer needs one bias row");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (biases[l].rows() != 1 || biases[l].cols() != weights[l].cols()) {
            throw ShapeError("bias shape mismatch at layer " + std::to_string(l));
        }
    }
}

GcnModel init_model(int f_dim, int k_classes, const GcnHyper& hyper) {
    if (f_dim < 1 || k_classes < 2 || hyper.hidden < 1) {
        throw ConfigError("model dimensions must be positive (k >= 2)");
    }
    GcnModel model;
    model.hyper = hyper;
    std::vector<std::pair<int, int>> shapes{{f_dim, hyper.hidden}, {hyper.hidden, k_classes}};
    Rng rng(mix_seed(hyper.seed, kStreamInit));
    for (auto [rows, cols] : shapes) {
        // Glorot uniform weights, zero biases
        const double bound = std::sqrt(6.0 / (rows + cols));
        Matrix w(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Matrix::Zero(1, cols));
    }
    return model;
}

Matrix softmax_rows(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            out(i, j) = std::exp(z(i, j) - m);
            denom += out(i, j);
        }
        out.row(i) /= denom;
    }
    return out;
}

ForwardCache forward(const GcnModel& model, const PropagationMatrix& prop, const Matrix& x,
                     bool dropout_active, Rng& rng) {
    require_shape_chain(model, x.cols());
    if (prop.delta_a.rows() != x.rows() || prop.delta_a.cols() != x.rows()) {
        throw ShapeError("propagation matrix must be N x N");
    }
    const int layers = model.layer_count();
    ForwardCache cache;
    cache.dropout_active = dropout_active;
    Matrix h = x;
    for (int l = 0; l < layers; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        cache.inputs.push_back(h);
        cache.aggregated.push_back(prop.delta_a * h);
        cache.preact.push_back(
            (cache.aggregated.back() * model.weights[lu]).rowwise() + model.biases[lu].row(0));
        if (l + 1 == layers) break;
        h = cache.preact.back().cwiseMax(0.0);  // ReLU
        if (l == 0 && dropout_active) {
            // Inverted dropout: surviving entries scale by 1/keep.
            const double keep = 1.0 - model.hyper.dropout;
            if (!(keep > 0.0)) throw ConfigError("dropout rate must be < 1");
            cache.dropout_scale = Matrix(h.rows(), h.cols());
            for (Eigen::Index i = 0; i < h.rows(); ++i) {
                for (Eigen::Index j = 0; j < h.cols(); ++j) {
                    cache.dropout_scale(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
                }
            }
            h = h.cwiseProduct(cache.dropout_scale);
        }
    }
    cache.logits = cache.preact.back();
    cache.probs = softmax_rows(cache.logits);
    return cache;
}

double masked_cross_entropy(const Matrix& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask) {
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows() ||
        labels.size() != mask.size()) {
        throw ShapeError("labels/mask must match probability rows");
    }
    double total = 0.0;
    int count = 0;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (!mask[v]) continue;
        const int y = labels[v];
        if (y < 0 || y >= probs.cols()) {
            throw ValidationError("masked vertex " + std::to_string(v) + " has invalid label");
        }
        total -= std::log(probs(static_cast<Eigen::Index>(v), y));
        ++count;
    }
    if (count == 0) throw ValidationError("mask selects no vertices");
    return total / count;
}

Gradients backward(ForwardCache& cache, const std::vector<int>& labels,
                   const std::vector<std::uint8_t>& mask, const PropagationMatrix& prop,
                   const GcnModel& model) {
    const int layers = model.layer_count();
    if (static_cast<int>(cache.preact.size()) != layers ||
        cache.inputs.front().rows() != prop.delta_a.rows()) {
        throw ValidationError("stale forward cache");
    }
    for (int l = 0; l < layers; ++l) {
        if (cache.aggregated[static_cast<std::size_t>(l)].cols() !=
            model.weights[static_cast<std::size_t>(l)].rows()) {
            throw ValidationError("stale forward cache: weight shapes drifted");
        }
    }
    const int m = masked_count(mask);
    if (m == 0) throw ValidationError("mask selects no vertices");

    // Softmax + mean cross-entropy gradient on masked rows.
    Matrix d_preact = Matrix::Zero(cache.probs.rows(), cache.probs.cols());
    for (std::size_t v = 0; v < mask.size(); ++v) {
        if (!mask[v]) continue;
        const auto row = static_cast<Eigen::Index>(v);
        d_preact.row(row) = cache.probs.row(row) / m;
        d_preact(row, labels[v]) -= 1.0 / m;
    }

    cache.preact_grad.assign(static_cast<std::size_t>(layers), Matrix());
    Gradients grads;
    grads.weights.assign(static_cast<std::size_t>(layers), Matrix());
    grads.biases.assign(static_cast<std::size_t>(layers), Matrix());
    for (int l = layers - 1; l >= 0; --l) {
        const auto lu = static_cast<std::size_t>(l);
        cache.preact_grad[lu] = d_preact;
        grads.weights[lu] = cache.aggregated[lu].transpose() * d_preact +
                            model.hyper.weight_decay * model.weights[lu];
        grads.biases[lu] = d_preact.colwise().sum();
        if (l == 0) break;
        // Through aggregation (delta_a symmetric) and the previous activation.
        Matrix d_input = prop.delta_a * (d_preact * model.weights[lu].transpose());
        if (l - 1 == 0 && cache.dropout_active && cache.dropout_scale.size() > 0) {
            d_input = d_input.cwiseProduct(cache.dropout_scale);
        }
        const auto& prev_preact = cache.preact[lu - 1];
        d_preact = d_input.cwiseProduct(
            (prev_preact.array() > 0.0).cast<double>().matrix());  // ReLU'
    }
    return grads;
}

int NgdState::labeled_count() const { return masked_count(mask); }

Gradients ngd_precondition(const Gradients& grads, const ForwardCache& cache,
                           const PropagationMatrix& prop, const NgdState& state) {
    (void)prop;  // aggregation already cached
    if (!(state.ngd_epsilon > 0.0)) throw ValidationError("ngd_epsilon must be positive");
    if (cache.preact_grad.size() != grads.weights.size()) {
        throw ValidationError("cache lacks backward products; run backward first");
    }
    const int n = static_cast<int>(cache.inputs.front().rows());
    if (static_cast<int>(state.mask.size()) != n) throw ShapeError("mask must have length N");
    const double n_labeled = state.labeled_count();
    const double denom = n + state.lambda * n_labeled;
    const double ridge = 1.0 / std::sqrt(state.ngd_epsilon);

    Eigen::VectorXd vertex_weight(n);
    for (int v = 0; v < n; ++v) {
        vertex_weight(v) = state.mask[static_cast<std::size_t>(v)] ? 1.0 : state.lambda;
    }

    Gradients out;
    out.weights.resize(grads.weights.size());
    out.biases = grads.biases;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        const Matrix& agg = cache.aggregated[l];  // N x d_in
        const Matrix& u = cache.preact_grad[l];   // N x d_out
        const Matrix v_mat =
            (agg.transpose() * vertex_weight.asDiagonal() * agg / denom +
             ridge * Matrix::Identity(agg.cols(), agg.cols()));
        const Matrix u_mat =
            (u.transpose() * vertex_weight.asDiagonal() * u / denom +
             ridge * Matrix::Identity(u.cols(), u.cols()));
        // (V + cI)^{-1} G (U + cI)^{-1}, both factors SPD.
        const Matrix left = v_mat.ldlt().solve(grads.weights[l]);
        out.weights[l] = u_mat.ldlt().solve(left.transpose()).transpose();
    }
    return out;
}

void optimizer_step(GcnModel& model, const Gradients& direction, AdamState& state) {
    AdamConfig config{model.hyper.learning_rate, model.hyper.momentum, model.hyper.adam_beta2,
                      model.hyper.adam_eps};
    std::vector<Matrix> params;
    params.reserve(model.weights.size() + model.biases.size());
    for (const auto& w : model.weights) params.push_back(w);
    for (const auto& b : model.biases) params.push_back(b);
    std::vector<Matrix> dirs;
    dirs.reserve(params.size());
    for (const auto& g : direction.weights) dirs.push_back(g);
    for (const auto& g : direction.biases) dirs.push_back(g);
    state.step(params, dirs, config);
    for (std::size_t l = 0; l < model.weights.size(); ++l) model.weights[l] = params[l];
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        model.biases[l] = params[model.weights.size() + l];
    }
}

// Natural-gradient outer rule: momentum SGD. The diagonal-adaptive update
// would renormalize the preconditioned direction per coordinate and undo
// the whitening, so the two optimizer arms use distinct update rules.
void sgd_momentum_step(GcnModel& model, const Gradients& direction,
                       std::vector<Matrix>& velocity) {
    const double lr = model.hyper.learning_rate;
    const double momentum = model.hyper.momentum;
    if (velocity.empty()) {
        for (const auto& w : model.weights) velocity.push_back(Matrix::Zero(w.rows(), w.cols()));
        for (const auto& b : model.biases) velocity.push_back(Matrix::Zero(1, b.cols()));
    }
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        velocity[l] = momentum * velocity[l] + direction.weights[l];
        model.weights[l] -= lr * velocity[l];
    }
    const std::size_t offset = model.weights.size();
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        velocity[offset + l] = momentum * velocity[offset + l] + direction.biases[l];
        model.biases[l] -= lr * velocity[offset + l];
    }
}

TrainResult train(const LatencyGraph& graph, const PropagationMatrix& prop, const GcnHyper& hyper,
                  const std::optional<GcnModel>& warm_start) {
    graph.validate();
    if (masked_count(graph.train_mask) == 0 || masked_count(graph.val_mask) == 0) {
        throw ValidationError("train and validation masks must be non-empty");
    }
    const int k_classes = [&] {
        int k = 0;
        for (std::size_t v = 0; v < graph.labels.size(); ++v) {
            if ((graph.train_mask[v] || graph.val_mask[v]) && graph.labels[v] >= k) {
                k = graph.labels[v] + 1;
            }
        }
        return std::max(k, 2);
    }();

    GcnModel model = warm_start ? *warm_start : init_model(graph.feature_dim(), k_classes, hyper);
    model.hyper = hyper;
    AdamState adam;
    std::vector<Matrix> ngd_velocity;
    Rng dropout_rng(mix_seed(hyper.seed, kStreamDropout));
    Rng null_rng(0);

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    double prev_val = std::numeric_limits<double>::infinity();
    int non_decreasing_streak = 0;
    const bool use_dropout = hyper.dropout > 0.0;

    for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        ForwardCache cache = forward(model, prop, graph.features, use_dropout, dropout_rng);
        const double train_loss = masked_cross_entropy(cache.probs, graph.labels, graph.train_mask);
        Gradients grads = backward(cache, graph.labels, graph.train_mask, prop, model);
        if (hyper.optimizer == OptimizerKind::Ngd) {
            grads = ngd_precondition(grads, cache, prop,
                                     NgdState{hyper.ngd_lambda, hyper.ngd_epsilon, graph.train_mask});
            sgd_momentum_step(model, grads, ngd_velocity);
        } else {
            optimizer_step(model, grads, adam);
        }

        ForwardCache eval = forward(model, prop, graph.features, false, null_rng);
        const double val_loss = masked_cross_entropy(eval.probs, graph.labels, graph.val_mask);
        double val_acc;
        {
            std::vector<int> pred(static_cast<std::size_t>(graph.n));
            for (int v = 0; v < graph.n; ++v) {
                Eigen::Index arg = 0;
                eval.probs.row(v).maxCoeff(&arg);
                pred[static_cast<std::size_t>(v)] = static_cast<int>(arg);
            }
            val_acc = accuracy(pred, graph.labels, graph.val_mask);
        }
        result.history.push_back(EpochStats{epoch, train_loss, val_loss, val_acc});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.model = model;
            result.best_epoch = epoch;
        }
        // Stop after `patience` consecutive epochs in which the validation
        // loss failed to decrease relative to the previous epoch.
        if (val_loss < prev_val) {
            non_decreasing_streak = 0;
        } else {
            ++non_decreasing_streak;
            if (non_decreasing_streak >= hyper.patience) break;
        }
        prev_val = val_loss;
    }
    result.final_model = model;
    result.best_val_loss = best_val;
    return result;
}

std::vector<int> predict(const GcnModel& model, const PropagationMatrix& prop, const Matrix& x) {
    Rng null_rng(0);
    const ForwardCache cache = forward(model, prop, x, false, null_rng);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index v = 0; v < x.rows(); ++v) {
        Eigen::Index arg = 0;
        cache.probs.row(v).maxCoeff(&arg);
        out[static_cast<std::size_t>(v)] = static_cast<int>(arg);
    }
    return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask) {
    if (predicted.size() != labels.size() || labels.size() != mask.size()) {
        throw ShapeError("predicted/labels/mask sizes differ");
    }
    int hit = 0, total = 0;
    for (std::size_t v = 0; v < mask.size(); ++v) {
        if (!mask[v]) continue;
        ++total;
        if (predicted[v] == labels[v]) ++hit;
    }
    if (total == 0) throw ValidationError("mask selects no vertices");
    return static_cast<double>(hit) / total;
}

void save_checkpoint(const std::filesystem::path& path, const GcnModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& w = model.weights[l];
        nlohmann::json data = nlohmann::json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) data.push_back(w(r, c));
        }
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index c = 0; c < model.biases[l].cols(); ++c) {
            bias.push_back(model.biases[l](0, c));
        }
        layers.push_back(
            {{"rows", w.rows()}, {"cols", w.cols()}, {"data", data}, {"bias", bias}});
    }
    const auto& h = model.hyper;
    nlohmann::json j{{"layers", layers},
                     {"hyper",
                      {{"hidden", h.hidden},
                       {"dropout", h.dropout},
                       {"learning_rate", h.learning_rate},
                       {"weight_decay", h.weight_decay},
                       {"momentum", h.momentum},
                       {"max_epochs", h.max_epochs},
                       {"patience", h.patience},
                       {"optimizer", h.optimizer == OptimizerKind::Ngd ? "ngd" : "adam"},
                       {"ngd_lambda", h.ngd_lambda},
                       {"ngd_epsilon", h.ngd_epsilon},
                       {"seed", h.seed}}}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path.string());
}

GcnModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        GcnModel model;
        for (const auto& layer : j.at("layers")) {
            const auto rows = layer.at("rows").get<Eigen::Index>();
            const auto cols = layer.at("cols").get<Eigen::Index>();
            const auto& data = layer.at("data");
            Matrix w(rows, cols);
            std::size_t i = 0;
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = data.at(i++).get<double>();
            }
            model.weights.push_back(std::move(w));
            Matrix b = Matrix::Zero(1, cols);
            const auto& bias = layer.at("bias");
            for (Eigen::Index c = 0; c < cols; ++c) b(0, c) = bias.at(static_cast<std::size_t>(c)).get<double>();
            model.biases.push_back(std::move(b));
        }
        const auto& h = j.at("hyper");
        model.hyper.hidden = h.at("hidden").get<int>();
        model.hyper.dropout = h.at("dropout").get<double>();
        model.hyper.learning_rate = h.at("learning_rate").get<double>();
        model.hyper.weight_decay = h.at("weight_decay").get<double>();
        model.hyper.momentum = h.at("momentum").get<double>();
        model.hyper.max_epochs = h.at("max_epochs").get<int>();
        model.hyper.patience = h.at("patience").get<int>();
        model.hyper.optimizer =
            h.at("optimizer").get<std::string>() == "ngd" ? OptimizerKind::Ngd : OptimizerKind::Adam;
        model.hyper.ngd_lambda = h.at("ngd_lambda").get<double>();
        model.hyper.ngd_epsilon = h.at("ngd_epsilon").get<double>();
        model.hyper.seed = h.at("seed").get<std::uint64_t>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write history " + path.string());
    out << "epoch,train_loss,val_loss,val_acc\n";
    char buf[128];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", e.epoch, e.train_loss, e.val_loss,
                      e.val_acc);
        out << buf;
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace latgraph
