#include "edflow/nbeatsx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

namespace edflow {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kMinLossImprovement = 1e-6;
constexpr int kCheckpointVersion = 1;

// Keeps the trainer's shuffle/dropout stream independent of the weight
// initialization stream, which consumes a seed-dependent number of draws.
constexpr std::uint64_t kTrainerSeedOffset = 0x517cc1b727220a95ULL;

Eigen::MatrixXd polynomial_rows(int p, int span) {
    Eigen::MatrixXd rows(p + 1, span);
    for (int i = 0; i <= p; ++i) {
        for (int t = 0; t < span; ++t) {
            rows(i, t) = std::pow(static_cast<double>(t) / static_cast<double>(span), i);
        }
    }
    return rows;
}

Eigen::MatrixXd fourier_rows(int K, int span) {
    Eigen::MatrixXd rows(2 * K + 1, span);
    rows.row(0).setOnes();
    for (int k = 1; k <= K; ++k) {
        for (int t = 0; t < span; ++t) {
            const double angle = 2.0 * kPi * k * static_cast<double>(t) / static_cast<double>(span);
            rows(2 * k - 1, t) = std::cos(angle);
            rows(2 * k, t) = std::sin(angle);
        }
    }
    return rows;
}

ordered_json stack_to_json(const StackSpec& stack) {
    ordered_json item;
    item["kind"] = std::string(stack_kind_name(stack.kind));
    item["blocks"] = stack.blocks;
    item["layers_per_block"] = stack.layers_per_block;
    item["hidden_widths"] = stack.hidden_widths;
    item["degree"] = stack.degree;
    item["harmonics"] = stack.harmonics;
    return item;
}

StackSpec stack_from_json(const ordered_json& item) {
    StackSpec stack;
    stack.kind = parse_stack_kind(item.at("kind").get<std::string>());
    stack.blocks = item.at("blocks").get<int>();
    stack.layers_per_block = item.at("layers_per_block").get<int>();
    stack.hidden_widths = item.at("hidden_widths").get<std::vector<int>>();
    if (item.contains("degree")) stack.degree = item["degree"].get<int>();
    if (item.contains("harmonics")) stack.harmonics = item["harmonics"].get<int>();
    return stack;
}

ordered_json config_to_json_value(const NBeatsXConfig& config) {
    ordered_json doc;
    doc["lookback"] = config.lookback;
    doc["horizon"] = config.horizon;
    doc["learning_rate"] = config.learning_rate;
    doc["dropout"] = config.dropout_p;
    doc["batch_size"] = config.batch_size;
    doc["max_epochs"] = config.max_epochs;
    doc["early_stop_patience"] = config.early_stop_patience;
    doc["seed"] = config.seed;
    doc["stacks"] = ordered_json::array();
    for (const StackSpec& stack : config.stacks) doc["stacks"].push_back(stack_to_json(stack));
    return doc;
}

NBeatsXConfig config_from_json_value(const ordered_json& doc) {
    NBeatsXConfig config;
    config.lookback = doc.at("lookback").get<int>();
    config.horizon = doc.at("horizon").get<int>();
    config.learning_rate = doc.at("learning_rate").get<double>();
    config.dropout_p = doc.at("dropout").get<double>();
    config.batch_size = doc.at("batch_size").get<int>();
    config.max_epochs = doc.at("max_epochs").get<int>();
    config.early_stop_patience = doc.at("early_stop_patience").get<int>();
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.stacks.clear();
    for (const auto& item : doc.at("stacks")) config.stacks.push_back(stack_from_json(item));
    config.validate();
    return config;
}

}  // namespace

std::string_view stack_kind_name(StackKind kind) {
    switch (kind) {
        case StackKind::kTrend: return "trend";
        case StackKind::kSeasonality: return "seasonality";
        case StackKind::kExogenous: return "exogenous";
    }
    throw std::logic_error("unreachable stack kind");
}

StackKind parse_stack_kind(const std::string& name) {
    if (name == "trend") return StackKind::kTrend;
    if (name == "seasonality") return StackKind::kSeasonality;
    if (name == "exogenous") return StackKind::kExogenous;
    throw std::invalid_argument("unknown stack kind: " + name);
}

NBeatsXConfig NBeatsXConfig::defaults(int lookback, int horizon) {
    NBeatsXConfig config;
    config.lookback = lookback;
    config.horizon = horizon;
    StackSpec trend;
    trend.kind = StackKind::kTrend;
    trend.degree = 3;
    StackSpec seasonality;
    seasonality.kind = StackKind::kSeasonality;
    seasonality.harmonics = std::max(1, horizon / 2);
    StackSpec exogenous;
    exogenous.kind = StackKind::kExogenous;
    exogenous.hidden_widths = {256, 256, 256};
    config.stacks = {trend, seasonality, exogenous};
    return config;
}

void NBeatsXConfig::validate() const {
    if (lookback < 1 || horizon < 1) {
        throw std::invalid_argument("lookback and horizon must be at least 1");
    }
    if (stacks.empty()) throw std::invalid_argument("config needs at least one stack");
    for (const StackSpec& stack : stacks) {
        if (stack.blocks < 1) throw std::invalid_argument("each stack needs at least one block");
        if (stack.layers_per_block < 1 ||
            stack.hidden_widths.size() != static_cast<std::size_t>(stack.layers_per_block)) {
            throw std::invalid_argument("hidden_widths length must equal layers_per_block");
        }
        for (int width : stack.hidden_widths) {
            if (width < 1) throw std::invalid_argument("hidden widths must be positive");
        }
        if (stack.kind == StackKind::kTrend && stack.degree < 0) {
            throw std::invalid_argument("trend degree must be non-negative");
        }
        if (stack.kind == StackKind::kSeasonality && stack.harmonics < 1) {
            throw std::invalid_argument("seasonality harmonics must be at least 1");
        }
    }
    if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
        throw std::invalid_argument("dropout must lie in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (max_epochs < 1) throw std::invalid_argument("max epochs must be positive");
    if (early_stop_patience < 0) throw std::invalid_argument("patience must be non-negative");
}

std::string NBeatsXConfig::to_json() const { return config_to_json_value(*this).dump(2); }

NBeatsXConfig NBeatsXConfig::from_json(std::string_view text) {
    try {
        return config_from_json_value(ordered_json::parse(text));
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad model config JSON: ") + error.what());
    }
}

std::string stacks_to_json(const std::vector<StackSpec>& stacks) {
    ordered_json doc = ordered_json::array();
    for (const StackSpec& stack : stacks) doc.push_back(stack_to_json(stack));
    return doc.dump(2);
}

std::vector<StackSpec> stacks_from_json(std::string_view text) {
    try {
        const auto doc = ordered_json::parse(text);
        if (!doc.is_array()) throw std::invalid_argument("stack list JSON must be an array");
        std::vector<StackSpec> stacks;
        for (const auto& item : doc) stacks.push_back(stack_from_json(item));
        return stacks;
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad stack list JSON: ") + error.what());
    }
}

BasisPair trend_basis(int p, int lookback, int horizon) {
    if (p < 0) throw std::invalid_argument("trend degree must be non-negative");
    return {polynomial_rows(p, lookback), polynomial_rows(p, horizon)};
}

BasisPair seasonality_basis(int K, int lookback, int horizon) {
    if (K < 1) throw std::invalid_argument("seasonality harmonics must be at least 1");
    return {fourier_rows(K, lookback), fourier_rows(K, horizon)};
}

Batch make_batch(const std::vector<SupervisedWindow>& windows,
                 const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("batch needs at least one window");
    const SupervisedWindow& first = windows.at(indices.front());
    const Eigen::Index L = first.input.rows();
    const Eigen::Index F = first.input.cols();
    const Eigen::Index H = first.exo_future.rows();
    const Eigen::Index Fx = first.exo_future.cols();
    const Eigen::Index B = static_cast<Eigen::Index>(indices.size());

    Batch batch;
    batch.history.resize(L, B);
    batch.exo.resize(L * F + H * Fx, B);
    batch.target.resize(H, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const SupervisedWindow& window = windows.at(indices[static_cast<std::size_t>(b)]);
        if (window.input.rows() != L || window.input.cols() != F ||
            window.exo_future.rows() != H || window.exo_future.cols() != Fx ||
            window.target.size() != H || window.history.size() != L) {
            throw std::invalid_argument("windows in a batch must share one shape");
        }
        batch.history.col(b) = window.history;
        for (Eigen::Index t = 0; t < L; ++t) {
            for (Eigen::Index j = 0; j < F; ++j) {
                batch.exo(t * F + j, b) = window.input(t, j);
            }
        }
        for (Eigen::Index t = 0; t < H; ++t) {
            for (Eigen::Index j = 0; j < Fx; ++j) {
                batch.exo(L * F + t * Fx + j, b) = window.exo_future(t, j);
            }
        }
        batch.target.col(b) = window.target;
    }
    return batch;
}

Batch make_batch(const std::vector<SupervisedWindow>& windows) {
    std::vector<std::size_t> indices(windows.size());
    std::iota(indices.begin(), indices.end(), 0);
    return make_batch(windows, indices);
}

struct NBeatsXModel::ForwardState {
    struct BlockCache {
        std::vector<Eigen::MatrixXd> inputs;  // input to each hidden layer, then to theta
        std::vector<Eigen::MatrixXd> pre;     // pre-activation per hidden layer
        std::vector<Eigen::MatrixXd> masks;   // dropout masks, empty in inference mode
        Eigen::MatrixXd backcast;
        Eigen::MatrixXd forecast;
    };
    std::vector<BlockCache> blocks;
    Eigen::MatrixXd trend;
    Eigen::MatrixXd seasonality;
    Eigen::MatrixXd exogenous;
    Eigen::MatrixXd total;
    Eigen::MatrixXd final_residual;
};

NBeatsXModel::NBeatsXModel(NBeatsXConfig config, int input_features, int future_features)
    : config_(std::move(config)),
      input_features_(input_features),
      future_features_(future_features) {
    config_.validate();
    if (input_features_ < 0 || future_features_ < 0) {
        throw std::invalid_argument("feature counts must be non-negative");
    }
    build_layout();
    init_params();
}

void NBeatsXModel::build_layout() {
    const Eigen::Index L = config_.lookback;
    const Eigen::Index H = config_.horizon;
    const Eigen::Index exo_dim = L * input_features_ + H * future_features_;
    const Eigen::Index input_dim = L + exo_dim;

    bases_.clear();
    for (const StackSpec& stack : config_.stacks) {
        switch (stack.kind) {
            case StackKind::kTrend:
                bases_.push_back(trend_basis(stack.degree, config_.lookback, config_.horizon));
                break;
            case StackKind::kSeasonality:
                bases_.push_back(
                    seasonality_basis(stack.harmonics, config_.lookback, config_.horizon));
                break;
            case StackKind::kExogenous:
                bases_.push_back({});
                break;
        }
    }

    blocks_.clear();
    std::size_t offset = 0;
    const auto claim = [&offset](Eigen::Index rows, Eigen::Index cols) {
        LayerView view;
        view.rows = rows;
        view.cols = cols;
        view.weight_offset = offset;
        offset += static_cast<std::size_t>(rows * cols);
        view.bias_offset = offset;
        offset += static_cast<std::size_t>(rows);
        return view;
    };

    for (std::size_t s = 0; s < config_.stacks.size(); ++s) {
        const StackSpec& stack = config_.stacks[s];
        for (int b = 0; b < stack.blocks; ++b) {
            BlockLayout block;
            block.kind = stack.kind;
            block.stack_index = s;
            block.block_index = static_cast<std::size_t>(b);
            block.basis = &bases_[s];
            Eigen::Index in_dim = input_dim;
            for (int width : stack.hidden_widths) {
                block.hidden.push_back(claim(width, in_dim));
                in_dim = width;
            }
            if (stack.kind == StackKind::kExogenous) {
                block.theta = claim(future_features_, in_dim);
                block.exo_backcast = claim(L, in_dim);
            } else {
                const Eigen::Index n_theta = 2 * bases_[s].backcast.rows();
                block.theta = claim(n_theta, in_dim);
            }
            blocks_.push_back(std::move(block));
        }
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

void NBeatsXModel::init_params() {
    Rng rng(config_.seed);
    for (const BlockLayout& block : blocks_) {
        std::vector<const LayerView*> views;
        for (const LayerView& view : block.hidden) views.push_back(&view);
        views.push_back(&block.theta);
        if (block.kind == StackKind::kExogenous) views.push_back(&block.exo_backcast);
        for (const LayerView* view : views) {
            if (view->rows == 0 || view->cols == 0) continue;
            const double limit =
                std::sqrt(6.0 / static_cast<double>(view->rows + view->cols));
            double* data = params_.data() + view->weight_offset;
            const auto count = static_cast<std::size_t>(view->rows * view->cols);
            for (std::size_t i = 0; i < count; ++i) data[i] = rng.uniform(-limit, limit);
            // Biases start at zero.
        }
    }
}

namespace {

Eigen::Map<const Eigen::MatrixXd> weight_view(const Eigen::VectorXd& params, std::size_t offset,
                                              Eigen::Index rows, Eigen::Index cols) {
    return {params.data() + offset, rows, cols};
}

Eigen::Map<const Eigen::VectorXd> bias_view(const Eigen::VectorXd& params, std::size_t offset,
                                            Eigen::Index rows) {
    return {params.data() + offset, rows};
}

Eigen::Map<Eigen::MatrixXd> weight_grad(Eigen::VectorXd& grads, std::size_t offset,
                                        Eigen::Index rows, Eigen::Index cols) {
    return {grads.data() + offset, rows, cols};
}

Eigen::Map<Eigen::VectorXd> bias_grad(Eigen::VectorXd& grads, std::size_t offset,
                                      Eigen::Index rows) {
    return {grads.data() + offset, rows};
}

}  // namespace

void NBeatsXModel::forward(const Eigen::MatrixXd& history, const Eigen::MatrixXd& exo,
                           bool training, Rng* dropout, ForwardState& state) const {
    const Eigen::Index L = config_.lookback;
    const Eigen::Index H = config_.horizon;
    const Eigen::Index Fx = future_features_;
    const Eigen::Index B = history.cols();
    const Eigen::Index lookback_flat = L * input_features_;
    const Eigen::Index expected_exo = lookback_flat + H * Fx;
    if (history.rows() != L || exo.rows() != expected_exo || exo.cols() != B) {
        throw std::invalid_argument("batch shapes do not match the model configuration");
    }
    const bool use_dropout = training && dropout != nullptr && config_.dropout_p > 0.0;
    const double keep = 1.0 - config_.dropout_p;

    state.blocks.clear();
    state.blocks.resize(blocks_.size());
    state.trend = Eigen::MatrixXd::Zero(H, B);
    state.seasonality = Eigen::MatrixXd::Zero(H, B);
    state.exogenous = Eigen::MatrixXd::Zero(H, B);

    Eigen::MatrixXd residual = history;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const BlockLayout& block = blocks_[i];
        auto& cache = state.blocks[i];

        Eigen::MatrixXd z(L + exo.rows(), B);
        z.topRows(L) = residual;
        z.bottomRows(exo.rows()) = exo;
        for (std::size_t l = 0; l < block.hidden.size(); ++l) {
            const LayerView& layer = block.hidden[l];
            cache.inputs.push_back(std::move(z));
            Eigen::MatrixXd pre =
                (weight_view(params_, layer.weight_offset, layer.rows, layer.cols) *
                 cache.inputs.back())
                    .colwise() +
                bias_view(params_, layer.bias_offset, layer.rows);
            Eigen::MatrixXd activated = pre.cwiseMax(0.0);
            cache.pre.push_back(std::move(pre));
            if (use_dropout) {
                Eigen::MatrixXd mask(activated.rows(), activated.cols());
                double* data = mask.data();
                const auto count = static_cast<std::size_t>(mask.size());
                for (std::size_t k = 0; k < count; ++k) {
                    data[k] = dropout->bernoulli(config_.dropout_p) ? 0.0 : 1.0 / keep;
                }
                activated.array() *= mask.array();
                cache.masks.push_back(std::move(mask));
            }
            z = std::move(activated);
        }
        cache.inputs.push_back(std::move(z));
        const Eigen::MatrixXd& hidden_out = cache.inputs.back();

        if (block.kind == StackKind::kExogenous) {
            cache.backcast =
                (weight_view(params_, block.exo_backcast.weight_offset, block.exo_backcast.rows,
                             block.exo_backcast.cols) *
                 hidden_out)
                    .colwise() +
                bias_view(params_, block.exo_backcast.bias_offset, block.exo_backcast.rows);
            cache.forecast = Eigen::MatrixXd::Zero(H, B);
            if (Fx > 0) {
                const Eigen::MatrixXd theta_f =
                    (weight_view(params_, block.theta.weight_offset, block.theta.rows,
                                 block.theta.cols) *
                     hidden_out)
                        .colwise() +
                    bias_view(params_, block.theta.bias_offset, block.theta.rows);
                for (Eigen::Index t = 0; t < H; ++t) {
                    cache.forecast.row(t) =
                        (exo.middleRows(lookback_flat + t * Fx, Fx).array() * theta_f.array())
                            .colwise()
                            .sum()
                            .matrix();
                }
            }
        } else {
            const Eigen::MatrixXd theta =
                (weight_view(params_, block.theta.weight_offset, block.theta.rows,
                             block.theta.cols) *
                 hidden_out)
                    .colwise() +
                bias_view(params_, block.theta.bias_offset, block.theta.rows);
            const Eigen::Index n_basis = block.basis->backcast.rows();
            cache.backcast = block.basis->backcast.transpose() * theta.topRows(n_basis);
            cache.forecast = block.basis->forecast.transpose() * theta.bottomRows(n_basis);
        }

        residual -= cache.backcast;
        switch (block.kind) {
            case StackKind::kTrend: state.trend += cache.forecast; break;
            case StackKind::kSeasonality: state.seasonality += cache.forecast; break;
            case StackKind::kExogenous: state.exogenous += cache.forecast; break;
        }
    }
    state.final_residual = std::move(residual);
    state.total = state.trend + state.seasonality + state.exogenous;
}

double NBeatsXModel::loss(const Batch& batch) const {
    ForwardState state;
    forward(batch.history, batch.exo, false, nullptr, state);
    if (state.total.rows() != batch.target.rows() || state.total.cols() != batch.target.cols()) {
        throw std::invalid_argument("target shape does not match the model horizon");
    }
    return (state.total - batch.target).squaredNorm() /
           static_cast<double>(batch.target.size());
}

double NBeatsXModel::loss_and_gradients(const Batch& batch, Eigen::VectorXd& grads,
                                        Rng* dropout) const {
    const Eigen::Index L = config_.lookback;
    const Eigen::Index H = config_.horizon;
    const Eigen::Index Fx = future_features_;
    const Eigen::Index lookback_flat = L * input_features_;

    ForwardState state;
    forward(batch.history, batch.exo, true, dropout, state);
    if (state.total.rows() != batch.target.rows() || state.total.cols() != batch.target.cols()) {
        throw std::invalid_argument("target shape does not match the model horizon");
    }
    const double denom = static_cast<double>(batch.target.size());
    const Eigen::MatrixXd diff = state.total - batch.target;
    const double loss = diff.squaredNorm() / denom;
    if (!std::isfinite(loss)) {
        std::ostringstream message;
        message << "non-finite loss on a batch of " << batch.size()
                << " windows (parameter norm " << params_.norm() << ")";
        throw std::runtime_error(message.str());
    }

    grads = Eigen::VectorXd::Zero(params_.size());
    const Eigen::MatrixXd g_total = (2.0 / denom) * diff;
    Eigen::MatrixXd g_residual = Eigen::MatrixXd::Zero(L, batch.size());

    for (std::size_t i = blocks_.size(); i-- > 0;) {
        const BlockLayout& block = blocks_[i];
        auto& cache = state.blocks[i];
        const Eigen::MatrixXd g_backcast = -g_residual;
        const Eigen::MatrixXd& g_forecast = g_total;

        // inputs holds one entry per hidden layer, then the theta-layer input.
        const std::size_t hidden_count = block.hidden.size();
        const Eigen::MatrixXd& hidden_out = cache.inputs[hidden_count];

        Eigen::MatrixXd g_hidden;
        if (block.kind == StackKind::kExogenous) {
            g_hidden =
                weight_view(params_, block.exo_backcast.weight_offset, block.exo_backcast.rows,
                            block.exo_backcast.cols)
                    .transpose() *
                g_backcast;
            weight_grad(grads, block.exo_backcast.weight_offset, block.exo_backcast.rows,
                        block.exo_backcast.cols)
                .noalias() += g_backcast * hidden_out.transpose();
            bias_grad(grads, block.exo_backcast.bias_offset, block.exo_backcast.rows) +=
                g_backcast.rowwise().sum();
            if (Fx > 0) {
                Eigen::MatrixXd g_theta = Eigen::MatrixXd::Zero(Fx, batch.size());
                for (Eigen::Index t = 0; t < H; ++t) {
                    g_theta.array() += batch.exo.middleRows(lookback_flat + t * Fx, Fx)
                                           .array()
                                           .rowwise() *
                                       g_forecast.row(t).array();
                }
                g_hidden.noalias() +=
                    weight_view(params_, block.theta.weight_offset, block.theta.rows,
                                block.theta.cols)
                        .transpose() *
                    g_theta;
                weight_grad(grads, block.theta.weight_offset, block.theta.rows, block.theta.cols)
                    .noalias() += g_theta * hidden_out.transpose();
                bias_grad(grads, block.theta.bias_offset, block.theta.rows) +=
                    g_theta.rowwise().sum();
            }
        } else {
            const Eigen::Index n_basis = block.basis->backcast.rows();
            Eigen::MatrixXd g_theta(2 * n_basis, batch.size());
            g_theta.topRows(n_basis).noalias() = block.basis->backcast * g_backcast;
            g_theta.bottomRows(n_basis).noalias() = block.basis->forecast * g_forecast;
            g_hidden = weight_view(params_, block.theta.weight_offset, block.theta.rows,
                                   block.theta.cols)
                           .transpose() *
                       g_theta;
            weight_grad(grads, block.theta.weight_offset, block.theta.rows, block.theta.cols)
                .noalias() += g_theta * hidden_out.transpose();
            bias_grad(grads, block.theta.bias_offset, block.theta.rows) +=
                g_theta.rowwise().sum();
        }

        for (std::size_t l = hidden_count; l-- > 0;) {
            const LayerView& layer = block.hidden[l];
            if (!cache.masks.empty()) g_hidden.array() *= cache.masks[l].array();
            const Eigen::MatrixXd g_pre =
                ((cache.pre[l].array() > 0.0).cast<double>() * g_hidden.array()).matrix();
            weight_grad(grads, layer.weight_offset, layer.rows, layer.cols).noalias() +=
                g_pre * cache.inputs[l].transpose();
            bias_grad(grads, layer.bias_offset, layer.rows) += g_pre.rowwise().sum();
            g_hidden = weight_view(params_, layer.weight_offset, layer.rows, layer.cols)
                           .transpose() *
                       g_pre;
        }
        g_residual += g_hidden.topRows(L);
    }
    return loss;
}

ForecastDecomposition NBeatsXModel::forward_decomposed(const SupervisedWindow& window) const {
    std::vector<SupervisedWindow> one = {window};
    const Batch batch = make_batch(one);
    ForwardState state;
    forward(batch.history, batch.exo, false, nullptr, state);
    ForecastDecomposition out;
    out.trend = state.trend.col(0);
    out.seasonality = state.seasonality.col(0);
    out.exogenous = state.exogenous.col(0);
    out.total = state.total.col(0);
    out.anchor = window.anchor;
    return out;
}

NBeatsXModel::ForwardTrace NBeatsXModel::trace(const SupervisedWindow& window) const {
    std::vector<SupervisedWindow> one = {window};
    const Batch batch = make_batch(one);
    ForwardState state;
    forward(batch.history, batch.exo, false, nullptr, state);
    ForwardTrace trace;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        trace.blocks.push_back({blocks_[i].kind, state.blocks[i].backcast.col(0),
                                state.blocks[i].forecast.col(0)});
    }
    trace.final_residual = state.final_residual.col(0);
    trace.decomposition.trend = state.trend.col(0);
    trace.decomposition.seasonality = state.seasonality.col(0);
    trace.decomposition.exogenous = state.exogenous.col(0);
    trace.decomposition.total = state.total.col(0);
    trace.decomposition.anchor = window.anchor;
    return trace;
}

std::string NBeatsXModel::to_json() const {
    ordered_json doc;
    doc["version"] = kCheckpointVersion;
    doc["config"] = config_to_json_value(config_);
    doc["input_features"] = input_features_;
    doc["future_features"] = future_features_;
    doc["weights"] = ordered_json::array();
    const auto append = [&](const std::string& name, const LayerView& view) {
        if (view.rows == 0) return;
        ordered_json weight;
        weight["name"] = name + ".weight";
        weight["rows"] = view.rows;
        weight["cols"] = view.cols;
        weight["data"] = std::vector<double>(params_.data() + view.weight_offset,
                                             params_.data() + view.weight_offset +
                                                 view.rows * view.cols);
        doc["weights"].push_back(std::move(weight));
        ordered_json bias;
        bias["name"] = name + ".bias";
        bias["rows"] = view.rows;
        bias["cols"] = 1;
        bias["data"] = std::vector<double>(params_.data() + view.bias_offset,
                                           params_.data() + view.bias_offset + view.rows);
        doc["weights"].push_back(std::move(bias));
    };
    for (const BlockLayout& block : blocks_) {
        const std::string prefix = "stack" + std::to_string(block.stack_index) + "_" +
                                   std::string(stack_kind_name(block.kind)) + ".block" +
                                   std::to_string(block.block_index);
        for (std::size_t l = 0; l < block.hidden.size(); ++l) {
            append(prefix + ".layer" + std::to_string(l), block.hidden[l]);
        }
        append(prefix + ".theta", block.theta);
        if (block.kind == StackKind::kExogenous) append(prefix + ".backcast", block.exo_backcast);
    }
    return doc.dump();
}

NBeatsXModel NBeatsXModel::from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad model JSON: ") + error.what());
    }
    if (!doc.contains("version") || doc["version"].get<int>() != kCheckpointVersion) {
        throw std::invalid_argument("unsupported model version");
    }
    NBeatsXModel model(config_from_json_value(doc.at("config")),
                       doc.at("input_features").get<int>(),
                       doc.at("future_features").get<int>());
    // Replay this model's own naming walk so names double as a layout check.
    const std::string expected = model.to_json();
    const ordered_json own = ordered_json::parse(expected);
    const auto& stored = doc.at("weights");
    if (stored.size() != own.at("weights").size()) {
        throw std::invalid_argument("model JSON has the wrong number of weight arrays");
    }
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const auto& item = stored[i];
        const auto& reference = own.at("weights")[i];
        if (item.at("name") != reference.at("name") || item.at("rows") != reference.at("rows") ||
            item.at("cols") != reference.at("cols")) {
            throw std::invalid_argument("model JSON weight " + std::to_string(i) +
                                        " does not match the declared configuration");
        }
        const auto data = item.at("data").get<std::vector<double>>();
        const auto expected_size = static_cast<std::size_t>(item.at("rows").get<Eigen::Index>() *
                                                            item.at("cols").get<Eigen::Index>());
        if (data.size() != expected_size) {
            throw std::invalid_argument("model JSON weight " + std::to_string(i) +
                                        " has the wrong element count");
        }
        std::copy(data.begin(), data.end(), model.params_.data() + cursor);
        cursor += data.size();
    }
    if (cursor != model.param_count()) {
        throw std::invalid_argument("model JSON does not cover every parameter");
    }
    return model;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam state does not match the parameter vector");
    }
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v =
        (state.beta2 * state.v.array() + (1.0 - state.beta2) * grads.array().square()).matrix();
    const double m_correction = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double v_correction = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= learning_rate * (state.m.array() / m_correction) /
                      ((state.v.array() / v_correction).sqrt() + state.epsilon);
}

namespace {

double dataset_loss(const NBeatsXModel& model, const std::vector<SupervisedWindow>& windows,
                    int batch_size) {
    double weighted = 0.0;
    std::vector<std::size_t> indices;
    for (std::size_t begin = 0; begin < windows.size();
         begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(windows.size(), begin + static_cast<std::size_t>(batch_size));
        indices.resize(end - begin);
        std::iota(indices.begin(), indices.end(), begin);
        const Batch batch = make_batch(windows, indices);
        weighted += model.loss(batch) * static_cast<double>(batch.size());
    }
    return weighted / static_cast<double>(windows.size());
}

}  // namespace

TrainOutput train(const NBeatsXConfig& config, const std::vector<SupervisedWindow>& train_windows,
                  const std::vector<SupervisedWindow>& val_windows) {
    config.validate();
    if (train_windows.empty()) {
        throw std::invalid_argument("training needs at least one window");
    }
    const int input_features = static_cast<int>(train_windows.front().input.cols());
    const int future_features = static_cast<int>(train_windows.front().exo_future.cols());

    NBeatsXModel model(config, input_features, future_features);
    AdamState adam(model.param_count());
    Rng rng(config.seed + kTrainerSeedOffset);

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> batch_indices;
    Eigen::VectorXd grads;

    std::vector<EpochStats> history;
    double best = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;
    bool early_stopped = false;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order);
        double weighted_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            batch_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch batch = make_batch(train_windows, batch_indices);
            double loss = 0.0;
            try {
                loss = model.loss_and_gradients(batch, grads, &rng);
            } catch (const std::runtime_error& error) {
                throw DivergenceError(error.what(), history);
            }
            adam_step(model.params(), grads, adam, config.learning_rate);
            weighted_loss += loss * static_cast<double>(batch.size());
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = weighted_loss / static_cast<double>(train_windows.size());
        if (!val_windows.empty()) {
            stats.val_loss = dataset_loss(model, val_windows, config.batch_size);
        }
        history.push_back(stats);
        if (!std::isfinite(stats.train_loss)) {
            throw DivergenceError("training loss diverged", history);
        }
        if (stats.train_loss < best - kMinLossImprovement) {
            best = stats.train_loss;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if (stale_epochs > config.early_stop_patience) {
                early_stopped = true;
                break;
            }
        }
    }
    return {std::move(model), std::move(history), early_stopped};
}

std::vector<ForecastDecomposition> predict_series(const NBeatsXModel& model,
                                                  const std::vector<SupervisedWindow>& windows,
                                                  const TargetScaler& scaler) {
    std::vector<ForecastDecomposition> out;
    out.reserve(windows.size());
    for (const SupervisedWindow& window : windows) {
        ForecastDecomposition scaled = model.forward_decomposed(window);
        ForecastDecomposition raw;
        raw.anchor = scaled.anchor;
        raw.trend = (scaled.trend.array() * scaler.std + scaler.mean).matrix();
        raw.seasonality = (scaled.seasonality.array() * scaler.std).matrix();
        raw.exogenous = (scaled.exogenous.array() * scaler.std).matrix();
        raw.total = raw.trend + raw.seasonality + raw.exogenous;
        out.push_back(std::move(raw));
    }
    return out;
}

std::string ModelCheckpoint::to_json() const {
    ordered_json doc = ordered_json::parse(model.to_json());
    doc["variant"] = variant_id;
    doc["scalers"] = ordered_json::parse(scalers_to_json(scalers));
    return doc.dump();
}

ModelCheckpoint ModelCheckpoint::from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad checkpoint JSON: ") + error.what());
    }
    if (!doc.contains("scalers") || !doc.contains("variant")) {
        throw std::invalid_argument("checkpoint is missing scalers or variant id");
    }
    ModelCheckpoint checkpoint{NBeatsXModel::from_json(text), {}, ""};
    checkpoint.variant_id = doc.at("variant").get<std::string>();
    checkpoint.scalers = scalers_from_json(doc.at("scalers").dump());
    return checkpoint;
}

}  // namespace edflow
