#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "edflow/dataset.hpp"
#include "edflow/rng.hpp"
#include "edflow/time.hpp"

namespace edflow {

enum class StackKind { kTrend, kSeasonality, kExogenous };

std::string_view stack_kind_name(StackKind kind);
StackKind parse_stack_kind(const std::string& name);

struct StackSpec {
    StackKind kind = StackKind::kTrend;
    int blocks = 2;
    int layers_per_block = 3;
    std::vector<int> hidden_widths = {128, 128, 128};
    int degree = 3;     // trend polynomial order
    int harmonics = 3;  // seasonality Fourier harmonics

    bool operator==(const StackSpec&) const = default;
};

struct NBeatsXConfig {
    int lookback = 12;
    int horizon = 6;
    std::vector<StackSpec> stacks;
    double learning_rate = 0.003;
    double dropout_p = 0.1;
    int batch_size = 128;
    int max_epochs = 30;
    int early_stop_patience = 5;
    std::uint64_t seed = 0;

    // Trend, seasonality, and exogenous stacks with two blocks of three
    // layers each; widths 128 for the basis stacks and 256 for the
    // exogenous stack; K defaults to floor(horizon / 2).
    static NBeatsXConfig defaults(int lookback = 12, int horizon = 6);

    void validate() const;

    std::string to_json() const;
    static NBeatsXConfig from_json(std::string_view text);

    bool operator==(const NBeatsXConfig&) const = default;
};

// JSON for a bare stack list, shared with hyperparameter grids.
std::string stacks_to_json(const std::vector<StackSpec>& stacks);
std::vector<StackSpec> stacks_from_json(std::string_view text);

// Fixed basis rows evaluated on the lookback and horizon grids. Backcast is
// n_theta x L, forecast n_theta x H.
struct BasisPair {
    Eigen::MatrixXd backcast;
    Eigen::MatrixXd forecast;
};

// Polynomial rows (t / span)^i for i = 0..p.
BasisPair trend_basis(int p, int lookback, int horizon);

// A constant row plus cos and sin rows at harmonics 1..K.
BasisPair seasonality_basis(int K, int lookback, int horizon);

struct ForecastDecomposition {
    Eigen::VectorXd total;
    Eigen::VectorXd trend;
    Eigen::VectorXd seasonality;
    Eigen::VectorXd exogenous;
    Timestamp anchor = 0;
};

// Column-per-example views of a set of supervised windows: history is
// L x B, exo stacks the flattened lookback features over the flattened
// horizon covariates (E x B), target is H x B.
struct Batch {
    Eigen::MatrixXd history;
    Eigen::MatrixXd exo;
    Eigen::MatrixXd target;

    Eigen::Index size() const { return history.cols(); }
};

Batch make_batch(const std::vector<SupervisedWindow>& windows,
                 const std::vector<std::size_t>& indices);
Batch make_batch(const std::vector<SupervisedWindow>& windows);

class NBeatsXModel {
public:
    // Builds bases and layer layout, then draws the initial weights from the
    // config seed: uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    NBeatsXModel(NBeatsXConfig config, int input_features, int future_features);

    const NBeatsXConfig& config() const { return config_; }
    int input_features() const { return input_features_; }
    int future_features() const { return future_features_; }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }

    // Mean squared error over every horizon step of every batch column,
    // dropout off.
    double loss(const Batch& batch) const;

    // Backpropagates the batch MSE into a gradient vector laid out like
    // params(). Passing an Rng enables inverted dropout after each hidden
    // layer; gradients flow through the sampled masks.
    double loss_and_gradients(const Batch& batch, Eigen::VectorXd& grads,
                              Rng* dropout = nullptr) const;

    // Inference-mode forward pass for one window, in scaled target units.
    ForecastDecomposition forward_decomposed(const SupervisedWindow& window) const;

    // Per-block outputs for diagnostics: backcast/forecast per block in
    // execution order plus the residual left after the last block.
    struct BlockOutput {
        StackKind kind;
        Eigen::VectorXd backcast;
        Eigen::VectorXd forecast;
    };
    struct ForwardTrace {
        std::vector<BlockOutput> blocks;
        Eigen::VectorXd final_residual;
        ForecastDecomposition decomposition;
    };
    ForwardTrace trace(const SupervisedWindow& window) const;

    std::string to_json() const;
    static NBeatsXModel from_json(std::string_view text);

private:
    struct LayerView {
        std::size_t weight_offset = 0;
        std::size_t bias_offset = 0;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
    };
    struct BlockLayout {
        StackKind kind;
        std::size_t stack_index = 0;
        std::size_t block_index = 0;
        std::vector<LayerView> hidden;
        LayerView theta;              // trend/seasonality: [theta_b; theta_f]; exogenous: theta_f
        LayerView exo_backcast;       // exogenous blocks only
        const BasisPair* basis = nullptr;
    };

    void build_layout();
    void init_params();

    struct ForwardState;
    void forward(const Eigen::MatrixXd& history, const Eigen::MatrixXd& exo, bool training,
                 Rng* dropout, ForwardState& state) const;

    NBeatsXConfig config_;
    int input_features_ = 0;
    int future_features_ = 0;
    std::vector<BasisPair> bases_;  // one per stack, empty matrices for exogenous stacks
    std::vector<BlockLayout> blocks_;
    Eigen::VectorXd params_;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n)
        : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
          v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}
};

// One bias-corrected Adam update in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double learning_rate);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::optional<double> val_loss;
};

struct TrainOutput {
    NBeatsXModel model;
    std::vector<EpochStats> history;
    bool early_stopped = false;
};

// Thrown when a training loss turns non-finite; carries the completed epochs.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& message, std::vector<EpochStats> completed)
        : std::runtime_error(message), history(std::move(completed)) {}
    std::vector<EpochStats> history;
};

// Mini-batch Adam over seeded shuffles of the training windows. Validation
// loss is recorded each epoch when val windows are present; stopping follows
// training loss, requiring an improvement greater than 1e-6 within the
// configured patience.
TrainOutput train(const NBeatsXConfig& config, const std::vector<SupervisedWindow>& train_windows,
                  const std::vector<SupervisedWindow>& val_windows);

// Inference over a window list with outputs mapped back to raw counts: every
// component is rescaled by the target sigma and the mean is folded into the
// trend component, so additivity carries over to raw space.
std::vector<ForecastDecomposition> predict_series(const NBeatsXModel& model,
                                                  const std::vector<SupervisedWindow>& windows,
                                                  const TargetScaler& scaler);

// Checkpoint carrying the model plus the scalers needed to apply it to raw
// data. JSON with a mandatory version field and named weight arrays.
struct ModelCheckpoint {
    NBeatsXModel model;
    DatasetScalers scalers;
    std::string variant_id;

    std::string to_json() const;
    static ModelCheckpoint from_json(std::string_view text);
};

}  // namespace edflow
