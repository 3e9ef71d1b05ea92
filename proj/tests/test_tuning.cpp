#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "edflow/csv.hpp"
#include "edflow/tuning.hpp"

using namespace edflow;

namespace {

StackSpec small_trend_stack() {
    StackSpec stack;
    stack.kind = StackKind::kTrend;
    stack.blocks = 1;
    stack.layers_per_block = 1;
    stack.hidden_widths = {8};
    stack.degree = 1;
    return stack;
}

// A noiseless upward ramp stored pre-scaled, with the raw counts kept for
// rescaling through TargetScaler{34, 2.5}.
ModelDataset ramp_dataset(std::size_t n) {
    ModelDataset dataset;
    const Timestamp start = day_start(make_date(2023, 3, 1));
    dataset.hours.resize(n);
    dataset.segments.assign(n, 0);
    dataset.warmup.assign(n, 0);
    dataset.feature_columns = {"boarding_count"};
    dataset.future_columns = {"hour_of_day"};
    dataset.features.resize(static_cast<Eigen::Index>(n), 1);
    dataset.future.resize(static_cast<Eigen::Index>(n), 1);
    dataset.target.resize(static_cast<Eigen::Index>(n));
    dataset.target_raw.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        dataset.hours[i] = start + static_cast<Timestamp>(i) * kSecondsPerHour;
        const double raw = 30.0 + 0.05 * static_cast<double>(i);
        const double scaled = (raw - 34.0) / 2.5;
        dataset.features(static_cast<Eigen::Index>(i), 0) = scaled;
        dataset.future(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i % 24) / 23.0;
        dataset.target[static_cast<Eigen::Index>(i)] = scaled;
        dataset.target_raw[static_cast<Eigen::Index>(i)] = raw;
    }
    return dataset;
}

GridSpec ramp_grid() {
    GridSpec grid;
    grid.horizon = 4;
    grid.max_epochs = 40;
    grid.early_stop_patience = 50;
    grid.learning_rates = {0.01, 1e-9};
    grid.dropouts = {0.0};
    grid.batch_sizes = {32};
    grid.lookbacks = {8};
    grid.stack_options = {{small_trend_stack()}};
    return grid;
}

}  // namespace

TEST_CASE("grid size and enumeration order are fixed") {
    GridSpec grid;
    grid.horizon = 4;
    grid.learning_rates = {0.01, 0.003};
    grid.dropouts = {0.0, 0.2};
    grid.batch_sizes = {16, 32};
    grid.lookbacks = {8, 12};
    StackSpec second = small_trend_stack();
    second.blocks = 2;
    grid.stack_options = {{small_trend_stack()}, {second}};
    CHECK(grid.size() == 32);

    const auto cells = grid.expand();
    REQUIRE(cells.size() == 32);
    CHECK(cells[0].lookback == 8);
    CHECK(cells[0].stacks == grid.stack_options[0]);
    CHECK(cells[0].batch_size == 16);
    CHECK(cells[0].dropout_p == 0.0);
    CHECK(cells[0].learning_rate == 0.01);
    CHECK(cells[0].seed == 0);
    CHECK(cells[0].horizon == 4);
    CHECK(cells[1].learning_rate == 0.003);
    CHECK(cells[2].dropout_p == 0.2);
    CHECK(cells[4].batch_size == 32);
    CHECK(cells[8].stacks == grid.stack_options[1]);
    CHECK(cells[16].lookback == 12);
    for (const auto& cell : cells) CHECK_NOTHROW(cell.validate());
}

TEST_CASE("the default grid is the published best configuration") {
    const GridSpec grid;
    const auto cells = grid.expand();
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].learning_rate == 0.003);
    CHECK(cells[0].dropout_p == 0.1);
    CHECK(cells[0].batch_size == 128);
    CHECK(cells[0].lookback == 12);
    CHECK(cells[0].horizon == 6);
    CHECK(cells[0].stacks == NBeatsXConfig::defaults(12, 6).stacks);
}

TEST_CASE("grid JSON round-trips and rejects invalid values") {
    GridSpec grid;
    grid.horizon = 4;
    grid.max_epochs = 12;
    grid.early_stop_patience = 2;
    grid.learning_rates = {0.01, 0.003};
    grid.dropouts = {0.0, 0.1};
    grid.batch_sizes = {64};
    grid.lookbacks = {8, 16};
    grid.stack_options = {{small_trend_stack()}};
    const auto restored = GridSpec::from_json(grid.to_json());
    CHECK(restored == grid);

    GridSpec empty_grid = grid;
    empty_grid.stack_options.clear();
    CHECK(GridSpec::from_json(empty_grid.to_json()) == empty_grid);

    GridSpec bad = grid;
    bad.learning_rates.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = grid;
    bad.dropouts = {1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = grid;
    bad.lookbacks = {0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = grid;
    bad.stack_options = {{StackSpec{StackKind::kTrend, 1, 2, {8}, 1, 3}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(GridSpec::from_json("{\"horizon\": 6}"), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::from_json("not json"), std::invalid_argument);
}

TEST_CASE("grid search ranks by validation error and reruns bit-identically") {
    const auto dataset = ramp_dataset(160);
    const auto split = chronological_split(dataset.rows());
    const TargetScaler scaler{34.0, 2.5};
    const GridSpec grid = ramp_grid();

    const auto first = grid_search(grid, dataset, scaler, split, 42);
    REQUIRE(first.ranked.size() == 2);
    for (const auto& trial : first.ranked) {
        CHECK(!trial.aborted);
        REQUIRE(trial.val_metrics.has_value());
        CHECK(std::isfinite(trial.val_metrics->mae));
        CHECK(trial.history.size() == 40);
    }
    // The trained cell beats the frozen one.
    CHECK(first.ranked[0].config.learning_rate == 0.01);
    CHECK(first.ranked[0].trial_index == 0);
    CHECK(first.ranked[0].seed() == 42);
    CHECK(first.ranked[1].seed() == 43);
    CHECK(first.ranked[0].val_metrics->mae < first.ranked[1].val_metrics->mae);

    const auto second = grid_search(grid, dataset, scaler, split, 42);
    REQUIRE(second.ranked.size() == first.ranked.size());
    for (std::size_t i = 0; i < first.ranked.size(); ++i) {
        const auto& a = first.ranked[i];
        const auto& b = second.ranked[i];
        CHECK(a.trial_index == b.trial_index);
        CHECK(a.config == b.config);
        CHECK(a.aborted == b.aborted);
        CHECK(a.val_metrics->mae == b.val_metrics->mae);
        CHECK(a.val_metrics->mse == b.val_metrics->mse);
        CHECK(a.val_metrics->rmse == b.val_metrics->rmse);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t e = 0; e < a.history.size(); ++e) {
            CHECK(a.history[e].train_loss == b.history[e].train_loss);
            CHECK(a.history[e].val_loss == b.history[e].val_loss);
        }
    }
}

TEST_CASE("trials that cannot build windows abort and sink to the bottom") {
    const auto dataset = ramp_dataset(160);
    const auto split = chronological_split(dataset.rows());
    const TargetScaler scaler{34.0, 2.5};
    GridSpec grid = ramp_grid();
    grid.learning_rates = {0.01};
    grid.max_epochs = 2;
    grid.lookbacks = {8, 300};

    const auto result = grid_search(grid, dataset, scaler, split, 7);
    REQUIRE(result.ranked.size() == 2);
    CHECK(!result.ranked[0].aborted);
    CHECK(result.ranked[0].config.lookback == 8);
    CHECK(result.ranked[1].aborted);
    CHECK(!result.ranked[1].abort_reason.empty());
    CHECK(!result.ranked[1].val_metrics.has_value());
    CHECK(result.ranked[1].trial_index == 1);

    const std::string csv = results_csv(result);
    const CsvFile parsed = parse_csv(csv);
    CHECK(parsed.header ==
          std::vector<std::string>{"rank", "trial", "seed", "aborted", "abort_reason",
                                   "learning_rate", "dropout", "batch_size", "lookback",
                                   "architecture", "epochs", "final_train_loss", "val_mae",
                                   "val_mse", "val_rmse", "val_r2", "wall_seconds"});
    REQUIRE(parsed.rows.size() == 2);
    CHECK(parsed.rows[0].fields[0] == "1");
    CHECK(parsed.rows[0].fields[3] == "false");
    CHECK(parsed.rows[0].fields[9] == "trend(p1,1x1x8)");
    CHECK(!parsed.rows[0].fields[12].empty());
    CHECK(parsed.rows[1].fields[0] == "2");
    CHECK(parsed.rows[1].fields[3] == "true");
    CHECK(!parsed.rows[1].fields[4].empty());
    CHECK(parsed.rows[1].fields[12].empty());

    const std::string history = history_csv(result.ranked[0]);
    const CsvFile parsed_history = parse_csv(history);
    CHECK(parsed_history.header == std::vector<std::string>{"epoch", "train_loss", "val_loss"});
    REQUIRE(parsed_history.rows.size() == result.ranked[0].history.size());
    CHECK(parsed_history.rows[0].fields[0] == "1");
    CHECK(!parsed_history.rows[0].fields[2].empty());
}

TEST_CASE("architecture summaries name every stack compactly") {
    CHECK(architecture_summary(NBeatsXConfig::defaults(12, 6).stacks) ==
          "trend(p3,2x3x128)+seasonality(k3,2x3x128)+exogenous(2x3x256)");
    StackSpec ragged = small_trend_stack();
    ragged.layers_per_block = 3;
    ragged.hidden_widths = {16, 8, 4};
    CHECK(architecture_summary({ragged}) == "trend(p1,1x3x16/8/4)");
}
