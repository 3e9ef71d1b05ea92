#include "edflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "edflow/preprocess.hpp"

namespace edflow {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kTargetColumn = "boarding_count";

// Columns whose horizon values are known at forecast time.
const std::vector<std::string>& known_ahead_columns() {
    static const std::vector<std::string> kColumns = {
        "year",         "month",           "day_of_month",   "day_of_week",
        "hour_of_day",  "federal_holiday", "football_game1", "football_game2",
    };
    return kColumns;
}

FeatureEntry raw(std::string column) { return {std::move(column), Transform::kRaw, 0}; }

FeatureEntry lags(std::string column, int window) {
    return {std::move(column), Transform::kLags, window};
}

FeatureEntry rolling(std::string column, int window) {
    return {std::move(column), Transform::kRolling, window};
}

void append_calendar(std::vector<FeatureEntry>& entries) {
    for (const char* name : {"year", "month", "day_of_month", "day_of_week", "hour_of_day"}) {
        entries.push_back(raw(name));
    }
}

void append_weather_categories(std::vector<FeatureEntry>& entries) {
    for (const char* name : {"weather_clear", "weather_clouds", "weather_rain",
                             "weather_thunderstorm", "weather_others"}) {
        entries.push_back(raw(name));
    }
}

std::vector<FeatureEntry> builtin_entries(std::string_view id) {
    std::vector<FeatureEntry> e;
    if (id == "DS1") {
        e.push_back(lags("boarding_count", 12));
        e.push_back(raw("extreme_case_indicator"));
        append_calendar(e);
        return e;
    }
    if (id == "DS2") {
        e = builtin_entries("DS1");
        e.push_back(raw("avg_boarding_time"));
        e.push_back(raw("treatment_count"));
        e.push_back(raw("waiting_count"));
        e.push_back(raw("avg_treatment_time"));
        e.push_back(raw("avg_waiting_time"));
        e.push_back(raw("hospital_census"));
        append_weather_categories(e);
        return e;
    }
    if (id == "DS3") {
        e = builtin_entries("DS2");
        e.push_back(raw("temperature_f"));
        e.push_back(raw("federal_holiday"));
        e.push_back(raw("football_game1"));
        e.push_back(raw("football_game2"));
        return e;
    }
    if (id == "DS4") {
        e = builtin_entries("DS3");
        e.push_back(raw("boarding_count_esi12"));
        e.push_back(raw("boarding_count_esi3"));
        e.push_back(raw("boarding_count_esi45"));
        e.push_back(raw("waiting_count_esi12"));
        e.push_back(raw("waiting_count_esi3"));
        e.push_back(raw("waiting_count_esi45"));
        e.push_back(rolling("boarding_count", 4));
        return e;
    }
    if (id == "DS5") {
        e = builtin_entries("DS4");
        for (auto& entry : e) {
            if (entry.column == "boarding_count" && entry.transform == Transform::kLags) {
                entry.window = 24;
            } else if (entry.transform == Transform::kRaw &&
                       (entry.column == "avg_boarding_time" || entry.column == "treatment_count" ||
                        entry.column == "waiting_count" || entry.column == "hospital_census")) {
                entry.transform = Transform::kLags;
                entry.window = 12;
            }
        }
        return e;
    }
    throw std::invalid_argument("unknown feature manifest: " + std::string(id));
}

std::string_view transform_name(Transform transform) {
    switch (transform) {
        case Transform::kRaw: return "raw";
        case Transform::kLags: return "lags";
        case Transform::kRolling: return "rolling";
    }
    throw std::logic_error("unreachable transform");
}

Transform parse_transform(const std::string& name) {
    if (name == "raw") return Transform::kRaw;
    if (name == "lags") return Transform::kLags;
    if (name == "rolling") return Transform::kRolling;
    throw std::invalid_argument("unknown transform: " + name);
}

void validate_entry(const FeatureEntry& entry) {
    if (entry.column.empty()) {
        throw std::invalid_argument("feature entry has an empty column name");
    }
    if (entry.transform == Transform::kLags && entry.window < 1) {
        throw std::invalid_argument("lag entry for " + entry.column + " needs window >= 1");
    }
    if (entry.transform == Transform::kRolling && entry.window < 2) {
        throw std::invalid_argument("rolling entry for " + entry.column + " needs window >= 2");
    }
}

std::string lag_name(const std::string& column, int k) {
    return column + "_lag_" + std::to_string(k);
}

std::string roll_name(const std::string& column, int window) {
    return column + "_roll_" + std::to_string(window);
}

void ensure_lags(HourlyTable& table, const FeatureEntry& entry) {
    if (table.has_column(lag_name(entry.column, entry.window))) return;
    if (table.has_column(lag_name(entry.column, 1))) {
        throw std::invalid_argument("conflicting lag windows for column " + entry.column);
    }
    add_lags(table, entry.column, entry.window);
}

void ensure_rolling(HourlyTable& table, const FeatureEntry& entry) {
    if (table.has_column(roll_name(entry.column, entry.window))) return;
    add_rolling_mean(table, entry.column, entry.window);
}

void require_entries(const FeatureManifest& manifest) {
    if (manifest.entries.empty()) {
        throw std::invalid_argument("feature manifest " + manifest.id + " has no entries");
    }
}

void require_columns(const HourlyTable& hourly, const FeatureManifest& manifest) {
    for (const FeatureEntry& entry : manifest.entries) {
        validate_entry(entry);
        if (!hourly.has_column(entry.column)) {
            throw std::invalid_argument("manifest " + manifest.id +
                                        " references unknown column: " + entry.column);
        }
    }
}

}  // namespace

FeatureManifest FeatureManifest::builtin(std::string_view id) {
    return {std::string(id), builtin_entries(id)};
}

const std::vector<std::string>& FeatureManifest::builtin_ids() {
    static const std::vector<std::string> kIds = {"DS1", "DS2", "DS3", "DS4", "DS5"};
    return kIds;
}

FeatureManifest FeatureManifest::from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& error) {
        throw std::invalid_argument(std::string("manifest is not valid JSON: ") + error.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
        !doc.contains("features") || !doc["features"].is_array()) {
        throw std::invalid_argument("manifest needs an \"id\" string and a \"features\" array");
    }
    FeatureManifest manifest;
    manifest.id = doc["id"].get<std::string>();
    for (const auto& item : doc["features"]) {
        if (!item.is_object() || !item.contains("column") || !item["column"].is_string() ||
            !item.contains("transform") || !item["transform"].is_string()) {
            throw std::invalid_argument(
                "each feature needs \"column\" and \"transform\" strings");
        }
        FeatureEntry entry;
        entry.column = item["column"].get<std::string>();
        entry.transform = parse_transform(item["transform"].get<std::string>());
        if (item.contains("window")) {
            if (!item["window"].is_number_integer()) {
                throw std::invalid_argument("feature window must be an integer");
            }
            entry.window = item["window"].get<int>();
        }
        validate_entry(entry);
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

std::string FeatureManifest::to_json() const {
    ordered_json doc;
    doc["id"] = id;
    doc["features"] = ordered_json::array();
    for (const FeatureEntry& entry : entries) {
        ordered_json item;
        item["column"] = entry.column;
        item["transform"] = std::string(transform_name(entry.transform));
        if (entry.transform != Transform::kRaw) item["window"] = entry.window;
        doc["features"].push_back(std::move(item));
    }
    return doc.dump(2);
}

std::size_t FeatureManifest::expanded_column_count() const {
    std::size_t count = 0;
    for (const FeatureEntry& entry : entries) {
        count += entry.transform == Transform::kLags ? static_cast<std::size_t>(entry.window) : 1;
    }
    return count;
}

HourlyTable build_variant(const HourlyTable& hourly, const FeatureManifest& manifest) {
    require_entries(manifest);
    require_columns(hourly, manifest);

    HourlyTable work = hourly;
    std::vector<std::string> output_columns;
    for (const FeatureEntry& entry : manifest.entries) {
        switch (entry.transform) {
            case Transform::kRaw:
                output_columns.push_back(entry.column);
                break;
            case Transform::kLags:
                ensure_lags(work, entry);
                for (int k = 1; k <= entry.window; ++k) {
                    output_columns.push_back(lag_name(entry.column, k));
                }
                break;
            case Transform::kRolling:
                ensure_rolling(work, entry);
                output_columns.push_back(roll_name(entry.column, entry.window));
                break;
        }
    }

    HourlyTable variant(work.hours());
    for (const std::string& name : output_columns) {
        variant.add_column(name, work.column(name));
    }
    const auto& warmup = work.warmup();
    for (std::size_t i = 0; i < warmup.size(); ++i) {
        if (warmup[i] != 0) variant.mark_warmup(i);
    }
    return variant;
}

ModelDataset build_model_dataset(const HourlyTable& hourly, const FeatureManifest& manifest) {
    require_entries(manifest);
    require_columns(hourly, manifest);
    if (!hourly.has_column(std::string(kTargetColumn))) {
        throw std::invalid_argument("hourly table is missing the target column boarding_count");
    }

    // Lag entries collapse to their base column: the model slides its own
    // lookback window over the series, so pre-shifted copies carry no new
    // information for it.
    HourlyTable work = hourly;
    std::vector<std::string> columns;
    std::unordered_set<std::string> seen;
    for (const FeatureEntry& entry : manifest.entries) {
        std::string name = entry.column;
        if (entry.transform == Transform::kRolling) {
            ensure_rolling(work, entry);
            name = roll_name(entry.column, entry.window);
        }
        if (seen.insert(name).second) columns.push_back(std::move(name));
    }

    ModelDataset dataset;
    dataset.hours = work.hours();
    dataset.segments = work.segment_ids();
    dataset.warmup = work.warmup();
    dataset.feature_columns = columns;
    for (const std::string& name : known_ahead_columns()) {
        if (seen.count(name) != 0) dataset.future_columns.push_back(name);
    }

    const auto n = static_cast<Eigen::Index>(work.rows());
    dataset.features.resize(n, static_cast<Eigen::Index>(dataset.feature_columns.size()));
    for (std::size_t j = 0; j < dataset.feature_columns.size(); ++j) {
        const auto& values = work.column(dataset.feature_columns[j]);
        for (Eigen::Index i = 0; i < n; ++i) {
            dataset.features(i, static_cast<Eigen::Index>(j)) =
                values[static_cast<std::size_t>(i)];
        }
    }
    dataset.future.resize(n, static_cast<Eigen::Index>(dataset.future_columns.size()));
    for (std::size_t j = 0; j < dataset.future_columns.size(); ++j) {
        const auto& values = work.column(dataset.future_columns[j]);
        for (Eigen::Index i = 0; i < n; ++i) {
            dataset.future(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i)];
        }
    }
    const auto& target_values = work.column(std::string(kTargetColumn));
    dataset.target.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dataset.target[i] = target_values[static_cast<std::size_t>(i)];
    }
    dataset.target_raw = dataset.target;
    return dataset;
}

SplitIndices chronological_split(std::size_t n, double train_frac, double val_frac) {
    if (train_frac <= 0.0 || val_frac <= 0.0 || train_frac + val_frac >= 1.0) {
        throw std::invalid_argument("split fractions must be positive and sum below 1");
    }
    // The nudge keeps exact multiples (0.70 * 100) from flooring one short.
    const auto part = [n](double frac) {
        return static_cast<std::size_t>(
            std::floor(frac * static_cast<double>(n) + 1e-9));
    };
    SplitIndices split;
    split.train_end = part(train_frac);
    split.val_end = split.train_end + part(val_frac);
    split.total = n;
    if (split.train_end == 0 || split.val_end == split.train_end || split.val_end >= n) {
        throw std::invalid_argument("too few rows to split: " + std::to_string(n));
    }
    return split;
}

Scaler fit_scaler(const Eigen::MatrixXd& train_rows, const std::vector<std::string>& columns) {
    if (train_rows.cols() != static_cast<Eigen::Index>(columns.size())) {
        throw std::invalid_argument("scaler column names do not match the matrix width");
    }
    if (train_rows.rows() == 0 && !columns.empty()) {
        throw std::invalid_argument("scaler needs at least one training row");
    }
    Scaler scaler;
    scaler.columns = columns;
    const auto n = static_cast<double>(train_rows.rows());
    for (Eigen::Index j = 0; j < train_rows.cols(); ++j) {
        const auto col = train_rows.col(j);
        const double mean = col.mean();
        const double std = std::sqrt((col.array() - mean).square().sum() / n);
        const bool binary = ((col.array() == 0.0) || (col.array() == 1.0)).all();
        scaler.mean.push_back(mean);
        // A constant non-binary column (a year or month that never changes
        // inside the training span) is centered to zero rather than passed
        // through; raw values like 2023 destabilize the first layers.
        scaler.std.push_back(!binary && std == 0.0 ? 1.0 : std);
        scaler.scaled.push_back(binary ? 0 : 1);
    }
    return scaler;
}

void Scaler::apply(Eigen::MatrixXd& matrix) const {
    if (matrix.cols() != static_cast<Eigen::Index>(columns.size())) {
        throw std::invalid_argument("scaler was fitted for a different column set");
    }
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const auto i = static_cast<std::size_t>(j);
        if (scaled[i] == 0) continue;
        matrix.col(j) = (matrix.col(j).array() - mean[i]) / std[i];
    }
}

TargetScaler fit_target_scaler(const Eigen::VectorXd& train_target) {
    if (train_target.size() == 0) {
        throw std::invalid_argument("target scaler needs at least one training row");
    }
    TargetScaler scaler;
    scaler.mean = train_target.mean();
    scaler.std = std::sqrt(
        (train_target.array() - scaler.mean).square().sum() /
        static_cast<double>(train_target.size()));
    if (scaler.std == 0.0) scaler.std = 1.0;
    return scaler;
}

DatasetScalers scale_dataset(ModelDataset& dataset, const SplitIndices& split) {
    if (split.total != dataset.rows() || split.train_end == 0 ||
        split.val_end > dataset.rows()) {
        throw std::invalid_argument("split does not match the dataset");
    }
    const auto train_end = static_cast<Eigen::Index>(split.train_end);
    DatasetScalers scalers;
    scalers.features = fit_scaler(dataset.features.topRows(train_end), dataset.feature_columns);
    scalers.features.apply(dataset.features);
    scalers.future = fit_scaler(dataset.future.topRows(train_end), dataset.future_columns);
    scalers.future.apply(dataset.future);
    scalers.target = fit_target_scaler(dataset.target_raw.head(train_end));
    dataset.target =
        (dataset.target_raw.array() - scalers.target.mean) / scalers.target.std;
    return scalers;
}

namespace {

ordered_json column_scaler_to_json(const Scaler& scaler) {
    ordered_json doc;
    doc["columns"] = scaler.columns;
    doc["mean"] = scaler.mean;
    doc["std"] = scaler.std;
    doc["scaled"] = scaler.scaled;
    return doc;
}

Scaler column_scaler_from_json(const ordered_json& doc) {
    Scaler scaler;
    scaler.columns = doc.at("columns").get<std::vector<std::string>>();
    scaler.mean = doc.at("mean").get<std::vector<double>>();
    scaler.std = doc.at("std").get<std::vector<double>>();
    scaler.scaled = doc.at("scaled").get<std::vector<std::uint8_t>>();
    if (scaler.mean.size() != scaler.columns.size() ||
        scaler.std.size() != scaler.columns.size() ||
        scaler.scaled.size() != scaler.columns.size()) {
        throw std::invalid_argument("scaler arrays have mismatched lengths");
    }
    return scaler;
}

}  // namespace

std::string scalers_to_json(const DatasetScalers& scalers) {
    ordered_json doc;
    doc["features"] = column_scaler_to_json(scalers.features);
    doc["future"] = column_scaler_to_json(scalers.future);
    doc["target"] = {{"mean", scalers.target.mean}, {"std", scalers.target.std}};
    return doc.dump();
}

DatasetScalers scalers_from_json(std::string_view text) {
    try {
        const ordered_json doc = ordered_json::parse(text);
        DatasetScalers scalers;
        scalers.features = column_scaler_from_json(doc.at("features"));
        scalers.future = column_scaler_from_json(doc.at("future"));
        scalers.target.mean = doc.at("target").at("mean").get<double>();
        scalers.target.std = doc.at("target").at("std").get<double>();
        if (!(scalers.target.std > 0.0)) {
            throw std::invalid_argument("target scaler std must be positive");
        }
        return scalers;
    } catch (const nlohmann::json::exception& error) {
        throw std::invalid_argument(std::string("bad scaler JSON: ") + error.what());
    }
}

std::vector<std::size_t> window_anchors(const ModelDataset& dataset, std::size_t row_begin,
                                        std::size_t row_end, int lookback, int horizon) {
    if (lookback < 1 || horizon < 1) {
        throw std::invalid_argument("lookback and horizon must be at least 1");
    }
    if (row_begin > row_end || row_end > dataset.rows()) {
        throw std::invalid_argument("window range falls outside the dataset");
    }
    const auto L = static_cast<std::size_t>(lookback);
    const auto H = static_cast<std::size_t>(horizon);

    // Prefix sums make the warmup-free check O(1) per anchor.
    std::vector<std::size_t> warm_prefix(dataset.rows() + 1, 0);
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
        warm_prefix[i + 1] = warm_prefix[i] + (dataset.warmup[i] != 0 ? 1 : 0);
    }

    std::vector<std::size_t> anchors;
    if (row_end - row_begin < L + H) return anchors;
    for (std::size_t t = row_begin + L - 1; t + H < row_end; ++t) {
        const std::size_t first = t - L + 1;
        const std::size_t last = t + H;
        if (dataset.segments[first] != dataset.segments[last]) continue;
        if (warm_prefix[last + 1] - warm_prefix[first] != 0) continue;
        anchors.push_back(t);
    }
    return anchors;
}

SupervisedWindow make_window(const ModelDataset& dataset, std::size_t anchor, int lookback,
                             int horizon) {
    if (lookback < 1 || horizon < 1) {
        throw std::invalid_argument("lookback and horizon must be at least 1");
    }
    const auto L = static_cast<std::size_t>(lookback);
    const auto H = static_cast<std::size_t>(horizon);
    if (anchor + 1 < L || anchor + H >= dataset.rows()) {
        throw std::invalid_argument("window span falls outside the dataset");
    }
    const auto first = static_cast<Eigen::Index>(anchor - L + 1);
    SupervisedWindow window;
    window.input = dataset.features.middleRows(first, lookback);
    window.exo_future =
        dataset.future.middleRows(static_cast<Eigen::Index>(anchor + 1), horizon);
    window.history = dataset.target.segment(first, lookback);
    window.target = dataset.target.segment(static_cast<Eigen::Index>(anchor + 1), horizon);
    window.anchor = dataset.hours[anchor];
    return window;
}

std::vector<SupervisedWindow> make_windows(const ModelDataset& dataset, std::size_t row_begin,
                                           std::size_t row_end, int lookback, int horizon) {
    std::vector<SupervisedWindow> windows;
    for (std::size_t anchor : window_anchors(dataset, row_begin, row_end, lookback, horizon)) {
        windows.push_back(make_window(dataset, anchor, lookback, horizon));
    }
    return windows;
}

WindowSplits split_windows(const ModelDataset& dataset, const SplitIndices& split, int lookback,
                           int horizon) {
    if (split.total != dataset.rows()) {
        throw std::invalid_argument("split indices do not match the dataset row count");
    }
    const auto L = static_cast<std::size_t>(lookback);
    WindowSplits out;
    out.train = make_windows(dataset, 0, split.train_end, lookback, horizon);
    // Starting the range one lookback before the boundary puts the first
    // anchor on the last row of the previous partition, so the first target
    // row is the partition's first row.
    const std::size_t val_begin = split.train_end >= L ? split.train_end - L : 0;
    out.val = make_windows(dataset, val_begin, split.val_end, lookback, horizon);
    const std::size_t test_begin = split.val_end >= L ? split.val_end - L : 0;
    out.test = make_windows(dataset, test_begin, split.total, lookback, horizon);
    return out;
}

}  // namespace edflow
