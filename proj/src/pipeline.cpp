#include "edflow/pipeline.hpp"

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "edflow/csv.hpp"
#include "edflow/flow_features.hpp"
#include "edflow/ingest.hpp"
#include "edflow/table.hpp"
#include "edflow/time.hpp"

namespace edflow {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Paths under the recording root are stored relative to it so reruns under
// different roots produce identical manifests.
std::string record_path(const std::string& path, const std::string& root) {
    if (root.empty()) return path;
    const std::string normal = fs::path(path).lexically_normal().generic_string();
    std::string prefix = fs::path(root).lexically_normal().generic_string();
    if (!prefix.empty() && prefix.back() != '/') prefix += '/';
    if (normal.size() > prefix.size() && normal.compare(0, prefix.size(), prefix) == 0) {
        return normal.substr(prefix.size());
    }
    return path;
}

// Collects input and output digests for one run directory and writes its
// manifest.json last, once every artifact is on disk.
class ManifestRecorder {
public:
    ManifestRecorder(std::string command, std::uint64_t seed, std::string config_json,
                     std::string out_dir, std::string record_root)
        : out_dir_(std::move(out_dir)), root_(std::move(record_root)) {
        manifest_.command = std::move(command);
        manifest_.seed = seed;
        manifest_.config_json = std::move(config_json);
        std::error_code ec;
        fs::create_directories(out_dir_, ec);
    }

    void set_config(std::string config_json) { manifest_.config_json = std::move(config_json); }

    // Reads an input file and records its digest. Unreadable files are data
    // errors at this layer; the command line checks existence up front.
    std::string read_input(const std::string& path) {
        std::string content;
        try {
            content = read_file(path);
        } catch (const std::exception& error) {
            throw BadDataError(error.what());
        }
        manifest_.inputs.emplace_back(record_path(path, root_), fnv1a_hex(content));
        return content;
    }

    std::string write_output(const std::string& name, std::string_view content) {
        const std::string path = join_path(out_dir_, name);
        write_file(path, content);
        manifest_.outputs.emplace_back(record_path(path, root_), fnv1a_hex(content));
        return path;
    }

    void record_output(const std::string& path, std::string_view content) {
        manifest_.outputs.emplace_back(record_path(path, root_), fnv1a_hex(content));
    }

    std::string finish() {
        const std::string path = join_path(out_dir_, "manifest.json");
        write_file(path, manifest_.to_json());
        return path;
    }

private:
    RunManifest manifest_;
    std::string out_dir_;
    std::string root_;
};

ordered_json digest_array(const std::vector<std::pair<std::string, std::string>>& entries) {
    ordered_json arr = ordered_json::array();
    for (const auto& [path, digest] : entries) {
        arr.push_back({{"path", path}, {"fnv1a", digest}});
    }
    return arr;
}

double parse_field_double(const std::string& text, std::size_t line) {
    const auto value = parse_double(text);
    if (!value) {
        throw BadDataError("model dataset row " + std::to_string(line) +
                           " holds a malformed number: " + text);
    }
    return *value;
}

ordered_json metrics_to_node(const MetricsReport& report) {
    return ordered_json::parse(report.to_json());
}

std::optional<MetricsReport> metrics_or_nothing(const std::vector<double>& y,
                                                const std::vector<double>& yhat) {
    if (y.size() < 2) return std::nullopt;
    return regression_metrics(y, yhat);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> SourcePaths::named() const {
    return {{"ed_tracking", ed_tracking}, {"inpatient", inpatient}, {"weather", weather},
            {"holidays", holidays},       {"games1", games1},       {"games2", games2}};
}

std::string RunManifest::to_json() const {
    ordered_json doc;
    doc["tool"] = "edflow";
    doc["version"] = 1;
    doc["command"] = command;
    doc["seed"] = seed;
    try {
        doc["config"] = ordered_json::parse(config_json);
    } catch (const nlohmann::json::exception& error) {
        throw std::invalid_argument(std::string("manifest config is not JSON: ") + error.what());
    }
    doc["inputs"] = digest_array(inputs);
    doc["outputs"] = digest_array(outputs);
    return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
    try {
        const ordered_json doc = ordered_json::parse(text);
        RunManifest manifest;
        manifest.command = doc.at("command").get<std::string>();
        manifest.seed = doc.at("seed").get<std::uint64_t>();
        manifest.config_json = doc.at("config").dump();
        for (const auto& item : doc.at("inputs")) {
            manifest.inputs.emplace_back(item.at("path").get<std::string>(),
                                         item.at("fnv1a").get<std::string>());
        }
        for (const auto& item : doc.at("outputs")) {
            manifest.outputs.emplace_back(item.at("path").get<std::string>(),
                                          item.at("fnv1a").get<std::string>());
        }
        return manifest;
    } catch (const nlohmann::json::exception& error) {
        throw BadDataError(std::string("bad manifest JSON: ") + error.what());
    }
}

std::string model_dataset_to_csv(const ModelDataset& dataset) {
    std::vector<std::string> header = {"hour", "warmup", "target_raw", "target"};
    for (const std::string& name : dataset.feature_columns) header.push_back("f:" + name);
    for (const std::string& name : dataset.future_columns) header.push_back("x:" + name);
    std::string out;
    append_csv_row(out, header);
    std::vector<std::string> row(header.size());
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        row[0] = format_timestamp(dataset.hours[r]);
        row[1] = dataset.warmup[r] ? "1" : "0";
        row[2] = format_double(dataset.target_raw[i]);
        row[3] = format_double(dataset.target[i]);
        std::size_t c = 4;
        for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
            row[c++] = format_double(dataset.features(i, j));
        }
        for (Eigen::Index j = 0; j < dataset.future.cols(); ++j) {
            row[c++] = format_double(dataset.future(i, j));
        }
        append_csv_row(out, row);
    }
    return out;
}

ModelDataset model_dataset_from_csv(std::string_view content) {
    CsvFile file;
    try {
        file = parse_csv(content);
    } catch (const std::exception& error) {
        throw BadDataError(std::string("bad model dataset CSV: ") + error.what());
    }
    const std::vector<std::string>& header = file.header;
    if (header.size() < 4 || header[0] != "hour" || header[1] != "warmup" ||
        header[2] != "target_raw" || header[3] != "target") {
        throw BadDataError("model dataset CSV has an unexpected header");
    }
    ModelDataset dataset;
    bool seen_future = false;
    for (std::size_t i = 4; i < header.size(); ++i) {
        const std::string& name = header[i];
        if (name.rfind("f:", 0) == 0) {
            if (seen_future) {
                throw BadDataError("feature columns must precede future columns");
            }
            dataset.feature_columns.push_back(name.substr(2));
        } else if (name.rfind("x:", 0) == 0) {
            seen_future = true;
            dataset.future_columns.push_back(name.substr(2));
        } else {
            throw BadDataError("model dataset column lacks an f: or x: prefix: " + name);
        }
    }
    const std::size_t rows = file.rows.size();
    const auto n = static_cast<Eigen::Index>(rows);
    dataset.hours.reserve(rows);
    dataset.warmup.reserve(rows);
    dataset.features.resize(n, static_cast<Eigen::Index>(dataset.feature_columns.size()));
    dataset.future.resize(n, static_cast<Eigen::Index>(dataset.future_columns.size()));
    dataset.target.resize(n);
    dataset.target_raw.resize(n);
    for (std::size_t r = 0; r < rows; ++r) {
        const CsvRow& row = file.rows[r];
        if (row.fields.size() != header.size()) {
            throw BadDataError("model dataset row " + std::to_string(row.line) +
                               " has the wrong field count");
        }
        const auto hour = parse_timestamp(row.fields[0]);
        if (!hour || !hour_aligned(*hour)) {
            throw BadDataError("model dataset row " + std::to_string(row.line) +
                               " has a malformed hour: " + row.fields[0]);
        }
        if (!dataset.hours.empty() && *hour <= dataset.hours.back()) {
            throw BadDataError("model dataset hours must be strictly ascending");
        }
        if (row.fields[1] != "0" && row.fields[1] != "1") {
            throw BadDataError("model dataset row " + std::to_string(row.line) +
                               " has a warmup flag other than 0 or 1");
        }
        dataset.hours.push_back(*hour);
        dataset.warmup.push_back(row.fields[1] == "1" ? 1 : 0);
        const auto i = static_cast<Eigen::Index>(r);
        dataset.target_raw[i] = parse_field_double(row.fields[2], row.line);
        dataset.target[i] = parse_field_double(row.fields[3], row.line);
        std::size_t c = 4;
        for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
            dataset.features(i, j) = parse_field_double(row.fields[c++], row.line);
        }
        for (Eigen::Index j = 0; j < dataset.future.cols(); ++j) {
            dataset.future(i, j) = parse_field_double(row.fields[c++], row.line);
        }
    }
    dataset.segments.resize(rows);
    std::size_t segment = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (r > 0 && dataset.hours[r] != dataset.hours[r - 1] + kSecondsPerHour) ++segment;
        dataset.segments[r] = segment;
    }
    return dataset;
}

SynthRunResult run_synth(const ScenarioConfig& scenario, const std::string& out_dir,
                         const std::string& record_root) {
    scenario.validate();
    ManifestRecorder recorder("synth", scenario.seed, scenario.to_json(), out_dir, record_root);
    const SynthResult result = generate(scenario);
    SynthRunResult run;
    run.hours = result.index.size();
    run.visits = result.visits.size();
    run.stays = result.stays.size();
    run.sources.ed_tracking = recorder.write_output("ed_tracking.csv",
                                                    serialize_visits(result.visits));
    run.sources.inpatient = recorder.write_output("inpatient.csv", serialize_stays(result.stays));
    run.sources.weather = recorder.write_output("weather.csv", serialize_weather(result.weather));
    run.sources.holidays = recorder.write_output("holidays.csv",
                                                 serialize_dates(result.calendar.holidays));
    run.sources.games1 = recorder.write_output("games1.csv",
                                               serialize_dates(result.calendar.game1));
    run.sources.games2 = recorder.write_output("games2.csv",
                                               serialize_dates(result.calendar.game2));
    run.ground_truth_csv = recorder.write_output("ground_truth.csv", result.ground_truth.to_csv());
    run.injections_json = recorder.write_output("injections.json", result.injections.to_json());
    run.manifest_path = recorder.finish();
    return run;
}

FeaturizeRunResult run_featurize(const SourcePaths& sources, const std::string& out_dir,
                                 const std::string& record_root) {
    const CleanLimits limits;
    const auto [pandemic_from, pandemic_to] = covid_exclusion_window();
    ordered_json config;
    config["waiting_limit_hours"] = limits.waiting_limit_seconds / kSecondsPerHour;
    config["boarding_limit_hours"] = limits.boarding_limit_seconds / kSecondsPerHour;
    config["treatment_limit_hours"] = limits.treatment_limit_seconds / kSecondsPerHour;
    config["pandemic_window"] = {format_timestamp(pandemic_from), format_timestamp(pandemic_to)};
    ManifestRecorder recorder("featurize", 0, config.dump(), out_dir, record_root);

    const std::string ed_content = recorder.read_input(sources.ed_tracking);
    const std::string stay_content = recorder.read_input(sources.inpatient);
    const std::string weather_content = recorder.read_input(sources.weather);
    const std::string holiday_content = recorder.read_input(sources.holidays);
    const std::string game1_content = recorder.read_input(sources.games1);
    const std::string game2_content = recorder.read_input(sources.games2);

    ParseResult<VisitTimeline> visits;
    ParseResult<InpatientStay> stays;
    ParseResult<WeatherObservation> weather;
    CalendarParseResult calendar;
    try {
        visits = parse_ed_tracking(ed_content);
        stays = parse_inpatient(stay_content);
        weather = parse_weather(weather_content);
        calendar = parse_calendar(holiday_content, game1_content, game2_content);
    } catch (const std::exception& error) {
        throw BadDataError(error.what());
    }
    if (weather.records.empty()) {
        throw BadDataError("weather file has no usable observations to anchor the hourly index");
    }

    auto [cleaned, report] = clean_visits(visits.records, limits);
    auto [imputed, imputed_count] = impute_esi(std::move(cleaned));
    report.esi_imputed = imputed_count;

    const HourIndex index =
        HourIndex::build(weather.records.front().hour, weather.records.back().hour);
    HourlyTable table =
        assemble_hourly_records(imputed, stays.records, weather.records, calendar.flags, index);
    const std::size_t assembled_rows = table.rows();
    table = exclude_window(table, pandemic_from, pandemic_to);

    std::string rejects;
    append_csv_row(rejects, {"source", "line", "reason"});
    std::size_t rejected_total = 0;
    const auto add_rejects = [&](std::string_view source, const std::vector<RejectedRow>& rows) {
        for (const RejectedRow& row : rows) {
            append_csv_row(rejects, {std::string(source), std::to_string(row.line), row.reason});
        }
        rejected_total += rows.size();
    };
    add_rejects("ed_tracking", visits.rejected);
    add_rejects("inpatient", stays.rejected);
    add_rejects("weather", weather.rejected);
    add_rejects("calendar", calendar.rejected);

    FeaturizeRunResult run;
    run.cleaning = report;
    run.rejected_rows = rejected_total;
    run.hourly_rows = table.rows();
    run.pandemic_rows_excluded = assembled_rows - table.rows();
    run.hourly_csv = recorder.write_output("hourly.csv", table.to_csv());
    recorder.write_output("cleaning.json", report.to_json());
    recorder.write_output("rejects.csv", rejects);
    run.manifest_path = recorder.finish();
    return run;
}

BuildRunResult run_build(const std::string& hourly_csv, const std::string& variant,
                         double train_fraction, double val_fraction, const std::string& out_dir,
                         const std::string& record_root) {
    if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) ||
        !(train_fraction + val_fraction < 1.0)) {
        throw std::invalid_argument(
            "split fractions must be positive and leave room for a test partition");
    }
    ordered_json config;
    config["variant"] = variant;
    config["train_fraction"] = train_fraction;
    config["val_fraction"] = val_fraction;
    ManifestRecorder recorder("build", 0, config.dump(), out_dir, record_root);

    const std::string hourly_content = recorder.read_input(hourly_csv);
    HourlyTable hourly;
    try {
        hourly = HourlyTable::from_csv(hourly_content);
    } catch (const std::exception& error) {
        throw BadDataError(std::string("bad hourly table: ") + error.what());
    }

    FeatureManifest manifest;
    const std::vector<std::string>& builtins = FeatureManifest::builtin_ids();
    if (std::find(builtins.begin(), builtins.end(), variant) != builtins.end()) {
        manifest = FeatureManifest::builtin(variant);
    } else {
        const std::string manifest_content = recorder.read_input(variant);
        try {
            manifest = FeatureManifest::from_json(manifest_content);
        } catch (const std::exception& error) {
            throw BadDataError(std::string("bad variant manifest: ") + error.what());
        }
    }

    BuildRunResult run;
    try {
        const HourlyTable expanded = build_variant(hourly, manifest);
        run.expanded_columns = expanded.cols();
        ModelDataset dataset = build_model_dataset(hourly, manifest);
        run.split = chronological_split(dataset.rows(), train_fraction, val_fraction);
        const DatasetScalers scalers = scale_dataset(dataset, run.split);
        run.variant_id = manifest.id;
        recorder.write_output("variant.csv", expanded.to_csv());
        run.dataset_csv = recorder.write_output("dataset.csv", model_dataset_to_csv(dataset));
        ordered_json split_doc;
        split_doc["train_end"] = run.split.train_end;
        split_doc["val_end"] = run.split.val_end;
        split_doc["total"] = run.split.total;
        split_doc["train_fraction"] = train_fraction;
        split_doc["val_fraction"] = val_fraction;
        run.split_json = recorder.write_output("split.json", split_doc.dump(2) + "\n");
        run.scalers_json = recorder.write_output("scalers.json", scalers_to_json(scalers));
        run.variant_json = recorder.write_output("variant.json", manifest.to_json());
    } catch (const std::invalid_argument& error) {
        throw BadDataError(error.what());
    }
    run.manifest_path = recorder.finish();
    return run;
}

namespace {

struct LoadedBuild {
    ModelDataset dataset;
    SplitIndices split;
    DatasetScalers scalers;
    std::string variant_id;
};

LoadedBuild load_build_dir(const std::string& build_dir, ManifestRecorder& recorder) {
    LoadedBuild loaded;
    loaded.dataset =
        model_dataset_from_csv(recorder.read_input(join_path(build_dir, "dataset.csv")));
    const std::string split_text = recorder.read_input(join_path(build_dir, "split.json"));
    try {
        const ordered_json doc = ordered_json::parse(split_text);
        loaded.split.train_end = doc.at("train_end").get<std::size_t>();
        loaded.split.val_end = doc.at("val_end").get<std::size_t>();
        loaded.split.total = doc.at("total").get<std::size_t>();
    } catch (const nlohmann::json::exception& error) {
        throw BadDataError(std::string("bad split.json: ") + error.what());
    }
    try {
        loaded.scalers =
            scalers_from_json(recorder.read_input(join_path(build_dir, "scalers.json")));
        const FeatureManifest manifest =
            FeatureManifest::from_json(recorder.read_input(join_path(build_dir, "variant.json")));
        loaded.variant_id = manifest.id;
    } catch (const std::invalid_argument& error) {
        throw BadDataError(error.what());
    }
    if (loaded.split.total != loaded.dataset.rows() ||
        loaded.split.train_end > loaded.split.val_end ||
        loaded.split.val_end > loaded.split.total) {
        throw BadDataError("split.json does not match dataset.csv");
    }
    return loaded;
}

ModelCheckpoint load_checkpoint(const std::string& path, const LoadedBuild& build,
                                ManifestRecorder& recorder) {
    const std::string text = recorder.read_input(path);
    ModelCheckpoint checkpoint = [&] {
        try {
            return ModelCheckpoint::from_json(text);
        } catch (const std::exception& error) {
            throw BadDataError(std::string("bad checkpoint: ") + error.what());
        }
    }();
    if (checkpoint.variant_id != build.variant_id) {
        throw BadDataError("checkpoint was trained on variant " + checkpoint.variant_id +
                           " but the build directory holds " + build.variant_id);
    }
    if (checkpoint.model.input_features() !=
            static_cast<int>(build.dataset.feature_columns.size()) ||
        checkpoint.model.future_features() !=
            static_cast<int>(build.dataset.future_columns.size())) {
        throw BadDataError("checkpoint feature shapes do not match the build directory");
    }
    return checkpoint;
}

WindowSplits windows_for(const LoadedBuild& build, int lookback, int horizon) {
    try {
        return split_windows(build.dataset, build.split, lookback, horizon);
    } catch (const std::invalid_argument& error) {
        throw BadDataError(error.what());
    }
}

}  // namespace

TrainRunResult run_train(const std::string& build_dir, const NBeatsXConfig& config,
                         const std::string& out_dir, const std::string& record_root) {
    config.validate();
    ManifestRecorder recorder("train", config.seed, config.to_json(), out_dir, record_root);
    const LoadedBuild build = load_build_dir(build_dir, recorder);
    const WindowSplits windows = windows_for(build, config.lookback, config.horizon);
    if (windows.train.empty()) {
        throw BadDataError("the dataset is too short for the lookback and horizon");
    }
    TrainOutput output = train(config, windows.train, windows.val);
    const ModelCheckpoint checkpoint{std::move(output.model), build.scalers, build.variant_id};
    TrainRunResult run;
    run.history = std::move(output.history);
    run.early_stopped = output.early_stopped;
    run.checkpoint_json = recorder.write_output("checkpoint.json", checkpoint.to_json());
    run.history_csv = recorder.write_output("history.csv", history_csv(run.history));
    run.manifest_path = recorder.finish();
    return run;
}

GridSearchRunResult run_gridsearch(const std::string& build_dir, const GridSpec& grid,
                                   std::uint64_t base_seed, const std::string& out_dir,
                                   const std::string& record_root) {
    grid.validate();
    ordered_json config;
    config["base_seed"] = base_seed;
    config["grid"] = ordered_json::parse(grid.to_json());
    ManifestRecorder recorder("gridsearch", base_seed, config.dump(), out_dir, record_root);
    const LoadedBuild build = load_build_dir(build_dir, recorder);
    GridSearchRunResult run;
    run.search = grid_search(grid, build.dataset, build.scalers.target, build.split, base_seed);
    const TrialResult& best = run.search.ranked.front();
    if (best.aborted) {
        throw BadDataError("every grid trial aborted; first reason: " + best.abort_reason);
    }
    run.results_csv = recorder.write_output("results.csv", results_csv(run.search));
    run.best_config_json = recorder.write_output("best_config.json", best.config.to_json());
    run.best_history_csv = recorder.write_output("best_history.csv", history_csv(best));
    run.manifest_path = recorder.finish();
    return run;
}

EvaluateRunResult run_evaluate(const std::string& build_dir, const std::string& checkpoint_path,
                               const std::string& out_dir, const std::string& record_root) {
    ordered_json config;
    config["thresholds_fit"] = "train and validation rows";
    ManifestRecorder recorder("evaluate", 0, config.dump(), out_dir, record_root);
    const LoadedBuild build = load_build_dir(build_dir, recorder);
    const ModelCheckpoint checkpoint = load_checkpoint(checkpoint_path, build, recorder);

    const NBeatsXConfig& model_config = checkpoint.model.config();
    const int horizon = model_config.horizon;
    const WindowSplits windows = windows_for(build, model_config.lookback, horizon);
    if (windows.test.empty()) {
        throw BadDataError("the test partition yields no forecast windows");
    }
    const std::vector<ForecastDecomposition> forecasts =
        predict_series(checkpoint.model, windows.test, build.scalers.target);

    std::unordered_map<Timestamp, std::size_t> row_of;
    row_of.reserve(build.dataset.rows());
    for (std::size_t r = 0; r < build.dataset.rows(); ++r) {
        row_of.emplace(build.dataset.hours[r], r);
    }

    const auto steps = static_cast<std::size_t>(horizon);
    std::vector<std::vector<double>> actual_by_step(steps), model_by_step(steps),
        persistence_by_step(steps), seasonal_actual_by_step(steps), seasonal_by_step(steps);
    std::vector<double> actual_all, model_all, persistence_all, seasonal_actual_all, seasonal_all;
    std::string predictions;
    append_csv_row(predictions, {"anchor", "target_hour", "step", "actual", "predicted", "trend",
                                 "seasonality", "exogenous"});
    for (const ForecastDecomposition& forecast : forecasts) {
        const std::size_t anchor_row = row_of.at(forecast.anchor);
        const double last_observed =
            build.dataset.target_raw[static_cast<Eigen::Index>(anchor_row)];
        for (std::size_t h = 0; h < steps; ++h) {
            const std::size_t target_row = anchor_row + 1 + h;
            const auto ti = static_cast<Eigen::Index>(target_row);
            const auto hi = static_cast<Eigen::Index>(h);
            const double actual = build.dataset.target_raw[ti];
            const double predicted = forecast.total[hi];
            actual_by_step[h].push_back(actual);
            model_by_step[h].push_back(predicted);
            persistence_by_step[h].push_back(last_observed);
            actual_all.push_back(actual);
            model_all.push_back(predicted);
            persistence_all.push_back(last_observed);
            const Timestamp target_hour = build.dataset.hours[target_row];
            const auto day_back = row_of.find(target_hour - 24 * kSecondsPerHour);
            if (day_back != row_of.end()) {
                const double seasonal =
                    build.dataset.target_raw[static_cast<Eigen::Index>(day_back->second)];
                seasonal_actual_by_step[h].push_back(actual);
                seasonal_by_step[h].push_back(seasonal);
                seasonal_actual_all.push_back(actual);
                seasonal_all.push_back(seasonal);
            }
            append_csv_row(predictions,
                           {format_timestamp(forecast.anchor), format_timestamp(target_hour),
                            std::to_string(h + 1), format_double(actual),
                            format_double(predicted), format_double(forecast.trend[hi]),
                            format_double(forecast.seasonality[hi]),
                            format_double(forecast.exogenous[hi])});
        }
    }

    EvaluateRunResult run;
    run.test_windows = windows.test.size();
    const Eigen::Index history_rows = static_cast<Eigen::Index>(build.split.val_end);
    try {
        run.thresholds = compute_thresholds(
            std::span<const double>(build.dataset.target_raw.data(),
                                    static_cast<std::size_t>(history_rows)));
    } catch (const std::invalid_argument& error) {
        throw BadDataError(std::string("cannot fit extreme thresholds: ") + error.what());
    }
    run.model_overall = regression_metrics(actual_all, model_all);
    run.model_final_step = regression_metrics(actual_by_step[steps - 1], model_by_step[steps - 1]);
    run.persistence_final_step =
        regression_metrics(actual_by_step[steps - 1], persistence_by_step[steps - 1]);
    run.seasonal_final_step =
        metrics_or_nothing(seasonal_actual_by_step[steps - 1], seasonal_by_step[steps - 1]);
    run.slices =
        extreme_slice_mae(actual_by_step[steps - 1], model_by_step[steps - 1], run.thresholds);

    ordered_json doc;
    doc["variant"] = build.variant_id;
    doc["lookback"] = model_config.lookback;
    doc["horizon"] = horizon;
    doc["rows"] = {{"train", build.split.train_end},
                   {"val", build.split.val_end - build.split.train_end},
                   {"test", build.split.total - build.split.val_end}};
    doc["windows"] = {{"train", windows.train.size()},
                      {"val", windows.val.size()},
                      {"test", windows.test.size()}};
    doc["thresholds"] = {{"mean", run.thresholds.mean},
                         {"std", run.thresholds.std},
                         {"t1", run.thresholds.t1},
                         {"t2", run.thresholds.t2},
                         {"t3", run.thresholds.t3}};
    const auto fill_block = [&](const std::vector<std::vector<double>>& act,
                                const std::vector<std::vector<double>>& pred,
                                const std::vector<double>& act_all,
                                const std::vector<double>& pred_all) {
        ordered_json block;
        const auto overall = metrics_or_nothing(act_all, pred_all);
        block["overall"] = overall ? metrics_to_node(*overall) : ordered_json(nullptr);
        ordered_json per_step = ordered_json::array();
        for (std::size_t h = 0; h < steps; ++h) {
            const auto report = metrics_or_nothing(act[h], pred[h]);
            ordered_json node = report ? metrics_to_node(*report) : ordered_json(nullptr);
            if (!node.is_null()) node["step"] = h + 1;
            per_step.push_back(std::move(node));
        }
        block["per_step"] = std::move(per_step);
        return block;
    };
    doc["model"] = fill_block(actual_by_step, model_by_step, actual_all, model_all);
    doc["persistence"] =
        fill_block(actual_by_step, persistence_by_step, actual_all, persistence_all);
    doc["seasonal_naive"] = fill_block(seasonal_actual_by_step, seasonal_by_step,
                                       seasonal_actual_all, seasonal_all);
    ordered_json final_step;
    final_step["step"] = horizon;
    final_step["model"] = metrics_to_node(run.model_final_step);
    final_step["persistence"] = metrics_to_node(run.persistence_final_step);
    final_step["seasonal_naive"] =
        run.seasonal_final_step ? metrics_to_node(*run.seasonal_final_step) : ordered_json(nullptr);
    final_step["mae_improvement_vs_persistence"] =
        run.persistence_final_step.mae > 0.0
            ? ordered_json(1.0 - run.model_final_step.mae / run.persistence_final_step.mae)
            : ordered_json(nullptr);
    doc["final_step"] = std::move(final_step);
    doc["extreme_slices"] = ordered_json::parse(run.slices.to_json());

    run.metrics_json = recorder.write_output("metrics.json", doc.dump(2) + "\n");
    run.predictions_csv = recorder.write_output("predictions.csv", predictions);
    run.manifest_path = recorder.finish();
    return run;
}

DecomposeRunResult run_decompose(const std::string& build_dir, const std::string& checkpoint_path,
                                 std::optional<Date> day, const std::string& out_dir,
                                 const std::string& record_root) {
    ManifestRecorder recorder("decompose", 0, "{}", out_dir, record_root);
    const LoadedBuild build = load_build_dir(build_dir, recorder);
    const ModelCheckpoint checkpoint = load_checkpoint(checkpoint_path, build, recorder);
    const int lookback = checkpoint.model.config().lookback;
    const int horizon = checkpoint.model.config().horizon;

    std::unordered_map<Timestamp, std::size_t> row_of;
    row_of.reserve(build.dataset.rows());
    for (std::size_t r = 0; r < build.dataset.rows(); ++r) {
        row_of.emplace(build.dataset.hours[r], r);
    }
    const std::vector<std::size_t> anchors =
        window_anchors(build.dataset, 0, build.dataset.rows(), lookback, horizon);
    const std::unordered_set<std::size_t> anchor_set(anchors.begin(), anchors.end());

    // Every hour of the day needs a forecast anchored H hours earlier within
    // the same contiguous segment.
    const auto day_covered = [&](Date candidate) {
        const Timestamp start = day_start(candidate);
        for (int k = 0; k < 24; ++k) {
            const auto row = row_of.find(start + k * kSecondsPerHour);
            if (row == row_of.end()) return false;
            if (row->second < static_cast<std::size_t>(horizon)) return false;
            const std::size_t anchor = row->second - static_cast<std::size_t>(horizon);
            if (build.dataset.hours[anchor] + horizon * kSecondsPerHour !=
                build.dataset.hours[row->second]) {
                return false;
            }
            if (anchor_set.count(anchor) == 0) return false;
        }
        return true;
    };

    DecomposeRunResult run;
    bool auto_selected = false;
    if (day) {
        if (!day_covered(*day)) {
            throw BadDataError("day " + format_date(*day) +
                               " lacks full forecast coverage in the dataset");
        }
        run.day = *day;
    } else {
        auto_selected = true;
        bool found = false;
        for (std::size_t r = build.split.val_end; r < build.dataset.rows(); ++r) {
            const Timestamp hour = build.dataset.hours[r];
            if (hour != day_start(day_of(hour))) continue;
            if (day_covered(day_of(hour))) {
                run.day = day_of(hour);
                found = true;
                break;
            }
        }
        if (!found) {
            throw BadDataError("no fully forecastable day in the test partition");
        }
    }

    std::vector<SupervisedWindow> windows;
    windows.reserve(24);
    const Timestamp start = day_start(run.day);
    for (int k = 0; k < 24; ++k) {
        const std::size_t row = row_of.at(start + k * kSecondsPerHour);
        windows.push_back(make_window(build.dataset, row - static_cast<std::size_t>(horizon),
                                      lookback, horizon));
    }
    const std::vector<ForecastDecomposition> forecasts =
        predict_series(checkpoint.model, windows, build.scalers.target);
    const std::string csv = export_decomposition(
        forecasts, build.dataset.hours,
        std::span<const double>(build.dataset.target_raw.data(),
                                static_cast<std::size_t>(build.dataset.target_raw.size())),
        run.day);

    ordered_json config;
    config["day"] = format_date(run.day);
    config["auto_selected"] = auto_selected;
    recorder.set_config(config.dump());
    run.decomposition_csv = recorder.write_output("decomposition.csv", csv);
    run.manifest_path = recorder.finish();
    return run;
}

std::string RunConfig::to_json() const {
    ordered_json doc;
    doc["scenario"] =
        scenario ? ordered_json::parse(scenario->to_json()) : ordered_json(nullptr);
    if (scenario) {
        doc["sources"] = nullptr;
    } else {
        ordered_json paths;
        for (const auto& [label, path] : sources.named()) paths[label] = path;
        doc["sources"] = std::move(paths);
    }
    doc["variant"] = variant;
    doc["model"] = ordered_json::parse(model.to_json());
    doc["grid"] = grid ? ordered_json::parse(grid->to_json()) : ordered_json(nullptr);
    doc["train_fraction"] = train_fraction;
    doc["val_fraction"] = val_fraction;
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

RunConfig RunConfig::from_json(std::string_view text) {
    try {
        const ordered_json doc = ordered_json::parse(text);
        RunConfig config;
        if (doc.contains("scenario") && !doc.at("scenario").is_null()) {
            config.scenario = ScenarioConfig::from_json(doc.at("scenario").dump());
        }
        if (doc.contains("sources") && !doc.at("sources").is_null()) {
            const ordered_json& paths = doc.at("sources");
            config.sources.ed_tracking = paths.value("ed_tracking", "");
            config.sources.inpatient = paths.value("inpatient", "");
            config.sources.weather = paths.value("weather", "");
            config.sources.holidays = paths.value("holidays", "");
            config.sources.games1 = paths.value("games1", "");
            config.sources.games2 = paths.value("games2", "");
        }
        config.variant = doc.value("variant", std::string("DS3"));
        if (doc.contains("model") && !doc.at("model").is_null()) {
            config.model = NBeatsXConfig::from_json(doc.at("model").dump());
        }
        if (doc.contains("grid") && !doc.at("grid").is_null()) {
            config.grid = GridSpec::from_json(doc.at("grid").dump());
        }
        config.train_fraction = doc.value("train_fraction", 0.70);
        config.val_fraction = doc.value("val_fraction", 0.15);
        config.seed = doc.value("seed", std::uint64_t{0});
        return config;
    } catch (const nlohmann::json::exception& error) {
        throw std::invalid_argument(std::string("bad run config JSON: ") + error.what());
    }
}

PipelineRunResult run_pipeline(const RunConfig& config, const std::string& out_dir) {
    if (!config.scenario) {
        for (const auto& [label, path] : config.sources.named()) {
            if (path.empty()) {
                throw std::invalid_argument(
                    "pipeline needs either a scenario or every source file; missing " + label);
            }
        }
    }
    ManifestRecorder recorder("pipeline", config.seed, config.to_json(), out_dir, out_dir);

    PipelineRunResult result;
    SourcePaths sources = config.sources;
    if (config.scenario) {
        ScenarioConfig scenario = *config.scenario;
        scenario.seed = config.seed;
        result.synth = run_synth(scenario, join_path(out_dir, "synth"), out_dir);
        sources = result.synth->sources;
    } else {
        for (const auto& [label, path] : sources.named()) recorder.read_input(path);
    }

    result.featurize = run_featurize(sources, join_path(out_dir, "features"), out_dir);
    const std::string build_dir = join_path(out_dir, "build");
    result.build = run_build(result.featurize.hourly_csv, config.variant, config.train_fraction,
                             config.val_fraction, build_dir, out_dir);

    NBeatsXConfig model_config = config.model;
    model_config.seed = config.seed;
    if (config.grid) {
        result.gridsearch = run_gridsearch(build_dir, *config.grid, config.seed,
                                           join_path(out_dir, "gridsearch"), out_dir);
        model_config = result.gridsearch->search.ranked.front().config;
    }
    result.training = run_train(build_dir, model_config, join_path(out_dir, "train"), out_dir);
    result.evaluation = run_evaluate(build_dir, result.training.checkpoint_json,
                                     join_path(out_dir, "eval"), out_dir);
    result.decomposition = run_decompose(build_dir, result.training.checkpoint_json, std::nullopt,
                                         join_path(out_dir, "decompose"), out_dir);

    const auto record_stage = [&](const std::string& manifest_path) {
        recorder.record_output(manifest_path, read_file(manifest_path));
    };
    if (result.synth) record_stage(result.synth->manifest_path);
    record_stage(result.featurize.manifest_path);
    record_stage(result.build.manifest_path);
    if (result.gridsearch) record_stage(result.gridsearch->manifest_path);
    record_stage(result.training.manifest_path);
    record_stage(result.evaluation.manifest_path);
    record_stage(result.decomposition.manifest_path);
    result.manifest_path = recorder.finish();
    return result;
}

}  // namespace edflow
