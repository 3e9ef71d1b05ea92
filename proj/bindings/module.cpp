#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edflow/dataset.hpp"
#include "edflow/eval.hpp"
#include "edflow/nbeatsx.hpp"
#include "edflow/pipeline.hpp"
#include "edflow/synth.hpp"
#include "edflow/time.hpp"
#include "edflow/tuning.hpp"

namespace py = pybind11;
using namespace edflow;

namespace {

py::dict metrics_dict(const MetricsReport& metrics) {
    py::dict out;
    out["mae"] = metrics.mae;
    out["mse"] = metrics.mse;
    out["rmse"] = metrics.rmse;
    out["r2"] = metrics.r2 ? py::cast(*metrics.r2) : py::none();
    out["n"] = metrics.n;
    return out;
}

py::dict sources_dict(const SourcePaths& sources) {
    py::dict out;
    for (const auto& [label, path] : sources.named()) out[label.c_str()] = path;
    return out;
}

SourcePaths sources_from_dict(const py::dict& mapping) {
    SourcePaths sources;
    auto take = [&](const char* key, std::string& member) {
        if (mapping.contains(key)) member = mapping[key].cast<std::string>();
    };
    take("ed_tracking", sources.ed_tracking);
    take("inpatient", sources.inpatient);
    take("weather", sources.weather);
    take("holidays", sources.holidays);
    take("games1", sources.games1);
    take("games2", sources.games2);
    return sources;
}

py::dict synth_dict(const SynthRunResult& result) {
    py::dict out;
    out["hours"] = result.hours;
    out["visits"] = result.visits;
    out["stays"] = result.stays;
    out["sources"] = sources_dict(result.sources);
    out["ground_truth_csv"] = result.ground_truth_csv;
    out["injections_json"] = result.injections_json;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict featurize_dict(const FeaturizeRunResult& result) {
    py::dict cleaning;
    cleaning["total_visits"] = result.cleaning.total_visits;
    cleaning["waiting_over_limit"] = result.cleaning.waiting_over_limit;
    cleaning["boarding_over_limit"] = result.cleaning.boarding_over_limit;
    cleaning["treatment_over_limit"] = result.cleaning.treatment_over_limit;
    cleaning["excluded"] = result.cleaning.excluded;
    cleaning["esi_imputed"] = result.cleaning.esi_imputed;
    py::dict out;
    out["cleaning"] = cleaning;
    out["rejected_rows"] = result.rejected_rows;
    out["hourly_rows"] = result.hourly_rows;
    out["pandemic_rows_excluded"] = result.pandemic_rows_excluded;
    out["hourly_csv"] = result.hourly_csv;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict build_dict(const BuildRunResult& result) {
    py::dict out;
    out["variant"] = result.variant_id;
    out["columns"] = result.expanded_columns;
    out["train_rows"] = result.split.train_end;
    out["val_rows"] = result.split.val_end - result.split.train_end;
    out["test_rows"] = result.split.total - result.split.val_end;
    out["dataset_csv"] = result.dataset_csv;
    out["split_json"] = result.split_json;
    out["scalers_json"] = result.scalers_json;
    out["variant_json"] = result.variant_json;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict train_dict(const TrainRunResult& result) {
    py::list history;
    for (const EpochStats& stats : result.history) {
        py::dict epoch;
        epoch["epoch"] = stats.epoch;
        epoch["train_loss"] = stats.train_loss;
        epoch["val_loss"] = stats.val_loss ? py::cast(*stats.val_loss) : py::none();
        history.append(epoch);
    }
    py::dict out;
    out["epochs"] = result.history.size();
    out["early_stopped"] = result.early_stopped;
    out["history"] = history;
    out["checkpoint_json"] = result.checkpoint_json;
    out["history_csv"] = result.history_csv;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict gridsearch_dict(const GridSearchRunResult& result) {
    py::list trials;
    for (const TrialResult& trial : result.search.ranked) {
        py::dict row;
        row["trial_index"] = trial.trial_index;
        row["aborted"] = trial.aborted;
        row["abort_reason"] = trial.abort_reason;
        row["seed"] = trial.seed();
        row["config_json"] = trial.config.to_json();
        row["val"] = trial.val_metrics ? py::object(metrics_dict(*trial.val_metrics))
                                       : py::object(py::none());
        trials.append(row);
    }
    py::dict out;
    out["trials"] = trials;
    out["results_csv"] = result.results_csv;
    out["best_config_json"] = result.best_config_json;
    out["best_history_csv"] = result.best_history_csv;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict evaluate_dict(const EvaluateRunResult& result) {
    py::dict thresholds;
    thresholds["mean"] = result.thresholds.mean;
    thresholds["std"] = result.thresholds.std;
    thresholds["t1"] = result.thresholds.t1;
    thresholds["t2"] = result.thresholds.t2;
    thresholds["t3"] = result.thresholds.t3;
    py::list slices;
    for (const SliceStats& slice : result.slices.cumulative) {
        py::dict row;
        row["label"] = slice.label;
        row["count"] = slice.count;
        row["mae"] = slice.mae ? py::cast(*slice.mae) : py::none();
        slices.append(row);
    }
    py::dict out;
    out["test_windows"] = result.test_windows;
    out["thresholds"] = thresholds;
    out["model_overall"] = metrics_dict(result.model_overall);
    out["model_final_step"] = metrics_dict(result.model_final_step);
    out["persistence_final_step"] = metrics_dict(result.persistence_final_step);
    out["seasonal_final_step"] = result.seasonal_final_step
                                     ? py::object(metrics_dict(*result.seasonal_final_step))
                                     : py::object(py::none());
    out["extreme_slices"] = slices;
    out["metrics_json"] = result.metrics_json;
    out["predictions_csv"] = result.predictions_csv;
    out["manifest"] = result.manifest_path;
    return out;
}

py::dict decompose_dict(const DecomposeRunResult& result) {
    py::dict out;
    out["day"] = format_date(result.day);
    out["decomposition_csv"] = result.decomposition_csv;
    out["manifest"] = result.manifest_path;
    return out;
}

}  // namespace

PYBIND11_MODULE(_edflow, m) {
    m.doc() = "hourly ED patient-flow forecasting toolkit";

    py::register_exception<BadDataError>(m, "BadDataError", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    m.def("builtin_variants", [] { return FeatureManifest::builtin_ids(); },
          "identifiers of the built-in feature variants");
    m.def("default_scenario_json", [] { return ScenarioConfig{}.to_json(); },
          "stock synthetic scenario as a JSON string");
    m.def(
        "default_model_json",
        [](int lookback, int horizon) {
            return NBeatsXConfig::defaults(lookback, horizon).to_json();
        },
        py::arg("lookback") = 12, py::arg("horizon") = 6,
        "stock model configuration as a JSON string");
    m.def("default_grid_json", [] { return GridSpec{}.to_json(); },
          "stock hyperparameter grid as a JSON string");

    m.def(
        "synth",
        [](const std::string& scenario_json, const std::string& out_dir,
           const std::string& record_root) {
            return synth_dict(
                run_synth(ScenarioConfig::from_json(scenario_json), out_dir, record_root));
        },
        py::arg("scenario_json"), py::arg("out_dir"), py::arg("record_root") = "",
        "generate a synthetic hospital scenario");

    m.def(
        "featurize",
        [](const py::dict& sources, const std::string& out_dir, const std::string& record_root) {
            return featurize_dict(run_featurize(sources_from_dict(sources), out_dir, record_root));
        },
        py::arg("sources"), py::arg("out_dir"), py::arg("record_root") = "",
        "parse, clean, and assemble the hourly feature table");

    m.def(
        "build",
        [](const std::string& hourly_csv, const std::string& out_dir, const std::string& variant,
           double train_fraction, double val_fraction, const std::string& record_root) {
            return build_dict(run_build(hourly_csv, variant, train_fraction, val_fraction,
                                        out_dir, record_root));
        },
        py::arg("hourly_csv"), py::arg("out_dir"), py::arg("variant") = "DS3",
        py::arg("train_fraction") = 0.70, py::arg("val_fraction") = 0.15,
        py::arg("record_root") = "", "expand a feature variant into a standardized model dataset");

    m.def(
        "train",
        [](const std::string& build_dir, const std::string& out_dir,
           const std::string& model_json, const std::string& record_root) {
            const NBeatsXConfig config = model_json.empty()
                                             ? NBeatsXConfig::defaults()
                                             : NBeatsXConfig::from_json(model_json);
            return train_dict(run_train(build_dir, config, out_dir, record_root));
        },
        py::arg("build_dir"), py::arg("out_dir"), py::arg("model_json") = "",
        py::arg("record_root") = "", "fit the forecaster on a build directory");

    m.def(
        "gridsearch",
        [](const std::string& build_dir, const std::string& out_dir, const std::string& grid_json,
           std::uint64_t base_seed, const std::string& record_root) {
            const GridSpec grid =
                grid_json.empty() ? GridSpec{} : GridSpec::from_json(grid_json);
            return gridsearch_dict(run_gridsearch(build_dir, grid, base_seed, out_dir,
                                                  record_root));
        },
        py::arg("build_dir"), py::arg("out_dir"), py::arg("grid_json") = "",
        py::arg("base_seed") = 0, py::arg("record_root") = "",
        "train every cell of a hyperparameter grid");

    m.def(
        "evaluate",
        [](const std::string& build_dir, const std::string& checkpoint,
           const std::string& out_dir, const std::string& record_root) {
            return evaluate_dict(run_evaluate(build_dir, checkpoint, out_dir, record_root));
        },
        py::arg("build_dir"), py::arg("checkpoint"), py::arg("out_dir"),
        py::arg("record_root") = "", "score a checkpoint on the test partition");

    m.def(
        "decompose",
        [](const std::string& build_dir, const std::string& checkpoint,
           const std::string& out_dir, const std::string& day, const std::string& record_root) {
            std::optional<Date> date;
            if (!day.empty()) {
                date = parse_date(day);
                if (!date) throw std::invalid_argument("bad day, expected YYYY-MM-DD: " + day);
            }
            return decompose_dict(
                run_decompose(build_dir, checkpoint, date, out_dir, record_root));
        },
        py::arg("build_dir"), py::arg("checkpoint"), py::arg("out_dir"), py::arg("day") = "",
        py::arg("record_root") = "", "export one day of component forecasts");

    m.def(
        "pipeline",
        [](const std::string& config_json, const std::string& out_dir) {
            const PipelineRunResult result =
                run_pipeline(RunConfig::from_json(config_json), out_dir);
            py::dict out;
            out["synth"] = result.synth ? py::object(synth_dict(*result.synth))
                                          : py::object(py::none());
            out["featurize"] = featurize_dict(result.featurize);
            out["build"] = build_dict(result.build);
            out["gridsearch"] = result.gridsearch
                                    ? py::object(gridsearch_dict(*result.gridsearch))
                                    : py::object(py::none());
            out["train"] = train_dict(result.training);
            out["evaluate"] = evaluate_dict(result.evaluation);
            out["decompose"] = decompose_dict(result.decomposition);
            out["manifest"] = result.manifest_path;
            return out;
        },
        py::arg("config_json"), py::arg("out_dir"), "run every stage under one output root");

    m.def(
        "default_run_config_json",
        [] {
            RunConfig config;
            config.scenario = ScenarioConfig{};
            return config.to_json();
        },
        "stock full-run configuration (synthetic scenario, DS3, default model) as a JSON string");
}
