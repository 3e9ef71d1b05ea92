"""Hourly ED patient-flow forecasting toolkit.

Thin wrappers over the C++ core: every operation reads its inputs from disk,
writes its artifacts plus a manifest.json under ``out_dir``, and returns a
plain dict of the headline numbers and artifact paths.  Configuration crosses
the boundary as JSON strings; ``default_*_json`` helpers supply complete
documents to edit.
"""

try:
    from ._edflow import (
        BadDataError,
        DivergenceError,
        build,
        builtin_variants,
        decompose,
        default_grid_json,
        default_model_json,
        default_run_config_json,
        default_scenario_json,
        evaluate,
        featurize,
        gridsearch,
        pipeline,
        synth,
        train,
    )
except ImportError:  # compiled module on sys.path directly (build-tree layout)
    from _edflow import (
        BadDataError,
        DivergenceError,
        build,
        builtin_variants,
        decompose,
        default_grid_json,
        default_model_json,
        default_run_config_json,
        default_scenario_json,
        evaluate,
        featurize,
        gridsearch,
        pipeline,
        synth,
        train,
    )

__all__ = [
    "BadDataError",
    "DivergenceError",
    "build",
    "builtin_variants",
    "decompose",
    "default_grid_json",
    "default_model_json",
    "default_run_config_json",
    "default_scenario_json",
    "evaluate",
    "featurize",
    "gridsearch",
    "pipeline",
    "synth",
    "train",
]
