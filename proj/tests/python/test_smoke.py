"""End-to-end smoke of the python module on a small synthetic scenario.

Exits 77 (the ctest skip code) when the compiled module is unavailable; the
C++ suite carries the numeric coverage, this only proves the binding surface.
"""

import json
import pathlib
import sys
import tempfile


def tiny_scenario(module):
    scenario = json.loads(module.default_scenario_json())
    scenario.update(
        start_date="2023-02-01",
        days=40,
        base_rate=3.0,
        inpatient_rate=1.0,
        mean_inpatient_stay_hours=40.0,
        mean_boarding_minutes=240.0,
        seed=7,
    )
    return json.dumps(scenario)


def tiny_model(module):
    model = json.loads(module.default_model_json(lookback=8, horizon=4))
    model.update(max_epochs=2, batch_size=256, dropout_p=0.0, seed=5)
    model["stacks"] = [
        {
            "kind": "trend",
            "blocks": 1,
            "layers_per_block": 1,
            "hidden_widths": [8],
            "degree": 1,
            "harmonics": 1,
        },
        {
            "kind": "exogenous",
            "blocks": 1,
            "layers_per_block": 1,
            "hidden_widths": [8],
            "degree": 1,
            "harmonics": 1,
        },
    ]
    return json.dumps(model)


def run(module, root):
    assert "DS3" in module.builtin_variants()

    synth = module.synth(tiny_scenario(module), str(root / "synth"), record_root=str(root))
    assert synth["hours"] == 40 * 24
    assert synth["visits"] > 0 and synth["stays"] > 0
    assert pathlib.Path(synth["manifest"]).is_file()

    features = module.featurize(synth["sources"], str(root / "feat"), record_root=str(root))
    assert features["hourly_rows"] == synth["hours"]
    assert features["rejected_rows"] == 0

    build = module.build(features["hourly_csv"], str(root / "build"), variant="DS1")
    assert build["variant"] == "DS1"
    assert build["columns"] > 0
    assert build["train_rows"] + build["val_rows"] + build["test_rows"] == synth["hours"]

    training = module.train(str(root / "build"), str(root / "train"), tiny_model(module))
    assert training["epochs"] == 2
    assert pathlib.Path(training["checkpoint_json"]).is_file()

    evaluation = module.evaluate(
        str(root / "build"), training["checkpoint_json"], str(root / "eval")
    )
    assert evaluation["test_windows"] > 0
    assert evaluation["model_overall"]["n"] == evaluation["test_windows"] * 4
    assert evaluation["thresholds"]["t1"] < evaluation["thresholds"]["t3"]
    assert evaluation["persistence_final_step"]["mae"] >= 0.0

    decomposition = module.decompose(
        str(root / "build"), training["checkpoint_json"], str(root / "decomp")
    )
    table = pathlib.Path(decomposition["decomposition_csv"]).read_text().strip().splitlines()
    assert len(table) == 1 + 24

    try:
        module.build(features["hourly_csv"], str(root / "bad"), variant="DS1",
                     train_fraction=0.9, val_fraction=0.2)
        raise AssertionError("overlapping fractions should raise ValueError")
    except ValueError:
        pass

    try:
        module.build(features["hourly_csv"], str(root / "bad"), variant="DS9")
        raise AssertionError("unknown variant should raise BadDataError")
    except module.BadDataError:
        pass

    config = json.loads(module.default_run_config_json())
    config["scenario"] = json.loads(tiny_scenario(module))
    config["variant"] = "DS1"
    config["model"] = json.loads(tiny_model(module))
    config["seed"] = 11
    full = module.pipeline(json.dumps(config), str(root / "pipe"))
    assert full["synth"] is not None
    assert full["evaluate"]["test_windows"] > 0
    assert pathlib.Path(full["manifest"]).is_file()


def main():
    if len(sys.argv) > 1 and sys.argv[1]:
        sys.path.insert(0, sys.argv[1])
    sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[2] / "python"))
    try:
        import edflow
    except ImportError as error:
        print(f"skipping python smoke test: {error}")
        return 77
    with tempfile.TemporaryDirectory(prefix="edflow_smoke_") as scratch:
        run(edflow, pathlib.Path(scratch))
    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
