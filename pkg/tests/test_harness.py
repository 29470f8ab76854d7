"""Experiment harness: config round-trips, determinism, averaging, and
plot-data emission."""

import csv
import io
import json
import math

import pytest

from cbandits import ExperimentConfig, run_experiment, write_bundle
from cbandits.harness import default_checkpoints, plot_data_csv, plot_data_rows, raw_csv_text

from conftest import INSTANCE_A_PATH, INSTANCE_B_PATH


def small_config(**overrides):
    base = dict(
        instance_path=str(INSTANCE_B_PATH),
        horizon=1200,
        replications=3,
        base_seed=17,
        checkpoints=(100, 400, 1200),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_doc_round_trip(tmp_path):
    config = small_config()
    doc = config.to_doc()
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    again = ExperimentConfig.load(path)
    assert again == config
    assert again.hash() == config.hash()


def test_config_hash_changes_with_content():
    assert small_config().hash() != small_config(base_seed=18).hash()


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(replications=0)
    with pytest.raises(ValueError):
        small_config(horizon=0)


def test_default_checkpoints():
    cps = default_checkpoints(4, 10 ** 5)
    assert cps[0] == 4
    assert cps[-1] == 10 ** 5
    assert list(cps) == sorted(set(cps))
    assert len(cps) <= 20
    assert default_checkpoints(50, 50) == (50,)


def test_run_experiment_shape_and_averages():
    config = small_config()
    bundle = run_experiment(config)
    assert len(bundle.raw_rows) == 3 * 3  # replications x checkpoints
    assert len(bundle.averages) == 3
    # averages are recomputable from the raw rows
    for ci, cp in enumerate(bundle.checkpoints):
        group = bundle.raw_rows[ci::3]
        assert len(group) == 3
        assert bundle.averages[ci]["regret"] == pytest.approx(
            sum(g["regret"] for g in group) / 3, abs=1e-12
        )


def test_raw_csv_round_trip_averages():
    bundle = run_experiment(small_config())
    text = raw_csv_text(bundle)
    reader = csv.DictReader(io.StringIO(text))
    rows = list(reader)
    assert len(rows) == len(bundle.raw_rows)
    for ci, avg in enumerate(bundle.averages):
        group = [r for r in rows if int(r["n"]) == round(avg["n"])]
        # identical seeds land on the same boundary here; regroup by position
        group = rows[ci::3] if len(group) != 3 else group
        recomputed = sum(float(r["regret"]) for r in group) / 3
        assert recomputed == pytest.approx(avg["regret"], abs=1e-12)


def test_determinism_byte_identical():
    a = raw_csv_text(run_experiment(small_config()))
    b = raw_csv_text(run_experiment(small_config()))
    assert a == b
    assert "\r" not in a  # \n line endings


def test_distinct_seeds_differ():
    a = raw_csv_text(run_experiment(small_config()))
    b = raw_csv_text(run_experiment(small_config(base_seed=99)))
    assert a != b


def test_write_bundle(tmp_path):
    config = small_config(output_dir=str(tmp_path / "out"))
    bundle = write_bundle(run_experiment(config))
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["lower_bound"]["M"] == 4.0
    assert summary["config_hash"] == config.hash()
    raw = (tmp_path / "out" / "raw.csv").read_text()
    assert raw.startswith("rep,n,regret,T_1,T_2,T_3,slack_1,blocks_completed\n")


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CBANDITS_OUTPUT_DIR", str(tmp_path / "env_out"))
    bundle = write_bundle(run_experiment(small_config(output_dir=str(tmp_path / "ignored"))))
    assert (tmp_path / "env_out" / "raw.csv").exists()
    assert not (tmp_path / "ignored").exists()
    assert bundle.raw_csv_path.startswith(str(tmp_path / "env_out"))


def test_plot_data():
    bundle = run_experiment(small_config())
    doc = bundle.summary_doc()
    rows = plot_data_rows(doc)
    assert len(rows) == len(bundle.checkpoints)
    for row, avg in zip(rows, bundle.averages):
        assert row["M_log_n"] == pytest.approx(4.0 * math.log(avg["n"]))
        assert row["regret_per_log_n"] == pytest.approx(avg["regret"] / math.log(avg["n"]))
    text = plot_data_csv(doc)
    assert text.splitlines()[0] == "n,avg_regret,M_log_n,regret_per_log_n"
    assert len(text.splitlines()) == 1 + len(rows)


def test_plot_data_zero_reference():
    config = small_config(instance_path=str(INSTANCE_A_PATH), checkpoints=(100, 1200))
    bundle = run_experiment(config)
    rows = plot_data_rows(bundle.summary_doc())
    assert all(r["M_log_n"] == 0.0 for r in rows)
