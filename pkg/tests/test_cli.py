import csv
import json
from pathlib import Path

import pytest

from src.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SUITE, main
from src.config.presets import ACCEPTANCE_SIZES


def _write_config(tmp_path: Path, payload: dict, name: str = "exp.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _snapshot(directory: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.fixture
def small_run(tmp_path):
    return _write_config(tmp_path, {"run": {"T": 20.0, "K": 5, "N": 4}})


def test_simulate_writes_artifacts(tmp_path, small_run):
    out = tmp_path / "out"
    code = main(["simulate", "--preset", "const-biased", "--config", small_run, "--out", str(out), "--seed", "7"])
    assert code == EXIT_OK
    files = _snapshot(out / "simulate")
    assert {"replica_0000.env.txt", "replica_0000.arrows.txt", "replica_0003.path.txt", "simulate.jsonl"} <= set(files)
    records = [json.loads(line) for line in files["simulate.jsonl"].decode().splitlines()]
    assert [r["kind"] for r in records] == ["replica"] * 4 + ["run_metrics"]
    assert all(r["seed"] == 7 and len(r["config_hash"]) == 16 for r in records)
    assert records[-1]["completed"] == 4


def test_simulate_rerun_is_byte_identical_across_workers(tmp_path, small_run):
    out = tmp_path / "out"
    args = ["simulate", "--preset", "chain-2state", "--config", small_run, "--out", str(out), "--seed", "11"]
    assert main(args + ["--workers", "1"]) == EXIT_OK
    first = _snapshot(out / "simulate")
    assert main(args + ["--workers", "2"]) == EXIT_OK
    assert _snapshot(out / "simulate") == first


def test_classify_reports_verdict(tmp_path, capsys):
    config = _write_config(tmp_path, {"run": {"T": 100.0, "K": 15, "N": 200}})
    out = tmp_path / "out"
    assert main(["classify", "--preset", "const-biased", "--config", config, "--out", str(out)]) == EXIT_OK
    assert "verdict=transient_right" in capsys.readouterr().out
    records = [json.loads(line) for line in (out / "classify" / "classify.jsonl").read_text().splitlines()]
    assert [r["kind"] for r in records] == ["calibration", "trichotomy"]
    assert records[0]["passed"] and records[0]["expected"] == "transient_right"
    assert records[1]["verdict"] == "transient_right"
    report = (out / "classify" / "classify_report.md").read_text()
    assert "# Classification report" in report
    assert "**transient_right**" in report
    with open(out / "classify" / "classify.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:4] == ["config_hash", "seed", "model", "class"]
    assert [r[3] for r in rows[1:]] == ["p_right", "p_left", "p_rec", "p_unclassified"]


def test_tiny_classification_is_inconclusive_but_succeeds(tmp_path, capsys):
    config = _write_config(tmp_path, {"run": {"T": 100.0, "K": 15, "N": 10}})
    code = main(["classify", "--preset", "const-biased", "--config", config, "--out", str(tmp_path / "out")])
    assert code == EXIT_OK
    assert "verdict=inconclusive" in capsys.readouterr().out


def test_sweep_writes_one_file_per_point(tmp_path):
    config = _write_config(tmp_path, {"run": {"T": 100.0, "K": 15, "N": 50},
                                      "sweep": {"grid": [{"p": 0.5, "q": 1.5}, {"p": 2.5, "q": 1.5}]}})
    out = tmp_path / "out"
    assert main(["sweep", "--preset", "const-biased", "--config", config, "--out", str(out)]) == EXIT_OK
    names = set(_snapshot(out / "sweep"))
    assert {"point_000.json", "point_001.json", "sweep.jsonl", "sweep.csv"} <= names
    point = json.loads((out / "sweep" / "point_001.json").read_text())
    assert point["overrides"] == {"p": 2.5, "q": 1.5}
    assert point["parameters"]["q"] == 1.5
    report = (out / "sweep" / "sweep_report.md").read_text()
    assert "## Zero-one band" in report
    assert "Every point has p_right and p_left inside the zero-one band." in report
    assert report.count("| constant(") == 2


def test_sweep_without_grid_is_a_config_error(tmp_path, capsys):
    code = main(["sweep", "--preset", "const-symmetric", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "sweep" in capsys.readouterr().err


def test_invalid_config_exits_with_one(tmp_path, capsys):
    config = _write_config(tmp_path, {"model": {"kind": "ssep", "alpha": 1.0, "beta": 2.0, "rho": 0.5,
                                                "half_width": 10}})
    assert main(["classify", "--config", config]) == EXIT_CONFIG
    assert "model.ssep" in capsys.readouterr().err


def test_missing_config_file_exits_with_one(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_bad_worker_count_exits_with_one(tmp_path):
    assert main(["simulate", "--preset", "const-biased", "--workers", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unwritable_output_exits_with_three(tmp_path, small_run):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    code = main(["simulate", "--preset", "const-biased", "--config", small_run, "--out", str(blocker / "sub")])
    assert code == EXIT_IO


def test_all_abnormal_replicas_exit_with_two(tmp_path):
    config = _write_config(tmp_path, {
        "model": {"kind": "ssep", "alpha": 2.0, "beta": 1.0, "rho": 0.5, "half_width": 10, "margin": 9},
        "run": {"T": 50.0, "N": 3},
    })
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_SUITE


def test_injected_fault_fails_validate(tmp_path, capsys):
    config = _write_config(tmp_path, {"validate": {"coupling_replicas": 4, "ssep_half_width": 20}})
    out = tmp_path / "out"
    code = main(["validate", "--preset", "const-biased", "--config", config, "--out", str(out),
                 "--suite", "coalescence", "--inject-fault"])
    assert code == EXIT_SUITE
    assert "coalescence" in capsys.readouterr().err
    report = (out / "validate" / "validate_report.md").read_text()
    assert "coalescence" in report
    assert "Walks that meet stay together" in report
    record = json.loads((out / "validate" / "validate.jsonl").read_text().splitlines()[0])
    assert record["suite"] == "coalescence" and record["status"] == "failed"


def test_clean_validate_of_one_suite(tmp_path):
    config = _write_config(tmp_path, {"validate": {"coupling_replicas": 4, "ssep_half_width": 20}})
    code = main(["validate", "--preset", "const-biased", "--config", config, "--out", str(tmp_path / "out"),
                 "--suite", "ordering", "--suite", "coalescence"])
    assert code == EXIT_OK


def test_short_horizon_is_refused_by_the_pilot(tmp_path, capsys):
    config = _write_config(tmp_path, {"run": {"T": 400.0, "K": 10, "N": 20}})
    out = tmp_path / "out"
    code = main(["classify", "--preset", "const-symmetric", "--config", config, "--out", str(out)])
    assert code == EXIT_CONFIG
    assert "run.T" in capsys.readouterr().err
    record = json.loads((out / "classify" / "classify.jsonl").read_text().splitlines()[0])
    assert record["kind"] == "calibration" and not record["passed"]


def test_pilot_rescale_lengthens_the_horizon(tmp_path):
    config = _write_config(tmp_path, {"model": {"kind": "constant", "p": 2.0, "q": 1.0},
                                      "run": {"T": 10.0, "K": 15, "N": 20}})
    out = tmp_path / "out"
    code = main(["classify", "--config", config, "--pilot", "rescale", "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / "classify" / "classify.jsonl").read_text().splitlines()
    calibration, estimate = [json.loads(line) for line in lines]
    assert calibration["passed"] and calibration["horizon"] in (40.0, 80.0)
    assert estimate["horizon"] == calibration["horizon"]
    assert "T raised from 10.0" in (out / "classify" / "classify_report.md").read_text()


def test_acceptance_flag_uses_acceptance_sizes(tmp_path):
    out = tmp_path / "out"
    code = main(["validate", "--preset", "const-biased", "--acceptance", "--suite", "poisson_counts",
                 "--out", str(out)])
    assert code == EXIT_OK
    record = json.loads((out / "validate" / "validate.jsonl").read_text().splitlines()[0])
    assert record["statistics"]["seeds"] == ACCEPTANCE_SIZES["poisson_seeds"]


def test_unknown_subcommand_is_rejected_by_parser():
    with pytest.raises(SystemExit):
        main(["explode"])
