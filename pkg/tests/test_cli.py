import csv
import json

import pytest

from v2xemu.cli import main
from v2xemu.pipeline import METRICS_HEADER, SWEEP_HEADER


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("scen")
    rc = main(
        [
            "gen-scenario",
            "--out",
            str(d),
            "--blocks",
            "3",
            "--vehicles",
            "12",
            "--duration",
            "2",
            "--seed",
            "3",
        ]
    )
    assert rc == 0
    return d


def test_gen_scenario_outputs(scenario_dir):
    buildings = json.loads((scenario_dir / "buildings.json").read_text())
    assert len(buildings) == 9
    lines = (scenario_dir / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 20
    first = json.loads(lines[0])
    assert first["ego"]["id"] == "ego"
    assert len(first["vehicles"]) == 11


def test_gen_scenario_rectangular_grid(tmp_path):
    rc = main(["gen-scenario", "--out", str(tmp_path), "--blocks", "4x2", "--vehicles", "2", "--duration", "0.2"])
    assert rc == 0
    assert len(json.loads((tmp_path / "buildings.json").read_text())) == 8


def test_validate_ok(scenario_dir, capsys):
    rc = main(
        ["validate", "--trace", str(scenario_dir / "trace.jsonl"), "--buildings", str(scenario_dir / "buildings.json")]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "OK" in out


def test_validate_bad_polygon(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{"id": "b0", "vertices": [[0, 0], [1, 0]]}]))
    rc = main(["validate", "--buildings", str(path)])
    assert rc == 1
    assert "b0" in capsys.readouterr().err


def test_validate_non_monotone_trace(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    ego = {"id": "e", "x": 0, "y": 0, "speed": 1, "heading": 0}
    path.write_text(
        json.dumps({"t": 1.0, "ego": ego, "vehicles": []})
        + "\n"
        + json.dumps({"t": 0.5, "ego": ego, "vehicles": []})
        + "\n"
    )
    rc = main(["validate", "--trace", str(path)])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_validate_needs_an_input(capsys):
    assert main(["validate"]) == 2


def test_run_produces_outputs(scenario_dir, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        [
            "run",
            "--trace",
            str(scenario_dir / "trace.jsonl"),
            "--buildings",
            str(scenario_dir / "buildings.json"),
            "--out",
            str(out),
            "--seed",
            "3",
            "--set",
            "r_b=300",
            "--set",
            "ranges.r_v=250",
        ]
    )
    assert rc == 0
    assert "steps" in capsys.readouterr().out
    with open(out / "metrics.csv", newline="") as f:
        header = next(csv.reader(f))
    assert ",".join(header) == METRICS_HEADER
    echo = json.loads((out / "effective_config.json").read_text())
    assert echo["r_b"] == 300 and echo["r_v"] == 250 and echo["seed"] == 3


def test_run_diag_token_resolves_from_buildings(scenario_dir, tmp_path):
    out = tmp_path / "out"
    rc = main(
        [
            "run",
            "--trace",
            str(scenario_dir / "trace.jsonl"),
            "--buildings",
            str(scenario_dir / "buildings.json"),
            "--out",
            str(out),
            "--set",
            "r_b=diag",
        ]
    )
    assert rc == 0
    echo = json.loads((out / "effective_config.json").read_text())
    assert 300 < echo["r_b"] < 500  # 3-block city: bbox diagonal ~ 424 m


def test_run_culling_changes_classification(scenario_dir, tmp_path):
    def nlosb_total(out_dir):
        with open(out_dir / "metrics.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        return sum(int(r["nlosb"]) for r in rows)

    base, culled = tmp_path / "base", tmp_path / "culled"
    common = [
        "--trace",
        str(scenario_dir / "trace.jsonl"),
        "--buildings",
        str(scenario_dir / "buildings.json"),
        "--seed",
        "3",
    ]
    assert main(["run", *common, "--out", str(base)]) == 0
    assert main(["run", *common, "--out", str(culled), "--set", "r_b=1"]) == 0
    assert nlosb_total(culled) < nlosb_total(base)


def test_run_missing_trace_is_usage_error(scenario_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--buildings", str(scenario_dir / "buildings.json"), "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_run_unknown_config_key_fails(scenario_dir, tmp_path, capsys):
    rc = main(
        [
            "run",
            "--trace",
            str(scenario_dir / "trace.jsonl"),
            "--buildings",
            str(scenario_dir / "buildings.json"),
            "--out",
            str(tmp_path / "x"),
            "--set",
            "not_a_key=1",
        ]
    )
    assert rc == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_run_missing_input_file(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--trace",
            str(tmp_path / "absent.jsonl"),
            "--buildings",
            str(tmp_path / "absent.json"),
            "--out",
            str(tmp_path / "x"),
        ]
    )
    assert rc == 1


def test_sweep_writes_csv(scenario_dir, tmp_path):
    out = tmp_path / "sw"
    rc = main(
        [
            "sweep",
            "--trace",
            str(scenario_dir / "trace.jsonl"),
            "--buildings",
            str(scenario_dir / "buildings.json"),
            "--out",
            str(out),
            "--rb-list",
            "100,diag",
            "--rv-list",
            "inf",
        ]
    )
    assert rc == 0
    with open(out / "sweep.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert ",".join(rows[0]) == SWEEP_HEADER
    assert len(rows) == 3
    assert float(rows[1][0]) == 100.0
    assert (out / "effective_config.json").exists()


def test_gnss_diag_prints_stats(capsys):
    rc = main(["gnss-diag", "--duration", "1200", "--step", "1", "--seed", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "empirical RMS" in out
    assert "lag" in out


def test_gnss_diag_too_short(capsys):
    rc = main(["gnss-diag", "--duration", "50"])
    assert rc == 1


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--trace", "--buildings", "--out", "--seed", "--workers", "--set"):
        assert flag in out


def test_help_sweep_lists_range_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "--rb-list" in out and "--rv-list" in out
