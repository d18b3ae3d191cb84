import json
from pathlib import Path

import pytest

from civicbin.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def small_scenario(tmp_path, name="mini", seed=5):
    raw = {
        "schema": 1,
        "name": name,
        "seed": seed,
        "duration_s": 3600,
        "zones": [{"zone_id": "Z1"}],
        "bins": [
            {
                "bin_id": "B1",
                "zone_id": "Z1",
                "lat": 22.8,
                "lon": 89.5,
                "depth_cm": 100,
                "sensor_offset_cm": 5,
                "capacity_liters": 60,
                "arrival_rate_per_hour": 6.0,
                "mean_parcel_liters": 5.0,
            }
        ],
        "crews": [{"crew_id": "C1"}],
    }
    path = tmp_path / f"{name}.scenario"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


def test_sim_run_writes_log_and_metrics(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    out = tmp_path / "out"
    code, stdout, _ = run_cli(["sim", "run", str(scenario), "--out", str(out)], capsys)
    assert code == 0
    assert (out / "mini.events.log").exists()
    metrics = json.loads((out / "mini.metrics.json").read_text())
    assert "alerts_raised" in metrics
    assert "overflow_bin_minutes" in stdout


def test_sim_run_twice_identical(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(["sim", "run", str(scenario), "--seed", "42", "--out", str(out1)], capsys)[0] == 0
    assert run_cli(["sim", "run", str(scenario), "--seed", "42", "--out", str(out2)], capsys)[0] == 0
    log1 = (out1 / "mini.events.log").read_bytes()
    log2 = (out2 / "mini.events.log").read_bytes()
    assert log1 == log2
    assert (out1 / "mini.metrics.json").read_text() == (out2 / "mini.metrics.json").read_text()


def test_seed_flag_changes_run(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli(["sim", "run", str(scenario), "--seed", "1", "--out", str(out1)], capsys)
    run_cli(["sim", "run", str(scenario), "--seed", "2", "--out", str(out2)], capsys)
    assert (out1 / "mini.events.log").read_bytes() != (out2 / "mini.events.log").read_bytes()


def test_report_table_matches_run_metrics(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    out = tmp_path / "out"
    run_cli(["sim", "run", str(scenario), "--out", str(out)], capsys)
    code, stdout, _ = run_cli(["report", str(out / "mini.events.log")], capsys)
    assert code == 0
    saved = json.loads((out / "mini.metrics.json").read_text())
    for key, value in saved.items():
        assert key in stdout
        assert (repr(value) if isinstance(value, float) else str(value)) in stdout


def test_report_csv_equals_run_metrics(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    out = tmp_path / "out"
    run_cli(["sim", "run", str(scenario), "--out", str(out)], capsys)
    code, stdout, _ = run_cli(
        ["report", str(out / "mini.events.log"), "--format", "csv"], capsys)
    assert code == 0
    header, row = stdout.strip().splitlines()
    names = header.split(",")
    values = row.split(",")
    saved = json.loads((out / "mini.metrics.json").read_text())
    assert set(names) == set(saved)
    for name, value in zip(names, values):
        expected = saved[name]
        assert value == (repr(expected) if isinstance(expected, float) else str(expected))
        assert "," not in value  # locale-independent, dot decimals


def test_missing_scenario_exits_1_with_diagnostic(tmp_path, capsys):
    missing = tmp_path / "missing.scenario"
    code, _, stderr = run_cli(["sim", "run", str(missing)], capsys)
    assert code == 1
    assert "missing.scenario" in stderr
    assert stderr.count("\n") == 1  # single-line diagnostic


def test_report_missing_log_exits_1(tmp_path, capsys):
    code, _, stderr = run_cli(["report", str(tmp_path / "none.log")], capsys)
    assert code == 1
    assert "none.log" in stderr


def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_unknown_flag_exits_2(tmp_path, capsys):
    scenario = small_scenario(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["sim", "run", str(scenario), "--turbo"])
    assert exc.value.code == 2


def test_seed_command_registers_city(tmp_path, capsys, monkeypatch):
    import httpx
    from fastapi.testclient import TestClient

    from civicbin.api import create_app
    from civicbin.domain import VirtualClock

    app = create_app(clock=VirtualClock())
    client = TestClient(app)

    def fake_post(url, json=None, timeout=None):
        path = url.split("http://svc", 1)[1]
        return client.post(path, json=json)

    monkeypatch.setattr(httpx, "post", fake_post)
    code, stdout, _ = run_cli(
        ["seed", "http://svc", str(SCENARIOS / "baseline.scenario")], capsys)
    assert code == 0
    assert "8 bins" in stdout
    bins = client.get("/api/v1/bins").json()["items"]
    assert len(bins) == 8
    crews = client.get("/api/v1/crews").json()["items"]
    assert {c["crew_id"] for c in crews} == {"C01", "C02"}
