"""Command-line interface: exit codes, output files, environment fallback."""
import json
import os

import pytest

from ledgerbridge.cli import main

pytestmark = pytest.mark.usefixtures("clean_out_env")


@pytest.fixture
def clean_out_env(monkeypatch):
    monkeypatch.delenv("LEDGERBRIDGE_OUT", raising=False)


def write_cfg(tmp_path, **fields):
    base = {"duration_s": 6.0}
    base.update(fields)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(base))
    return str(path)


def test_run_writes_report_set(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "chain_teleop.jsonl", "latency.csv", "summary.json", "trajectory.csv"]
    text = capsys.readouterr().out
    assert "samples, median" in text
    assert "0 failure event(s)" in text
    assert text.count("wrote ") == 4


def test_run_bad_config_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, bridge_mode="smoke_signals")
    assert main(["run", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert err.startswith("config error:")
    assert "bridge_mode" in err


def test_run_missing_config_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "absent.json"
    bad.write_text("{oops")
    assert main(["run", "--config", str(bad)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_run_seed_override_reproduces_bytes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, seed=1)
    outs = []
    for name in ("x", "y"):
        out = tmp_path / name
        assert main(["run", "--config", cfg, "--seed", "9",
                     "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "latency.csv").read_bytes() == \
        (outs[1] / "latency.csv").read_bytes()
    assert (outs[0] / "chain_teleop.jsonl").read_bytes() == \
        (outs[1] / "chain_teleop.jsonl").read_bytes()
    # and the override actually changed the run relative to seed=1
    out3 = tmp_path / "z"
    main(["run", "--config", cfg, "--out", str(out3)])
    assert (out3 / "latency.csv").read_bytes() != \
        (outs[0] / "latency.csv").read_bytes()


def test_run_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path)
    env_out = tmp_path / "from_env"
    monkeypatch.setenv("LEDGERBRIDGE_OUT", str(env_out))
    assert main(["run", "--config", cfg]) == 0
    assert (env_out / "summary.json").exists()


def test_run_failure_gate_exits_3(tmp_path, capsys):
    # arena smaller than the square course: guaranteed bounds failure
    cfg = write_cfg(tmp_path, failure={"arena_m": [0.5, 0.5, 3.0]},
                    drones={"v_max_m_s": 1.0})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out),
                 "--fail-on-controller-failure"]) == 3
    text = capsys.readouterr().out
    assert "1 failure event(s)" in text
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failures"][0]["cause"] == "bounds"


def test_run_failures_without_gate_exit_0(tmp_path, capsys):
    cfg = write_cfg(tmp_path, failure={"arena_m": [0.5, 0.5, 3.0]},
                    drones={"v_max_m_s": 1.0})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_compare_bridges_writes_table_and_json(tmp_path, capsys):
    cfg = write_cfg(tmp_path, state_rates_hz=[30])
    out = tmp_path / "out"
    assert main(["compare-bridges", "--config", cfg, "--out", str(out),
                 "--no-sweep"]) == 0
    table = (out / "compare.txt").read_text()
    assert table.splitlines()[0].split()[0] == "state_freq_hz"
    rows = json.loads((out / "compare.json").read_text())
    assert [r["bridge_method"] for r in rows] == ["events", "polling"]
    assert all(r["avg_latency_s"] > 0.2 for r in rows)
    assert "events" in capsys.readouterr().out


def test_compare_bridges_rejects_pinned_mode(tmp_path, capsys):
    cfg = write_cfg(tmp_path, bridge_mode="events")
    assert main(["compare-bridges", "--config", cfg]) == 2
    assert "must not pin bridge_mode" in capsys.readouterr().err


def test_sweep_speed_writes_rows(tmp_path, capsys):
    cfg = write_cfg(tmp_path, duration_s=4.0)
    out = tmp_path / "out"
    assert main(["sweep-speed", "--config", cfg, "--speeds", "0.3,0.6",
                 "--seeds", "1", "--out", str(out)]) == 0
    data = json.loads((out / "sweep.json").read_text())
    assert [r["speed_m_s"] for r in data["rows"]] == [0.3, 0.6]
    assert all(r["runs"] == 1 for r in data["rows"])
    assert "max stable speed" in capsys.readouterr().out


def test_sweep_speed_bad_speeds_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["sweep-speed", "--config", cfg, "--speeds", "fast,slow"]) == 2
    assert "bad --speeds" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 2
    assert "cannot read config" in capsys.readouterr().err
