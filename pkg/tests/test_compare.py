"""Bridge comparison table and the speed sweep.

The divergence regression at the bottom pins the mechanism: a per-asset poll
cost large enough to undercut the offered rate makes the poll backlog grow
without bound, and zero cost can never diverge.
"""
import pytest

from ledgerbridge.compare import (CompareRow, SweepRow, compare_bridges,
                                  max_stable_speed, render_sweep, render_table,
                                  rows_as_dicts, sweep_speed)
from ledgerbridge.config import default_config, derive_config
from ledgerbridge.errors import ConfigInvalid
from ledgerbridge.scenario import run_scenario


def test_sweep_dedupes_with_warning():
    cfg = default_config(duration_s=4.0)
    with pytest.warns(UserWarning, match="duplicate speeds"):
        rows = sweep_speed(cfg, [0.3, 0.3, 0.5], seeds=1)
    assert [r.speed_m_s for r in rows] == [0.3, 0.5]


@pytest.mark.filterwarnings("ignore:duplicate speeds")
def test_sweep_requires_two_distinct_speeds():
    cfg = default_config(duration_s=4.0)
    with pytest.raises(ConfigInvalid, match="two distinct speeds"):
        sweep_speed(cfg, [0.3, 0.3], seeds=1)
    with pytest.raises(ConfigInvalid, match="at least one seed"):
        sweep_speed(cfg, [0.3, 0.5], seeds=0)


def test_sweep_counts_failures_per_speed():
    # a cramped arena makes any motion a bounds failure at higher speed
    cfg = default_config(duration_s=6.0,
                         failure={"arena_m": [0.5, 0.5, 3.0]},
                         drones__shape="square", drones__size_m=2.0)
    rows = sweep_speed(cfg, [0.1, 1.0], seeds=2)
    by_speed = {r.speed_m_s: r for r in rows}
    assert by_speed[1.0].failures == 2
    assert by_speed[1.0].failure_fraction == 1.0
    assert all(r.runs == 2 for r in rows)


def test_max_stable_speed_picks_highest_clean_row():
    rows = [SweepRow(0.3, 5, 0), SweepRow(0.5, 5, 0), SweepRow(1.0, 5, 3)]
    assert max_stable_speed(rows) == 0.5
    assert max_stable_speed([SweepRow(0.3, 5, 1)]) is None


def test_compare_rejects_pinned_bridge_mode():
    cfg = default_config(duration_s=4.0, bridge_mode="events")
    with pytest.raises(ConfigInvalid, match="must not pin bridge_mode"):
        compare_bridges(cfg)


def test_compare_produces_rate_by_mode_grid():
    cfg = default_config(duration_s=8.0)
    rows = compare_bridges(cfg, state_rates_hz=[30, 50], with_sweep=False)
    assert [(r.state_freq_hz, r.bridge_method) for r in rows] == [
        (30.0, "events"), (30.0, "polling"), (50.0, "events"), (50.0, "polling")]
    for r in rows:
        assert not r.diverged
        assert 0.2 < r.avg_latency_s < 0.7
    # offered load scales with the state rate: odom + cmd + battery
    assert rows[0].load_msg_s == pytest.approx(70, abs=2)
    assert rows[2].load_msg_s == pytest.approx(110, abs=2)
    # polling pays an alignment penalty at the same rate
    assert rows[1].avg_latency_s > rows[0].avg_latency_s
    assert rows[3].avg_latency_s > rows[2].avg_latency_s


def test_render_table_layout():
    rows = [CompareRow(30.0, 69.8, "events", 0.3126, False, 0.5, None),
            CompareRow(30.0, 69.8, "polling", None, True, None, None)]
    text = render_table(rows)
    lines = text.splitlines()
    assert lines[0].split() == ["state_freq_hz", "load_msg_s", "bridge_method",
                                "avg_latency_s", "max_stable_speed_m_s"]
    assert set(lines[1]) <= {"-", " "}
    assert "0.313" in lines[2] and "0.5" in lines[2]
    assert "DIVERGED" in lines[3] and "-" in lines[3]


def test_rows_as_dicts_round_trips_fields():
    row = CompareRow(50.0, 109.7, "polling", 0.4251239, False, 1.0, None)
    d = rows_as_dicts([row])[0]
    assert d == {"state_freq_hz": 50.0, "load_msg_s": 109.7,
                 "bridge_method": "polling", "avg_latency_s": 0.425124,
                 "diverged": False, "max_stable_speed_m_s": 1.0}


def test_render_sweep_layout():
    text = render_sweep([SweepRow(0.3, 5, 0), SweepRow(1.5, 5, 4)])
    assert "failure_fraction" in text.splitlines()[0]
    assert "0.80" in text.splitlines()[-1]


# -- divergence mechanism regression ---------------------------------------------

def test_expensive_poll_processing_diverges():
    cfg = default_config(duration_s=40.0, bridge_mode="polling",
                         drones__odom_rate_hz=50.0,
                         poll={"interval_ms": 100.0, "per_asset_cost_ms": 25.0})
    report = run_scenario(cfg)
    first, last = report.decile_medians()
    assert report.diverged
    assert last is None or last > 5 * first


def test_free_poll_processing_never_diverges():
    cfg = default_config(duration_s=40.0, bridge_mode="polling",
                         drones__odom_rate_hz=50.0,
                         poll={"interval_ms": 100.0, "per_asset_cost_ms": 0.0})
    report = run_scenario(cfg)
    assert not report.diverged
    assert report.latency_summary()["median"] < 700.0
