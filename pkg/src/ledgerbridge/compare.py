"""Comparison experiments: events vs polling across load levels, and the
speed-until-failure sweep.

compare_bridges() reruns one base scenario per (state rate, bridge mode)
cell and tabulates mean latency; a polling cell whose latency fails the
boundedness test is marked DIVERGED instead of reporting a meaningless mean.
sweep_speed() reruns the scenario per (speed, seed) and reports the failure
fraction per speed; max_stable_speed() reduces that to the highest speed
with zero failures.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

from .config import ScenarioConfig, derive_config
from .errors import ConfigInvalid
from .scenario import RunReport, run_scenario

DEFAULT_STATE_RATES_HZ = [30, 50]
DEFAULT_SWEEP_SPEEDS = [0.3, 0.5, 1.0, 1.5]
DEFAULT_SWEEP_SEEDS = 5


@dataclass
class SweepRow:
    speed_m_s: float
    runs: int
    failures: int

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.runs


def sweep_speed(cfg: ScenarioConfig, speeds, seeds: int = DEFAULT_SWEEP_SEEDS) -> list[SweepRow]:
    """Run the scenario at each speed over `seeds` distinct seeds and count
    runs with at least one controller failure. Duplicate speeds are collapsed
    with a warning; fewer than two distinct speeds is a config error."""
    unique = sorted(set(float(s) for s in speeds))
    if len(unique) < len(list(speeds)):
        warnings.warn("duplicate speeds removed from sweep", stacklevel=2)
    if len(unique) < 2:
        raise ConfigInvalid("sweep needs at least two distinct speeds")
    if seeds < 1:
        raise ConfigInvalid("sweep needs at least one seed")
    rows = []
    for speed in unique:
        failures = 0
        for k in range(seeds):
            run_cfg = derive_config(cfg, seed=cfg.seed + k,
                                    drones__v_max_m_s=speed)
            report = run_scenario(run_cfg)
            if report.failures:
                failures += 1
        rows.append(SweepRow(speed, seeds, failures))
    return rows


def max_stable_speed(rows: list[SweepRow]) -> Optional[float]:
    """Highest swept speed with zero failing runs, None if every speed failed."""
    stable = [r.speed_m_s for r in rows if r.failures == 0]
    return max(stable) if stable else None


@dataclass
class CompareRow:
    state_freq_hz: float
    load_msg_s: float
    bridge_method: str
    avg_latency_s: Optional[float]  # None when the run diverged sample-free
    diverged: bool
    max_stable_speed_m_s: Optional[float]
    report: RunReport

    def cells(self) -> list[str]:
        if self.diverged:
            latency = "DIVERGED"
        elif self.avg_latency_s is None:
            latency = "-"
        else:
            latency = f"{self.avg_latency_s:.3f}"
        speed = ("-" if self.max_stable_speed_m_s is None
                 else f"{self.max_stable_speed_m_s:g}")
        return [f"{self.state_freq_hz:g}", f"{self.load_msg_s:.1f}",
                self.bridge_method, latency, speed]


COLUMNS = ["state_freq_hz", "load_msg_s", "bridge_method",
           "avg_latency_s", "max_stable_speed_m_s"]


def compare_bridges(cfg: ScenarioConfig, state_rates_hz=None,
                    sweep_speeds=None, sweep_seeds: int = DEFAULT_SWEEP_SEEDS,
                    with_sweep: bool = True) -> list[CompareRow]:
    if "bridge_mode" in cfg.supplied:
        raise ConfigInvalid("compare-bridges config must not pin bridge_mode")
    rates = state_rates_hz or cfg.raw.get("state_rates_hz") or DEFAULT_STATE_RATES_HZ
    speeds = sweep_speeds or cfg.raw.get("sweep", {}).get("speeds") or DEFAULT_SWEEP_SPEEDS
    rows = []
    for rate in rates:
        for mode in ("events", "polling"):
            run_cfg = derive_config(cfg, bridge_mode=mode,
                                    drones__odom_rate_hz=rate)
            report = run_scenario(run_cfg)
            values = report.latency_values_ms()
            avg = (sum(values) / len(values) / 1e3) if values else None
            stable = None
            if with_sweep:
                stable = max_stable_speed(sweep_speed(run_cfg, speeds, sweep_seeds))
            rows.append(CompareRow(
                state_freq_hz=float(rate),
                load_msg_s=report.summary_dict()["messages"]["offered_msg_s"],
                bridge_method=mode,
                avg_latency_s=avg,
                diverged=report.diverged,
                max_stable_speed_m_s=stable,
                report=report))
    return rows


def render_table(rows: list[CompareRow]) -> str:
    grid = [COLUMNS] + [r.cells() for r in rows]
    widths = [max(len(row[i]) for row in grid) for i in range(len(COLUMNS))]
    lines = []
    for n, row in enumerate(grid):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def rows_as_dicts(rows: list[CompareRow]) -> list[dict]:
    return [{"state_freq_hz": r.state_freq_hz,
             "load_msg_s": round(r.load_msg_s, 3),
             "bridge_method": r.bridge_method,
             "avg_latency_s": (None if r.avg_latency_s is None
                               else round(r.avg_latency_s, 6)),
             "diverged": r.diverged,
             "max_stable_speed_m_s": r.max_stable_speed_m_s}
            for r in rows]


def render_sweep(rows: list[SweepRow]) -> str:
    lines = ["speed_m_s  runs  failures  failure_fraction",
             "---------  ----  --------  ----------------"]
    for r in rows:
        lines.append(f"{r.speed_m_s:<9g}  {r.runs:<4d}  {r.failures:<8d}  "
                     f"{r.failure_fraction:.2f}")
    return "\n".join(lines)
