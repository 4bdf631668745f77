"""Scenario assembly and the run loop.

build_scenario(cfg) wires ledger, links, buses, bridges, drones and
controllers into one deterministic event loop; Scenario.run() drives it for
the configured duration and produces a RunReport. Everything observable in
the report is a pure function of the config (seed included), which is what
the byte-identical-reports guarantee rests on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bridge import HostBridge, PollCache, PollingBridge, LedgerSide
from .bus import Bus, Publisher
from .clock import EventLoop, SECOND, TICK_NS, ns_from_ms
from .config import HOST_CONTROL, HOST_ROBOT, ScenarioConfig
from .drones import (Drone, FailureEvent, FailureParams, WaypointController,
                     detect_failure, trajectory_gen)
from .errors import EmptySeries
from .ledger import Ledger
from .netem import Network


@dataclass(frozen=True)
class LatencySample:
    drone_id: str
    topic: str
    t0_ns: int
    t1_ns: int

    @property
    def two_way_ms(self) -> float:
        return (self.t1_ns - self.t0_ns) / 1e6


def summarize(values) -> dict:
    """Five-number summary plus 1.5*IQR whiskers, outliers, mean and count."""
    xs = np.asarray(sorted(values), dtype=float)
    if xs.size == 0:
        raise EmptySeries("cannot summarize an empty series")
    q1, med, q3 = (float(np.quantile(xs, q)) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = xs[(xs >= lo_fence) & (xs <= hi_fence)]
    outliers = xs[(xs < lo_fence) | (xs > hi_fence)]
    return {
        "count": int(xs.size),
        "mean": float(xs.mean()),
        "min": float(xs[0]),
        "q1": q1,
        "median": med,
        "q3": q3,
        "max": float(xs[-1]),
        "whisker_low": float(inside[0]),
        "whisker_high": float(inside[-1]),
        "outliers": [float(x) for x in outliers],
    }


class LedgerDriver:
    """Schedules advance_ordering calls: after every submission (size cuts)
    and at exact batch-timeout deadlines."""

    def __init__(self, ledger: Ledger, loop: EventLoop):
        self.ledger = ledger
        self.loop = loop
        self.on_commit = []
        self._scheduled: set[int] = set()

    def poke(self) -> None:
        blocks = self.ledger.advance_ordering(self.loop.now_ns)
        if blocks:
            for cb in self.on_commit:
                for block in blocks:
                    cb(block)
        if self.ledger.has_deferred():
            self.loop.call_later(TICK_NS, self.poke)
        deadline = self.ledger.next_deadline()
        if deadline is not None and deadline not in self._scheduled:
            self._scheduled.add(deadline)
            self.loop.call_at(deadline, lambda: self._fire(deadline))

    def _fire(self, deadline: int) -> None:
        self._scheduled.discard(deadline)
        self.poke()


@dataclass
class RunReport:
    cfg: ScenarioConfig
    wall_seconds: float = 0.0
    samples: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)      # drone_id -> [(t, pos, anchor, target)]
    failures: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)    # host -> counter dict
    blocks: dict = field(default_factory=dict)      # channel -> stats
    stages: Optional[dict] = None
    applied_commands: list = field(default_factory=list)
    polls: dict = field(default_factory=dict)
    max_cross_track: dict = field(default_factory=dict)
    laps: dict = field(default_factory=dict)
    gateway_log: list = field(default_factory=list)

    def latency_values_ms(self, drone_id: Optional[str] = None) -> list[float]:
        return [s.two_way_ms for s in self.samples
                if drone_id is None or s.drone_id == drone_id]

    def latency_summary(self, drone_id: Optional[str] = None) -> dict:
        return summarize(self.latency_values_ms(drone_id))

    def decile_medians(self) -> tuple[Optional[float], Optional[float]]:
        """Median two-way latency over the first and last 10% of the run."""
        dur = int(self.cfg.duration_s * SECOND)
        head = [s.two_way_ms for s in self.samples if s.t1_ns <= dur * 0.1]
        tail = [s.two_way_ms for s in self.samples if s.t1_ns >= dur * 0.9]
        med = lambda xs: float(np.median(xs)) if xs else None
        return med(head), med(tail)

    @property
    def diverged(self) -> bool:
        """Boundedness test: last-decile latency > 5x first-decile latency.
        A tail decile with traffic but no delivered samples counts as diverged."""
        first, last = self.decile_medians()
        if first is None:
            return False
        if last is None:
            return True
        return last > 5.0 * first

    def summary_dict(self) -> dict:
        total_submitted = sum(c["relayed_to_chain"] for c in self.counters.values())
        out = {
            "config": self.cfg.effective(),
            "wall_seconds": round(self.wall_seconds, 3),
            "messages": {
                "submitted": total_submitted,
                "offered_msg_s": total_submitted / self.cfg.duration_s,
            },
            "latency_ms": {},
            "counters": self.counters,
            "blocks": self.blocks,
            "failures": [{"drone_id": f.drone_id, "t_ns": f.t_ns, "cause": f.cause,
                          "value_m": round(f.value_m, 6)} for f in self.failures],
            "max_cross_track_m": {k: round(v, 6) for k, v in
                                  sorted(self.max_cross_track.items())},
            "laps": self.laps,
        }
        if self.samples:
            out["latency_ms"]["overall"] = self.latency_summary()
            per = {}
            for did in sorted({s.drone_id for s in self.samples}):
                per[did] = self.latency_summary(did)
            out["latency_ms"]["per_drone"] = per
            first, last = self.decile_medians()
            out["latency_ms"]["first_decile_median"] = first
            out["latency_ms"]["last_decile_median"] = last
            out["latency_ms"]["diverged"] = self.diverged
        if self.polls:
            out["polls"] = self.polls
        if self.gateway_log:
            out["gateway"] = {"mode_transitions": self.gateway_log}
        return out


class Scenario:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.loop = EventLoop()
        self.ledger = Ledger()
        for ident in cfg.identities:
            self.ledger.register_identity(ident)
        for channel_id, ordering in cfg.channels:
            self.ledger.create_channel(channel_id, ordering)
        self.driver = LedgerDriver(self.ledger, self.loop)
        self.net = Network(self.loop, cfg.seed)
        for spec in cfg.links:
            self.net.add_link(spec)
        self.stages: Optional[dict] = {} if cfg.instrument else None
        self.buses = {HOST_ROBOT: Bus(HOST_ROBOT), HOST_CONTROL: Bus(HOST_CONTROL)}
        self.samples: list[LatencySample] = []
        self.applied_commands: list = []
        self.drones: dict[str, Drone] = {}
        self.controllers: dict[str, WaypointController] = {}
        self.traces: dict[str, list] = {}
        self.cmd_gate = None        # optional callable(drone_id) -> bool (gateway)
        self.sample_hook = None     # optional callable(LatencySample) (gateway)
        self.gateway_log: list = []

        idents = {i.identity_id: i for i in cfg.identities}
        self.ledger_side = LedgerSide(self.ledger, self.net, self.loop, self.driver)
        if self.stages is not None:
            self.driver.on_commit.append(self._stamp_commit)

        self.bridges: dict[str, HostBridge] = {}
        hosts = sorted({r.host for r in cfg.relay_rules})
        for host in hosts:
            host_channels = {r.channel_id for r in cfg.relay_rules if r.host == host}
            bridge_ident = idents.get(f"bridge-{host}") or next(
                i for i in cfg.identities
                if host_channels <= set(i.channels))
            signers = {}
            for rule in cfg.relay_rules:
                if rule.host != host or rule.direction != "to_chain":
                    continue
                for prefix, owner in cfg.origin_registry.items():
                    if rule.topic.startswith(prefix):
                        signers[rule.topic] = idents[owner]
                        break
            if cfg.bridge_mode == "polling":
                cache = PollCache(cfg.poll["interval_ms"], cfg.poll["per_asset_cost_ms"])
                bridge = PollingBridge(host, self.buses[host], bridge_ident, self.net,
                                       self.loop, cfg.relay_rules, cfg.origin_registry,
                                       cache, self.stages, signers)
            else:
                bridge = HostBridge(host, self.buses[host], bridge_ident, self.net,
                                    self.loop, cfg.relay_rules, cfg.origin_registry,
                                    self.stages, signers)
            self.bridges[host] = bridge
            self.ledger_side.attach(bridge)
            self.net.set_receiver("ledger", host, bridge.on_downlink)
            if cfg.bridge_mode == "events":
                for channel_id in sorted({r.channel_id for r in cfg.relay_rules
                                          if r.host == host and r.direction == "from_chain"}):
                    self.ledger_side.tap_events(host, channel_id,
                                                bridge_ident.identity_id)
            else:
                bridge.start()

        self._build_teleop()

    # -- teleop wiring -------------------------------------------------------

    def _build_teleop(self) -> None:
        cfg = self.cfg
        d = cfg.drones
        waypoints = trajectory_gen(d["shape"], d["size_m"], d["altitude_m"])
        spawn = (waypoints[0] if d["spawn"] == "first_waypoint"
                 else tuple(float(v) for v in d["spawn"]))
        odom_period = SECOND / d["odom_rate_hz"]
        batt_period = SECOND / d["battery_rate_hz"] if d["battery_rate_hz"] > 0 else 0.0
        dt_ns = ns_from_ms(cfg.dynamics_dt_ms)
        dt_s = cfg.dynamics_dt_ms / 1e3
        timeout_ns = ns_from_ms(cfg.cmd_timeout_ms)
        bus_a, bus_b = self.buses[HOST_ROBOT], self.buses[HOST_CONTROL]

        for i, did in enumerate(cfg.drone_ids()):
            drone = Drone(did, spawn, d["v_max_m_s"])
            self.drones[did] = drone
            self.traces[did] = []
            ctrl = WaypointController(waypoints, d["gain"], d["v_max_m_s"],
                                      d["waypoint_radius_m"], d["loop"], start=spawn)
            self.controllers[did] = ctrl
            odom_pub = Publisher(bus_a, cfg.odom_topic(did), "nav_msgs/Odometry")
            cmd_pub = Publisher(bus_b, cfg.cmd_topic(did), "geometry_msgs/Twist")
            # stagger start phases so drones do not publish in lockstep
            offset = ((i * 37) % max(1, int(odom_period) // TICK_NS)) * TICK_NS

            def publish_odom(drone=drone, pub=odom_pub):
                x, y, z = (float(v) for v in drone.position)
                pub.publish({"x": x, "y": y, "z": z}, stamp=self.loop.now_ns)

            self._periodic(odom_period + offset, odom_period, publish_odom)

            if batt_period:
                batt_pub = Publisher(bus_a, cfg.battery_topic(did),
                                     "sensor_msgs/BatteryState")

                def publish_batt(pub=batt_pub):
                    now = self.loop.now_ns
                    level = max(0.0, 1.0 - now / SECOND * 1e-4)
                    pub.publish({"level": level}, stamp=now)

                self._periodic(batt_period + offset, batt_period, publish_batt)

            def on_odom(msg, did=did, ctrl=ctrl, pub=cmd_pub):
                if self.cmd_gate is not None and not self.cmd_gate(did):
                    return
                p = msg.payload
                v = ctrl.update((p["x"], p["y"], p["z"]))
                pub.publish({"vx": float(v[0]), "vy": float(v[1]), "vz": float(v[2]),
                             "echo_stamp": msg.stamp}, stamp=self.loop.now_ns)

            bus_b.subscribe(cfg.odom_topic(did), on_odom)

            def on_cmd(msg, did=did, drone=drone, topic=cfg.odom_topic(did)):
                p = msg.payload
                now = self.loop.now_ns
                echo = int(p.get("echo_stamp", 0))
                if echo > 0:
                    sample = LatencySample(did, topic, echo, now)
                    self.samples.append(sample)
                    if self.sample_hook is not None:
                        self.sample_hook(sample)
                drone.apply_command(p["vx"], p["vy"], p["vz"], now)
                self.applied_commands.append(
                    {"drone_id": did, "t_ns": now, "vx": p["vx"], "vy": p["vy"],
                     "vz": p["vz"], "echo_stamp": echo})

            bus_a.subscribe(cfg.cmd_topic(did), on_cmd)

        def step_all():
            now = self.loop.now_ns
            for did, drone in self.drones.items():
                drone.step(dt_s, now, timeout_ns)
                ctrl = self.controllers[did]
                anchor, target = ctrl.segment()
                self.traces[did].append(
                    (now, tuple(float(v) for v in drone.position),
                     tuple(float(v) for v in anchor), tuple(float(v) for v in target)))

        self._periodic(dt_ns, float(dt_ns), step_all)

    def _periodic(self, start_ns: float, period_ns: float, fn) -> None:
        """Schedule fn at a drift-free average period on the tick grid."""
        state = {"t": float(start_ns)}

        def fire():
            fn()
            state["t"] += period_ns
            self.loop.call_at(int(state["t"]), fire)

        self.loop.call_at(int(state["t"]), fire)

    def _stamp_commit(self, block) -> None:
        for tx in block.transactions:
            st = self.stages.get(tx.tx_id)
            if st is not None:
                st["commit_ns"] = block.commit_stamp
                st["block"] = block.number

    # -- running ------------------------------------------------------------

    def run(self) -> RunReport:
        import time
        t0 = time.perf_counter()
        self.loop.run_until(int(self.cfg.duration_s * SECOND))
        return self.build_report(time.perf_counter() - t0)

    def build_report(self, wall_seconds: float = 0.0) -> RunReport:
        report = RunReport(cfg=self.cfg, wall_seconds=wall_seconds)
        report.samples = self.samples
        report.traces = self.traces
        report.stages = self.stages
        report.applied_commands = self.applied_commands
        report.counters = {h: b.counters.as_dict() for h, b in self.bridges.items()}
        params = FailureParams(self.cfg.failure["fail_radius_m"],
                               self.cfg.failure["fail_window_ms"],
                               tuple(self.cfg.failure["arena_m"]))
        for did, rows in self.traces.items():
            failure, worst = detect_failure(did, rows, params)
            report.max_cross_track[did] = worst
            if failure is not None:
                report.failures.append(failure)
        report.failures.sort(key=lambda f: f.t_ns)
        report.laps = {did: ctrl.laps for did, ctrl in self.controllers.items()}
        report.gateway_log = self.gateway_log
        for channel_id in self.ledger.channel_ids():
            blocks = self.ledger.blocks_of(channel_id)[1:]
            by_reason: dict[str, int] = {}
            for b in blocks:
                by_reason[b.cut_reason] = by_reason.get(b.cut_reason, 0) + 1
            report.blocks[channel_id] = {
                "count": len(blocks),
                "committed_txs": sum(len(b.transactions) for b in blocks),
                "by_reason": by_reason,
                "mean_txs": (sum(len(b.transactions) for b in blocks) / len(blocks)
                             if blocks else 0.0),
                "verified": self.ledger.verify_chain(channel_id),
            }
        for host, bridge in self.bridges.items():
            if isinstance(bridge, PollingBridge):
                report.polls[host] = {"polls": bridge.polls,
                                      "slipped": bridge.slipped_polls}
        return report


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    return Scenario(cfg)


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    return Scenario(cfg).run()
