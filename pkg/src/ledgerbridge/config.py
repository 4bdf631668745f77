"""Scenario configuration.

Configs are JSON objects; every omitted field is materialized from defaults
derived from the drone section, so a config written back out is complete and
re-runnable. The generated topology is the two-host teleop layout: drones
and their state topics live on hostA, the controller on hostB, one channel,
symmetric 50 +/- 10 ms links to the ledger.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Optional

from .bridge import RelayRule, check_rules
from .errors import ConfigInvalid
from .ledger import Identity, OrderingConfig
from .netem import LinkSpec

HOST_ROBOT = "hostA"
HOST_CONTROL = "hostB"

_DEFAULTS = {
    "seed": 42,
    "duration_s": 120.0,
    "bridge_mode": "events",
    "live": False,
    "channels": [{"channel_id": "teleop", "max_message_count": 10,
                  "batch_timeout_ms": 150.0}],
    "links": [
        {"src": HOST_ROBOT, "dst": "ledger", "base_delay_ms": 50.0, "jitter_ms": 10.0,
         "loss_prob": 0.0, "in_order": True},
        {"src": "ledger", "dst": HOST_ROBOT, "base_delay_ms": 50.0, "jitter_ms": 10.0,
         "loss_prob": 0.0, "in_order": True},
        {"src": HOST_CONTROL, "dst": "ledger", "base_delay_ms": 50.0, "jitter_ms": 10.0,
         "loss_prob": 0.0, "in_order": True},
        {"src": "ledger", "dst": HOST_CONTROL, "base_delay_ms": 50.0, "jitter_ms": 10.0,
         "loss_prob": 0.0, "in_order": True},
    ],
    "drones": {"count": 1, "odom_rate_hz": 30.0, "battery_rate_hz": 10.0,
               "v_max_m_s": 0.3, "gain": 10.0, "waypoint_radius_m": 0.2,
               "shape": "square", "size_m": 2.0, "altitude_m": 1.0,
               "loop": True, "spawn": "first_waypoint"},
    "poll": {"interval_ms": 100.0, "per_asset_cost_ms": 1.5},
    "key_scheme": "per_topic",
    "cmd_timeout_ms": 1000.0,
    "dynamics_dt_ms": 10.0,
    "failure": {"fail_radius_m": 0.5, "fail_window_ms": 1000.0,
                "arena_m": [6.0, 6.0, 3.0]},
    "instrument": True,
}


@dataclass
class ScenarioConfig:
    raw: dict = field(default_factory=dict)

    # materialized fields
    seed: int = 42
    duration_s: float = 120.0
    bridge_mode: str = "events"
    live: bool = False
    channels: list = field(default_factory=list)        # (channel_id, OrderingConfig)
    links: list = field(default_factory=list)           # LinkSpec
    drones: dict = field(default_factory=dict)
    poll: dict = field(default_factory=dict)
    key_scheme: str = "per_topic"
    cmd_timeout_ms: float = 1000.0
    dynamics_dt_ms: float = 10.0
    failure: dict = field(default_factory=dict)
    instrument: bool = True

    identities: list = field(default_factory=list)      # Identity
    relay_rules: list = field(default_factory=list)     # RelayRule
    origin_registry: dict = field(default_factory=dict)
    supplied: frozenset = frozenset()                   # top-level keys the caller set

    def effective(self) -> dict:
        """The fully materialized config as a plain JSON-safe dict."""
        return copy.deepcopy(self.raw)

    # topic helpers -----------------------------------------------------------

    def drone_ids(self) -> list[str]:
        return [f"drone{i}" for i in range(self.drones["count"])]

    @staticmethod
    def odom_topic(drone_id: str) -> str:
        return f"/{drone_id}/odom"

    @staticmethod
    def battery_topic(drone_id: str) -> str:
        return f"/{drone_id}/battery"

    @staticmethod
    def cmd_topic(drone_id: str) -> str:
        return f"/{drone_id}/cmd_vel"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigInvalid(msg)


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigInvalid(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config is not valid JSON: {e}") from None
    return parse_config(data)


def parse_config(data: dict) -> ScenarioConfig:
    _require(isinstance(data, dict), "config root must be a JSON object")
    known = set(_DEFAULTS) | {"identities", "relay_rules", "origin_registry",
                              "state_rates_hz", "sweep"}
    for k in data:
        _require(k in known, f"unknown config field {k!r}")
    raw = _merge(_DEFAULTS, data)
    cfg = ScenarioConfig(raw=raw, supplied=frozenset(data))

    cfg.seed = int(raw["seed"])
    cfg.duration_s = float(raw["duration_s"])
    _require(cfg.duration_s > 0, "duration_s must be positive")
    cfg.bridge_mode = raw["bridge_mode"]
    _require(cfg.bridge_mode in ("events", "polling"),
             f"bridge_mode must be 'events' or 'polling', got {cfg.bridge_mode!r}")
    cfg.live = bool(raw["live"])
    cfg.key_scheme = raw["key_scheme"]
    _require(cfg.key_scheme in ("per_topic", "per_message"),
             f"key_scheme must be per_topic or per_message, got {cfg.key_scheme!r}")
    cfg.cmd_timeout_ms = float(raw["cmd_timeout_ms"])
    cfg.dynamics_dt_ms = float(raw["dynamics_dt_ms"])
    _require(cfg.cmd_timeout_ms > 0, "cmd_timeout_ms must be positive")
    _require(cfg.dynamics_dt_ms > 0, "dynamics_dt_ms must be positive")
    cfg.instrument = bool(raw["instrument"])

    for ch in raw["channels"]:
        try:
            ordering = OrderingConfig(int(ch["max_message_count"]),
                                      float(ch["batch_timeout_ms"]))
        except (KeyError, ValueError) as e:
            raise ConfigInvalid(f"channel {ch.get('channel_id', '?')!r}: {e}") from None
        cfg.channels.append((ch["channel_id"], ordering))
    _require(len(cfg.channels) > 0, "at least one channel is required")
    _require(len({c for c, _ in cfg.channels}) == len(cfg.channels),
             "duplicate channel_id")

    for ln in raw["links"]:
        try:
            cfg.links.append(LinkSpec(ln["src"], ln["dst"], float(ln["base_delay_ms"]),
                                      float(ln.get("jitter_ms", 0.0)),
                                      float(ln.get("loss_prob", 0.0)),
                                      bool(ln.get("in_order", True))))
        except (KeyError, ValueError) as e:
            raise ConfigInvalid(
                f"link {ln.get('src', '?')}->{ln.get('dst', '?')}: {e}") from None

    d = raw["drones"]
    _require(int(d["count"]) >= 1, "drones.count must be >= 1")
    _require(float(d["odom_rate_hz"]) > 0, "drones.odom_rate_hz must be positive")
    _require(float(d["battery_rate_hz"]) >= 0, "drones.battery_rate_hz must be >= 0")
    _require(float(d["v_max_m_s"]) > 0, "drones.v_max_m_s must be positive")
    _require(d["shape"] in ("square", "triangle", "x_shape"),
             f"drones.shape {d['shape']!r} unknown")
    cfg.drones = d

    p = raw["poll"]
    _require(float(p["interval_ms"]) > 0, "poll.interval_ms must be positive")
    _require(float(p["per_asset_cost_ms"]) >= 0, "poll.per_asset_cost_ms must be >= 0")
    cfg.poll = p

    f = raw["failure"]
    _require(float(f["fail_radius_m"]) > 0, "failure.fail_radius_m must be positive")
    _require(float(f["fail_window_ms"]) > 0, "failure.fail_window_ms must be positive")
    _require(len(f["arena_m"]) == 3, "failure.arena_m must be [x, y, z]")
    cfg.failure = f

    main_channel = cfg.channels[0][0]
    drone_ids = cfg.drone_ids()
    channel_names = tuple(c for c, _ in cfg.channels)

    if "identities" in data:
        for it in raw["identities"]:
            cfg.identities.append(Identity(
                it["identity_id"], it.get("org", "org1"),
                it.get("secret", f"secret:{it['identity_id']}").encode(),
                tuple(it.get("write_scopes", ())),
                tuple(it.get("channels", channel_names))))
    else:
        for did in drone_ids:
            cfg.identities.append(Identity(
                did, "robots", f"secret:{did}".encode(),
                (ScenarioConfig.odom_topic(did), ScenarioConfig.battery_topic(did)),
                channel_names))
        cfg.identities.append(Identity(
            "controller", "operators", b"secret:controller",
            tuple(ScenarioConfig.cmd_topic(did) for did in drone_ids),
            channel_names))
        for host in (HOST_ROBOT, HOST_CONTROL):
            cfg.identities.append(Identity(
                f"bridge-{host}", "bridges", f"secret:bridge-{host}".encode(),
                (), channel_names))

    if "relay_rules" in data:
        for r in raw["relay_rules"]:
            cfg.relay_rules.append(RelayRule(
                r["host"], r["topic"], r["direction"],
                r.get("channel_id", main_channel),
                r.get("key_scheme", cfg.key_scheme),
                r.get("max_rate_hz")))
    else:
        for did in drone_ids:
            odom, batt, cmd = (ScenarioConfig.odom_topic(did),
                               ScenarioConfig.battery_topic(did),
                               ScenarioConfig.cmd_topic(did))
            cfg.relay_rules += [
                RelayRule(HOST_ROBOT, odom, "to_chain", main_channel, cfg.key_scheme),
                RelayRule(HOST_ROBOT, batt, "to_chain", main_channel, cfg.key_scheme),
                RelayRule(HOST_ROBOT, cmd, "from_chain", main_channel, cfg.key_scheme),
                RelayRule(HOST_CONTROL, odom, "from_chain", main_channel, cfg.key_scheme),
                RelayRule(HOST_CONTROL, batt, "from_chain", main_channel, cfg.key_scheme),
                RelayRule(HOST_CONTROL, cmd, "to_chain", main_channel, cfg.key_scheme),
            ]
    try:
        check_rules(cfg.relay_rules)
    except ConfigInvalid:
        raise
    ident_ids = {i.identity_id for i in cfg.identities}
    _require(len(ident_ids) == len(cfg.identities), "duplicate identity_id")
    for _, r in enumerate(cfg.relay_rules):
        _require(r.channel_id in {c for c, _ in cfg.channels},
                 f"rule {r.host}:{r.topic}: unknown channel {r.channel_id!r}")

    if "origin_registry" in data:
        cfg.origin_registry = dict(raw["origin_registry"])
    else:
        for did in drone_ids:
            cfg.origin_registry[ScenarioConfig.odom_topic(did)] = did
            cfg.origin_registry[ScenarioConfig.battery_topic(did)] = did
            cfg.origin_registry[ScenarioConfig.cmd_topic(did)] = "controller"
    for prefix, owner in cfg.origin_registry.items():
        _require(owner in ident_ids,
                 f"origin_registry[{prefix!r}]: unknown identity {owner!r}")

    hosts = {HOST_ROBOT, HOST_CONTROL}
    for host in sorted({r.host for r in cfg.relay_rules}):
        _require(host in hosts, f"rule host {host!r} is not a known host")
        for dst in ("ledger",):
            _require(any(l.src == host and l.dst == dst for l in cfg.links),
                     f"no uplink {host}->ledger in links")
            _require(any(l.src == dst and l.dst == host for l in cfg.links),
                     f"no downlink ledger->{host} in links")

    return cfg


def default_config(**overrides) -> ScenarioConfig:
    data: dict = {}
    for k, v in overrides.items():
        cur = data
        parts = k.split("__")
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = v
    return parse_config(data)


def derive_config(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """New config = cfg's effective dict plus overrides (double-underscore
    keys nest, e.g. drones__odom_rate_hz=50)."""
    data: dict = {}
    for k, v in overrides.items():
        cur = data
        parts = k.split("__")
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = v
    return parse_config(_merge(cfg.effective(), data))
