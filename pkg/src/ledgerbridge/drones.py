"""Drone kinematics, waypoint controller and reference trajectories.

Drones are single integrators: position advances by the commanded velocity,
zero-order held between commands. A command older than the safety timeout
forces the velocity to zero until a fresh one arrives. The controller is a
proportional law on position error with the magnitude clamped to v_max; the
active waypoint advances when the (possibly stale) observed position enters
the waypoint radius, before the command is computed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SHAPES = ("square", "triangle", "x_shape")


def trajectory_gen(shape: str, size_m: float, altitude_m: float) -> list[tuple[float, float, float]]:
    """Waypoint list for the named shape, centered at the origin."""
    if size_m <= 0:
        raise ValueError("size_m must be positive")
    h = size_m / 2.0
    if shape == "square":
        pts = [(h, h), (-h, h), (-h, -h), (h, -h)]
    elif shape == "triangle":
        r = size_m / np.sqrt(3.0)  # circumradius for an equilateral triangle
        ang = np.deg2rad([90.0, 210.0, 330.0])
        pts = [(r * np.cos(a), r * np.sin(a)) for a in ang]
    elif shape == "x_shape":
        # both diagonals of a size x size square; the center sits between
        # one pair of opposite corners, the other diagonal runs through it
        pts = [(h, h), (0.0, 0.0), (-h, -h), (-h, h), (h, -h)]
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return [(float(x), float(y), float(altitude_m)) for x, y in pts]


class Drone:
    def __init__(self, drone_id: str, spawn, v_max: float):
        self.drone_id = drone_id
        self.position = np.asarray(spawn, dtype=float).copy()
        self.v_max = float(v_max)
        self.velocity = np.zeros(3)
        self.last_cmd_ns: Optional[int] = None

    def apply_command(self, vx: float, vy: float, vz: float, now_ns: int) -> None:
        v = np.array([vx, vy, vz], dtype=float)
        speed = float(np.linalg.norm(v))
        if speed > self.v_max > 0:
            v *= self.v_max / speed
        self.velocity = v
        self.last_cmd_ns = now_ns

    def step(self, dt_s: float, now_ns: int, cmd_timeout_ns: int) -> None:
        if self.last_cmd_ns is None or now_ns - self.last_cmd_ns > cmd_timeout_ns:
            self.velocity = np.zeros(3)  # safety hold
        self.position += self.velocity * dt_s


class WaypointController:
    """P-controller toward the active waypoint of a fixed trajectory."""

    def __init__(self, waypoints, gain: float, v_max: float,
                 waypoint_radius_m: float, loop: bool = True, start=None):
        if not waypoints:
            raise ValueError("waypoints must be non-empty")
        self.waypoints = [np.asarray(w, dtype=float) for w in waypoints]
        self.gain = float(gain)
        self.v_max = float(v_max)
        self.r_wp = float(waypoint_radius_m)
        self.loop = bool(loop)
        self.index = 0
        self.anchor = (np.asarray(start, dtype=float).copy()
                       if start is not None else self.waypoints[0].copy())
        self.laps = 0

    @property
    def target(self) -> np.ndarray:
        return self.waypoints[self.index]

    def update(self, position) -> np.ndarray:
        """Advance the waypoint if reached, then return the clamped command."""
        pos = np.asarray(position, dtype=float)
        n = len(self.waypoints)
        for _ in range(n):
            if float(np.linalg.norm(self.target - pos)) >= self.r_wp:
                break
            self.anchor = self.target.copy()
            nxt = self.index + 1
            if nxt >= n:
                if not self.loop:
                    break
                self.laps += 1
                nxt = 0
            self.index = nxt
        raw = self.gain * (self.target - pos)
        speed = float(np.linalg.norm(raw))
        if speed > self.v_max > 0:
            raw *= self.v_max / speed
        return raw

    def segment(self) -> tuple[np.ndarray, np.ndarray]:
        return self.anchor, self.target


def cross_track(position, anchor, target) -> float:
    """Distance from position to the segment anchor->target."""
    p = np.asarray(position, dtype=float)
    a = np.asarray(anchor, dtype=float)
    b = np.asarray(target, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


@dataclass(frozen=True)
class FailureEvent:
    drone_id: str
    t_ns: int
    cause: str  # "cross_track" | "bounds"
    value_m: float


@dataclass
class FailureParams:
    fail_radius_m: float = 0.5
    fail_window_ms: float = 1000.0
    arena_m: tuple[float, float, float] = (6.0, 6.0, 3.0)


def detect_failure(drone_id: str, rows, params: FailureParams) -> tuple[Optional[FailureEvent], float]:
    """Scan trace rows (t_ns, pos, anchor, target) for a sustained cross-track
    excursion or an arena-bounds exit. Returns (first failure or None, max cross-track).
    """
    half_x, half_y, height = (params.arena_m[0] / 2.0, params.arena_m[1] / 2.0,
                              params.arena_m[2])
    window_ns = int(round(params.fail_window_ms * 1e6))
    over_since: Optional[int] = None
    worst = 0.0
    failure: Optional[FailureEvent] = None
    for t_ns, pos, anchor, target in rows:
        x, y, z = pos
        if failure is None and not (-half_x <= x <= half_x and -half_y <= y <= half_y
                                    and 0.0 <= z <= height):
            failure = FailureEvent(drone_id, t_ns, "bounds",
                                   float(max(abs(x) - half_x, abs(y) - half_y, z - height)))
        ct = cross_track(pos, anchor, target)
        worst = max(worst, ct)
        if ct > params.fail_radius_m:
            if over_since is None:
                over_since = t_ns
            elif failure is None and t_ns - over_since >= window_ns:
                failure = FailureEvent(drone_id, t_ns, "cross_track", ct)
        else:
            over_since = None
    return failure, worst
