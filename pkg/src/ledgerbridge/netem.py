"""Point-to-point link emulation: fixed delay, uniform jitter, optional loss.

Links are directed. Each link draws from its own RNG stream seeded from
(scenario seed, src, dst), so the delay sequence on one link does not depend
on traffic elsewhere. Delivery times are rounded up to the event-loop tick;
with in_order=True a delivery never overtakes an earlier one on the same
link (its time is clamped to the latest scheduled delivery).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .clock import EventLoop, quantize
from .errors import UnknownLink


@dataclass(frozen=True)
class LinkSpec:
    src: str
    dst: str
    base_delay_ms: float
    jitter_ms: float = 0.0
    loss_prob: float = 0.0
    in_order: bool = True

    def __post_init__(self):
        if self.base_delay_ms < 0:
            raise ValueError("base_delay_ms must be >= 0")
        if not 0 <= self.jitter_ms <= self.base_delay_ms:
            raise ValueError("jitter_ms must be within [0, base_delay_ms]")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be within [0, 1]")


class Link:
    def __init__(self, spec: LinkSpec, loop: EventLoop, seed: int):
        self.spec = spec
        self.loop = loop
        self.rng = random.Random(f"{seed}/{spec.src}->{spec.dst}")
        self.receiver: Callable[[object], None] | None = None
        self._last_delivery = 0
        self.sent = 0
        self.lost = 0

    def delay_ns(self) -> int:
        d_ms = self.spec.base_delay_ms
        if self.spec.jitter_ms > 0:
            d_ms += self.rng.uniform(-self.spec.jitter_ms, self.spec.jitter_ms)
        return int(round(d_ms * 1_000_000))

    def send(self, payload) -> int | None:
        """Schedule delivery of payload; returns the delivery time, or None
        if the link dropped it."""
        self.sent += 1
        if self.spec.loss_prob > 0 and self.rng.random() < self.spec.loss_prob:
            self.lost += 1
            return None
        t = quantize(self.loop.now_ns + self.delay_ns())
        if self.spec.in_order and t < self._last_delivery:
            t = self._last_delivery
        self._last_delivery = t
        receiver = self.receiver
        if receiver is None:
            raise UnknownLink(f"link {self.spec.src}->{self.spec.dst} has no receiver")
        self.loop.call_at(t, lambda: receiver(payload))
        return t


class Network:
    def __init__(self, loop: EventLoop, seed: int):
        self.loop = loop
        self.seed = seed
        self._links: dict[tuple[str, str], Link] = {}

    def add_link(self, spec: LinkSpec) -> Link:
        key = (spec.src, spec.dst)
        if key in self._links:
            raise ValueError(f"duplicate link {spec.src}->{spec.dst}")
        link = Link(spec, self.loop, self.seed)
        self._links[key] = link
        return link

    def link(self, src: str, dst: str) -> Link:
        try:
            return self._links[(src, dst)]
        except KeyError:
            raise UnknownLink(f"no link {src}->{dst}") from None

    def set_receiver(self, src: str, dst: str, callback) -> None:
        self.link(src, dst).receiver = callback

    def send(self, src: str, dst: str, payload) -> int | None:
        return self.link(src, dst).send(payload)
