"""Host-local publish/subscribe bus.

One Bus per host; topics are plain strings. Delivery is synchronous and in
subscription order, there is no latching, and nothing crosses hosts except
through a bridge. Publishers stamp a per-(publisher, topic) sequence number
so receivers can assert FIFO per publisher.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping


@dataclass(frozen=True)
class TopicMessage:
    topic: str
    msg_type: str
    payload: Mapping
    stamp: int  # ns since scenario start, set at creation, never rewritten
    seq: int
    origin_host: str


class BusSubscription:
    def __init__(self, bus: "Bus", topic: str, callback):
        self.bus = bus
        self.topic = topic
        self.callback = callback
        self.active = True

    def unsubscribe(self) -> None:
        self.active = False
        subs = self.bus._subs.get(self.topic, [])
        if self in subs:
            subs.remove(self)


class Bus:
    def __init__(self, host: str):
        self.host = host
        self._subs: dict[str, list[BusSubscription]] = {}

    def subscribe(self, topic: str, callback: Callable[[TopicMessage], None]) -> BusSubscription:
        sub = BusSubscription(self, topic, callback)
        self._subs.setdefault(topic, []).append(sub)
        return sub

    def publish(self, msg: TopicMessage) -> int:
        """Deliver msg to current subscribers of its topic; returns the count."""
        delivered = 0
        for sub in list(self._subs.get(msg.topic, [])):
            if sub.active:
                sub.callback(msg)
                delivered += 1
        return delivered


class Publisher:
    """Stamps sequence numbers for one (publisher, topic) stream."""

    def __init__(self, bus: Bus, topic: str, msg_type: str):
        self.bus = bus
        self.topic = topic
        self.msg_type = msg_type
        self._seq = 0

    def publish(self, payload: Mapping, stamp: int) -> TopicMessage:
        msg = TopicMessage(self.topic, self.msg_type, payload, stamp,
                           self._seq, self.bus.host)
        self._seq += 1
        self.bus.publish(msg)
        return msg
