"""Deterministic discrete-event loop on a 1 ms tick grid.

All timestamps are integer nanoseconds since scenario start. Callbacks are
executed in (time, insertion order); scheduling a callback for a past time
runs it at the current tick. Event times are rounded up to the next tick
boundary so every observable action in the simulator lands on the grid.
"""
from __future__ import annotations

import heapq
from typing import Callable

TICK_NS = 1_000_000  # 1 ms

MS = 1_000_000
SECOND = 1_000_000_000


def ns_from_ms(ms: float) -> int:
    return int(round(ms * MS))


def quantize(t_ns: int) -> int:
    """Round a timestamp up to the next tick boundary."""
    return -(-int(t_ns) // TICK_NS) * TICK_NS


class EventLoop:
    def __init__(self):
        self._now = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0

    @property
    def now_ns(self) -> int:
        return self._now

    def call_at(self, t_ns: int, fn: Callable[[], None]) -> None:
        t = quantize(t_ns)
        if t < self._now:
            t = self._now
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn))

    def call_later(self, delay_ns: int, fn: Callable[[], None]) -> None:
        self.call_at(self._now + max(0, int(delay_ns)), fn)

    def run_until(self, end_ns: int) -> None:
        """Run every event scheduled at or before end_ns, then set now = end_ns."""
        heap = self._heap
        while heap and heap[0][0] <= end_ns:
            t, _, fn = heapq.heappop(heap)
            self._now = t
            fn()
        if end_ns > self._now:
            self._now = end_ns

    def pending(self) -> int:
        return len(self._heap)
