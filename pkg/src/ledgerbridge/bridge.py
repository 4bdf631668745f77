"""Relays between host-local buses and the ledger.

Two bridge flavours share the to-chain path (bus subscription -> signed
transaction over the host's uplink) and differ on the return path:

* EventBridge: a ledger-side tap subscribes to chaincode events and pushes
  each one over the downlink as it commits; the host republishes matching
  assets on its local bus.
* PollingBridge: the host periodically queries the ledger for asset versions
  newer than its metadata cache, pays a simulated processing cost per new
  version, and republishes. The next poll starts only once the previous
  response is fully processed, so polls slip when the host falls behind.

Echo prevention is by origin tagging: every asset embeds the message's
origin host, and a bridge never republishes an asset that originated on its
own host. A registry of topic-prefix owners additionally drops assets whose
committing transaction was signed by anyone but the registered publisher.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .bus import Bus, TopicMessage
from .clock import EventLoop, MS, quantize
from .encoding import b64d, b64e, canon
from .errors import ConfigInvalid, LedgerError
from .ledger import ChaincodeEvent, Identity, Ledger, Transaction, make_transaction
from .netem import Network


# -- assets -----------------------------------------------------------------

@dataclass(frozen=True)
class Asset:
    asset_id: str
    topic: str
    msg_type: str
    msg_data: dict  # payload, stamp, seq, origin_host

    def to_bytes(self) -> bytes:
        return canon({"asset_id": self.asset_id, "topic": self.topic,
                      "msg_type": self.msg_type, "msg_data": self.msg_data})

    @staticmethod
    def from_bytes(raw: bytes) -> "Asset":
        obj = json.loads(raw.decode())
        return Asset(obj["asset_id"], obj["topic"], obj["msg_type"], obj["msg_data"])


def asset_from_message(msg: TopicMessage, key_scheme: str) -> Asset:
    if key_scheme == "per_message":
        asset_id = f"{msg.topic}/{msg.origin_host}/{msg.seq}"
    else:
        asset_id = msg.topic
    msg_data = {"payload": dict(msg.payload), "stamp": msg.stamp,
                "seq": msg.seq, "origin_host": msg.origin_host}
    return Asset(asset_id, msg.topic, msg.msg_type, msg_data)


def message_from_asset(asset: Asset) -> TopicMessage:
    d = asset.msg_data
    return TopicMessage(asset.topic, asset.msg_type, d["payload"],
                        d["stamp"], d["seq"], d["origin_host"])


# -- relay rules --------------------------------------------------------------

@dataclass(frozen=True)
class RelayRule:
    host: str
    topic: str
    direction: str  # "to_chain" | "from_chain"
    channel_id: str
    key_scheme: str = "per_topic"  # or "per_message"
    max_rate_hz: Optional[float] = None


def check_rules(rules) -> None:
    """Static loop-prevention checks; raises ConfigInvalid naming the rule."""
    seen_to_chain = set()
    for r in rules:
        if r.direction not in ("to_chain", "from_chain"):
            raise ConfigInvalid(f"rule {r.host}:{r.topic}: bad direction {r.direction!r}")
        if r.key_scheme not in ("per_topic", "per_message"):
            raise ConfigInvalid(f"rule {r.host}:{r.topic}: bad key_scheme {r.key_scheme!r}")
        if r.max_rate_hz is not None and r.max_rate_hz <= 0:
            raise ConfigInvalid(f"rule {r.host}:{r.topic}: max_rate_hz must be positive")
        if r.direction == "to_chain":
            if (r.host, r.topic) in seen_to_chain:
                raise ConfigInvalid(
                    f"rule {r.host}:{r.topic}: duplicate to_chain relay for this host/topic")
            seen_to_chain.add((r.host, r.topic))
    for r in rules:
        if r.direction == "from_chain" and (r.host, r.topic) in seen_to_chain:
            raise ConfigInvalid(
                f"rule {r.host}:{r.topic}: from_chain republish would loop into "
                f"the to_chain relay on the same host")


def validate_origin(key: str, creator: str, registry: dict[str, str]) -> bool:
    """True if `creator` may publish assets under `key` per the prefix registry.
    Keys matching no registered prefix are unrestricted."""
    for prefix, owner in registry.items():
        if key.startswith(prefix):
            return creator == owner
    return True


@dataclass
class BridgeCounters:
    relayed_to_chain: int = 0
    relayed_from_chain: int = 0
    suppressed_echo: int = 0
    dropped_rate_limit: int = 0
    decode_errors: int = 0
    rejected: int = 0
    origin_dropped: int = 0

    @property
    def relayed(self) -> int:
        return self.relayed_to_chain + self.relayed_from_chain

    def as_dict(self) -> dict:
        return {"relayed": self.relayed,
                "relayed_to_chain": self.relayed_to_chain,
                "relayed_from_chain": self.relayed_from_chain,
                "suppressed_echo": self.suppressed_echo,
                "dropped_rate_limit": self.dropped_rate_limit,
                "decode_errors": self.decode_errors,
                "rejected": self.rejected,
                "origin_dropped": self.origin_dropped}


# -- ledger-side adapter -------------------------------------------------------

class LedgerSide:
    """Receives uplink frames, submits transactions, answers polls, and (in
    events mode) taps chaincode events onto each host's downlink."""

    def __init__(self, ledger: Ledger, net: Network, loop: EventLoop, driver):
        self.ledger = ledger
        self.net = net
        self.loop = loop
        self.driver = driver
        self.bridges: dict[str, "HostBridge"] = {}

    def attach(self, bridge: "HostBridge") -> None:
        self.bridges[bridge.host] = bridge
        self.net.set_receiver(bridge.host, "ledger", self._on_uplink)

    def tap_events(self, host: str, channel_id: str, identity_id: str) -> None:
        from_block = self.ledger.tip_number(channel_id) + 1

        def forward(ev: ChaincodeEvent):
            creator = self.ledger.creator_of(ev.channel_id, ev.tx_id)
            self.net.send("ledger", host, ("event", ev, creator))

        self.ledger.subscribe_events(channel_id, from_block, forward, identity_id)

    def _on_uplink(self, frame) -> None:
        kind = frame[0]
        if kind == "submit":
            _, tx, origin_host = frame
            bridge = self.bridges.get(origin_host)
            try:
                self.ledger.submit_transaction(tx, self.loop.now_ns)
                if bridge is not None and bridge.stages is not None:
                    bridge.stages.setdefault(tx.tx_id, {})["submit_ns"] = self.loop.now_ns
            except LedgerError:
                if bridge is not None:
                    bridge.counters.rejected += 1
                return
            self.driver.poke()
        elif kind == "poll":
            _, host, channel_id, after, prefixes, identity_id = frame
            items = self.ledger.versions_since(channel_id, after, prefixes, identity_id)
            reply = [(v, tx.key, tx.value, tx.creator) for v, tx in items]
            self.net.send("ledger", host, ("poll_result", channel_id, reply))


# -- host bridge ----------------------------------------------------------------

class _RateLimiter:
    """Keep-latest limiter: at most one relay per 1/max_rate; while the gap is
    closed the newest message replaces (drops) the held one."""

    def __init__(self, max_rate_hz: float, loop: EventLoop):
        self.gap_ns = int(round(1e9 / max_rate_hz))
        self.loop = loop
        self.next_allowed = 0
        self.held: Optional[TopicMessage] = None
        self.flush_scheduled = False

    def offer(self, msg: TopicMessage):
        """Returns (msg, dropped) to send now, or (None, dropped) if held.

        A message relayed through an open slot supersedes any held older one;
        otherwise a same-tick race between the flush timer and a fresh arrival
        could relay both and break the cap."""
        now = self.loop.now_ns
        if now >= self.next_allowed:
            dropped = 1 if self.held is not None else 0
            self.held = None
            self.next_allowed = now + self.gap_ns
            return msg, dropped
        dropped = 0
        if self.held is not None:
            dropped = 1
        self.held = msg
        return None, dropped

    def take_flush(self) -> Optional[TopicMessage]:
        msg, self.held = self.held, None
        self.next_allowed = self.loop.now_ns + self.gap_ns
        return msg


class HostBridge:
    """One bridge process per host: relays bus topics to the chain and chain
    assets back onto the bus, in either events or polling mode."""

    def __init__(self, host: str, bus: Bus, identity: Identity, net: Network,
                 loop: EventLoop, rules, origin_registry: dict[str, str],
                 stages: Optional[dict] = None,
                 signers: Optional[dict[str, Identity]] = None):
        check_rules(rules)
        self.host = host
        self.bus = bus
        self.identity = identity  # membership identity for subscriptions/polls
        self.signers = signers or {}  # per-topic signing identity, else `identity`
        self.net = net
        self.loop = loop
        self.rules = [r for r in rules if r.host == host]
        self.origin_registry = origin_registry
        self.counters = BridgeCounters()
        self.stages = stages
        self.event_tap = None  # optional (key, block_number) observer
        self._tx_n = 0
        self._limiters: dict[str, _RateLimiter] = {}
        self._pub_seq: dict[str, int] = {}
        self.to_chain_rules = [r for r in self.rules if r.direction == "to_chain"]
        self.from_chain_rules = {r.topic: r for r in self.rules
                                 if r.direction == "from_chain"}
        for rule in self.to_chain_rules:
            if rule.max_rate_hz:
                self._limiters[rule.topic] = _RateLimiter(rule.max_rate_hz, loop)
            self.bus.subscribe(rule.topic,
                               lambda msg, rule=rule: self._on_local(rule, msg))

    # -- to chain -------------------------------------------------------------

    def _on_local(self, rule: RelayRule, msg: TopicMessage) -> None:
        if msg.origin_host != self.host:
            # the bus only carries local traffic plus our own republishes;
            # never relay what came from the chain in the first place
            return
        limiter = self._limiters.get(rule.topic)
        if limiter is None:
            self._relay(rule, msg, msg.stamp)
            return
        send_now, dropped = limiter.offer(msg)
        self.counters.dropped_rate_limit += dropped
        if send_now is not None:
            self._relay(rule, send_now, send_now.stamp)
        elif not limiter.flush_scheduled:
            limiter.flush_scheduled = True
            self.loop.call_at(limiter.next_allowed,
                              lambda: self._flush(rule, limiter))

    def _flush(self, rule: RelayRule, limiter: _RateLimiter) -> None:
        limiter.flush_scheduled = False
        msg = limiter.take_flush()
        if msg is not None:
            self._relay(rule, msg, msg.stamp)

    def _relay(self, rule: RelayRule, msg: TopicMessage, pub_ns: int) -> None:
        asset = asset_from_message(msg, rule.key_scheme)
        now = self.loop.now_ns
        self._tx_n += 1
        signer = self.signers.get(rule.topic, self.identity)
        tx = make_transaction(f"{self.host}:{self._tx_n:06d}",
                              rule.channel_id, "set", asset.asset_id,
                              asset.to_bytes(), signer, now)
        if self.stages is not None:
            self.stages[tx.tx_id] = {"pub_ns": pub_ns, "sent_ns": now,
                                     "hold_ns": now - msg.stamp,
                                     "topic": msg.topic, "seq": msg.seq,
                                     "origin": self.host}
        self.net.send(self.host, "ledger", ("submit", tx, self.host))
        self.counters.relayed_to_chain += 1

    # -- from chain (events mode) ----------------------------------------------

    def on_downlink(self, frame) -> None:
        kind = frame[0]
        if kind == "event":
            _, ev, creator = frame
            if self.event_tap is not None:
                self.event_tap(ev.event_name, ev.key, ev.block_number)
            self._republish(ev.key, ev.payload, creator, ev.tx_id)
        elif kind == "poll_result":
            raise RuntimeError("poll_result on an events-mode bridge")

    def _republish(self, key: str, payload: bytes, creator: str,
                   tx_id: str) -> None:
        try:
            asset = Asset.from_bytes(payload)
        except (ValueError, KeyError, UnicodeDecodeError):
            self.counters.decode_errors += 1
            return
        rule = self.from_chain_rules.get(asset.topic)
        if rule is None:
            return
        msg = message_from_asset(asset)
        if msg.origin_host == self.host:
            self.counters.suppressed_echo += 1
            return
        if not validate_origin(asset.asset_id, creator, self.origin_registry):
            self.counters.origin_dropped += 1
            return
        if self.stages is not None and tx_id in self.stages:
            self.stages[tx_id]["republished_ns"] = self.loop.now_ns
        self.bus.publish(msg)
        self.counters.relayed_from_chain += 1


# -- polling bridge -------------------------------------------------------------

@dataclass
class PollCache:
    poll_interval_ms: float = 100.0
    per_asset_cost_ms: float = 1.5
    versions: dict[str, tuple[int, int]] = field(default_factory=dict)
    high_water: tuple[int, int] = (0, -1)

    def advance(self, key: str, version: tuple[int, int]) -> None:
        prev = self.versions.get(key)
        assert prev is None or version > prev, "cached versions must increase"
        self.versions[key] = version
        if version > self.high_water:
            self.high_water = version


class PollingBridge(HostBridge):
    """HostBridge whose from-chain path is a metadata-cache poller."""

    def __init__(self, host, bus, identity, net, loop, rules, origin_registry,
                 cache: PollCache, stages=None, signers=None):
        super().__init__(host, bus, identity, net, loop, rules, origin_registry,
                         stages, signers)
        self.cache = cache
        self.polls = 0
        self.slipped_polls = 0
        self._channels = sorted({r.channel_id for r in self.rules
                                 if r.direction == "from_chain"})
        self._prefixes = tuple(sorted(t for t in self.from_chain_rules))
        self._cycle_start = 0
        self._busy_until = 0

    def start(self) -> None:
        if self._channels:
            self.loop.call_later(0, self._poll)

    def _poll(self) -> None:
        self._cycle_start = self.loop.now_ns
        self.polls += 1
        for channel_id in self._channels:
            self.net.send(self.host, "ledger",
                          ("poll", self.host, channel_id, self.cache.high_water,
                           self._prefixes, self.identity.identity_id))

    def on_downlink(self, frame) -> None:
        kind = frame[0]
        if kind == "poll_result":
            _, channel_id, items = frame
            self._consume(items)
        elif kind == "event":
            raise RuntimeError("event frame on a polling-mode bridge")

    def _consume(self, items) -> None:
        now = self.loop.now_ns
        cost = self.cache.per_asset_cost_ms * MS
        t = now
        for i, (version, key, value, creator) in enumerate(items):
            t = quantize(now + int(round((i + 1) * cost)))
            self.loop.call_at(t, lambda it=(version, key, value, creator):
                              self._process(it))
        done = t
        interval = int(round(self.cache.poll_interval_ms * MS))
        nominal = self._cycle_start + interval
        if done > nominal:
            self.slipped_polls += 1
        self.loop.call_at(max(nominal, done), self._poll)

    def _process(self, item) -> None:
        version, key, value, creator = item
        self.cache.advance(key, version)
        if self.event_tap is not None:
            self.event_tap("set", key, version[0])
        self._republish(key, value, creator, tx_id="")
