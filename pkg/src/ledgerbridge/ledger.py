"""Permissioned ledger state machine: identities, ordering, blocks, events.

One Ledger holds the identity registry and any number of channels. Each
channel is an independent ordering queue, hash chain and key-value world
state. The ledger owns no clock: submit_transaction() and advance_ordering()
take explicit timestamps, and whoever drives the simulation decides when to
call them. Event subscribers are invoked synchronously during commit, in
block order then intra-block order; submissions made from inside a callback
are deferred to the next advance_ordering call rather than entering the
batch being committed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .encoding import b64e, canon, digest, sign
from .errors import BadSignature, Unauthorized, UnknownBlock

GENESIS_PREV = "0" * 64

METHODS = ("set", "delete")


@dataclass(frozen=True)
class Identity:
    identity_id: str
    org: str
    signing_secret: bytes
    write_scopes: tuple[str, ...]  # key prefixes this identity may write
    channels: tuple[str, ...]

    def may_write(self, key: str) -> bool:
        return any(key.startswith(p) for p in self.write_scopes)


@dataclass(frozen=True)
class Transaction:
    tx_id: str
    channel_id: str
    method: str  # "set" | "delete"
    key: str
    value: bytes
    creator: str
    signature: str
    client_stamp: int  # ns since scenario start, set when the client signed

    def signing_digest(self, secret: bytes) -> str:
        return sign(secret, self.channel_id, self.method, self.key,
                    self.value, self.client_stamp)

    def to_dict(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "method": self.method,
            "key": self.key,
            "value_b64": b64e(self.value),
            "creator": self.creator,
            "client_stamp_ns": self.client_stamp,
        }


def make_transaction(tx_id: str, channel_id: str, method: str, key: str,
                     value: bytes, identity: Identity, client_stamp: int) -> Transaction:
    sig = sign(identity.signing_secret, channel_id, method, key, value, client_stamp)
    return Transaction(tx_id, channel_id, method, key, value,
                       identity.identity_id, sig, client_stamp)


@dataclass(frozen=True)
class Block:
    number: int
    prev_hash: str
    data_hash: str
    transactions: tuple[Transaction, ...]
    cut_reason: str  # "genesis" | "size" | "timeout"
    commit_stamp: int

    def header_digest(self) -> str:
        return digest(canon([self.number, self.prev_hash, self.data_hash]))


def data_digest(transactions) -> str:
    return digest(canon([{**t.to_dict(), "signature": t.signature} for t in transactions]))


@dataclass(frozen=True)
class ChaincodeEvent:
    channel_id: str
    event_name: str  # the method that committed ("set" / "delete")
    key: str
    payload: bytes
    block_number: int
    tx_id: str


@dataclass(frozen=True)
class OrderingConfig:
    max_message_count: int = 10
    batch_timeout_ms: float = 150.0

    def __post_init__(self):
        if self.max_message_count <= 0:
            raise ValueError("max_message_count must be positive")
        if self.batch_timeout_ms <= 0:
            raise ValueError("batch_timeout_ms must be positive")

    @property
    def batch_timeout_ns(self) -> int:
        return int(round(self.batch_timeout_ms * 1_000_000))


class Subscription:
    def __init__(self, channel: "_Channel", from_block: int,
                 callback: Callable[[ChaincodeEvent], None]):
        self._channel = channel
        self.from_block = from_block
        self.callback = callback
        self.active = True

    def unsubscribe(self) -> None:
        self.active = False
        if self in self._channel.subscribers:
            self._channel.subscribers.remove(self)


class _Channel:
    def __init__(self, channel_id: str, ordering: OrderingConfig, stamp: int = 0):
        self.channel_id = channel_id
        self.ordering = ordering
        genesis = Block(0, GENESIS_PREV, data_digest(()), (), "genesis", stamp)
        self.blocks: list[Block] = [genesis]
        self.pending: list[tuple[Transaction, int]] = []  # (tx, arrival ns)
        self.state: dict[str, tuple[bytes, tuple[int, int]]] = {}
        self.subscribers: list[Subscription] = []
        # flat commit history for version scans: (version, key, value, creator, tx)
        self.committed: list[tuple[tuple[int, int], Transaction]] = []
        self.tx_index: dict[str, Transaction] = {}

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def next_deadline(self) -> Optional[int]:
        if not self.pending:
            return None
        return self.pending[0][1] + self.ordering.batch_timeout_ns


class Ledger:
    def __init__(self):
        self.identities: dict[str, Identity] = {}
        self._channels: dict[str, _Channel] = {}
        self._in_commit = False
        self._deferred: list[Transaction] = []

    # -- setup ---------------------------------------------------------------

    def register_identity(self, identity: Identity) -> None:
        if identity.identity_id in self.identities:
            raise ValueError(f"duplicate identity {identity.identity_id!r}")
        self.identities[identity.identity_id] = identity

    def create_channel(self, channel_id: str,
                       ordering: OrderingConfig = OrderingConfig(),
                       stamp: int = 0) -> None:
        if channel_id in self._channels:
            raise ValueError(f"duplicate channel {channel_id!r}")
        self._channels[channel_id] = _Channel(channel_id, ordering, stamp)

    def channel_ids(self):
        return list(self._channels)

    def _channel(self, channel_id: str) -> _Channel:
        ch = self._channels.get(channel_id)
        if ch is None:
            raise Unauthorized(f"unknown channel {channel_id!r}")
        return ch

    def _member(self, channel_id: str, identity_id: str) -> Identity:
        ident = self.identities.get(identity_id)
        if ident is None:
            raise Unauthorized(f"unknown identity {identity_id!r}")
        if channel_id not in ident.channels:
            raise Unauthorized(f"{identity_id!r} is not a member of {channel_id!r}")
        return ident

    # -- submission / ordering -----------------------------------------------

    def submit_transaction(self, tx: Transaction, at: int) -> str:
        """Validate and enqueue a transaction. Returns the tx_id (the ack).

        Raises BadSignature/Unauthorized; a rejected transaction leaves no
        trace in the pending queue or the chain.
        """
        ident = self._member(tx.channel_id, tx.creator)
        if tx.method not in METHODS:
            raise Unauthorized(f"unknown method {tx.method!r}")
        if tx.signature != tx.signing_digest(ident.signing_secret):
            raise BadSignature(f"signature mismatch for {tx.tx_id!r}")
        if not ident.may_write(tx.key):
            raise Unauthorized(
                f"{tx.creator!r} may not write {tx.key!r} (scopes {ident.write_scopes})")
        ch = self._channel(tx.channel_id)
        if tx.tx_id in ch.tx_index or any(p.tx_id == tx.tx_id for p, _ in ch.pending):
            raise ValueError(f"duplicate tx_id {tx.tx_id!r}")
        if self._in_commit:
            self._deferred.append(tx)
        else:
            ch.pending.append((tx, at))
        return tx.tx_id

    def has_deferred(self) -> bool:
        return bool(self._deferred)

    def next_deadline(self) -> Optional[int]:
        deadlines = [d for ch in self._channels.values()
                     if (d := ch.next_deadline()) is not None]
        return min(deadlines) if deadlines else None

    def advance_ordering(self, now: int) -> list[Block]:
        """Cut and commit every block due at `now`. Returns committed blocks."""
        if self._deferred:
            drained, self._deferred = self._deferred, []
            for tx in drained:
                self._channels[tx.channel_id].pending.append((tx, now))
        out = []
        for ch in self._channels.values():
            while True:
                cfg = ch.ordering
                if len(ch.pending) >= cfg.max_message_count:
                    batch = ch.pending[:cfg.max_message_count]
                    ch.pending = ch.pending[cfg.max_message_count:]
                    out.append(self._commit(ch, [t for t, _ in batch], "size", now))
                elif ch.pending and now - ch.pending[0][1] >= cfg.batch_timeout_ns:
                    batch, ch.pending = ch.pending, []
                    out.append(self._commit(ch, [t for t, _ in batch], "timeout", now))
                else:
                    break
        return out

    def _commit(self, ch: _Channel, txs: list[Transaction], reason: str,
                now: int) -> Block:
        prev = ch.tip
        block = Block(prev.number + 1, prev.header_digest(), data_digest(txs),
                      tuple(txs), reason, now)
        ch.blocks.append(block)
        events = []
        for i, tx in enumerate(txs):
            version = (block.number, i)
            if tx.method == "set":
                ch.state[tx.key] = (tx.value, version)
            else:
                ch.state.pop(tx.key, None)
            ch.committed.append((version, tx))
            ch.tx_index[tx.tx_id] = tx
            events.append(ChaincodeEvent(ch.channel_id, tx.method, tx.key,
                                         tx.value, block.number, tx.tx_id))
        self._in_commit = True
        try:
            for sub in list(ch.subscribers):
                if sub.active and block.number >= sub.from_block:
                    for ev in events:
                        sub.callback(ev)
        finally:
            self._in_commit = False
        return block

    # -- queries ---------------------------------------------------------

    def contract_get(self, channel_id: str, key: str, identity_id: str) -> Optional[bytes]:
        self._member(channel_id, identity_id)
        entry = self._channel(channel_id).state.get(key)
        return entry[0] if entry else None

    def contract_get_all(self, channel_id: str, identity_id: str) -> dict[str, bytes]:
        self._member(channel_id, identity_id)
        ch = self._channel(channel_id)
        return {k: v for k, (v, _) in ch.state.items()}

    def versions_since(self, channel_id: str, after: tuple[int, int],
                       prefixes: tuple[str, ...], identity_id: str):
        """Committed asset versions newer than `after`, oldest first.

        Only keys matching one of the prefixes are returned. This is the
        metadata-cache query used by the polling bridge; cost of consuming
        the result is modelled by the caller.
        """
        self._member(channel_id, identity_id)
        ch = self._channel(channel_id)
        lo, hi = 0, len(ch.committed)
        while lo < hi:  # first entry with version > after
            mid = (lo + hi) // 2
            if ch.committed[mid][0] <= after:
                lo = mid + 1
            else:
                hi = mid
        return [(v, tx) for v, tx in ch.committed[lo:]
                if any(tx.key.startswith(p) for p in prefixes)]

    def creator_of(self, channel_id: str, tx_id: str) -> str:
        return self._channel(channel_id).tx_index[tx_id].creator

    def subscribe_events(self, channel_id: str, from_block: int,
                         callback: Callable[[ChaincodeEvent], None],
                         identity_id: str) -> Subscription:
        """Replay events from `from_block` (past blocks synchronously, future
        ones as they commit). from_block beyond the tip just waits."""
        self._member(channel_id, identity_id)
        if from_block < 0:
            raise UnknownBlock(f"from_block {from_block} is negative")
        ch = self._channel(channel_id)
        sub = Subscription(ch, from_block, callback)
        ch.subscribers.append(sub)
        for block in ch.blocks[from_block:]:
            for i, tx in enumerate(block.transactions):
                callback(ChaincodeEvent(channel_id, tx.method, tx.key, tx.value,
                                        block.number, tx.tx_id))
        return sub

    def tip_number(self, channel_id: str) -> int:
        return self._channel(channel_id).tip.number

    def blocks_of(self, channel_id: str) -> list[Block]:
        return list(self._channel(channel_id).blocks)

    def world_state(self, channel_id: str) -> dict[str, tuple[bytes, tuple[int, int]]]:
        return dict(self._channel(channel_id).state)

    # -- verification ------------------------------------------------------

    def verify_chain(self, channel_id: str) -> bool:
        blocks = self._channel(channel_id).blocks
        g = blocks[0]
        if g.number != 0 or g.prev_hash != GENESIS_PREV or g.transactions:
            return False
        if g.data_hash != data_digest(()):
            return False
        for prev, block in zip(blocks, blocks[1:]):
            if block.number != prev.number + 1:
                return False
            if block.prev_hash != prev.header_digest():
                return False
            if block.data_hash != data_digest(block.transactions):
                return False
            if not block.transactions:
                return False
        return True


def replay_world_state(blocks) -> dict[str, tuple[bytes, tuple[int, int]]]:
    """Fold blocks into a world state; used to check replay determinism."""
    state: dict[str, tuple[bytes, tuple[int, int]]] = {}
    for block in blocks:
        for i, tx in enumerate(block.transactions):
            if tx.method == "set":
                state[tx.key] = (tx.value, (block.number, i))
            else:
                state.pop(tx.key, None)
    return state
