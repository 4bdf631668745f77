"""
A hash-chained ledger in five minutes
=====================================

Identities, channels, block cutting, chaincode events, and why tampering
is detectable. Everything here runs on plain integers for time: the ledger
itself has no clock, callers hand it nanosecond stamps.
"""

from ledgerbridge.ledger import (Identity, Ledger, OrderingConfig,
                                 make_transaction, replay_world_state)

MS = 1_000_000  # nanoseconds

# Two writers and one read-only auditor. Write scopes are key prefixes:
# the robot may only touch keys under /robot/, the operator under /ops/.
robot = Identity("robot", "orgA", b"robot-secret", ("/robot/",), ("demo",))
ops = Identity("ops", "orgB", b"ops-secret", ("/ops/",), ("demo",))
auditor = Identity("auditor", "orgC", b"auditor-secret", (), ("demo",))

led = Ledger()
for ident in (robot, ops, auditor):
    led.register_identity(ident)

# A channel orders transactions into blocks: a block is cut when 10
# transactions are pending or 150 ms after the oldest one arrived,
# whichever comes first.
led.create_channel("demo", OrderingConfig(max_message_count=10,
                                          batch_timeout_ms=150.0))

# Subscribe to chaincode events before writing anything; every committed
# transaction will fire exactly one event, in commit order.
events = []
led.subscribe_events("demo", 0, events.append, "auditor")

# Submit three writes at t = 0, 40, 90 ms. None of them reaches the batch
# size, so they sit in the ordering queue...
for i, t_ms in enumerate([0, 40, 90]):
    tx = make_transaction(f"tx{i}", "demo", "set", f"/robot/odom",
                          f"pose-{i}".encode(), robot, t_ms * MS)
    led.submit_transaction(tx, at=t_ms * MS)

print("deadline for the pending batch:", led.next_deadline() // MS, "ms")

# ...until the timeout expires. Driving the clock past it cuts one block
# holding all three transactions.
led.advance_ordering(150 * MS)
tip = led.blocks_of("demo")[-1]
print(f"block {tip.number}: {len(tip.transactions)} txs, "
      f"cut_reason={tip.cut_reason!r}")
print("events so far:", [(e.event_name, e.key, e.block_number)
                         for e in events])

# Writes outside an identity's scope are rejected before ordering.
try:
    bad = make_transaction("bad", "demo", "set", "/robot/odom", b"spoof",
                           ops, 200 * MS)
    led.submit_transaction(bad, at=200 * MS)
except Exception as exc:
    print("out-of-scope write rejected:", exc)

# World state is last-write-wins per key; replaying the chain from genesis
# must rebuild it exactly.
state = led.world_state("demo")
assert replay_world_state(led.blocks_of("demo")) == state
print("world state:", {k: v for k, (v, _ver) in state.items()})

# The chain verifies because every block header commits to its
# predecessor's hash and to a digest of its own transactions.
print("verify_chain:", led.verify_chain("demo"))

# Forge the recorded value of the first transaction and verification
# breaks: the data digest no longer matches the committed header.
victim = led.blocks_of("demo")[1].transactions[0]
object.__setattr__(victim, "value", b"forged")
print("verify_chain after tampering:", led.verify_chain("demo"))
