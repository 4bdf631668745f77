"""
One message across the bridge
=============================

A single topic message travels from host A's bus over a jittered link to
the ledger, gets ordered into a block, and is republished from a chaincode
event onto host B's bus. The stage trace shows where each millisecond went.
"""

from ledgerbridge.bridge import HostBridge, LedgerSide, RelayRule
from ledgerbridge.bus import Bus, Publisher
from ledgerbridge.clock import MS, EventLoop
from ledgerbridge.ledger import Identity, Ledger, OrderingConfig
from ledgerbridge.netem import LinkSpec, Network
from ledgerbridge.scenario import LedgerDriver

# Each host gets a bridge identity allowed to write anywhere on the demo
# channel; the bridge signs relayed messages with it.
bridge_a = Identity("bridge-hostA", "orgA", b"a-secret", ("/",), ("demo",))
bridge_b = Identity("bridge-hostB", "orgB", b"b-secret", ("/",), ("demo",))

loop = EventLoop()
ledger = Ledger()
ledger.register_identity(bridge_a)
ledger.register_identity(bridge_b)
ledger.create_channel("demo", OrderingConfig(10, 150.0))
driver = LedgerDriver(ledger, loop)

# Four links model the two network paths: 50 ms nominal delay with
# +/- 10 ms of jitter, delivered in order.
net = Network(loop, seed=11)
for src, dst in [("hostA", "ledger"), ("ledger", "hostA"),
                 ("hostB", "ledger"), ("ledger", "hostB")]:
    net.add_link(LinkSpec(src, dst, base_delay_ms=50.0, jitter_ms=10.0))

# Relay rules: host A pushes /sensor/temp to the chain, host B republishes
# whatever commits there. The stages dict collects per-transaction stamps.
rules = [RelayRule("hostA", "/sensor/temp", "to_chain", "demo"),
         RelayRule("hostB", "/sensor/temp", "from_chain", "demo")]
stages: dict = {}


def stamp_commit(block):
    for tx in block.transactions:
        stages.setdefault(tx.tx_id, {})["commit_ns"] = block.commit_stamp


driver.on_commit.append(stamp_commit)
side = LedgerSide(ledger, net, loop, driver)
bus_a, bus_b = Bus("hostA"), Bus("hostB")
a = HostBridge("hostA", bus_a, bridge_a, net, loop, rules, {}, stages=stages)
b = HostBridge("hostB", bus_b, bridge_b, net, loop, rules, {}, stages=stages)
for bridge in (a, b):
    side.attach(bridge)
    net.set_receiver("ledger", bridge.host, bridge.on_downlink)
    side.tap_events(bridge.host, "demo", bridge.identity.identity_id)

received = []
bus_b.subscribe("/sensor/temp", received.append)

# Publish once at t=0 and run the event loop for half a simulated second.
pub = Publisher(bus_a, "/sensor/temp", "sensor_msgs/Temperature")
loop.call_at(0, lambda: pub.publish({"celsius": 21.5}, stamp=loop.now_ns))
loop.run_until(500 * MS)

msg = received[0]
print(f"host B received {msg.payload} (origin={msg.origin_host}, "
      f"stamp={msg.stamp})")

# The staged timeline of the one transaction that carried it:
(tx_id, st), = stages.items()
print(f"\nstage trace for {tx_id}:")
for name in ("pub_ns", "sent_ns", "submit_ns", "commit_ns", "republished_ns"):
    print(f"  {name:<15} t = {st[name] / MS:6.1f} ms")
print(f"\none-way total: {st['republished_ns'] / MS:.1f} ms "
      f"(uplink + batch timeout + downlink)")
