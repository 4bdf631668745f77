"""
Sixteen drones on one channel
=============================

Event delivery keeps per-message cost flat, so adding drones multiplies
throughput without queueing collapse: the ordering service just cuts
size-capped blocks faster, and latency *drops* below the single-drone
figure because fewer messages wait out the 150 ms batch timeout.
"""

from ledgerbridge.config import default_config
from ledgerbridge.scenario import run_scenario

# One drone as the baseline, then the fleet. 30 s keeps the demo short;
# rates scale linearly with duration.
for count in (1, 16):
    report = run_scenario(default_config(duration_s=30.0,
                                         drones__count=count))
    s = report.latency_summary()
    msgs = report.summary_dict()["messages"]
    blocks = report.blocks["teleop"]
    print(f"{count:>2} drone(s): {msgs['offered_msg_s']:7.1f} msg/s, "
          f"median {s['median']:5.1f} ms, "
          f"{blocks['count']} blocks {blocks['by_reason']}, "
          f"wall {report.wall_seconds:.1f} s")

# Per-drone medians stay tightly grouped: the channel is shared fairly.
per = report.summary_dict()["latency_ms"]["per_drone"]
medians = [v["median"] for v in per.values()]
print(f"\nper-drone medians: min {min(medians):.0f} ms, "
      f"max {max(medians):.0f} ms across {len(medians)} drones")
