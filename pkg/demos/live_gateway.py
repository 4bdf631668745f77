"""
Driving the live gateway by hand
================================

`ledgerbridge run --live` wraps a scenario in a wall-paced server speaking
newline-delimited JSON (and WebSocket, for browsers: see frontend/). This
script is a minimal client: it takes manual control, nudges the drone, and
watches telemetry and chain events stream back.
"""

import json
import socket
import time

from ledgerbridge.config import default_config
from ledgerbridge.gateway import GatewayServer

# An in-process server on a random port; `--live --listen` does the same
# from the command line.
server = GatewayServer(default_config(duration_s=30.0), port=0)
server.start()
print("gateway listening on %s:%d" % server.address)

sock = socket.create_connection(server.address)
buf = b""


def send(**frame):
    sock.sendall(json.dumps(frame).encode() + b"\n")


def frames():
    global buf
    while True:
        while b"\n" not in buf:
            buf += sock.recv(4096)
        line, buf = buf.split(b"\n", 1)
        yield json.loads(line)


reader = frames()

# Take manual control of drone0. In manual mode the waypoint controller is
# gated off and cmd_vel frames from this socket drive the robot; commands
# still travel through the chain like any scripted ones.
send(type="set_mode", mode="manual")
send(type="select", drone_id="drone0")

# Nudge forward for two seconds, then stop, printing what comes back.
t_end = time.monotonic() + 2.0
next_cmd = 0.0
seen = {"telemetry": 0, "event": 0, "ack": 0}
while time.monotonic() < t_end:
    if time.monotonic() >= next_cmd:
        send(type="cmd_vel", vx=0.3, vy=0.0, vz=0.0)
        next_cmd = time.monotonic() + 0.1
    frame = next(reader)
    seen[frame["type"]] = seen.get(frame["type"], 0) + 1
    if frame["type"] == "telemetry" and seen["telemetry"] % 5 == 1:
        d = frame["drones"][0]
        lat = frame["latency_ms"]
        med = "-" if lat is None else f"{lat['median']:.0f} ms"
        print(f"  t(block {frame['block']:>3}) pose "
              f"({d['true_pose'][0]:+.2f}, {d['true_pose'][1]:+.2f}) "
              f"median {med}")
send(type="cmd_vel", vx=0.0, vy=0.0, vz=0.0)
time.sleep(0.5)

print("frames received:", seen)
server.stop()

# The whole session is an ordinary run: the report and chain are intact.
report = server.report()
print(f"session: {len(report.samples)} samples, "
      f"{len(server.scenario.applied_commands)} commands applied, "
      f"chain verified: {report.blocks['teleop']['verified']}")
