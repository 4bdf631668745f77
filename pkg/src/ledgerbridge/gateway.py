"""Live teleoperation gateway.

Serves one running scenario to human operators over a socket. The simulation
advances wall-paced (1 ms simulated per 1 ms wall) on a dedicated thread that
owns all scenario state; client connections run reader/writer threads that
talk to the loop thread only through queues. Frames are newline-delimited
JSON; a client may alternatively open the same port with an HTTP WebSocket
upgrade (for browsers), in which case each text message carries one frame.

Operator commands are injected onto the controller host's bus and travel
bridge -> ledger -> bridge -> robot exactly like scripted commands; there is
no side channel to the drones.
"""
from __future__ import annotations

import base64
import hashlib
import json
import math
import queue
import socket
import struct
import threading
import time
from typing import Optional

import numpy as np

from .clock import MS, SECOND
from .config import HOST_CONTROL, ScenarioConfig
from .errors import NotAuthorized, UnknownDrone
from .bus import Publisher
from .scenario import Scenario

TELEMETRY_PERIOD_NS = 100 * MS          # 10 Hz
SHARED_OVERRIDE_NS = 2 * SECOND         # manual wins for 2 s after last input
MODES = ("scripted", "manual", "shared")

_WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _finite(*vals) -> bool:
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals)


class _Client:
    _n = 0

    def __init__(self, conn: socket.socket, server: "GatewayServer"):
        _Client._n += 1
        self.client_id = f"client{_Client._n}"
        self.conn = conn
        self.server = server
        self.selected: Optional[str] = None
        self.websocket = False
        self.outbox: queue.Queue = queue.Queue(maxsize=1024)
        self.alive = True

    # -- outgoing ---------------------------------------------------------

    def send(self, frame: dict) -> None:
        """Queue a frame; drops the oldest telemetry when the client lags."""
        try:
            self.outbox.put_nowait(frame)
        except queue.Full:
            try:
                self.outbox.get_nowait()
            except queue.Empty:
                pass
            try:
                self.outbox.put_nowait(frame)
            except queue.Full:
                pass

    def _writer(self) -> None:
        try:
            while self.alive:
                frame = self.outbox.get()
                if frame is None:
                    break
                data = json.dumps(frame, separators=(",", ":"))
                if self.websocket:
                    self.conn.sendall(_ws_encode(data))
                else:
                    self.conn.sendall(data.encode() + b"\n")
        except OSError:
            pass
        finally:
            self.alive = False
            try:
                self.conn.close()
            except OSError:
                pass

    # -- incoming ---------------------------------------------------------

    def _reader(self) -> None:
        try:
            buf = b""
            first = self.conn.recv(4096)
            if not first:
                return
            if first.startswith(b"GET "):
                buf = self._ws_handshake(first)
                if buf is None:
                    return
                self._ws_reader(buf)
                return
            buf = first
            while self.alive:
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        self.server._enqueue(self, line)
                chunk = self.conn.recv(4096)
                if not chunk:
                    break
                buf += chunk
        except OSError:
            pass
        finally:
            self.alive = False
            self.send_close()
            self.server._drop(self)

    def send_close(self) -> None:
        try:
            self.outbox.put_nowait(None)
        except queue.Full:
            self.alive = False

    # -- websocket support --------------------------------------------------

    def _ws_handshake(self, first: bytes) -> Optional[bytes]:
        data = first
        while b"\r\n\r\n" not in data:
            chunk = self.conn.recv(4096)
            if not chunk:
                return None
            data += chunk
        head, rest = data.split(b"\r\n\r\n", 1)
        key = None
        for line in head.decode("latin-1").split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            self.conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            return None
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_MAGIC).encode()).digest()).decode()
        self.conn.sendall(
            ("HTTP/1.1 101 Switching Protocols\r\n"
             "Upgrade: websocket\r\nConnection: Upgrade\r\n"
             f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
        self.websocket = True
        return rest

    def _ws_reader(self, buf: bytes) -> None:
        while self.alive:
            frame = _ws_decode(self.conn, buf)
            if frame is None:
                break
            opcode, payload, buf = frame
            if opcode == 8:           # close
                break
            if opcode == 9:           # ping -> pong
                self.conn.sendall(_ws_encode_raw(10, payload))
                continue
            if opcode in (1, 2) and payload.strip():
                for part in payload.split(b"\n"):
                    if part.strip():
                        self.server._enqueue(self, part)


def _ws_encode(text: str) -> bytes:
    return _ws_encode_raw(1, text.encode())


def _ws_encode_raw(opcode: int, payload: bytes) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 65536:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def _ws_decode(conn: socket.socket, buf: bytes):
    """Read one frame; returns (opcode, payload, remainder) or None on EOF."""
    def need(k: int) -> Optional[bytes]:
        nonlocal buf
        while len(buf) < k:
            chunk = conn.recv(4096)
            if not chunk:
                return None
            buf += chunk
        return buf

    if need(2) is None:
        return None
    b0, b1 = buf[0], buf[1]
    opcode = b0 & 0x0F
    masked = b1 & 0x80
    n = b1 & 0x7F
    offset = 2
    if n == 126:
        if need(4) is None:
            return None
        n = struct.unpack(">H", buf[2:4])[0]
        offset = 4
    elif n == 127:
        if need(10) is None:
            return None
        n = struct.unpack(">Q", buf[2:10])[0]
        offset = 10
    mask = b""
    if masked:
        if need(offset + 4) is None:
            return None
        mask = buf[offset:offset + 4]
        offset += 4
    if need(offset + n) is None:
        return None
    payload = buf[offset:offset + n]
    if masked:
        payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
    return opcode, payload, buf[offset + n:]


class GatewayServer:
    """Wall-paced scenario with a newline-JSON (or WebSocket) control socket.

    The loop thread is the only one touching the scenario; it drains the
    command queue between simulation slices and fans telemetry out to client
    send queues.
    """

    def __init__(self, cfg: ScenarioConfig, host: str = "127.0.0.1",
                 port: int = 0, client_identity: str = "controller",
                 realtime: bool = True):
        self.cfg = cfg
        self.scenario = Scenario(cfg)
        self.client_identity = client_identity
        self.realtime = realtime
        self.mode = "scripted"
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._commands: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._manual: dict[str, tuple[str, int]] = {}  # drone -> (client, last input ns)
        self._chain_odom: dict[str, dict] = {}         # drone -> latest bridged odom
        self._cmd_pubs: dict[str, Publisher] = {}
        self._last_block = 0
        self._loop_thread: Optional[threading.Thread] = None

        scn = self.scenario
        scn.cmd_gate = self._allow_scripted
        bus_b = scn.buses[HOST_CONTROL]
        for did in cfg.drone_ids():
            bus_b.subscribe(cfg.odom_topic(did),
                            lambda msg, did=did: self._on_chain_odom(did, msg))
            self._cmd_pubs[did] = Publisher(bus_b, cfg.cmd_topic(did),
                                            "geometry_msgs/Twist")
        for bridge in scn.bridges.values():
            bridge.event_tap = self._on_chain_event

        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.address = self._sock.getsockname()

    # -- scenario-side hooks (loop thread) ------------------------------------

    def _allow_scripted(self, drone_id: str) -> bool:
        if self.mode == "manual":
            return False
        if self.mode == "shared":
            owner = self._manual.get(drone_id)
            if owner is not None:
                _, last = owner
                return self.scenario.loop.now_ns - last >= SHARED_OVERRIDE_NS
        return True

    def _on_chain_odom(self, drone_id: str, msg) -> None:
        self._chain_odom[drone_id] = {"pose": (msg.payload["x"], msg.payload["y"],
                                               msg.payload["z"]),
                                      "stamp": msg.stamp}

    def _on_chain_event(self, name: str, key: str, block: int) -> None:
        self._last_block = max(self._last_block, block)
        self._broadcast({"type": "event", "name": name, "key": key,
                         "block": block})

    # -- client management ------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            client = _Client(conn, self)
            with self._clients_lock:
                self._clients.append(client)
            threading.Thread(target=client._reader, daemon=True).start()
            threading.Thread(target=client._writer, daemon=True).start()

    def _drop(self, client: _Client) -> None:
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)

    def _broadcast(self, frame: dict) -> None:
        with self._clients_lock:
            targets = list(self._clients)
        for c in targets:
            c.send(frame)

    def _enqueue(self, client: _Client, raw: bytes) -> None:
        self._commands.put((client, raw))

    # -- command handling (loop thread) ----------------------------------------

    def _handle(self, client: _Client, raw: bytes) -> None:
        try:
            frame = json.loads(raw.decode())
            if not isinstance(frame, dict):
                raise ValueError("frame must be an object")
        except (ValueError, UnicodeDecodeError) as e:
            client.send({"type": "ack", "ok": False, "detail": f"bad frame: {e}"})
            return
        kind = frame.get("type")
        if kind == "cmd_vel":
            self._handle_cmd_vel(client, frame)
        elif kind == "set_mode":
            mode = frame.get("mode")
            if mode not in MODES:
                client.send({"type": "ack", "ok": False,
                             "detail": f"unknown mode {mode!r}"})
                return
            self.mode = mode
            self.scenario.gateway_log.append(
                {"t_ns": self.scenario.loop.now_ns, "mode": mode,
                 "client": client.client_id})
            client.send({"type": "ack", "ok": True, "detail": f"mode {mode}"})
        elif kind == "select":
            did = frame.get("drone_id")
            if did not in self.scenario.drones:
                client.send({"type": "ack", "ok": False,
                             "detail": f"unknown drone {did!r}"})
                return
            client.selected = did
            client.send({"type": "ack", "ok": True, "detail": f"selected {did}"})
        else:
            client.send({"type": "ack", "ok": False,
                         "detail": f"unknown frame type {kind!r}"})

    def _handle_cmd_vel(self, client: _Client, frame: dict) -> None:
        try:
            did = frame.get("drone_id") or client.selected
            if did is None:
                raise UnknownDrone("no drone selected")
            if did not in self.scenario.drones:
                raise UnknownDrone(f"unknown drone {did!r}")
            if self.mode == "scripted":
                client.send({"type": "ack", "ok": False,
                             "detail": "session is in scripted mode"})
                return
            owner = self._manual.get(did)
            now = self.scenario.loop.now_ns
            if (owner is not None and owner[0] != client.client_id
                    and now - owner[1] < SHARED_OVERRIDE_NS):
                client.send({"type": "ack", "ok": False,
                             "detail": f"{did} is driven by another client"})
                return
            ident = self.scenario.ledger.identities.get(self.client_identity)
            if ident is None or not ident.may_write(self.cfg.cmd_topic(did)):
                raise NotAuthorized(
                    f"identity {self.client_identity!r} may not command {did}")
            vx, vy, vz = frame.get("vx"), frame.get("vy"), frame.get("vz")
            if not _finite(vx, vy, vz):
                client.send({"type": "ack", "ok": False,
                             "detail": "vx/vy/vz must be finite numbers"})
                return
            v = np.array([vx, vy, vz], dtype=float)
            v_max = self.cfg.drones["v_max_m_s"]
            speed = float(np.linalg.norm(v))
            clamped = False
            if speed > v_max > 0:
                v *= v_max / speed
                clamped = True
            self._manual[did] = (client.client_id, now)
            odom = self._chain_odom.get(did)
            echo = odom["stamp"] if odom else 0
            self._cmd_pubs[did].publish(
                {"vx": float(v[0]), "vy": float(v[1]), "vz": float(v[2]),
                 "echo_stamp": echo}, stamp=now)
            detail = f"cmd {did}"
            if clamped:
                detail += f" (clamped to {v_max} m/s)"
            client.send({"type": "ack", "ok": True, "detail": detail})
        except (UnknownDrone, NotAuthorized) as e:
            client.send({"type": "ack", "ok": False,
                         "detail": f"{type(e).__name__}: {e}"})

    # -- telemetry (loop thread) --------------------------------------------------

    def _telemetry_frame(self) -> dict:
        scn = self.scenario
        drones = []
        for did in sorted(scn.drones):
            true_pose = [float(v) for v in scn.drones[did].position]
            odom = self._chain_odom.get(did)
            chain_pose = list(odom["pose"]) if odom else true_pose
            drones.append({"id": did, "chain_pose": chain_pose,
                           "true_pose": true_pose})
        values = [s.two_way_ms for s in scn.samples]
        if values:
            lat = {"median": float(np.median(values)),
                   "p95": float(np.percentile(values, 95))}
        else:
            lat = {"median": 0.0, "p95": 0.0}
        return {"type": "telemetry", "t_ns": scn.loop.now_ns, "drones": drones,
                "latency_ms": lat, "block": self._last_block}

    # -- main loop -----------------------------------------------------------------

    def _run_loop(self) -> None:
        scn = self.scenario
        duration_ns = int(self.cfg.duration_s * SECOND)
        next_telemetry = 0
        wall0 = time.monotonic()
        while not self._stop.is_set():
            if self.realtime:
                target = min(duration_ns,
                             int((time.monotonic() - wall0) * 1e9))
            else:
                target = min(duration_ns, scn.loop.now_ns + 5 * MS)
            while True:
                try:
                    client, raw = self._commands.get_nowait()
                except queue.Empty:
                    break
                self._handle(client, raw)
            if target > scn.loop.now_ns:
                scn.loop.run_until(target)
            if scn.loop.now_ns >= next_telemetry:
                self._broadcast(self._telemetry_frame())
                next_telemetry = scn.loop.now_ns + TELEMETRY_PERIOD_NS
            if scn.loop.now_ns >= duration_ns:
                break
            # always yield so client reader/writer threads get scheduled;
            # non wall-paced sessions still advance ~25x faster than wall
            time.sleep(0.002 if self.realtime else 0.0002)
        self._stop.set()

    # -- lifecycle -------------------------------------------------------------------

    def start(self) -> None:
        self._loop_thread = threading.Thread(target=self._run_loop, daemon=True)
        self._loop_thread.start()
        threading.Thread(target=self._accept_loop, daemon=True).start()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.wait(0.2):
                pass
        except KeyboardInterrupt:
            pass
        self.stop()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        if self._loop_thread is not None:
            self._loop_thread.join(timeout=5)
        with self._clients_lock:
            targets = list(self._clients)
        for c in targets:
            c.send_close()

    def report(self):
        return self.scenario.build_report()
