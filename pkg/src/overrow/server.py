"""Teleoperation serve mode: the simulator behind a WebSocket channel.

Wire protocol (versioned, JSON text frames):

  server -> client on connect:
    {"type": "hello", "proto": 1, "role": "driver"|"spectator",
     "scenario": {... render metadata ...}}
  client -> server:
    {"type": "sticks", "channels": [16 raw 11-bit values]}
    {"type": "frame", "data": "<base64 CRSF frame bytes>"}
    {"type": "takeover"}
  server -> client:
    {"type": "telemetry", "t_ms": ..., "pose": [...], "speed_cps": [...],
     "enc": [...], "batt_v": ..., "relays": [...], "link_ok": ...}
    {"type": "event", ...}
    {"type": "bye", "reason": ...}

Both uplink forms are normalized through the same byte codec the scripted
runner uses, so a served session and a scripted run of the same inputs
produce identical run logs. One client at a time is the authoritative
driver (first come, or explicit takeover); everyone else spectates.

The stepper is the only thread that mutates the world. Network ingest
pushes inputs onto a queue the stepper drains; telemetry fans out over
per-client locks and never blocks the stepper on a slow consumer.
"""

from __future__ import annotations

import base64
import binascii
import json
import queue
import threading
import time
import uuid
from collections import deque

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve

from .world import World

PROTO = 1


def scenario_metadata(world: World) -> dict:
    """What a rendering client needs to draw the field to scale."""
    layout = world.layout
    return {
        "name": world.scenario.get("name", "scenario"),
        "dt_s": world.dt,
        "track_width_m": world.robot.chassis.track_width,
        "wheel_width_m": world.robot.chassis.wheel_width,
        "clearance_m": world.robot.chassis.clearance,
        "row_groups": [
            {
                "origin_m": list(g.origin),
                "heading_rad": g.heading,
                "length_m": g.length,
                "row_offsets_m": list(g.row_offsets()),
            }
            for g in layout.row_groups
        ],
        "plots": [
            {"name": p.name, "polygon_m": [list(v) for v in p.polygon],
             "crop": p.crop}
            for p in layout.plots
        ],
        "start_pose": world.scenario.get("start_pose", {}),
    }


class _Client:
    """One connection with a bounded outbound queue.

    The stepper must never block on a slow consumer: sends are enqueued
    drop-oldest and a per-client thread drains the queue onto the socket.
    """

    QUEUE_LIMIT = 256

    def __init__(self, conn):
        self.conn = conn
        self.dropped = 0
        self._queue: deque = deque()
        self._cond = threading.Condition()
        self._closed = False
        self._sender = threading.Thread(target=self._drain, daemon=True)
        self._sender.start()

    def send(self, payload: dict) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self.QUEUE_LIMIT:
                self._queue.popleft()
                self.dropped += 1
            self._queue.append(json.dumps(payload))
            self._cond.notify()

    def _drain(self) -> None:
        while True:
            with self._cond:
                while not self._queue and not self._closed:
                    self._cond.wait()
                if self._closed and not self._queue:
                    return
                item = self._queue.popleft()
            try:
                self.conn.send(item)
            except (ConnectionClosed, OSError):
                self.close()
                return

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify()


class ServeSession:
    """One scenario served to one driver plus any number of spectators.

    lockstep=True consumes exactly one driver input per simulation tick
    (the replay-equivalence mode); otherwise the stepper free-runs at the
    scenario tick rate on the wall clock, sampling the latest input.
    """

    def __init__(self, world: World, host: str = "127.0.0.1", port: int = 0,
                 telemetry_hz: float = 20.0, lockstep: bool = False,
                 realtime: bool = True):
        self.world = world
        self.telemetry_hz = telemetry_hz
        self.lockstep = lockstep
        self.realtime = realtime
        self.session_id = uuid.uuid4().hex[:12]
        self._inputs: queue.Queue = queue.Queue()
        self._clients: list[_Client] = []
        self._driver: _Client | None = None
        self._clients_lock = threading.Lock()
        self._done = threading.Event()
        self.uplink_messages = 0
        self.rejected_messages = 0
        self._server = serve(self._handler, host, port)
        self.address = self._server.socket.getsockname()[:2]

    @property
    def client_count(self) -> int:
        with self._clients_lock:
            return len(self._clients)

    def stats(self) -> dict:
        """Session health: uplink frame counts, link stats, downlink drops."""
        link = self.world.link.stats
        with self._clients_lock:
            dropped = sum(c.dropped for c in self._clients)
        return {
            "session_id": self.session_id,
            "clients": self.client_count,
            "uplink_messages": self.uplink_messages,
            "rejected_messages": self.rejected_messages,
            "frames_ok": link.frames_ok,
            "crc_errors": link.crc_errors,
            "failsafes": link.failsafes,
            "telemetry_hz": self.telemetry_hz,
            "downlink_dropped": dropped,
        }

    # --- connection handling -------------------------------------------------

    def _handler(self, conn) -> None:
        client = _Client(conn)
        with self._clients_lock:
            self._clients.append(client)
            if self._driver is None:
                self._driver = client
            role = "driver" if self._driver is client else "spectator"
        client.send({"type": "hello", "proto": PROTO, "role": role,
                     "session": self.session_id,
                     "scenario": scenario_metadata(self.world)})
        try:
            for message in conn:
                self._on_message(client, message)
        except ConnectionClosed:
            pass
        finally:
            client.close()
            with self._clients_lock:
                if client in self._clients:
                    self._clients.remove(client)
                if self._driver is client:
                    self._driver = self._clients[0] if self._clients else None
            if self.lockstep and self._driver is None:
                self._done.set()

    def _on_message(self, client: _Client, message) -> None:
        try:
            msg = json.loads(message)
            kind = msg["type"]
        except (json.JSONDecodeError, TypeError, KeyError) as err:
            self.rejected_messages += 1
            client.send({"type": "error", "error": f"malformed message: {err}"})
            return
        if kind == "takeover":
            with self._clients_lock:
                self._driver = client
            client.send({"type": "hello", "proto": PROTO, "role": "driver",
                         "session": self.session_id,
                         "scenario": scenario_metadata(self.world)})
            return
        if kind not in ("sticks", "frame"):
            self.rejected_messages += 1
            client.send({"type": "error", "error": f"unknown message type {kind!r}"})
            return
        if client is not self._driver:
            # spectators are read-only
            return
        try:
            if kind == "sticks":
                channels = [int(v) for v in msg["channels"]]
                if len(channels) != 16:
                    raise ValueError(f"expected 16 channels, got {len(channels)}")
                item = ("sticks", channels)
            else:
                item = ("frame", base64.b64decode(msg["data"], validate=True))
        except (KeyError, ValueError, TypeError, binascii.Error) as err:
            self.rejected_messages += 1
            client.send({"type": "error", "error": f"bad {kind} message: {err}"})
            return
        self.uplink_messages += 1
        self._inputs.put(item)

    # --- stepping ------------------------------------------------------------

    def _apply(self, item) -> None:
        kind, payload = item
        if kind == "sticks":
            self.world.ingest_channels(payload)
        else:
            self.world.ingest_bytes(payload)

    def _broadcast(self, payload: dict) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send(payload)

    def _telemetry_message(self, record, link_ok: bool) -> dict:
        msg = {"type": "telemetry", "link_ok": link_ok}
        msg.update(record.as_dict())
        return msg

    def run(self) -> World:
        """Step the scenario to completion, then close every connection."""
        server_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        server_thread.start()
        try:
            if self.lockstep:
                self._run_lockstep()
            else:
                self._run_realtime()
        finally:
            self._broadcast({"type": "bye", "reason": "scenario complete"})
            self._flush_clients()
            self._server.shutdown()
            server_thread.join(timeout=5)
        return self.world

    def _flush_clients(self, timeout: float = 2.0) -> None:
        deadline = time.monotonic() + timeout
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            while time.monotonic() < deadline:
                with client._cond:
                    if not client._queue:
                        break
                time.sleep(0.01)

    def _run_lockstep(self) -> None:
        next_send = 0.0
        while self.world.tick < self.world.n_ticks and not self._done.is_set():
            try:
                item = self._inputs.get(timeout=30.0)
            except queue.Empty:
                break
            self._apply(item)
            next_send = self._step_once(next_send)

    def _run_realtime(self) -> None:
        period = self.world.dt
        next_tick = time.monotonic()
        next_send = 0.0
        while self.world.tick < self.world.n_ticks and not self._done.is_set():
            while True:
                try:
                    self._apply(self._inputs.get_nowait())
                except queue.Empty:
                    break
            next_send = self._step_once(next_send)
            next_tick += period
            delay = next_tick - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    def _step_once(self, next_send: float) -> float:
        events_before = len(self.world.log.lines)
        actions = self.world.step()
        for line in self.world.log.lines[events_before:]:
            record = json.loads(line)
            if record.get("k") == "ev":
                record["type"] = "event"
                self._broadcast(record)
        sim_time = self.world.tick * self.world.dt
        if sim_time >= next_send:
            link_ok = self.world.link.snapshot(self.world.time_ms).link_ok
            self._broadcast(self._telemetry_message(actions.telemetry, link_ok))
            next_send += 1.0 / self.telemetry_hz
        return next_send

    def stop(self) -> None:
        self._done.set()
