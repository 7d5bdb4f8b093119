import base64
import json
import threading
import time

import pytest
from websockets.sync.client import connect

from overrow.crsf import encode_rc_channels
from overrow.runlog import densify_trace, read_trace
from overrow.server import ServeSession
from overrow.world import load_scenario, run_scripted
from server_util import serve_lockstep_trace


def centered(throttle=992):
    ch = [992] * 16
    ch[1] = throttle
    return ch


@pytest.fixture(scope="module")
def row_pass(scenario_dir):
    trace = read_trace(scenario_dir / "row_pass.trace.jsonl")
    world = load_scenario(scenario_dir / "row_pass_field.json")
    return scenario_dir / "row_pass_field.json", densify_trace(trace, world.n_ticks)


def test_lockstep_session_equals_scripted_run(scenario_dir, row_pass):
    path, dense = row_pass
    scripted = load_scenario(path)
    run_scripted(scripted, dense)
    served, client_log = serve_lockstep_trace(path, dense)
    assert client_log["hello"]["type"] == "hello"
    assert client_log["hello"]["proto"] == 1
    assert client_log["hello"]["role"] == "driver"
    assert client_log["hello"]["scenario"]["track_width_m"] == 1.42
    assert served.log.sha256() == scripted.log.sha256()
    assert served.log.lines == scripted.log.lines
    assert client_log["telemetry"], "no telemetry received"


def test_raw_frame_uplink_equals_sticks_uplink(row_pass):
    path, dense = row_pass

    def as_frame(tick, channels):
        data = encode_rc_channels(channels)
        return {"type": "frame", "data": base64.b64encode(data).decode()}

    via_sticks, _ = serve_lockstep_trace(path, dense)
    via_frames, _ = serve_lockstep_trace(path, dense, message_for=as_frame)
    assert via_frames.log.sha256() == via_sticks.log.sha256()


def test_malformed_messages_rejected_session_preserved(scenario_dir):
    world = load_scenario(scenario_dir / "row_pass_field.json")
    session = ServeSession(world, lockstep=True, realtime=False)
    server_thread = threading.Thread(target=session._server.serve_forever, daemon=True)
    server_thread.start()
    n_steps = 25
    outcome = {}

    def client():
        uri = f"ws://{session.address[0]}:{session.address[1]}"
        with connect(uri) as ws:
            json.loads(ws.recv())              # hello
            ws.send("this is not json")
            ws.send(json.dumps({"type": "sticks", "channels": [1, 2]}))
            ws.send(json.dumps({"type": "frame", "data": "!!!notbase64"}))
            ws.send(json.dumps({"type": "warp", "factor": 9}))
            errors = 0
            for _ in range(4):
                msg = json.loads(ws.recv(timeout=10))
                assert msg["type"] == "error"
                errors += 1
            outcome["errors"] = errors
            for _ in range(n_steps):
                ws.send(json.dumps({"type": "sticks", "channels": centered(1811)}))
            while True:
                msg = json.loads(ws.recv(timeout=30))
                if msg["type"] == "bye":
                    break
            outcome["done"] = True

    thread = threading.Thread(target=client)
    thread.start()
    # session only advances on the valid inputs
    while world.tick < n_steps:
        item = session._inputs.get(timeout=10)
        session._apply(item)
        session._step_once(0.0)
    session.stop()
    session._broadcast({"type": "bye", "reason": "test over"})
    session._server.shutdown()
    server_thread.join(timeout=5)
    thread.join(timeout=10)
    assert outcome.get("errors") == 4
    assert outcome.get("done")
    assert session.rejected_messages == 4
    assert session.uplink_messages == n_steps
    assert world.tick == n_steps


def test_spectator_read_only_and_takeover(scenario_dir):
    world = load_scenario(scenario_dir / "row_pass_field.json")
    session = ServeSession(world, lockstep=True, realtime=False)
    uri = f"ws://{session.address[0]}:{session.address[1]}"
    server_thread = threading.Thread(target=session._server.serve_forever, daemon=True)
    server_thread.start()
    try:
        driver = connect(uri)
        assert json.loads(driver.recv())["role"] == "driver"
        spectator = connect(uri)
        assert json.loads(spectator.recv())["role"] == "spectator"
        # spectator sticks are ignored outright
        spectator.send(json.dumps({"type": "sticks", "channels": centered(1811)}))
        driver.send(json.dumps({"type": "sticks", "channels": centered()}))
        item = session._inputs.get(timeout=10)
        assert session._inputs.empty()
        assert item[1][1] == 992
        # takeover flips the roles
        spectator.send(json.dumps({"type": "takeover"}))
        assert json.loads(spectator.recv(timeout=10))["role"] == "driver"
        spectator.send(json.dumps({"type": "sticks", "channels": centered(1811)}))
        item = session._inputs.get(timeout=10)
        assert item[1][1] == 1811
        driver.close()
        spectator.close()
    finally:
        session._server.shutdown()
        server_thread.join(timeout=5)


def realtime_session(scenario_dir, duration_s=3.0):
    world = load_scenario(scenario_dir / "row_pass_field.json")
    world.n_ticks = int(duration_s / world.dt)
    return ServeSession(world, lockstep=False, realtime=True)


def test_realtime_silence_triggers_failsafe(scenario_dir):
    session = realtime_session(scenario_dir, duration_s=2.5)
    world = session.world
    done = {}

    def client():
        uri = f"ws://{session.address[0]}:{session.address[1]}"
        with connect(uri) as ws:
            json.loads(ws.recv())
            # drive for ~1 s, then go silent past the 500 ms window
            for _ in range(50):
                ws.send(json.dumps({"type": "sticks", "channels": centered(1811)}))
                time.sleep(0.02)
            while True:
                msg = json.loads(ws.recv(timeout=30))
                if msg["type"] == "bye":
                    break
            done["ok"] = True

    thread = threading.Thread(target=client)
    thread.start()
    session.run()
    thread.join(timeout=30)
    assert done.get("ok")
    assert world.event_counts["failsafe"] >= 1
    final = world.log.records("tm")[-1]
    assert abs(final["speed_cps"][0]) < 0.02 * world.drive_cfg.no_load_speed_cps
    assert final["relays"] == [0, 0, 0, 0]


def test_realtime_stick_to_telemetry_latency(scenario_dir):
    session = realtime_session(scenario_dir, duration_s=4.0)
    result = {}

    def client():
        uri = f"ws://{session.address[0]}:{session.address[1]}"
        with connect(uri) as ws:
            json.loads(ws.recv())
            stop = threading.Event()

            def pump():
                # hold full throttle at 50 Hz like a transmitter would
                while not stop.is_set():
                    ws.send(json.dumps({"type": "sticks", "channels": centered(1811)}))
                    time.sleep(0.02)

            sender = threading.Thread(target=pump, daemon=True)
            t_first = time.monotonic()
            sender.start()
            latency = None
            while True:
                msg = json.loads(ws.recv(timeout=30))
                if msg["type"] == "telemetry" and abs(msg["speed_cps"][0]) > 0 \
                        and latency is None:
                    latency = time.monotonic() - t_first
                if msg["type"] == "bye":
                    break
            stop.set()
            result["latency"] = latency

    thread = threading.Thread(target=client)
    thread.start()
    session.run()
    thread.join(timeout=30)
    assert result.get("latency") is not None, "motion never showed up in telemetry"
    assert result["latency"] <= 0.100
