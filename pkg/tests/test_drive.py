import hashlib
import math
import struct

import pytest
from hypothesis import given, strategies as st

from overrow.config import load_robot_config
from overrow.crsf import CH_MAX
from overrow.drive import (ACK, CMD_READ_ENC_M1, CMD_READ_SPEED_M2, CMD_READ_VOLTAGE,
                           CMD_SET_SPEED_M1, DriveCommand, DriveController,
                           MotorChannelState, MotorDriver, MotorPlantConfig,
                           PacketSerialPort, PidGains, PidState, ProtocolError,
                           TelemetryBus, crc16_xmodem, default_gains,
                           encode_request, mix_differential, motor_plant_step,
                           pid_step)
from trace_util import reference_stick_trace, stick_state

unit = st.floats(-1.0, 1.0)


@pytest.fixture(scope="module")
def drive_cfg():
    return load_robot_config().drive_config()


# --- mixing ---------------------------------------------------------------------

def test_mix_straight_full_speed():
    ws = mix_differential(DriveCommand(1.0, 0.0), 2.0)
    assert (ws.v_l, ws.v_r) == (2.0, 2.0)


def test_mix_in_place():
    ws = mix_differential(DriveCommand(0.0, 1.0), 2.0)
    assert (ws.v_l, ws.v_r) == (2.0, -2.0)


def test_mix_pivot():
    ws = mix_differential(DriveCommand(0.5, 0.5), 2.0)
    assert (ws.v_l, ws.v_r) == (2.0, 0.0)


@given(t=unit, s=unit)
def test_mix_mirror_symmetry(t, s):
    assert mix_differential(DriveCommand(t, s), 1.0).v_l == \
        mix_differential(DriveCommand(t, -s), 1.0).v_r


def test_drive_command_bounds():
    with pytest.raises(ValueError):
        DriveCommand(1.5, 0.0)


# --- PID ------------------------------------------------------------------------

def test_pid_zero_everything():
    gains = PidGains(kp=0.1, ki=0.1, kd=0.0, feedforward=0.01)
    duty, _ = pid_step(gains, 0.0, 0.0, 0.02, PidState())
    assert duty == 0.0


def test_pid_pure_feedforward_exact():
    gains = PidGains(kp=0.0, ki=0.0, kd=0.0, feedforward=0.002)
    duty, _ = pid_step(gains, 300.0, 123.0, 0.02, PidState())
    assert duty == 0.002 * 300.0


def test_pid_output_clamped():
    gains = PidGains(kp=1.0, ki=0.0, kd=0.0, feedforward=1.0)
    duty, _ = pid_step(gains, 100.0, 0.0, 0.02, PidState())
    assert duty == 1.0


def test_pid_antiwindup_freezes_integral():
    gains = PidGains(kp=0.0, ki=1.0, kd=0.0, feedforward=1.0)
    state = PidState()
    # saturated high with positive error: integral must not grow
    _, state = pid_step(gains, 5.0, 0.0, 1.0, state)
    assert state.integral == 0.0
    # unsaturated: integral accumulates
    _, state2 = pid_step(gains, 0.1, 0.0, 1.0, PidState())
    assert state2.integral == pytest.approx(0.1)


def test_pid_settles_within_budget(drive_cfg, golden):
    driver = MotorDriver(drive_cfg.resolved_plant(), drive_cfg.resolved_gains())
    setpoint = drive_cfg.peak_command_mps * drive_cfg.counts_per_meter
    driver.set_speed(0, setpoint)
    settle = None
    dt = drive_cfg.dt
    for k in range(int(5.0 / dt)):
        driver.step(dt)
        if abs(driver.read_speed(0) - setpoint) / setpoint > 0.02:
            settle = None
        elif settle is None:
            settle = (k + 1) * dt
    assert settle is not None
    assert settle <= 1.0
    assert settle == pytest.approx(golden["pid_settle_s"], abs=0.02)


def test_closed_loop_tracking_error_under_load(drive_cfg):
    driver = MotorDriver(drive_cfg.resolved_plant(), drive_cfg.resolved_gains())
    setpoint = 0.5 * drive_cfg.peak_command_mps * drive_cfg.counts_per_meter
    driver.set_speed(0, setpoint)
    for _ in range(200):
        driver.step(drive_cfg.dt, (2.0, 0.0))   # constant 2 N*m load
    error = abs(driver.read_speed(0) - setpoint) / setpoint
    assert error < 0.01


# --- motor plant ------------------------------------------------------------------

def plant():
    return MotorPlantConfig(no_load_speed_cps=1000.0, time_constant_s=0.25,
                            max_torque_nm=10.0, droop_cps_per_nm=5.0)


def test_plant_decays_to_zero():
    state = MotorChannelState(measured_speed=800.0)
    for _ in range(500):
        motor_plant_step(plant(), state, 0.0, 0.0, 0.02)
    assert abs(state.measured_speed) < 1e-3


def test_plant_stall_when_overloaded():
    state = MotorChannelState(measured_speed=500.0)
    motor_plant_step(plant(), state, 0.5, 6.0, 0.02)   # available 5 < load 6
    assert state.stalled
    assert state.measured_speed == 0.0
    motor_plant_step(plant(), state, 0.7, 6.0, 0.02)   # available 7 > load 6
    assert not state.stalled


def test_plant_droop_reduces_steady_speed():
    state = MotorChannelState()
    for _ in range(2000):
        motor_plant_step(plant(), state, 0.5, 4.0, 0.02)
    assert state.measured_speed == pytest.approx(0.5 * 1000.0 - 5.0 * 4.0, rel=1e-6)


def test_encoder_carry_matches_exact_integral():
    # oracle: accumulate the exact integral of speed in parallel
    cfg = plant()
    state = MotorChannelState()
    exact = 0.0
    for k in range(1000):
        duty = 0.3 + 0.2 * math.sin(k / 40.0)
        motor_plant_step(cfg, state, duty, 0.0, 0.02)
        exact += state.measured_speed * 0.02
    assert abs(state.encoder_count - exact) < 1.0


def test_encoder_monotone_forward():
    state = MotorChannelState()
    last = 0
    for _ in range(200):
        motor_plant_step(plant(), state, 0.8, 0.0, 0.02)
        assert state.encoder_count >= last
        last = state.encoder_count
    assert last > 0


# --- packet-serial protocol --------------------------------------------------------

def test_crc16_xmodem_check_value():
    assert crc16_xmodem(b"123456789") == 0x31C3
    assert crc16_xmodem(b"") == 0x0000


def test_protocol_set_and_read_round_trip(drive_cfg):
    driver = MotorDriver(drive_cfg.resolved_plant(), drive_cfg.resolved_gains())
    port = PacketSerialPort(driver)
    reply = port.execute(encode_request(CMD_SET_SPEED_M1, struct.pack(">i", 3000)))
    assert reply == bytes([ACK])
    assert driver.channels[0].commanded_speed == 3000.0
    for _ in range(100):
        driver.step(0.02)
    reply = port.execute(encode_request(CMD_READ_ENC_M1))
    payload, crc = reply[:-2], struct.unpack(">H", reply[-2:])[0]
    assert crc16_xmodem(payload) == crc
    assert struct.unpack(">q", payload)[0] == driver.read_encoder(0)
    reply = port.execute(encode_request(CMD_READ_SPEED_M2))
    assert struct.unpack(">i", reply[:-2])[0] == round(driver.read_speed(1))
    reply = port.execute(encode_request(CMD_READ_VOLTAGE))
    assert struct.unpack(">H", reply[:-2])[0] == round(driver.read_voltage() * 10)


def test_protocol_rejects_bad_crc(drive_cfg):
    driver = MotorDriver(drive_cfg.resolved_plant(), drive_cfg.resolved_gains())
    port = PacketSerialPort(driver)
    request = bytearray(encode_request(CMD_SET_SPEED_M1, struct.pack(">i", 100)))
    request[3] ^= 0x01
    with pytest.raises(ProtocolError):
        port.execute(bytes(request))
    with pytest.raises(ProtocolError):
        port.execute(b"\x80")
    with pytest.raises(ProtocolError):
        port.execute(encode_request(0x55))


# --- telemetry bus ------------------------------------------------------------------

def test_telemetry_bus_drop_oldest():
    bus = TelemetryBus(maxlen=3)
    for i in range(5):
        bus.publish(i)
    assert bus.dropped == 2
    assert bus.drain() == [2, 3, 4]
    assert len(bus) == 0


# --- control tick -------------------------------------------------------------------

def test_zero_input_safety(drive_cfg):
    controller = DriveController(drive_cfg)
    actions = controller.control_tick(stick_state(0))
    assert actions.setpoints_cps == (0.0, 0.0)
    assert actions.relay_states == (False,) * 4
    assert actions.telemetry.motor_speeds == (0.0, 0.0)


def test_switch_sets_relay_same_tick(drive_cfg):
    controller = DriveController(drive_cfg)
    actions = controller.control_tick(stick_state(0, switches=True))
    assert actions.relay_states == (True,) * 4


def test_failsafe_dominates_stale_sticks(drive_cfg):
    controller = DriveController(drive_cfg)
    hot = stick_state(0, throttle=CH_MAX, switches=True)
    actions = controller.control_tick(hot)
    assert actions.setpoints_cps[0] > 0
    assert any(actions.relay_states)
    dead = stick_state(0, throttle=CH_MAX, switches=True, link_ok=False)
    actions = controller.control_tick(dead)
    assert actions.setpoints_cps == (0.0, 0.0)
    assert actions.relay_states == (False,) * 4


def test_full_stick_reaches_capacity_speed(drive_cfg):
    controller = DriveController(drive_cfg)
    state = stick_state(0, throttle=CH_MAX)
    for _ in range(300):
        controller.control_tick(state)
    ws = controller.wheel_speeds_mps()
    assert ws.v_l == pytest.approx(0.85, abs=0.001)
    assert ws.v_r == pytest.approx(0.85, abs=0.001)


def test_one_telemetry_record_per_tick_with_plant_counts(drive_cfg):
    controller = DriveController(drive_cfg)
    state = stick_state(0, throttle=CH_MAX)
    n = 100
    for _ in range(n):
        controller.control_tick(state)
    records = controller.telemetry.drain()
    assert len(records) == n
    times = [r.timestamp_ms for r in records]
    assert times == sorted(times) and len(set(times)) == n
    assert records[-1].encoder_counts == (controller.driver.read_encoder(0),
                                          controller.driver.read_encoder(1))


def test_battery_sag_proportional_to_duty(drive_cfg):
    controller = DriveController(drive_cfg)
    v_idle = controller.driver.read_voltage()
    assert v_idle == drive_cfg.battery_nominal_v
    state = stick_state(0, throttle=CH_MAX)
    for _ in range(100):
        controller.control_tick(state)
    v_loaded = controller.driver.read_voltage()
    duty = sum(abs(ch.duty) for ch in controller.driver.channels)
    assert v_loaded == pytest.approx(
        drive_cfg.battery_nominal_v - drive_cfg.battery_sag_v_per_duty * duty)
    assert v_loaded < v_idle


def _action_log_sha(cfg):
    controller = DriveController(cfg)
    digest = hashlib.sha256()
    for state in reference_stick_trace(cfg.tick_hz):
        digest.update(controller.control_tick(state).to_json_line().encode())
        digest.update(b"\n")
    return digest.hexdigest()


def test_action_log_matches_golden(drive_cfg, golden):
    assert _action_log_sha(drive_cfg) == golden["action_log_sha256"]


def test_action_log_deterministic_across_runs(drive_cfg):
    assert _action_log_sha(drive_cfg) == _action_log_sha(drive_cfg)


def test_default_gains_shape(drive_cfg):
    gains = default_gains(drive_cfg.no_load_speed_cps)
    assert gains.feedforward == pytest.approx(1.0 / drive_cfg.no_load_speed_cps)
    assert gains.kd == 0.0
    assert gains.kp > 0 and gains.ki > 0
