"""Control loop and emulated motor driver.

The tick pipeline mirrors the embedded loop: read and normalize the RC
channels, mix throttle/steering into wheel-speed setpoints, hand them to
the emulated packet-serial driver (PID with feedforward per channel over a
first-order motor plant), toggle the solenoid relays from switch channels,
then collect feedback and emit exactly one telemetry record.

Speeds at the driver boundary are encoder counts per second, like the real
hardware; meters enter only through counts_per_meter.
"""

from __future__ import annotations

import json
import math
import struct
import threading
from collections import deque
from dataclasses import dataclass, field

from .crsf import ChannelMap, ChannelState, DEFAULT_DEADZONE
from .kinematics import Pose, WheelSpeeds


def _clamp(value: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class DriveCommand:
    throttle: float
    steering: float

    def __post_init__(self):
        if not (-1.0 <= self.throttle <= 1.0 and -1.0 <= self.steering <= 1.0):
            raise ValueError(f"drive command out of [-1, 1]: {self}")


def mix_differential(cmd: DriveCommand, peak_wheel_speed: float) -> WheelSpeeds:
    """Arcade mixing: clamp(throttle +/- steering) scaled to the peak wheel speed.

    Full opposite steering with zero throttle yields an in-place turn; equal
    throttle and steering parks one wheel for a pivot turn.
    """
    v_l = _clamp(cmd.throttle + cmd.steering) * peak_wheel_speed
    v_r = _clamp(cmd.throttle - cmd.steering) * peak_wheel_speed
    return WheelSpeeds(v_l, v_r)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    feedforward: float
    integral_limit: float = 1.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0.0:
            raise ValueError("PID gains must be >= 0")
        if self.feedforward <= 0.0:
            raise ValueError("feedforward must be > 0")


def default_gains(no_load_speed_cps: float) -> PidGains:
    """Gains derived from the default plant: unity feedforward at no-load speed,
    proportional correction sized for a 25% droop, integral for zero
    steady-state error (closed-loop poles near -10 rad/s with tau = 0.25 s)."""
    return PidGains(
        kp=4.0 / no_load_speed_cps,
        ki=25.0 / no_load_speed_cps,
        kd=0.0,
        feedforward=1.0 / no_load_speed_cps,
        integral_limit=1.0,
    )


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    primed: bool = False


def pid_step(gains: PidGains, setpoint: float, measured: float, dt: float,
             state: PidState) -> tuple[float, PidState]:
    """One controller update; returns (duty in [-1, 1], next state).

    The integral term accumulates in duty units and is frozen while the
    output is saturated in the direction the error is pushing.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = setpoint - measured
    derivative = (error - state.prev_error) / dt if state.primed else 0.0
    raw = (gains.feedforward * setpoint + gains.kp * error + state.integral
           + gains.kd * derivative)
    duty = _clamp(raw)
    windup = (raw > 1.0 and error > 0.0) or (raw < -1.0 and error < 0.0)
    integral = state.integral
    if not windup:
        integral = _clamp(state.integral + gains.ki * error * dt,
                          -gains.integral_limit, gains.integral_limit)
    return duty, PidState(integral=integral, prev_error=error, primed=True)


@dataclass(frozen=True)
class MotorPlantConfig:
    """First-order motor emulation behind the driver protocol."""

    no_load_speed_cps: float
    time_constant_s: float = 0.25
    max_torque_nm: float = 31.42
    droop_cps_per_nm: float = 0.0

    def __post_init__(self):
        if self.no_load_speed_cps <= 0 or self.time_constant_s <= 0 or self.max_torque_nm <= 0:
            raise ValueError("plant parameters must be positive")


@dataclass
class MotorChannelState:
    commanded_speed: float = 0.0
    measured_speed: float = 0.0
    encoder_count: int = 0
    duty: float = 0.0
    pid: PidState = field(default_factory=PidState)
    stalled: bool = False
    _count_frac: float = 0.0


def motor_plant_step(cfg: MotorPlantConfig, state: MotorChannelState, duty: float,
                     load_torque: float, dt: float) -> None:
    """Advance the plant one step in place.

    Speed relaxes exponentially toward duty * no_load_speed minus the
    load-induced droop. If the load exceeds the torque available at the
    current duty the wheel stalls: speed collapses to zero and the stall
    flag is set. The encoder advances by whole counts with a fractional
    carry, so long runs accumulate the exact integral of speed.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    state.duty = duty
    available = abs(duty) * cfg.max_torque_nm
    if load_torque > available:
        state.measured_speed = 0.0
        state.stalled = True
    else:
        state.stalled = False
        direction = math.copysign(1.0, duty) if duty != 0.0 else 0.0
        target = duty * cfg.no_load_speed_cps - direction * cfg.droop_cps_per_nm * load_torque
        if direction != 0.0 and target * direction < 0.0:
            target = 0.0
        alpha = 1.0 - math.exp(-dt / cfg.time_constant_s)
        state.measured_speed += (target - state.measured_speed) * alpha
    state._count_frac += state.measured_speed * dt
    whole = math.floor(state._count_frac)
    state.encoder_count += int(whole)
    state._count_frac -= whole


class MotorDriver:
    """Emulated two-channel packet-serial motor driver.

    Exposes the command subset the control loop needs (set speed, read
    encoder/speed/voltage) and runs the per-channel PID + plant when
    stepped. Battery voltage is a nominal rail with linear sag
    proportional to total commanded duty.
    """

    def __init__(self, plant: MotorPlantConfig, gains: PidGains,
                 battery_nominal_v: float = 24.0, battery_sag_v_per_duty: float = 0.5):
        self.plant = plant
        self.gains = gains
        self.battery_nominal_v = battery_nominal_v
        self.battery_sag_v_per_duty = battery_sag_v_per_duty
        self.channels = (MotorChannelState(), MotorChannelState())

    def set_speed(self, motor: int, speed_cps: float) -> None:
        self.channels[motor].commanded_speed = speed_cps

    def read_encoder(self, motor: int) -> int:
        return self.channels[motor].encoder_count

    def read_speed(self, motor: int) -> float:
        return self.channels[motor].measured_speed

    def read_voltage(self) -> float:
        drawn = sum(abs(ch.duty) for ch in self.channels)
        return self.battery_nominal_v - self.battery_sag_v_per_duty * drawn

    def step(self, dt: float, load_torques: tuple[float, float] = (0.0, 0.0)) -> None:
        for ch, load in zip(self.channels, load_torques):
            duty, ch.pid = pid_step(self.gains, ch.commanded_speed, ch.measured_speed, dt, ch.pid)
            motor_plant_step(self.plant, ch, duty, load, dt)

    def reset_encoders(self) -> None:
        for ch in self.channels:
            ch.encoder_count = 0
            ch._count_frac = 0.0


# --- optional byte protocol (hardware-in-the-loop parity) -------------------

DRIVER_ADDRESS = 0x80

CMD_SET_SPEED_M1 = 0x00
CMD_SET_SPEED_M2 = 0x01
CMD_READ_ENC_M1 = 0x10
CMD_READ_ENC_M2 = 0x11
CMD_READ_SPEED_M1 = 0x12
CMD_READ_SPEED_M2 = 0x13
CMD_READ_VOLTAGE = 0x18

ACK = 0xFF

_WRITE_PAYLOAD = {CMD_SET_SPEED_M1: 4, CMD_SET_SPEED_M2: 4}
_READ_COMMANDS = (CMD_READ_ENC_M1, CMD_READ_ENC_M2, CMD_READ_SPEED_M1,
                  CMD_READ_SPEED_M2, CMD_READ_VOLTAGE)


def crc16_xmodem(data: bytes) -> int:
    """CRC-16/XMODEM: poly 0x1021, init 0x0000, no reflection."""
    crc = 0
    for b in data:
        crc ^= b << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
    return crc


def encode_request(command: int, payload: bytes = b"", address: int = DRIVER_ADDRESS) -> bytes:
    body = bytes([address, command]) + payload
    return body + struct.pack(">H", crc16_xmodem(body))


class ProtocolError(Exception):
    pass


class PacketSerialPort:
    """Byte-protocol front end over a MotorDriver.

    Request: [address][command][payload][crc16 big-endian]. Writes answer a
    single ACK byte; reads answer payload + crc16 over the payload.
    """

    def __init__(self, driver: MotorDriver, address: int = DRIVER_ADDRESS):
        self.driver = driver
        self.address = address

    def execute(self, request: bytes) -> bytes:
        if len(request) < 4:
            raise ProtocolError("request too short")
        body, crc = request[:-2], struct.unpack(">H", request[-2:])[0]
        if crc16_xmodem(body) != crc:
            raise ProtocolError("bad request crc")
        if body[0] != self.address:
            raise ProtocolError(f"unknown address {body[0]:#x}")
        command, payload = body[1], body[2:]
        if command in _WRITE_PAYLOAD:
            if len(payload) != _WRITE_PAYLOAD[command]:
                raise ProtocolError(f"command {command:#x} expects {_WRITE_PAYLOAD[command]} payload bytes")
            speed = struct.unpack(">i", payload)[0]
            self.driver.set_speed(command - CMD_SET_SPEED_M1, float(speed))
            return bytes([ACK])
        if command in _READ_COMMANDS:
            if payload:
                raise ProtocolError("read commands carry no payload")
            if command in (CMD_READ_ENC_M1, CMD_READ_ENC_M2):
                reply = struct.pack(">q", self.driver.read_encoder(command - CMD_READ_ENC_M1))
            elif command in (CMD_READ_SPEED_M1, CMD_READ_SPEED_M2):
                speed = self.driver.read_speed(command - CMD_READ_SPEED_M1)
                reply = struct.pack(">i", int(round(speed)))
            else:
                reply = struct.pack(">H", int(round(self.driver.read_voltage() * 10.0)))
            return reply + struct.pack(">H", crc16_xmodem(reply))
        raise ProtocolError(f"unsupported command {command:#x}")


# --- relays, telemetry, and the tick loop ------------------------------------

N_RELAYS = 4


@dataclass
class RelayBank:
    states: list[bool] = field(default_factory=lambda: [False] * N_RELAYS)

    def set(self, index: int, on: bool) -> None:
        self.states[index] = bool(on)

    def all_off(self) -> None:
        for i in range(N_RELAYS):
            self.states[i] = False

    def snapshot(self) -> tuple[bool, ...]:
        return tuple(self.states)


@dataclass(frozen=True)
class TelemetryRecord:
    timestamp_ms: int
    encoder_counts: tuple[int, int]
    motor_speeds: tuple[float, float]
    battery_voltage: float
    relay_states: tuple[bool, ...]
    pose: Pose | None = None

    def as_dict(self) -> dict:
        record = {
            "t_ms": self.timestamp_ms,
            "enc": list(self.encoder_counts),
            "speed_cps": list(self.motor_speeds),
            "batt_v": self.battery_voltage,
            "relays": [int(s) for s in self.relay_states],
        }
        if self.pose is not None:
            record["pose"] = [self.pose.x, self.pose.y, self.pose.theta]
        return record

    def to_json_line(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


class TelemetryBus:
    """Bounded record queue: producers never block, oldest records drop first."""

    def __init__(self, maxlen: int = 4096):
        self._queue = deque()
        self._maxlen = maxlen
        self._lock = threading.Lock()
        self.dropped = 0

    def publish(self, record) -> None:
        with self._lock:
            if len(self._queue) >= self._maxlen:
                self._queue.popleft()
                self.dropped += 1
            self._queue.append(record)

    def drain(self) -> list:
        with self._lock:
            records = list(self._queue)
            self._queue.clear()
        return records

    def __len__(self) -> int:
        with self._lock:
            return len(self._queue)


@dataclass(frozen=True)
class DriveConfig:
    """Everything the tick loop needs, in driver units."""

    channel_map: ChannelMap = ChannelMap()
    deadzone: float = DEFAULT_DEADZONE
    capacity_fraction: float = 0.15
    no_load_speed_mps: float = 17.0 / 3.0
    counts_per_meter: float = 5000.0 / (2.0 * math.pi * 0.1)
    plant: MotorPlantConfig | None = None
    gains: PidGains | None = None
    battery_nominal_v: float = 24.0
    battery_sag_v_per_duty: float = 0.5
    tick_hz: int = 50

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    @property
    def no_load_speed_cps(self) -> float:
        return self.no_load_speed_mps * self.counts_per_meter

    @property
    def peak_command_mps(self) -> float:
        """Commanded wheel speed at full stick under the capacity cap."""
        return self.capacity_fraction * self.no_load_speed_mps

    def resolved_plant(self) -> MotorPlantConfig:
        if self.plant is not None:
            return self.plant
        v_nl = self.no_load_speed_cps
        return MotorPlantConfig(
            no_load_speed_cps=v_nl,
            time_constant_s=0.25,
            max_torque_nm=31.42,
            # 25% speed droop at rated torque
            droop_cps_per_nm=0.25 * v_nl / 31.42,
        )

    def resolved_gains(self) -> PidGains:
        return self.gains if self.gains is not None else default_gains(self.no_load_speed_cps)


@dataclass(frozen=True)
class TickActions:
    """What one control tick decided: setpoints, relay writes, telemetry."""

    setpoints_cps: tuple[float, float]
    relay_states: tuple[bool, ...]
    telemetry: TelemetryRecord

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "set_cps": list(self.setpoints_cps),
                "relays": [int(s) for s in self.relay_states],
                "telemetry": self.telemetry.as_dict(),
            },
            sort_keys=True, separators=(",", ":"),
        )


class DriveController:
    """Single logical ticker executing the control loop strictly in order.

    One tick: normalize channels, mix, command the driver, toggle relays,
    step the driver under the supplied load torques, collect feedback, and
    publish exactly one telemetry record. A dead link forces zero setpoints
    and all relays off regardless of the stale channel values.
    """

    def __init__(self, config: DriveConfig, telemetry: TelemetryBus | None = None):
        self.config = config
        self.driver = MotorDriver(config.resolved_plant(), config.resolved_gains(),
                                  config.battery_nominal_v, config.battery_sag_v_per_duty)
        self.relays = RelayBank()
        self.telemetry = telemetry if telemetry is not None else TelemetryBus()
        self.tick_index = 0

    @property
    def time_ms(self) -> int:
        return round(self.tick_index * 1000 / self.config.tick_hz)

    def wheel_speeds_mps(self) -> WheelSpeeds:
        cpm = self.config.counts_per_meter
        return WheelSpeeds(self.driver.read_speed(0) / cpm, self.driver.read_speed(1) / cpm)

    def control_tick(self, inputs: ChannelState, dt: float | None = None,
                     load_torques: tuple[float, float] = (0.0, 0.0),
                     pose: Pose | None = None) -> TickActions:
        dt = self.config.dt if dt is None else dt
        cfg = self.config
        throttle = cfg.channel_map.throttle_cmd(inputs, cfg.deadzone)
        steering = cfg.channel_map.steering_cmd(inputs, cfg.deadzone)
        ws = mix_differential(DriveCommand(throttle, steering), cfg.peak_command_mps)
        setpoints = (ws.v_l * cfg.counts_per_meter, ws.v_r * cfg.counts_per_meter)
        self.driver.set_speed(0, setpoints[0])
        self.driver.set_speed(1, setpoints[1])

        if inputs.link_ok:
            for i, on in enumerate(cfg.channel_map.switch_states(inputs)[:N_RELAYS]):
                self.relays.set(i, on)
        else:
            self.relays.all_off()

        self.driver.step(dt, load_torques)
        self.tick_index += 1
        record = TelemetryRecord(
            timestamp_ms=self.time_ms,
            encoder_counts=(self.driver.read_encoder(0), self.driver.read_encoder(1)),
            motor_speeds=(self.driver.read_speed(0), self.driver.read_speed(1)),
            battery_voltage=self.driver.read_voltage(),
            relay_states=self.relays.snapshot(),
            pose=pose,
        )
        self.telemetry.publish(record)
        return TickActions(setpoints, self.relays.snapshot(), record)

    def stalled(self) -> tuple[bool, bool]:
        return (self.driver.channels[0].stalled, self.driver.channels[1].stalled)
