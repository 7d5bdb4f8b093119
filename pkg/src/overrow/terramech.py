"""Terramechanics and drivetrain sizing.

Tractive-force balance, rolling resistance, wheel/motor torque and RPM,
caster load and friction torques, terrain feasibility, and payload
estimation. Everything here is a pure function over value types.

Force balance for the driven wheels:

    F = m*a + m*g*sin(incline) + c_rr*m*g*cos(incline)
    tau_wheel = F * r        (total, all driven wheels)
    tau_motor = tau_wheel / n_driven
    rpm       = v * 60 / (2*pi*r)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# Standard gravity, exact by definition; avoids locale-specific g.
G = 9.80665


@dataclass(frozen=True)
class TerrainParams:
    """Point terrain description used by force and torque computations.

    slip_factor scales commanded wheel speed into achieved ground speed
    (1 = no traction loss); it is consumed by the simulator, not by the
    static sizing math.
    """

    name: str
    c_rr: float
    incline: float = 0.0
    slip_factor: float = 1.0

    def __post_init__(self):
        if self.c_rr < 0.0:
            raise ValueError(f"rolling-resistance coefficient must be >= 0, got {self.c_rr}")
        if not 0.0 <= self.slip_factor <= 1.0:
            raise ValueError(f"slip factor must be in [0, 1], got {self.slip_factor}")
        if not abs(self.incline) < math.pi / 2:
            raise ValueError(f"incline must satisfy |incline| < pi/2, got {self.incline}")


@dataclass(frozen=True)
class TerrainSpec:
    """Terrain-library record: a named rolling-resistance range.

    Sources quote ranges for deformable surfaces, so the library stores
    (min, max) and evaluates at the midpoint unless asked otherwise.
    """

    name: str
    c_rr_min: float
    c_rr_max: float
    default_incline: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.c_rr_min <= self.c_rr_max:
            raise ValueError(f"need 0 <= c_rr_min <= c_rr_max, got [{self.c_rr_min}, {self.c_rr_max}]")

    def c_rr(self, which: str = "mid") -> float:
        if which == "mid":
            return 0.5 * (self.c_rr_min + self.c_rr_max)
        if which == "min":
            return self.c_rr_min
        if which == "max":
            return self.c_rr_max
        raise ValueError(f"unknown c_rr selector {which!r}, expected mid/min/max")

    def params(self, which: str = "mid", incline: float | None = None,
               slip_factor: float = 1.0) -> TerrainParams:
        return TerrainParams(
            name=self.name,
            c_rr=self.c_rr(which),
            incline=self.default_incline if incline is None else incline,
            slip_factor=slip_factor,
        )


@dataclass(frozen=True)
class ChassisConfig:
    """Chassis geometry and mass properties; the single home of mechanical symbols.

    track_width is the lateral distance between driven-wheel centers and
    wheelbase the longitudinal distance from the driven axle to the caster
    axle; the two are deliberately separate fields.
    """

    mass: float = 45.0
    track_width: float = 1.42
    half_track: float = 0.71
    wheelbase: float = 1.2
    cg_height: float = 0.5
    cg_to_front: float = 0.6
    yaw_inertia: float = 12.0
    wheel_radius: float = 0.1
    wheel_width: float = 0.36
    n_driven: int = 2
    caster_positions: tuple[tuple[float, float], ...] = ((-1.2, 0.71), (-1.2, -0.71))
    clearance: float = 0.94

    # Stock chassis adjustment range; configs outside it are flagged, not rejected.
    STOCK_TRACK_RANGE = (1.42, 1.57)

    def __post_init__(self):
        errors = self.validation_errors()
        if errors:
            raise ValueError("invalid chassis config: " + "; ".join(errors))

    def validation_errors(self) -> list[str]:
        errors = []
        for name in ("mass", "track_width", "half_track", "wheelbase", "cg_height",
                     "cg_to_front", "yaw_inertia", "wheel_radius", "wheel_width", "clearance"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                errors.append(f"{name} must be a positive finite number, got {value!r}")
        if self.n_driven < 1:
            errors.append(f"n_driven must be >= 1, got {self.n_driven}")
        if len(self.caster_positions) == 0:
            errors.append("at least one caster position required")
        return errors

    def is_stock_track(self) -> bool:
        lo, hi = self.STOCK_TRACK_RANGE
        return lo - 1e-9 <= self.track_width <= hi + 1e-9

    def with_mass(self, mass: float) -> "ChassisConfig":
        return replace(self, mass=mass)

    def with_track(self, track_width: float) -> "ChassisConfig":
        casters = tuple((x, math.copysign(track_width / 2.0, y)) for x, y in self.caster_positions)
        return replace(self, track_width=track_width, half_track=track_width / 2.0,
                       caster_positions=casters)


@dataclass(frozen=True)
class CasterParams:
    """Passive caster friction parameters."""

    static_friction_torque: float = 0.8
    viscous_coeff: float = 0.15
    caster_wheel_radius: float = 0.075

    def __post_init__(self):
        if self.static_friction_torque < 0 or self.viscous_coeff < 0 or self.caster_wheel_radius < 0:
            raise ValueError("caster parameters must be >= 0")


@dataclass(frozen=True)
class MotorSpec:
    """Post-gearbox motor capability and the operational capacity cap."""

    continuous_torque: float = 31.42
    gear_ratio: float = 32.0
    duty_limit_minutes: float = 15.0
    capacity_fraction: float = 0.15

    def __post_init__(self):
        if min(self.continuous_torque, self.gear_ratio, self.duty_limit_minutes) <= 0:
            raise ValueError("motor spec values must be positive")
        if not 0.0 < self.capacity_fraction <= 1.0:
            raise ValueError(f"capacity_fraction must be in (0, 1], got {self.capacity_fraction}")


@dataclass(frozen=True)
class SizingReport:
    """Result of a terrain feasibility evaluation."""

    terrain: str
    tractive_force: float
    wheel_torque: float
    motor_torque: float
    required_rpm: float
    available_torque: float
    feasible: bool
    margin: float

    def as_dict(self) -> dict:
        return {
            "terrain": self.terrain,
            "tractive_force_n": self.tractive_force,
            "wheel_torque_nm": self.wheel_torque,
            "motor_torque_nm": self.motor_torque,
            "required_rpm": self.required_rpm,
            "available_torque_nm": self.available_torque,
            "feasible": self.feasible,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class CasterReport:
    """Per-caster accelerations, loads, and friction torques.

    caster_velocities follows the rigid-body transport relation evaluated
    with the body accelerations, matching the sizing convention: the first
    component is longitudinal, the second lateral. Ordering matches
    ChassisConfig.caster_positions.
    """

    a_x: float
    alpha_z: float
    caster_velocities: tuple[tuple[float, float], ...]
    vertical_loads: tuple[float, ...]
    roll_torques: tuple[float, ...]
    swivel_torques: tuple[float, ...]
    tip_over: bool


def rolling_resistance(m: float, incline: float, c_rr: float) -> float:
    """Rolling-resistance force c_rr * m * g * cos(incline), in newtons."""
    if m <= 0.0:
        raise ValueError(f"mass must be positive, got {m}")
    if c_rr < 0.0:
        raise ValueError(f"rolling-resistance coefficient must be >= 0, got {c_rr}")
    return c_rr * m * G * math.cos(incline)


def tractive_force(m: float, a: float, incline: float, c_rr: float) -> float:
    """Required tractive force: inertial + grade + rolling-resistance terms."""
    if m <= 0.0:
        raise ValueError(f"mass must be positive, got {m}")
    return m * a + m * G * math.sin(incline) + rolling_resistance(m, incline, c_rr)


def wheel_and_motor_torque(force: float, r: float, n_driven: int) -> tuple[float, float]:
    """Total wheel torque F*r and the per-motor share for n driven wheels."""
    if r <= 0.0:
        raise ValueError(f"wheel radius must be positive, got {r}")
    if n_driven < 1:
        raise ValueError(f"n_driven must be >= 1, got {n_driven}")
    tau_wheel = force * r
    return tau_wheel, tau_wheel / n_driven


def motor_rpm(v: float, r: float) -> float:
    """Wheel shaft speed in RPM for ground speed v and wheel radius r."""
    if r <= 0.0:
        raise ValueError(f"wheel radius must be positive, got {r}")
    if v < 0.0:
        raise ValueError(f"speed must be >= 0, got {v}")
    return v * 60.0 / (2.0 * math.pi * r)


def caster_analysis(chassis: ChassisConfig, caster: CasterParams, f_l: float, f_r: float,
                    terrain: TerrainParams, swivel_rate: float = 0.0) -> CasterReport:
    """Caster accelerations, vertical loads, and rolling/swivel torques.

    Body accelerations from the drive forces:
        a_x = (F_L + F_R) / m, alpha_z = (F_R - F_L) * b / I_z.
    Each caster sees the transported motion (a_x - alpha_z*y_c, alpha_z*x_c).

    Vertical loads carry the static share (L_f/L)*m*g each plus a transfer
    term m*a_x*h_cg/(2L) applied +/- so the pair total is conserved; the
    positive branch goes to the first (left) caster. A negative computed
    load is reported through tip_over, never clamped.
    """
    m = chassis.mass
    b = chassis.half_track
    wb = chassis.wheelbase
    a_x = (f_l + f_r) / m
    alpha_z = (f_r - f_l) * b / chassis.yaw_inertia

    velocities = tuple(
        (a_x - alpha_z * y_c, alpha_z * x_c) for (x_c, y_c) in chassis.caster_positions
    )

    static_share = (chassis.cg_to_front / wb) * m * G
    transfer = m * a_x * chassis.cg_height / (2.0 * wb)
    signs = tuple(1.0 if i % 2 == 0 else -1.0 for i in range(len(chassis.caster_positions)))
    loads = tuple(static_share + s * transfer for s in signs)

    roll = tuple(n * terrain.c_rr * caster.caster_wheel_radius for n in loads)
    swivel = tuple(
        caster.static_friction_torque + caster.viscous_coeff * swivel_rate for _ in loads
    )
    return CasterReport(
        a_x=a_x,
        alpha_z=alpha_z,
        caster_velocities=velocities,
        vertical_loads=loads,
        roll_torques=roll,
        swivel_torques=swivel,
        tip_over=any(n < 0.0 for n in loads),
    )


def available_wheel_torque(chassis: ChassisConfig, motor: MotorSpec,
                           capacity: float = 1.0) -> float:
    """Total wheel-level torque the drivetrain can deliver at a capacity fraction."""
    return chassis.n_driven * motor.continuous_torque * capacity


def terrain_feasibility(chassis: ChassisConfig, motor: MotorSpec, terrain: TerrainParams,
                        a: float, v_target: float = 0.61) -> SizingReport:
    """Compare required wheel torque on a terrain against available continuous torque."""
    force = tractive_force(chassis.mass, a, terrain.incline, terrain.c_rr)
    tau_wheel, tau_motor = wheel_and_motor_torque(force, chassis.wheel_radius, chassis.n_driven)
    available = available_wheel_torque(chassis, motor)
    margin = available / tau_wheel if tau_wheel > 0.0 else math.inf
    return SizingReport(
        terrain=terrain.name,
        tractive_force=force,
        wheel_torque=tau_wheel,
        motor_torque=tau_motor,
        required_rpm=motor_rpm(abs(v_target), chassis.wheel_radius),
        available_torque=available,
        feasible=margin >= 1.0,
        margin=margin,
    )


def max_payload(chassis: ChassisConfig, motor: MotorSpec, terrain: TerrainParams,
                v_target: float, safety_factor: float, a: float = 0.6,
                max_added: float = 2000.0) -> float:
    """Largest added mass that keeps required motor torque * safety_factor
    within available torque at full capacity, at design acceleration a.

    Solved by bisection on the added mass (the torque requirement is
    monotone in mass); returns 0.0 if even the bare chassis is infeasible.
    """
    if safety_factor < 1.0:
        raise ValueError(f"safety factor must be >= 1, got {safety_factor}")
    available = available_wheel_torque(chassis, motor)

    def feasible(payload: float) -> bool:
        force = tractive_force(chassis.mass + payload, a, terrain.incline, terrain.c_rr)
        tau_wheel, _ = wheel_and_motor_torque(force, chassis.wheel_radius, chassis.n_driven)
        return tau_wheel * safety_factor <= available

    if not feasible(0.0):
        return 0.0
    if feasible(max_added):
        return max_added
    lo, hi = 0.0, max_added
    # 100 halvings reach machine precision, well past the 1e-3 kg target;
    # lo stays feasible so the returned payload never violates the bound.
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return lo
