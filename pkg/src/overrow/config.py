"""Configuration loading and validation.

All config files are JSON with unit-suffixed field names (lengths in
meters, masses in kg, pressures in PSI, angles in degrees). Validation
collects every problem it finds before raising, so a bad file reports all
of its violations at once.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources

from .crsf import ChannelMap
from .drive import DriveConfig, MotorPlantConfig, default_gains
from .sprayer import SprayerConfig
from .terramech import CasterParams, ChassisConfig, MotorSpec, TerrainSpec


class ConfigError(ValueError):
    """Raised with the full list of validation problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("configuration invalid:\n  - " + "\n  - ".join(self.errors))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _read_packaged(name: str) -> dict:
    with resources.files("overrow.configs").joinpath(name).open("r") as fh:
        return json.load(fh)


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; override values win, nested dicts merge."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class SizingDefaults:
    """Calibrated sizing assumptions shipped with the default config.

    design_acceleration pairs with the calibrated wheel radius to reproduce
    the terrain-torque regression table; payload_acceleration is the gentler
    assumption used for payload headroom estimates.
    """

    design_acceleration: float = 1.0
    payload_acceleration: float = 0.6
    design_incline: float = math.radians(10.0)
    safety_factor: float = 1.5
    target_speed: float = 0.61


@dataclass(frozen=True)
class RobotConfig:
    chassis: ChassisConfig
    caster: CasterParams
    motor: MotorSpec
    sizing: SizingDefaults
    drive_raw: dict
    sprayer: SprayerConfig
    raw: dict

    def drive_config(self) -> DriveConfig:
        d = self.drive_raw
        counts_per_meter = d["encoder_counts_per_rev"] / (2.0 * math.pi * self.chassis.wheel_radius)
        no_load_cps = d["no_load_speed_mps"] * counts_per_meter
        plant = MotorPlantConfig(
            no_load_speed_cps=no_load_cps,
            time_constant_s=d["plant_time_constant_s"],
            max_torque_nm=self.motor.continuous_torque,
            droop_cps_per_nm=d["plant_droop_fraction_at_rated"] * no_load_cps
                             / self.motor.continuous_torque,
        )
        cm = d["channel_map"]
        return DriveConfig(
            channel_map=ChannelMap(cm["steering"], cm["throttle"], tuple(cm["switches"])),
            deadzone=d["deadzone"],
            capacity_fraction=self.motor.capacity_fraction,
            no_load_speed_mps=d["no_load_speed_mps"],
            counts_per_meter=counts_per_meter,
            plant=plant,
            gains=default_gains(no_load_cps),
            battery_nominal_v=d["battery_nominal_v"],
            battery_sag_v_per_duty=d["battery_sag_v_per_duty"],
            tick_hz=d["tick_hz"],
        )

    @property
    def failsafe_ms(self) -> int:
        return int(self.drive_raw["failsafe_window_ms"])


def _require(section: dict, name: str, keys, errors: list[str]) -> bool:
    ok = True
    for key in keys:
        if key not in section:
            errors.append(f"{name}: missing required field {key!r}")
            ok = False
    return ok


def build_robot_config(raw: dict) -> RobotConfig:
    errors: list[str] = []
    for section in ("chassis", "caster", "motor", "sizing", "drive", "sprayer"):
        if section not in raw:
            errors.append(f"missing config section {section!r}")
    if errors:
        raise ConfigError(errors)

    ch = raw["chassis"]
    _require(ch, "chassis", ["mass_kg", "track_width_m", "wheelbase_m", "cg_height_m",
                             "cg_to_front_m", "yaw_inertia_kgm2", "wheel_radius_m",
                             "wheel_width_m", "n_driven", "clearance_m"], errors)
    dr = raw["drive"]
    _require(dr, "drive", ["no_load_speed_mps", "plant_time_constant_s",
                           "plant_droop_fraction_at_rated", "encoder_counts_per_rev",
                           "tick_hz", "deadzone", "failsafe_window_ms",
                           "battery_nominal_v", "battery_sag_v_per_duty", "channel_map"], errors)
    if errors:
        raise ConfigError(errors)

    try:
        chassis = ChassisConfig(
            mass=ch["mass_kg"],
            track_width=ch["track_width_m"],
            half_track=ch.get("half_track_m", ch["track_width_m"] / 2.0),
            wheelbase=ch["wheelbase_m"],
            cg_height=ch["cg_height_m"],
            cg_to_front=ch["cg_to_front_m"],
            yaw_inertia=ch["yaw_inertia_kgm2"],
            wheel_radius=ch["wheel_radius_m"],
            wheel_width=ch["wheel_width_m"],
            n_driven=int(ch["n_driven"]),
            caster_positions=tuple(tuple(p) for p in ch.get(
                "caster_positions_m",
                [[-ch["wheelbase_m"], ch["track_width_m"] / 2.0],
                 [-ch["wheelbase_m"], -ch["track_width_m"] / 2.0]])),
            clearance=ch["clearance_m"],
        )
    except ValueError as err:
        errors.append(str(err))
        chassis = None

    ca = raw["caster"]
    caster = CasterParams(
        static_friction_torque=ca.get("static_friction_torque_nm", 0.8),
        viscous_coeff=ca.get("viscous_coeff_nms_per_rad", 0.15),
        caster_wheel_radius=ca.get("wheel_radius_m", 0.075),
    )
    mo = raw["motor"]
    try:
        motor = MotorSpec(
            continuous_torque=mo["continuous_torque_nm"],
            gear_ratio=mo.get("gear_ratio", 32.0),
            duty_limit_minutes=mo.get("duty_limit_min", 15.0),
            capacity_fraction=mo.get("capacity_fraction", 0.15),
        )
    except (KeyError, ValueError) as err:
        errors.append(f"motor: {err}")
        motor = None

    si = raw["sizing"]
    sizing = SizingDefaults(
        design_acceleration=si.get("design_acceleration_mps2", 1.0),
        payload_acceleration=si.get("payload_acceleration_mps2", 0.6),
        design_incline=math.radians(si.get("design_incline_deg", 10.0)),
        safety_factor=si.get("safety_factor", 1.5),
        target_speed=si.get("target_speed_mps", 0.61),
    )

    sp = raw["sprayer"]
    try:
        sprayer = SprayerConfig(
            tank_capacity_l=sp["tank_capacity_l"],
            operating_pressure_psi=sp["operating_pressure_psi"],
            ref_pressure_psi=sp.get("ref_pressure_psi", sp["operating_pressure_psi"]),
            nozzles=int(sp["nozzles"]),
            nozzle_ref_flow_gpm=sp["nozzle_ref_flow_gpm"],
            sections=int(sp.get("sections", 4)),
            plot_area_m2=sp["plot_area_m2"],
            plot_spray_time_s=sp["plot_spray_time_s"],
        )
    except (KeyError, ValueError) as err:
        errors.append(f"sprayer: {err}")
        sprayer = None

    if not 0.0 <= dr["deadzone"] < 0.5:
        errors.append(f"drive: deadzone must be in [0, 0.5), got {dr['deadzone']}")
    if dr["tick_hz"] < 10 or dr["tick_hz"] > 1000:
        errors.append(f"drive: tick_hz must be in [10, 1000], got {dr['tick_hz']}")

    if errors:
        raise ConfigError(errors)
    return RobotConfig(chassis=chassis, caster=caster, motor=motor, sizing=sizing,
                       drive_raw=dr, sprayer=sprayer, raw=raw)


def load_default_raw() -> dict:
    return _read_packaged("default_config.json")


def load_robot_config(overrides: dict | None = None) -> RobotConfig:
    raw = load_default_raw()
    if overrides:
        raw = deep_merge(raw, overrides)
    return build_robot_config(raw)


@dataclass(frozen=True)
class TerrainLibrary:
    specs: dict[str, TerrainSpec]
    sizing_set: tuple[str, ...]

    def get(self, name: str) -> TerrainSpec:
        if name not in self.specs:
            known = ", ".join(sorted(self.specs))
            raise ConfigError([f"unknown terrain {name!r}; known terrains: {known}"])
        return self.specs[name]

    def names(self) -> list[str]:
        return list(self.specs)


def load_terrain_library(path=None) -> TerrainLibrary:
    """Load the terrain library; defaults to the packaged rolling-resistance table."""
    if path is None:
        raw = _read_packaged("terrains.json")
    else:
        with open(path) as fh:
            raw = json.load(fh)
    errors = []
    specs: dict[str, TerrainSpec] = {}
    for i, rec in enumerate(raw.get("terrains", [])):
        missing = [k for k in ("name", "c_rr_min", "c_rr_max") if k not in rec]
        if missing:
            errors.append(f"terrain record {i}: missing {missing}")
            continue
        try:
            specs[rec["name"]] = TerrainSpec(
                name=rec["name"],
                c_rr_min=rec["c_rr_min"],
                c_rr_max=rec["c_rr_max"],
                default_incline=math.radians(rec.get("default_incline_deg", 0.0)),
            )
        except ValueError as err:
            errors.append(f"terrain record {i} ({rec.get('name')}): {err}")
    sizing_set = tuple(raw.get("sizing_set", []))
    for name in sizing_set:
        if name not in specs:
            errors.append(f"sizing_set references unknown terrain {name!r}")
    if errors:
        raise ConfigError(errors)
    return TerrainLibrary(specs=specs, sizing_set=sizing_set)
