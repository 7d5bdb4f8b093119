"""World model and deterministic stepper.

A scenario describes the field (crop-row groups, plots, terrain patches),
the robot configuration, and the input source. The stepper advances at a
fixed dt: ingest inputs through the RC codec, run one control tick, scale
wheel speeds by the terrain slip factor, integrate the pose, step the
sprayer, then detect events (stalls, wheel-path violations, plot
entry/exit, failsafes). Identical scenario + inputs reproduce the run log
byte for byte.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import sprayer as spray
from .config import ConfigError, RobotConfig, load_robot_config
from .crsf import CrsfLink, encode_rc_channels
from .drive import DriveController, TickActions
from .geometry import (point_in_polygon, polygon_area, polygon_errors,
                       rect_polygon, segment_intersects_polygon)
from .kinematics import Pose, WheelSpeeds, body_twist, integrate_pose, normalize_angle
from .runlog import RunLog, manifest_record
from .terramech import TerrainParams, tractive_force


@dataclass(frozen=True)
class RowGroup:
    """A group of parallel crop rows, laid out symmetrically about a centerline
    running from origin along heading for the given length."""

    origin: tuple[float, float]
    heading: float
    length: float
    row_spacing: float
    n_rows: int

    def row_offsets(self) -> tuple[float, ...]:
        return tuple((i - (self.n_rows - 1) / 2.0) * self.row_spacing
                     for i in range(self.n_rows))

    def to_frame(self, x: float, y: float) -> tuple[float, float]:
        """Project a world point to (along, lateral) coordinates of the group."""
        dx, dy = x - self.origin[0], y - self.origin[1]
        c, s = math.cos(self.heading), math.sin(self.heading)
        return dx * c + dy * s, -dx * s + dy * c


@dataclass(frozen=True)
class Plot:
    name: str
    polygon: tuple[tuple[float, float], ...]
    area: float
    crop: str
    crop_height: float


@dataclass(frozen=True)
class TerrainPatch:
    polygon: tuple[tuple[float, float], ...]
    params: TerrainParams


@dataclass(frozen=True)
class FieldLayout:
    row_groups: tuple[RowGroup, ...]
    plots: tuple[Plot, ...]
    patches: tuple[TerrainPatch, ...]
    default_terrain: TerrainParams

    def patch_at(self, x: float, y: float) -> TerrainParams:
        for patch in self.patches:
            if point_in_polygon(x, y, patch.polygon):
                return patch.params
        return self.default_terrain


class ScenarioError(ConfigError):
    pass


def _parse_terrain(raw: dict, where: str, errors: list[str]) -> TerrainParams | None:
    try:
        return TerrainParams(
            name=raw.get("name", where),
            c_rr=raw["c_rr"],
            incline=math.radians(raw.get("incline_deg", 0.0)),
            slip_factor=raw.get("slip_factor", 1.0),
        )
    except (KeyError, ValueError, TypeError) as err:
        errors.append(f"{where}: {err}")
        return None


def _parse_polygon(raw: dict, where: str, errors: list[str]):
    if "rect_m" in raw:
        if len(raw["rect_m"]) != 4:
            errors.append(f"{where}: rect_m needs [x0, y0, x1, y1]")
            return None
        poly = rect_polygon(*raw["rect_m"])
    elif "polygon_m" in raw:
        poly = tuple(tuple(p) for p in raw["polygon_m"])
    else:
        errors.append(f"{where}: needs rect_m or polygon_m")
        return None
    for problem in polygon_errors(poly):
        errors.append(f"{where}: {problem}")
    return poly


def parse_layout(raw: dict, errors: list[str]) -> FieldLayout | None:
    default_terrain = _parse_terrain(raw.get("default_terrain", {"c_rr": 0.002}),
                                     "field.default_terrain", errors)
    groups = []
    for i, rec in enumerate(raw.get("row_groups", [])):
        where = f"field.row_groups[{i}]"
        try:
            group = RowGroup(
                origin=tuple(rec["origin_m"]),
                heading=math.radians(rec.get("heading_deg", 0.0)),
                length=rec["length_m"],
                row_spacing=rec["row_spacing_m"],
                n_rows=int(rec.get("n_rows", 1)),
            )
        except (KeyError, TypeError) as err:
            errors.append(f"{where}: {err}")
            continue
        if group.length <= 0:
            errors.append(f"{where}: length must be > 0")
        if group.row_spacing <= 0:
            errors.append(f"{where}: row_spacing must be > 0")
        if group.n_rows < 1:
            errors.append(f"{where}: n_rows must be >= 1")
        groups.append(group)

    plots = []
    for i, rec in enumerate(raw.get("plots", [])):
        where = f"field.plots[{i}]"
        poly = _parse_polygon(rec, where, errors)
        if poly is None:
            continue
        plots.append(Plot(
            name=rec.get("name", f"plot{i}"),
            polygon=poly,
            area=rec.get("area_m2", abs(polygon_area(poly))),
            crop=rec.get("crop", "unknown"),
            crop_height=rec.get("crop_height_m", 0.0),
        ))

    patches = []
    for i, rec in enumerate(raw.get("terrain_patches", [])):
        where = f"field.terrain_patches[{i}]"
        poly = _parse_polygon(rec, where, errors)
        params = _parse_terrain(rec.get("terrain", {}), where + ".terrain", errors)
        if poly is not None and params is not None:
            patches.append(TerrainPatch(polygon=poly, params=params))

    if default_terrain is None:
        return None
    return FieldLayout(tuple(groups), tuple(plots), tuple(patches), default_terrain)


class World:
    """Authoritative simulation state; stepped by exactly one caller at a time."""

    def __init__(self, scenario: dict, robot: RobotConfig, layout: FieldLayout,
                 warnings: list[str]):
        self.scenario = scenario
        self.robot = robot
        self.layout = layout
        self.warnings = warnings
        self.dt = scenario["dt_s"]
        self.seed = scenario["seed"]
        self.n_ticks = int(round(scenario["duration_s"] / self.dt))
        sp = scenario.get("start_pose", {})
        self.pose = Pose(sp.get("x_m", 0.0), sp.get("y_m", 0.0),
                         math.radians(sp.get("theta_deg", 0.0)))
        self.casters_locked = scenario.get("casters_locked", True)
        self.heading_noise = scenario.get("heading_noise_rad_per_sqrt_s", 0.0)
        self.coverage_mode = scenario.get("coverage_mode", "time")
        # boom line across the robot, this far behind the driven axle
        self.boom_offset = scenario.get("boom_offset_m", -0.9)

        self.drive_cfg = robot.drive_config()
        self.controller = DriveController(self.drive_cfg)
        self.link = CrsfLink(robot.failsafe_ms)
        self.sprayer = spray.new_state(robot.sprayer, scenario.get("sprayer_fill_l"))
        self.rng = random.Random(self.seed)
        self.log = RunLog(manifest=manifest_record(scenario, self.seed, self.dt))

        self.tick = 0
        self.distance = 0.0
        self.pose_trace: list[Pose] = []
        self.sprayed_plots: set[str] = set()
        self._prev_mask = (False,) * robot.sprayer.sections
        self._prev_stall = (False, False)
        self._prev_link_ok = False
        self._prev_violations: set = set()
        self._inside_plots: set = set()
        self._high_duty_s = [0.0, 0.0]
        self._duty_limit_flagged = [False, False]
        self.event_counts = {"stall": 0, "violation": 0, "failsafe": 0,
                             "plot_enter": 0, "plot_exit": 0, "over_height": 0}

    # --- input ingestion -----------------------------------------------------

    @property
    def time_ms(self) -> int:
        return round(self.tick * self.dt * 1000)

    def ingest_channels(self, channels) -> None:
        """Apply one RC input sample through the byte codec, logging it."""
        data = encode_rc_channels(channels)
        decoded = self.link.ingest(data, self.time_ms)
        for ch in decoded:
            self.log.append({"k": "in", "t": self.tick, "ch": list(ch)})

    def ingest_bytes(self, data: bytes) -> int:
        """Feed raw link bytes (e.g. captured frames); returns frames decoded."""
        decoded = self.link.ingest(data, self.time_ms)
        for ch in decoded:
            self.log.append({"k": "in", "t": self.tick, "ch": list(ch)})
        return len(decoded)

    # --- stepping ------------------------------------------------------------

    def _event(self, kind: str, **data) -> dict:
        record = {"k": "ev", "t_ms": self.time_ms, "ev": kind}
        record.update(data)
        self.log.append(record)
        self.event_counts[kind] = self.event_counts.get(kind, 0) + 1
        return record

    def step(self) -> TickActions:
        chassis = self.robot.chassis
        state = self.link.snapshot(self.time_ms)
        if self._prev_link_ok and not state.link_ok:
            self._event("failsafe", x=self.pose.x, y=self.pose.y)
        self._prev_link_ok = state.link_ok

        patch = self.layout.patch_at(self.pose.x, self.pose.y)
        steady_force = tractive_force(chassis.mass, 0.0, patch.incline, patch.c_rr)
        load_per_motor = steady_force * chassis.wheel_radius / chassis.n_driven
        actions = self.controller.control_tick(
            state, self.dt, (load_per_motor, load_per_motor), pose=self.pose)
        self.log.append({"k": "tm", **actions.telemetry.as_dict()})

        wheel = self.controller.wheel_speeds_mps()
        ground = WheelSpeeds(wheel.v_l * patch.slip_factor, wheel.v_r * patch.slip_factor)
        twist = body_twist(ground, chassis.track_width)
        new_pose = integrate_pose(self.pose, twist, self.dt)
        if not self.casters_locked and self.heading_noise > 0.0:
            jitter = self.rng.gauss(0.0, self.heading_noise * math.sqrt(self.dt))
            new_pose = Pose(new_pose.x, new_pose.y, normalize_angle(new_pose.theta + jitter))
        self.distance += abs(twist.v) * self.dt
        self.pose = new_pose
        self.pose_trace.append(new_pose)

        flow_lps = spray.step_sprayer(self.sprayer, self.robot.sprayer, self.dt,
                                      actions.relay_states[:self.robot.sprayer.sections])
        if self.sprayer.solenoids != self._prev_mask:
            self.log.append({
                "k": "sp", "t_ms": self.time_ms,
                "mask": [int(s) for s in self.sprayer.solenoids],
                "flow_lps": flow_lps,
                "tank_l": self.sprayer.tank_level_l,
            })
            self._prev_mask = self.sprayer.solenoids
        if self.coverage_mode == "geometric" and any(self.sprayer.solenoids):
            self._mark_boom_coverage()

        self._detect_events(actions)
        self.tick += 1
        return actions

    def _boom_segment(self):
        c, s = math.cos(self.pose.theta), math.sin(self.pose.theta)
        cx = self.pose.x + self.boom_offset * c
        cy = self.pose.y + self.boom_offset * s
        half = self.robot.chassis.track_width / 2.0
        return (cx - half * -s, cy - half * c), (cx + half * -s, cy + half * c)

    def _mark_boom_coverage(self) -> None:
        a, b = self._boom_segment()
        for plot in self.layout.plots:
            if plot.name in self.sprayed_plots:
                continue
            if segment_intersects_polygon(a, b, plot.polygon):
                self.sprayed_plots.add(plot.name)
                self._event("sprayed_plot", plot=plot.name)

    def _detect_events(self, actions: TickActions) -> None:
        # stalls, gated on an active speed command: a parked robot resting on
        # resistive ground is not a stall
        stall = tuple(
            self.controller.driver.channels[i].stalled and abs(actions.setpoints_cps[i]) > 0.0
            for i in range(2))
        if stall != self._prev_stall:
            if any(stall):
                self._event("stall", left=stall[0], right=stall[1],
                            x=self.pose.x, y=self.pose.y)
            self._prev_stall = stall

        violations = self.wheel_path_clearance()
        keys = {(v["wheel"], v["group"], v["row"]) for v in violations}
        for v in violations:
            if (v["wheel"], v["group"], v["row"]) not in self._prev_violations:
                self._event("violation", **v)
        self._prev_violations = keys

        # continuous-torque duty budget; derating itself is out of scope
        limit_s = self.robot.motor.duty_limit_minutes * 60.0
        for i in range(2):
            if abs(self.controller.driver.channels[i].duty) >= 0.95:
                self._high_duty_s[i] += self.dt
                if self._high_duty_s[i] > limit_s and not self._duty_limit_flagged[i]:
                    self._duty_limit_flagged[i] = True
                    self._event("duty_limit", motor=i,
                                high_duty_s=round(self._high_duty_s[i], 3))

        inside = {p.name for p in self.layout.plots
                  if point_in_polygon(self.pose.x, self.pose.y, p.polygon)}
        for name in sorted(inside - self._inside_plots):
            self._event("plot_enter", plot=name)
            plot = next(p for p in self.layout.plots if p.name == name)
            if plot.crop_height >= self.robot.chassis.clearance:
                self._event("over_height", plot=name, crop_height_m=plot.crop_height,
                            clearance_m=self.robot.chassis.clearance)
        for name in sorted(self._inside_plots - inside):
            self._event("plot_exit", plot=name)
        self._inside_plots = inside

    # --- geometry checks -----------------------------------------------------

    def wheel_positions(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """World positions of the left and right driven-wheel centers."""
        half = self.robot.chassis.track_width / 2.0
        nx, ny = -math.sin(self.pose.theta), math.cos(self.pose.theta)
        left = (self.pose.x + half * nx, self.pose.y + half * ny)
        right = (self.pose.x - half * nx, self.pose.y - half * ny)
        return left, right

    def wheel_path_clearance(self) -> list[dict]:
        """Current wheel-footprint violations against crop-row lines.

        A violation is a wheel footprint (wheel_width wide, centered on the
        wheel track) overlapping a row line within the row group's extent.
        """
        half_width = self.robot.chassis.wheel_width / 2.0
        out = []
        for gi, group in enumerate(self.layout.row_groups):
            offsets = group.row_offsets()
            for side, (wx, wy) in zip(("left", "right"), self.wheel_positions()):
                along, lat = group.to_frame(wx, wy)
                if not -half_width <= along <= group.length + half_width:
                    continue
                for ri, row_lat in enumerate(offsets):
                    gap = abs(lat - row_lat)
                    if gap < half_width:
                        out.append({
                            "wheel": side, "group": gi, "row": ri,
                            "overlap_m": round(half_width - gap, 6),
                            "x": wx, "y": wy,
                        })
        return out

    def geometry_summary(self) -> dict:
        wheel_width = self.robot.chassis.wheel_width
        margins = [(g.row_spacing - wheel_width) / 2.0 for g in self.layout.row_groups]
        return {
            "wheel_width_m": wheel_width,
            "row_margins_m": margins,
            "min_row_margin_m": min(margins) if margins else None,
            "warnings": list(self.warnings),
        }

    # --- reporting -----------------------------------------------------------

    def summary(self) -> dict:
        sim_time = self.tick * self.dt
        report = spray.coverage_report(self.sprayer, self.robot.sprayer)
        if self.coverage_mode == "geometric":
            sprayed = [p for p in self.layout.plots if p.name in self.sprayed_plots]
            report["plots_sprayed"] = len(sprayed)
            report["area_m2"] = sum(p.area for p in sprayed)
        return {
            "ticks": self.tick,
            "sim_time_s": sim_time,
            "distance_m": self.distance,
            "mean_speed_mps": self.distance / sim_time if sim_time > 0 else 0.0,
            "coverage_mode": self.coverage_mode,
            "events": dict(self.event_counts),
            "spray": report,
            "link": {
                "frames_ok": self.link.stats.frames_ok,
                "crc_errors": self.link.stats.crc_errors,
                "failsafes": self.link.stats.failsafes,
            },
            "log_sha256": self.log.sha256(),
        }


def load_scenario(source, base_dir=None) -> World:
    """Build a World from a scenario file path or an already-parsed dict.

    Validation is exhaustive: every schema violation is collected and
    reported together. Questionable-but-runnable geometry (a wheel wider
    than a row gap) becomes a warning on the returned world.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path) as fh:
            raw = json.load(fh)
        if base_dir is None:
            base_dir = path.parent
    else:
        raw = dict(source)
    errors: list[str] = []

    dt = raw.get("dt_s", 0.02)
    if not (isinstance(dt, (int, float)) and 0.0 < dt <= 0.1):
        errors.append(f"dt_s must be in (0, 0.1], got {dt!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        errors.append(f"seed must be an integer, got {seed!r}")
    duration = raw.get("duration_s", 0.0)
    if not (isinstance(duration, (int, float)) and duration > 0.0):
        errors.append(f"duration_s must be > 0, got {duration!r}")
    mode = raw.get("input", {}).get("mode", "trace")
    if mode not in ("trace", "live"):
        errors.append(f"input.mode must be 'trace' or 'live', got {mode!r}")
    coverage_mode = raw.get("coverage_mode", "time")
    if coverage_mode not in ("time", "geometric"):
        errors.append(f"coverage_mode must be 'time' or 'geometric', got {coverage_mode!r}")

    robot = None
    try:
        robot = load_robot_config(raw.get("config", {}))
    except ConfigError as err:
        errors.extend(err.errors)

    layout = parse_layout(raw.get("field", {}), errors)

    if errors:
        raise ScenarioError(errors)

    resolved = dict(raw)
    resolved["dt_s"] = dt
    resolved["seed"] = seed
    resolved["config"] = robot.raw

    warnings = []
    for i, group in enumerate(layout.row_groups):
        if robot.chassis.wheel_width >= group.row_spacing:
            warnings.append(
                f"row_groups[{i}]: wheel width {robot.chassis.wheel_width} m >= "
                f"row spacing {group.row_spacing} m; wheels cannot clear these rows")
    if not robot.chassis.is_stock_track():
        lo, hi = robot.chassis.STOCK_TRACK_RANGE
        warnings.append(
            f"track width {robot.chassis.track_width} m outside the stock "
            f"adjustment range [{lo}, {hi}] m")
    return World(resolved, robot, layout, warnings)


def scenario_trace_path(scenario: dict, base_dir) -> Path | None:
    inp = scenario.get("input", {})
    if inp.get("mode", "trace") != "trace" or "trace" not in inp:
        return None
    return (Path(base_dir) / inp["trace"]) if base_dir is not None else Path(inp["trace"])


def run_scripted(world: World, trace, n_ticks: int | None = None) -> RunLog:
    """Drive the world from a (tick, channels) trace; sample-and-hold between
    entries, watchdog semantics apply in gaps."""
    n = world.n_ticks if n_ticks is None else n_ticks
    idx = 0
    for tick in range(n):
        while idx < len(trace) and trace[idx][0] == tick:
            world.ingest_channels(trace[idx][1])
            idx += 1
        world.step()
    return world.log


# --- headland turn measurement -------------------------------------------------

class InsufficientData(ValueError):
    pass


def fit_circle(points) -> tuple[float, float, float]:
    """Least-squares (algebraic) circle fit; returns (cx, cy, radius)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise InsufficientData(f"need >= 3 points to fit a circle, got {len(pts)}")
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    spread = float(np.hypot(shifted[:, 0], shifted[:, 1]).max())
    if spread < 1e-3:
        # coincident cloud: an in-place turn; radius is the RMS wobble
        return centroid[0], centroid[1], float(np.hypot(shifted[:, 0], shifted[:, 1]).mean())
    a = np.column_stack([shifted[:, 0], shifted[:, 1], np.ones(len(pts))])
    b = -(shifted[:, 0] ** 2 + shifted[:, 1] ** 2)
    (d, e, f), *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = -d / 2.0, -e / 2.0
    r_sq = cx * cx + cy * cy - f
    if r_sq <= 0.0:
        raise InsufficientData("degenerate circle fit")
    return cx + centroid[0], cy + centroid[1], math.sqrt(r_sq)


PIVOT = "pivot"
IN_PLACE = "in_place"

# stick raw value whose normalized command exceeds 0.5, so summed arcade terms
# clamp to exactly 1.0 for the driven wheel
_HALF_STICK = 1414
_FULL_STICK = 1811
_CENTER = 992


def run_headland_turn(world: World, mode: str, duration_s: float = 26.0) -> float:
    """Execute a scripted turn and return the circle radius fitted to the
    axle-midpoint trace over the final full revolution."""
    if mode == PIVOT:
        channels = [_CENTER] * 16
        channels[world.drive_cfg.channel_map.throttle - 1] = _HALF_STICK
        channels[world.drive_cfg.channel_map.steering - 1] = _HALF_STICK
    elif mode == IN_PLACE:
        channels = [_CENTER] * 16
        channels[world.drive_cfg.channel_map.steering - 1] = _FULL_STICK
    else:
        raise ValueError(f"unknown turn mode {mode!r}")

    n = int(round(duration_s / world.dt))
    poses = []
    for _ in range(n):
        world.ingest_channels(channels)
        world.step()
        poses.append(world.pose)

    # accumulate unwrapped rotation to isolate the final full revolution
    total = 0.0
    cumulative = [0.0]
    for prev, cur in zip(poses, poses[1:]):
        total += normalize_angle(cur.theta - prev.theta)
        cumulative.append(total)
    if abs(total) < 2.0 * math.pi * 1.05:
        raise InsufficientData(
            f"trace covers {abs(total):.2f} rad, need a full revolution plus margin")
    cutoff = abs(total) - 2.0 * math.pi
    points = [(p.x, p.y) for p, c in zip(poses, cumulative) if abs(c) >= cutoff]
    _, _, radius = fit_circle(points)
    return radius
