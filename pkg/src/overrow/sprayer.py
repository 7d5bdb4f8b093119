"""Hydraulic and coverage model of the spraying system.

The pump/bypass pair is modeled as an ideal constant-pressure source, so
per-nozzle flow follows the orifice square-root law from the reference
point (0.2 GPM at 40 PSI). Solenoid-gated boom sections switch nozzles in
and out; tank accounting conserves volume exactly across arbitrary step
partitions by deriving the level from the cumulative dispensed total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# One US gallon in liters; a single constant avoids unit-mix rounding drift.
GAL_TO_L = 3.785411784


@dataclass(frozen=True)
class SprayerConfig:
    tank_capacity_l: float = 94.64
    operating_pressure_psi: float = 40.0
    ref_pressure_psi: float = 40.0
    nozzles: int = 4
    nozzle_ref_flow_gpm: float = 0.2
    sections: int = 4
    plot_area_m2: float = 2.23
    plot_spray_time_s: float = 4.0

    def __post_init__(self):
        if min(self.tank_capacity_l, self.operating_pressure_psi, self.ref_pressure_psi,
               self.nozzle_ref_flow_gpm, self.plot_area_m2, self.plot_spray_time_s) <= 0:
            raise ValueError("sprayer config values must be positive")
        if self.nozzles < 1 or self.sections < 1 or self.nozzles % self.sections:
            raise ValueError("nozzles must divide evenly into boom sections")

    @property
    def nozzles_per_section(self) -> int:
        return self.nozzles // self.sections

    def total_flow_gpm(self, open_sections: int | None = None) -> float:
        n = self.sections if open_sections is None else open_sections
        return n * self.nozzles_per_section * nozzle_flow(self.operating_pressure_psi, self)

    def total_flow_lps(self, open_sections: int | None = None) -> float:
        return self.total_flow_gpm(open_sections) * GAL_TO_L / 60.0


def nozzle_flow(pressure_psi: float, cfg: SprayerConfig) -> float:
    """Per-nozzle flow in GPM at the given pressure (square-root orifice law)."""
    if pressure_psi < 0.0:
        raise ValueError(f"pressure must be >= 0, got {pressure_psi}")
    return cfg.nozzle_ref_flow_gpm * math.sqrt(pressure_psi / cfg.ref_pressure_psi)


@dataclass
class SprayerState:
    """Tank and accounting state. tank_level is derived, never stored, so
    dispensed + remaining = initial holds exactly."""

    initial_level_l: float
    cumulative_volume_l: float = 0.0
    cumulative_open_time_s: float = 0.0
    dry_run: bool = False
    solenoids: tuple[bool, ...] = (False, False, False, False)

    @property
    def tank_level_l(self) -> float:
        return self.initial_level_l - self.cumulative_volume_l

    @property
    def cumulative_volume_gal(self) -> float:
        return self.cumulative_volume_l / GAL_TO_L


def new_state(cfg: SprayerConfig, fill_l: float | None = None) -> SprayerState:
    fill = cfg.tank_capacity_l if fill_l is None else fill_l
    if not 0.0 <= fill <= cfg.tank_capacity_l:
        raise ValueError(f"fill {fill} L outside [0, {cfg.tank_capacity_l}]")
    return SprayerState(initial_level_l=fill)


def step_sprayer(state: SprayerState, cfg: SprayerConfig, dt: float,
                 solenoids: tuple[bool, ...]) -> float:
    """Advance the sprayer by dt with the given per-section solenoid states.

    Returns the flow in L/s that was actually delivered during the step.
    Flow ceases at an empty tank; attempting to spray past empty raises the
    dry_run flag but is not an error.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if len(solenoids) != cfg.sections:
        raise ValueError(f"expected {cfg.sections} solenoid states, got {len(solenoids)}")
    state.solenoids = tuple(bool(s) for s in solenoids)
    n_open = sum(state.solenoids)
    if n_open == 0:
        return 0.0
    state.cumulative_open_time_s += dt
    demand_l = cfg.total_flow_lps(n_open) * dt
    remaining = state.tank_level_l
    dispensed = min(demand_l, remaining)
    if demand_l > remaining:
        state.dry_run = True
    state.cumulative_volume_l += dispensed
    return dispensed / dt


def plots_sprayed(state: SprayerState, cfg: SprayerConfig) -> int:
    """Completed plots under the time-based model (one plot per spray interval)."""
    return int(math.floor((state.cumulative_open_time_s + 1e-9) / cfg.plot_spray_time_s))


def endurance_remaining_s(state: SprayerState, cfg: SprayerConfig) -> float:
    """Seconds of full-boom spraying left at operating pressure."""
    return state.tank_level_l / cfg.total_flow_lps()


def coverage_report(state: SprayerState, cfg: SprayerConfig) -> dict:
    plots = plots_sprayed(state, cfg)
    return {
        "plots_sprayed": plots,
        "area_m2": plots * cfg.plot_area_m2,
        "volume_l": state.cumulative_volume_l,
        "volume_gal": state.cumulative_volume_gal,
        "open_time_s": state.cumulative_open_time_s,
        "tank_level_l": state.tank_level_l,
        "endurance_remaining_s": endurance_remaining_s(state, cfg),
        "dry_run": state.dry_run,
    }


def format_report(report: dict) -> str:
    lines = [
        "spray coverage report",
        f"  plots sprayed      {report['plots_sprayed']}",
        f"  area covered       {report['area_m2']:.2f} m^2",
        f"  volume dispensed   {report['volume_l']:.3f} L ({report['volume_gal']:.3f} gal)",
        f"  solenoid open time {report['open_time_s']:.1f} s",
        f"  tank level         {report['tank_level_l']:.3f} L",
        f"  endurance left     {report['endurance_remaining_s'] / 60.0:.2f} min",
    ]
    if report["dry_run"]:
        lines.append("  WARNING: dry-run detected (spraying while empty)")
    return "\n".join(lines)
