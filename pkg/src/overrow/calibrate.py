"""Fit the (wheel_radius, design_acceleration) pair against the terrain-torque
regression table.

The torque table was published without the wheel radius or the acceleration
assumption behind it, so the shipped defaults are calibrated: this script
solves the least-squares fit tau_i = r * (m*a + m*g*sin(th) + C_i*m*g*cos(th))
over the six regression terrains and reports how the shipped rounded pair
(0.1 m, 1.0 m/s^2) reproduces the table.

Run as: python -m overrow.calibrate
"""

from __future__ import annotations

import math

import numpy as np

from .config import load_robot_config, load_terrain_library
from .terramech import G, tractive_force

# Published total-torque regression targets, N*m, keyed by library terrain name.
TORQUE_TARGETS = {
    "concrete": 12.16,
    "rough_paved_road": 12.42,
    "gravel": 12.95,
    "grass": 14.21,
    "dry_hard_soil": 13.81,
    "wet_saturated_soil": 15.55,
}


def fit_radius_and_acceleration(mass: float, incline: float,
                                targets: dict[str, float] | None = None,
                                library=None) -> tuple[float, float]:
    """Least-squares (wheel_radius, acceleration) over the regression set.

    tau_i = u*m + w*(m*g*sin + C_i*m*g*cos) with u = r*a, w = r is linear in
    (u, w), so the fit is a single lstsq solve.
    """
    targets = TORQUE_TARGETS if targets is None else targets
    library = load_terrain_library() if library is None else library
    k_grade = mass * G * math.sin(incline)
    k_roll = mass * G * math.cos(incline)
    rows = []
    torques = []
    for name, tau in targets.items():
        c = library.get(name).c_rr("mid")
        rows.append([mass, k_grade + c * k_roll])
        torques.append(tau)
    (u, w), *_ = np.linalg.lstsq(np.asarray(rows), np.asarray(torques), rcond=None)
    return float(w), float(u / w)


def regression_errors(radius: float, accel: float, mass: float, incline: float,
                      targets: dict[str, float] | None = None, library=None) -> dict[str, float]:
    """Relative error of computed vs target torque per regression terrain."""
    targets = TORQUE_TARGETS if targets is None else targets
    library = load_terrain_library() if library is None else library
    out = {}
    for name, tau in targets.items():
        c = library.get(name).c_rr("mid")
        computed = tractive_force(mass, accel, incline, c) * radius
        out[name] = (computed - tau) / tau
    return out


def main() -> None:
    robot = load_robot_config()
    mass = robot.chassis.mass
    incline = robot.sizing.design_incline
    r_fit, a_fit = fit_radius_and_acceleration(mass, incline)
    print(f"fitted wheel radius       {r_fit:.6f} m")
    print(f"fitted design acceleration {a_fit:.6f} m/s^2")
    shipped_r = robot.chassis.wheel_radius
    shipped_a = robot.sizing.design_acceleration
    print(f"shipped pair              ({shipped_r}, {shipped_a})")
    errors = regression_errors(shipped_r, shipped_a, mass, incline)
    print("regression reproduction with shipped pair:")
    for name, rel in errors.items():
        print(f"  {name:20s} {TORQUE_TARGETS[name]:6.2f} N*m  err {100 * rel:+.2f}%")
    worst = max(abs(v) for v in errors.values())
    print(f"worst error {100 * worst:.2f}% (tolerance 10%)")


if __name__ == "__main__":
    main()
