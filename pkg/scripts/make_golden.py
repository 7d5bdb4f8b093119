"""Record reference-run golden values, then freeze them in tests/golden/golden.json.

Run once after an intentional behavior change: python scripts/make_golden.py
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from overrow.config import load_robot_config  # noqa: E402
from overrow.drive import DriveController, MotorDriver  # noqa: E402
from overrow.terramech import motor_rpm, tractive_force  # noqa: E402
from trace_util import reference_stick_trace  # noqa: E402


def pid_settle_time(robot) -> float:
    cfg = robot.drive_config()
    driver = MotorDriver(cfg.resolved_plant(), cfg.resolved_gains())
    setpoint = cfg.peak_command_mps * cfg.counts_per_meter
    driver.set_speed(0, setpoint)
    dt = cfg.dt
    settle = None
    for k in range(int(5.0 / dt)):
        driver.step(dt)
        t = (k + 1) * dt
        if abs(driver.read_speed(0) - setpoint) / setpoint > 0.02:
            settle = None
        elif settle is None:
            settle = t
    return settle


def full_capacity_steady(robot) -> float:
    """Closed-form saturated steady state on flat concrete: the commanded
    no-load speed less the droop the clamped duty cannot correct."""
    cfg = robot.drive_config()
    plant = cfg.resolved_plant()
    force = tractive_force(robot.chassis.mass, 0.0, 0.0, 0.002)
    load = force * robot.chassis.wheel_radius / robot.chassis.n_driven
    v_cps = plant.no_load_speed_cps - plant.droop_cps_per_nm * load
    return v_cps / cfg.counts_per_meter


def action_log_sha(robot) -> str:
    cfg = robot.drive_config()
    controller = DriveController(cfg)
    digest = hashlib.sha256()
    for state in reference_stick_trace(cfg.tick_hz):
        actions = controller.control_tick(state)
        digest.update(actions.to_json_line().encode())
        digest.update(b"\n")
    return digest.hexdigest()


def main():
    robot = load_robot_config()
    golden = {
        "pid_settle_s": round(pid_settle_time(robot), 4),
        "rpm_at_peak_speed": motor_rpm(0.85, robot.chassis.wheel_radius),
        "full_capacity_steady_mps": full_capacity_steady(robot),
        "action_log_sha256": action_log_sha(robot),
    }
    out = ROOT / "tests" / "golden" / "golden.json"
    out.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(json.dumps(golden, indent=2, sort_keys=True))
    print(f"wrote {out.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
