"""Regenerate the bundled scenarios and input traces.

The spray-mission plot rectangles are placed from a calibration run: the
mission trace is executed on the field terrain and each plot is centered on
the robot's position during the corresponding spray window, so the bundled
geometry and trace stay consistent by construction.

Run from the repository root: python scripts/make_scenarios.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from overrow.runlog import write_trace  # noqa: E402
from overrow.world import load_scenario, run_scripted  # noqa: E402

OUT = ROOT / "src" / "overrow" / "configs" / "scenarios"

CENTER = 992
FULL = 1811
HALF = 1414  # normalizes above 0.5, so arcade sums clamp to exactly 1.0

TICK_HZ = 50
DT = 0.02


def channels(throttle=CENTER, steering=CENTER, switches=False):
    ch = [CENTER] * 16
    ch[0] = steering
    ch[1] = throttle
    if switches:
        ch[4] = ch[5] = ch[6] = ch[7] = FULL
    return ch


def dense(segments):
    """Expand [(n_ticks, channels), ...] into one entry per tick."""
    out = []
    tick = 0
    for n, ch in segments:
        for _ in range(n):
            out.append((tick, list(ch)))
            tick += 1
    return out


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")
    print(f"wrote {path.relative_to(ROOT)}")


def flax_mission():
    lead_in = 25
    drive = 165          # 3.3 s at full throttle
    settle = 35          # 0.7 s to coast down
    spray = 200          # exactly 4.0 s per plot
    cycles = 12
    segments = [(lead_in, channels())]
    for _ in range(cycles):
        segments.append((drive, channels(throttle=FULL)))
        segments.append((settle, channels()))
        segments.append((spray, channels(switches=True)))
    segments.append((25, channels()))
    trace = dense(segments)
    n_ticks = len(trace)
    duration = n_ticks * DT

    # calibration pass on a plotless field to find the spray-stop positions
    base = scenario_flax(duration, plots=[], trace_name="flax_spray.trace.jsonl")
    world = load_scenario(base)
    spray_positions = []
    tick = 0
    idx = 0
    xs = []
    spraying = False
    for tick in range(n_ticks):
        while idx < len(trace) and trace[idx][0] == tick:
            world.ingest_channels(trace[idx][1])
            idx += 1
        actions = world.step()
        now_spraying = any(actions.relay_states)
        if now_spraying:
            xs.append(world.pose.x)
        if spraying and not now_spraying:
            spray_positions.append(sum(xs) / len(xs))
            xs = []
        spraying = now_spraying
    if xs:
        spray_positions.append(sum(xs) / len(xs))
    assert len(spray_positions) == cycles, spray_positions

    plot_len = 1.63   # x 1.37 m plot width = 2.2331 m^2, published as 2.23
    plots = [
        {
            "name": f"plot{i + 1:02d}",
            "rect_m": [round(x - plot_len / 2, 3), -0.685, round(x + plot_len / 2, 3), 0.685],
            "area_m2": 2.23,
            "crop": "flax",
            "crop_height_m": 0.10,
        }
        for i, x in enumerate(spray_positions)
    ]
    write_trace(OUT / "flax_spray.trace.jsonl", trace)
    print(f"wrote {(OUT / 'flax_spray.trace.jsonl').relative_to(ROOT)} ({n_ticks} ticks)")
    write_json(OUT / "flax_spray.json",
               scenario_flax(duration, plots, "flax_spray.trace.jsonl"))


def scenario_flax(duration, plots, trace_name):
    length = 40.0
    return {
        "name": "flax_spray_mission",
        "description": "12-plot spray pass over early flax; wheel lanes sized "
                       "0.46 m row spacing against 0.36 m wheels (0.05 m margin per side)",
        "dt_s": DT,
        "seed": 7,
        "duration_s": duration,
        "start_pose": {"x_m": -1.0, "y_m": 0.0, "theta_deg": 0.0},
        "field": {
            "default_terrain": {"name": "field_soil", "c_rr": 0.06,
                                "incline_deg": 0.0, "slip_factor": 0.72},
            "row_groups": [
                {"origin_m": [-2.0, 0.0], "heading_deg": 0.0, "length_m": length,
                 "row_spacing_m": 0.46, "n_rows": 2},
                {"origin_m": [-2.0, 0.71], "heading_deg": 0.0, "length_m": length,
                 "row_spacing_m": 0.46, "n_rows": 2},
                {"origin_m": [-2.0, -0.71], "heading_deg": 0.0, "length_m": length,
                 "row_spacing_m": 0.46, "n_rows": 2},
            ],
            "plots": plots,
        },
        "input": {"mode": "trace", "trace": trace_name},
    }


def row_pass():
    segments = [(50, channels()), (300, channels(throttle=FULL)), (50, channels())]
    trace = dense(segments)
    write_trace(OUT / "row_pass.trace.jsonl", trace)
    print(f"wrote {(OUT / 'row_pass.trace.jsonl').relative_to(ROOT)} ({len(trace)} ticks)")
    base = {
        "name": "row_pass_field",
        "description": "straight row pass on field soil with calibrated slip",
        "dt_s": DT,
        "seed": 3,
        "duration_s": len(trace) * DT,
        "start_pose": {"x_m": 0.0, "y_m": 0.0, "theta_deg": 0.0},
        "field": {
            "default_terrain": {"name": "field_soil", "c_rr": 0.06,
                                "incline_deg": 0.0, "slip_factor": 0.72},
        },
        "input": {"mode": "trace", "trace": "row_pass.trace.jsonl"},
    }
    write_json(OUT / "row_pass_field.json", base)
    concrete = dict(base)
    concrete["name"] = "row_pass_concrete"
    concrete["description"] = "straight pass on concrete, no slip: theoretical peak check"
    concrete["field"] = {
        "default_terrain": {"name": "concrete", "c_rr": 0.002,
                            "incline_deg": 0.0, "slip_factor": 1.0},
    }
    write_json(OUT / "row_pass_concrete.json", concrete)


def headland():
    pivot = dense([(1300, channels(throttle=HALF, steering=HALF))])
    inplace = dense([(1300, channels(steering=FULL))])
    write_trace(OUT / "headland_pivot.trace.jsonl", pivot)
    write_trace(OUT / "headland_inplace.trace.jsonl", inplace)
    print(f"wrote headland traces ({len(pivot)} ticks)")
    base = {
        "name": "headland_pivot_142",
        "description": "pivot turn on open concrete headland, stock 1.42 m track",
        "dt_s": DT,
        "seed": 1,
        "duration_s": 26.0,
        "start_pose": {"x_m": 0.0, "y_m": 0.0, "theta_deg": 0.0},
        "field": {
            "default_terrain": {"name": "concrete", "c_rr": 0.002,
                                "incline_deg": 0.0, "slip_factor": 1.0},
        },
        "input": {"mode": "trace", "trace": "headland_pivot.trace.jsonl"},
    }
    write_json(OUT / "headland_pivot_142.json", base)
    wide = dict(base)
    wide["name"] = "headland_pivot_152"
    wide["description"] = "pivot turn at the 1.52 m track setting"
    wide["config"] = {"chassis": {"track_width_m": 1.52, "half_track_m": 0.76,
                                  "caster_positions_m": [[-1.2, 0.76], [-1.2, -0.76]]}}
    write_json(OUT / "headland_pivot_152.json", wide)
    inplace_sc = dict(base)
    inplace_sc["name"] = "headland_inplace"
    inplace_sc["description"] = "zero-radius in-place rotation"
    inplace_sc["input"] = {"mode": "trace", "trace": "headland_inplace.trace.jsonl"}
    write_json(OUT / "headland_inplace.json", inplace_sc)


def failsafe_dropout():
    # frames every tick for 2 s, dead air for 1.2 s (failsafe at +0.5 s), recovery
    trace = dense([(100, channels(throttle=FULL, switches=True))])
    recovery = dense([(50, channels())])
    trace += [(tick + 160, ch) for tick, ch in recovery]
    write_trace(OUT / "failsafe_dropout.trace.jsonl", trace)
    print(f"wrote {(OUT / 'failsafe_dropout.trace.jsonl').relative_to(ROOT)}")
    write_json(OUT / "failsafe_dropout.json", {
        "name": "failsafe_dropout",
        "description": "link drops mid-drive; watchdog must zero motors and relays",
        "dt_s": DT,
        "seed": 5,
        "duration_s": 4.2,
        "start_pose": {"x_m": 0.0, "y_m": 0.0, "theta_deg": 0.0},
        "field": {
            "default_terrain": {"name": "concrete", "c_rr": 0.002,
                                "incline_deg": 0.0, "slip_factor": 1.0},
        },
        "input": {"mode": "trace", "trace": "failsafe_dropout.trace.jsonl"},
    })


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    flax_mission()
    row_pass()
    headland()
    failsafe_dropout()


if __name__ == "__main__":
    main()
