"""Command-line entry point: sizing reports, scenario run/replay, serve mode.

Exit codes: 0 success, 2 configuration error, 3 runtime divergence
(replay mismatch).
"""

from __future__ import annotations

import json
import math
import sys
from importlib import resources
from pathlib import Path

import click

from . import sprayer as spray
from .config import ConfigError, load_robot_config, load_terrain_library
from .runlog import (extract_inputs, first_divergence, read_runlog, read_trace,
                     verify_manifest)
from .terramech import max_payload, terrain_feasibility
from .world import ScenarioError, load_scenario, run_scripted


def _load_overrides(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _fail_config(err) -> None:
    click.echo(f"error: {err}", err=True)
    sys.exit(2)


def bundled_scenario_dir():
    return resources.files("overrow.configs") / "scenarios"


def resolve_scenario_path(name: str) -> Path:
    """Accept a filesystem path or the name of a bundled scenario."""
    p = Path(name)
    if p.exists():
        return p
    bundled = Path(str(bundled_scenario_dir() / (name if name.endswith(".json") else name + ".json")))
    if bundled.exists():
        return bundled
    raise ConfigError([f"scenario {name!r} not found (not a file, not a bundled scenario)"])


@click.group()
def main():
    """Over-the-row sprayer robot: sizing, simulation, replay, teleop serve."""


# --- size ---------------------------------------------------------------------

SIZING_JSON_SCHEMA = {
    "terrain": str, "c_rr": float, "incline_deg": float,
    "tractive_force_n": float, "wheel_torque_nm": float, "motor_torque_nm": float,
    "available_torque_nm": float, "margin": float, "feasible": bool,
    "required_rpm": float,
}


def validate_sizing_json(records) -> None:
    """Schema check for machine-readable sizing output; raises on violation."""
    if not isinstance(records, list):
        raise ValueError("sizing output must be a list of records")
    for i, rec in enumerate(records):
        for key, typ in SIZING_JSON_SCHEMA.items():
            if key not in rec:
                raise ValueError(f"record {i}: missing {key!r}")
            value = rec[key]
            if typ is float and isinstance(value, int):
                value = float(value)
            if not isinstance(value, typ):
                raise ValueError(f"record {i}: {key!r} should be {typ.__name__}, "
                                 f"got {type(value).__name__}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with config-section overrides.")
@click.option("--terrain", "terrain_name", default=None, help="Terrain name from the library.")
@click.option("--all", "size_all", is_flag=True, help="Evaluate the torque regression set.")
@click.option("--terrains", "library_path", type=click.Path(exists=True), default=None,
              help="Alternate terrain library file.")
@click.option("--crr", type=click.Choice(["mid", "min", "max"]), default="mid",
              help="Which end of a rolling-resistance range to evaluate.")
@click.option("--speed", "v_target", type=float, default=None,
              help="Target speed for the RPM column (default from config).")
@click.option("--payload-sweep", is_flag=True, help="Report payload headroom at the design FoS.")
@click.option("--json", "json_out", type=click.Path(), default=None,
              help="Also write machine-readable records to this path.")
def size(config_path, terrain_name, size_all, library_path, crr, v_target, payload_sweep, json_out):
    """Per-terrain required vs available torque, RPM, feasibility, payload."""
    try:
        robot = load_robot_config(_load_overrides(config_path))
        library = load_terrain_library(library_path)
        if size_all:
            names = list(library.sizing_set)
        elif terrain_name is not None:
            library.get(terrain_name)
            names = [terrain_name]
        else:
            raise ConfigError(["pass --terrain NAME or --all"])
    except (ConfigError, json.JSONDecodeError) as err:
        _fail_config(err)

    v = robot.sizing.target_speed if v_target is None else v_target
    a = robot.sizing.design_acceleration
    records = []
    click.echo(f"mass {robot.chassis.mass} kg, wheel radius {robot.chassis.wheel_radius} m, "
               f"design accel {a} m/s^2, speed {v} m/s")
    click.echo(f"{'terrain':20s} {'c_rr':>6s} {'incl':>5s} {'req Nm':>8s} {'avail':>7s} "
               f"{'margin':>7s} {'rpm':>6s}  feasible")
    for name in names:
        spec = library.get(name)
        params = spec.params(which=crr)
        report = terrain_feasibility(robot.chassis, robot.motor, params, a, v)
        records.append({
            "terrain": name,
            "c_rr": params.c_rr,
            "incline_deg": math.degrees(params.incline),
            **report.as_dict(),
        })
        click.echo(f"{name:20s} {params.c_rr:6.3f} {math.degrees(params.incline):5.1f} "
                   f"{report.wheel_torque:8.2f} {report.available_torque:7.2f} "
                   f"{report.margin:7.2f} {report.required_rpm:6.1f}  "
                   f"{'yes' if report.feasible else 'NO'}")

    if payload_sweep:
        fos = robot.sizing.safety_factor
        a_pay = robot.sizing.payload_acceleration
        click.echo(f"\npayload headroom at FoS {fos}, accel {a_pay} m/s^2, speed {v} m/s:")
        for name in names:
            params = library.get(name).params(which=crr)
            payload = max_payload(robot.chassis, robot.motor, params, v, fos, a=a_pay)
            click.echo(f"  {name:20s} {payload:7.1f} kg")
            for rec in records:
                if rec["terrain"] == name:
                    rec["payload_kg"] = payload

    if json_out:
        validate_sizing_json(records)
        Path(json_out).write_text(json.dumps(records, indent=2) + "\n")
        click.echo(f"wrote {json_out}")


# --- simulate -------------------------------------------------------------------

def _scenario_and_trace(scenario_arg, trace_path):
    path = resolve_scenario_path(scenario_arg)
    world = load_scenario(path)
    inp = world.scenario.get("input", {})
    if trace_path is None and inp.get("mode", "trace") == "trace" and "trace" in inp:
        trace_path = path.parent / inp["trace"]
    if trace_path is None:
        raise ConfigError([f"scenario {scenario_arg!r} has no input trace; pass --trace"])
    return world, read_trace(trace_path)


@main.command()
@click.argument("scenario")
@click.option("--trace", "trace_path", type=click.Path(exists=True), default=None,
              help="Input trace (defaults to the scenario's own).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Run-log path (default <scenario>.runlog.jsonl).")
@click.option("--summary-json", type=click.Path(), default=None)
def simulate(scenario, trace_path, out_path, summary_json):
    """Run a scenario from a scripted input trace; write the deterministic run log."""
    try:
        world, trace = _scenario_and_trace(scenario, trace_path)
    except (ConfigError, OSError, json.JSONDecodeError) as err:
        _fail_config(err)
    for warning in world.warnings:
        click.echo(f"warning: {warning}", err=True)
    run_scripted(world, trace)
    out = Path(out_path) if out_path else Path(f"{world.scenario.get('name', 'run')}.runlog.jsonl")
    world.log.write(out)
    summary = world.summary()
    click.echo(f"run log: {out} ({len(world.log.lines)} records, sha256 {summary['log_sha256'][:16]}...)")
    click.echo(f"simulated {summary['sim_time_s']:.1f} s, distance {summary['distance_m']:.2f} m, "
               f"mean speed {summary['mean_speed_mps']:.3f} m/s")
    click.echo(f"events: {summary['events']}")
    click.echo(spray.format_report(summary["spray"]))
    if summary_json:
        Path(summary_json).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# --- replay ---------------------------------------------------------------------

@main.command()
@click.argument("runlog", type=click.Path(exists=True))
def replay(runlog):
    """Re-execute a run log's inputs and compare byte-for-byte."""
    from .runlog import RunLogError
    try:
        log = read_runlog(runlog)
        verify_manifest(log.manifest)
        world = load_scenario(log.manifest["scenario"])
    except (RunLogError, ScenarioError, ConfigError) as err:
        _fail_config(err)
    inputs = extract_inputs(log)
    run_scripted(world, inputs)
    index = first_divergence(log.lines, world.log.lines)
    if index is None:
        click.echo(f"replay OK: {len(log.lines)} records identical")
        return
    click.echo(f"replay FAILED at record {index}:", err=True)
    expect = log.lines[index] if index < len(log.lines) else "<missing>"
    actual = world.log.lines[index] if index < len(world.log.lines) else "<missing>"
    click.echo(f"  logged:   {expect[:160]}", err=True)
    click.echo(f"  replayed: {actual[:160]}", err=True)
    sys.exit(3)


# --- serve ----------------------------------------------------------------------

@main.command()
@click.argument("scenario")
@click.option("--listen", default="127.0.0.1:8765", help="host:port to bind.")
@click.option("--telemetry-hz", type=float, default=20.0)
@click.option("--lockstep", is_flag=True,
              help="Consume exactly one driver input per tick (equivalence mode).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the session run log here when the scenario ends.")
def serve(scenario, listen, telemetry_hz, lockstep, out_path):
    """Serve a scenario to teleoperation clients over WebSocket."""
    from .server import ServeSession
    try:
        path = resolve_scenario_path(scenario)
        world = load_scenario(path)
        host, _, port = listen.rpartition(":")
        session = ServeSession(world, host or "127.0.0.1", int(port),
                               telemetry_hz=telemetry_hz, lockstep=lockstep,
                               realtime=not lockstep)
    except (ConfigError, OSError, ValueError) as err:
        _fail_config(err)
    click.echo(f"serving {world.scenario.get('name')} on ws://{session.address[0]}:{session.address[1]} "
               f"({'lockstep' if lockstep else 'realtime'}, telemetry {telemetry_hz} Hz)")
    try:
        session.run()
    except KeyboardInterrupt:
        session.stop()
        click.echo("interrupted")
    if out_path:
        world.log.write(out_path)
        click.echo(f"run log: {out_path} (sha256 {world.log.sha256()[:16]}...)")
    summary = world.summary()
    click.echo(f"session ended after {summary['sim_time_s']:.1f} s, "
               f"uplink messages {session.uplink_messages}, rejected {session.rejected_messages}")


# --- fit ------------------------------------------------------------------------

@main.command()
def fit():
    """Refit the calibrated (wheel radius, design acceleration) pair."""
    from .calibrate import main as calibrate_main
    calibrate_main()


if __name__ == "__main__":
    main()
