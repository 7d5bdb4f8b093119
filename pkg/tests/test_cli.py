import json
import time

import pytest
from click.testing import CliRunner

from overrow.cli import main, validate_sizing_json


@pytest.fixture
def runner():
    return CliRunner()


# --- size -----------------------------------------------------------------------

def test_size_all_six_terrains_under_a_second(runner):
    start = time.monotonic()
    result = runner.invoke(main, ["size", "--all"])
    elapsed = time.monotonic() - start
    assert result.exit_code == 0, result.output
    assert elapsed < 1.0
    for name in ("concrete", "rough_paved_road", "gravel", "grass",
                 "dry_hard_soil", "wet_saturated_soil"):
        assert name in result.output
    assert "NO" not in result.output      # everything feasible


def test_size_single_terrain(runner):
    result = runner.invoke(main, ["size", "--terrain", "sand", "--crr", "max"])
    assert result.exit_code == 0
    assert "sand" in result.output
    assert "0.400" in result.output


def test_size_unknown_terrain_exits_2(runner):
    result = runner.invoke(main, ["size", "--terrain", "lava"])
    assert result.exit_code == 2
    assert "unknown terrain" in result.output


def test_size_no_selection_exits_2(runner):
    result = runner.invoke(main, ["size"])
    assert result.exit_code == 2


def test_size_json_round_trips_schema(runner, tmp_path):
    out = tmp_path / "sizing.json"
    result = runner.invoke(main, ["size", "--all", "--payload-sweep", "--json", str(out)])
    assert result.exit_code == 0, result.output
    records = json.loads(out.read_text())
    validate_sizing_json(records)
    assert len(records) == 6
    torques = {r["terrain"]: r["wheel_torque_nm"] for r in records}
    assert torques["wet_saturated_soil"] == pytest.approx(15.55, rel=0.10)


def test_size_payload_sweep_hits_calibration(runner):
    result = runner.invoke(main, ["size", "--terrain", "soil_medium_hard",
                                  "--payload-sweep"])
    assert result.exit_code == 0
    line = [l for l in result.output.splitlines() if "kg" in l][-1]
    payload = float(line.split()[-2])
    assert payload == pytest.approx(100.0, abs=10.0)


def test_validate_sizing_json_catches_bad_records():
    with pytest.raises(ValueError):
        validate_sizing_json([{"terrain": "x"}])
    with pytest.raises(ValueError):
        validate_sizing_json({"not": "a list"})


def test_size_config_override(runner, tmp_path):
    cfg = tmp_path / "heavy.json"
    cfg.write_text(json.dumps({"chassis": {"mass_kg": 400.0}}))
    result = runner.invoke(main, ["size", "--terrain", "sand", "--config", str(cfg)])
    assert result.exit_code == 0
    assert "NO" in result.output          # 400 kg on sand at 10 deg is infeasible


# --- simulate / replay ------------------------------------------------------------

def test_simulate_replay_cycle(runner, tmp_path):
    log = tmp_path / "run.jsonl"
    result = runner.invoke(main, ["simulate", "row_pass_field", "--out", str(log)])
    assert result.exit_code == 0, result.output
    assert log.exists()
    result = runner.invoke(main, ["replay", str(log)])
    assert result.exit_code == 0, result.output
    assert "replay OK" in result.output


def test_simulate_twice_identical_hashes(runner, tmp_path):
    hashes = []
    for name in ("a.jsonl", "b.jsonl"):
        result = runner.invoke(main, ["simulate", "failsafe_dropout",
                                      "--out", str(tmp_path / name)])
        assert result.exit_code == 0
        line = [l for l in result.output.splitlines() if "sha256" in l][0]
        hashes.append(line.split("sha256")[1])
    assert hashes[0] == hashes[1]
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_replay_detects_flipped_byte(runner, tmp_path):
    log = tmp_path / "run.jsonl"
    assert runner.invoke(main, ["simulate", "row_pass_field", "--out", str(log)]).exit_code == 0
    lines = log.read_text().splitlines()
    # flip a digit inside a mid-log telemetry record
    target = len(lines) // 2
    lines[target] = lines[target].replace("9", "8", 1) if "9" in lines[target] \
        else lines[target].replace("1", "2", 1)
    log.write_text("\n".join(lines) + "\n")
    result = runner.invoke(main, ["replay", str(log)])
    assert result.exit_code == 3
    assert f"record {target - 1}" in result.output


def test_replay_config_hash_mismatch_exits_2(runner, tmp_path):
    log = tmp_path / "run.jsonl"
    assert runner.invoke(main, ["simulate", "row_pass_field", "--out", str(log)]).exit_code == 0
    lines = log.read_text().splitlines()
    manifest = json.loads(lines[0])
    manifest["scenario"]["dt_s"] = 0.01        # log claims a different dt now
    lines[0] = json.dumps(manifest)
    log.write_text("\n".join(lines) + "\n")
    result = runner.invoke(main, ["replay", str(log)])
    assert result.exit_code == 2
    assert "config-hash mismatch" in result.output


def test_simulate_missing_scenario_exits_2(runner):
    result = runner.invoke(main, ["simulate", "no_such_scenario"])
    assert result.exit_code == 2


def test_simulate_empty_trace_zero_motion(runner, tmp_path):
    trace = tmp_path / "empty.jsonl"
    trace.write_text("")
    result = runner.invoke(main, ["simulate", "row_pass_field",
                                  "--trace", str(trace),
                                  "--out", str(tmp_path / "out.jsonl"),
                                  "--summary-json", str(tmp_path / "s.json")])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["distance_m"] == 0.0
    assert summary["spray"]["volume_l"] == 0.0


def test_replay_missing_manifest_exits_2(runner, tmp_path):
    bogus = tmp_path / "bogus.jsonl"
    bogus.write_text('{"k":"tm","t_ms":0}\n')
    result = runner.invoke(main, ["replay", str(bogus)])
    assert result.exit_code == 2
    assert "manifest" in result.output


def test_simulate_summary_json(runner, tmp_path):
    summary = tmp_path / "summary.json"
    result = runner.invoke(main, ["simulate", "flax_spray",
                                  "--out", str(tmp_path / "flax.jsonl"),
                                  "--summary-json", str(summary)])
    assert result.exit_code == 0, result.output
    data = json.loads(summary.read_text())
    assert data["spray"]["plots_sprayed"] == 12
    assert data["spray"]["volume_gal"] == pytest.approx(0.64, abs=0.02)
    assert data["events"]["violation"] == 0


def test_fit_command_reports_calibration(runner):
    result = runner.invoke(main, ["fit"])
    assert result.exit_code == 0
    assert "fitted wheel radius" in result.output
    assert "tolerance 10%" in result.output
