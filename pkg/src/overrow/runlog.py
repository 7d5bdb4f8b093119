"""Deterministic run logs and input traces.

A run log is line-delimited JSON: a manifest line first (resolved scenario,
seed, config hash), then records in production order. Keys are sorted and
separators fixed, so identical runs produce byte-identical files; a replay
re-executes the embedded inputs and compares line by line.

Record kinds: "in" (applied input), "tm" (telemetry), "sp" (spray
transition), "ev" (event).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .config import canonical_json, config_hash

PROTO_VERSION = 1


def manifest_record(scenario: dict, seed: int, dt: float) -> dict:
    return {
        "type": "manifest",
        "proto": PROTO_VERSION,
        "config_hash": config_hash(scenario),
        "seed": seed,
        "dt_s": dt,
        "scenario": scenario,
    }


@dataclass
class RunLog:
    """Collected record lines plus the manifest that reproduces them."""

    manifest: dict
    lines: list[str] = field(default_factory=list)

    def append(self, record: dict) -> None:
        self.lines.append(canonical_json(record))

    def sha256(self) -> str:
        digest = hashlib.sha256()
        for line in self.lines:
            digest.update(line.encode())
            digest.update(b"\n")
        return digest.hexdigest()

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(canonical_json(self.manifest))
            fh.write("\n")
            for line in self.lines:
                fh.write(line)
                fh.write("\n")

    def records(self, kind: str | None = None) -> list[dict]:
        out = []
        for line in self.lines:
            rec = json.loads(line)
            if kind is None or rec.get("k") == kind:
                out.append(rec)
        return out


class RunLogError(ValueError):
    pass


def read_runlog(path) -> RunLog:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise RunLogError(f"{path}: empty run log")
    try:
        manifest = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise RunLogError(f"{path}: bad manifest line: {err}") from err
    if manifest.get("type") != "manifest":
        raise RunLogError(f"{path}: first line is not a manifest")
    return RunLog(manifest=manifest, lines=lines[1:])


def verify_manifest(manifest: dict) -> None:
    """Check the manifest is self-consistent (config hash matches the scenario)."""
    for key in ("config_hash", "seed", "dt_s", "scenario"):
        if key not in manifest:
            raise RunLogError(f"manifest missing {key!r}")
    actual = config_hash(manifest["scenario"])
    if actual != manifest["config_hash"]:
        raise RunLogError(
            f"config-hash mismatch: manifest says {manifest['config_hash'][:12]}..., "
            f"scenario hashes to {actual[:12]}...")


def first_divergence(expected: list[str], actual: list[str]) -> int | None:
    """Index of the first differing record line, or None if identical."""
    for i, (a, b) in enumerate(zip(expected, actual)):
        if a != b:
            return i
    if len(expected) != len(actual):
        return min(len(expected), len(actual))
    return None


def extract_inputs(log: RunLog) -> list[tuple[int, list[int]]]:
    """Pull the applied input records back out of a log for replay."""
    return [(rec["t"], rec["ch"]) for rec in log.records("in")]


# --- input traces -------------------------------------------------------------

def read_trace(path) -> list[tuple[int, list[int]]]:
    """Read a trace file: one JSON object {"t": tick, "ch": [16 raw]} per line,
    sorted by tick. Channel values are validated on use, not here."""
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                entries.append((int(rec["t"]), list(rec["ch"])))
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise RunLogError(f"{path}:{lineno}: bad trace record: {err}") from err
    if any(b[0] < a[0] for a, b in zip(entries, entries[1:])):
        raise RunLogError(f"{path}: trace ticks must be non-decreasing")
    return entries


def write_trace(path, entries) -> None:
    with open(path, "w") as fh:
        for tick, channels in entries:
            fh.write(canonical_json({"t": int(tick), "ch": list(channels)}))
            fh.write("\n")


def densify_trace(entries, n_ticks: int) -> list[tuple[int, list[int]]]:
    """Expand a sparse sample-and-hold trace so every tick has an entry.

    Ticks before the first entry hold that first entry's channels. Used by
    the serve/simulate equivalence harness, where the client streams one
    input per tick.
    """
    if not entries:
        raise RunLogError("cannot densify an empty trace")
    dense = []
    idx = 0
    current = entries[0][1]
    for tick in range(n_ticks):
        while idx < len(entries) and entries[idx][0] <= tick:
            current = entries[idx][1]
            idx += 1
        dense.append((tick, list(current)))
    return dense
