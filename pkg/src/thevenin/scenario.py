"""Scenario JSON: sources, load schedule, noise and sampling for the simulator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .circuit import LoadSchedule, NoiseSpec, SourceSpec, StepEvent, run_schedule
from .phasor import ComplexImpedance, MeasurementSet, TheveninParams


class ScenarioError(ValueError):
    pass


_NUM = {"type": "number"}

SCHEMA = {
    "type": "object",
    "required": ["sources", "schedule", "sample_period_s", "horizon_s"],
    "properties": {
        "description": {"type": "string"},
        "sources": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "v_th", "r_th", "x_th"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "v_th": {"type": "number", "minimum": 0},
                    "theta": _NUM,
                    "r_th": _NUM,
                    "x_th": _NUM,
                    "step": {
                        "type": "object",
                        "required": ["time_s", "r", "x"],
                        "properties": {"time_s": _NUM, "r": _NUM, "x": _NUM},
                        "additionalProperties": False,
                    },
                },
                "additionalProperties": False,
            },
        },
        "schedule": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["time_s"],
                "properties": {
                    "time_s": _NUM,
                    "r_load": _NUM,
                    "x_load": _NUM,
                    "open_circuit": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
        "noise": {
            "type": "object",
            "properties": {
                "mag_rel_sigma": {"type": "number", "minimum": 0},
                "angle_sigma": {"type": "number", "minimum": 0},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "sample_period_s": {"type": "number", "exclusiveMinimum": 0},
        "horizon_s": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Scenario:
    sources: tuple[SourceSpec, ...]
    schedule: LoadSchedule
    noise: NoiseSpec
    sample_period: float
    horizon: float

    def simulate(self) -> list[MeasurementSet]:
        return run_schedule(self.sources, self.schedule, self.noise, self.sample_period, self.horizon)

    def truth(self) -> dict[str, TheveninParams]:
        """Ground truth at t = 0 per source."""
        return {s.source_id: s.at(0.0) for s in self.sources}


def scenario_from_dict(data: dict, degrees: bool = False) -> Scenario:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario schema violation at {path}: {exc.message}") from None

    to_rad = math.radians if degrees else float
    ids = [s["id"] for s in data["sources"]]
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"duplicate source ids {ids}")
    horizon = float(data["horizon_s"])
    period = float(data["sample_period_s"])
    if horizon < period:
        raise ScenarioError("horizon_s must be >= sample_period_s")

    sources = []
    for s in data["sources"]:
        step = None
        if "step" in s:
            st = s["step"]
            if not 0.0 < st["time_s"] < horizon:
                raise ScenarioError(f"step time of source {s['id']!r} must lie inside (0, horizon_s)")
            step = StepEvent(float(st["time_s"]), float(st["r"]), float(st["x"]))
        params = TheveninParams(float(s["v_th"]), to_rad(s.get("theta", 0.0)), float(s["r_th"]), float(s["x_th"]))
        sources.append(SourceSpec(s["id"], params, step))

    entries = []
    for e in data["schedule"]:
        if e.get("open_circuit", False):
            z = None
        else:
            if "r_load" not in e:
                raise ScenarioError(f"schedule entry at t={e['time_s']} needs r_load or open_circuit")
            z = ComplexImpedance(float(e["r_load"]), float(e.get("x_load", 0.0)))
        entries.append((float(e["time_s"]), z))
    try:
        schedule = LoadSchedule(tuple(entries))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    nz = data.get("noise", {})
    noise = NoiseSpec(float(nz.get("mag_rel_sigma", 0.0)), float(nz.get("angle_sigma", 0.0)), int(nz.get("seed", 0)))
    return Scenario(tuple(sources), schedule, noise, period, horizon)


def load_scenario(path: str | Path, degrees: bool = False) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
    return scenario_from_dict(data, degrees)


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"table2"``."""
    if not name.endswith(".json"):
        name += ".json"
    return Path(str(resources.files("thevenin") / "scenarios" / name))


def bundled_names() -> list[str]:
    d = resources.files("thevenin") / "scenarios"
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))
