"""Steady-state phasor solver that turns known sources and loads into PCC measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .phasor import ComplexImpedance, MeasurementSet, Phasor, TheveninParams

SINGULAR_TOL = 1e-12


class SingularCircuitError(ValueError):
    """The circuit has (near-)zero total impedance or a singular nodal admittance."""


@dataclass(frozen=True)
class StepEvent:
    time: float
    new_r: float
    new_x: float


@dataclass(frozen=True)
class SourceSpec:
    source_id: str
    params: TheveninParams
    step_event: StepEvent | None = None

    def at(self, t: float) -> TheveninParams:
        """Ground-truth parameters active at time ``t`` (steps apply from their time on)."""
        if self.step_event is not None and t >= self.step_event.time:
            return replace(self.params, r_th=self.step_event.new_r, x_th=self.step_event.new_x)
        return self.params


@dataclass(frozen=True)
class LoadSchedule:
    """Piecewise-constant load; ``None`` impedance means open circuit."""

    entries: tuple[tuple[float, ComplexImpedance | None], ...]

    def __post_init__(self):
        entries = tuple((float(t), z) for t, z in self.entries)
        if not entries:
            raise ValueError("load schedule is empty")
        times = [t for t, _ in entries]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("load schedule times must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def load_at(self, t: float) -> ComplexImpedance | None:
        active = self.entries[0][1]
        for te, z in self.entries:
            if te > t:
                break
            active = z
        return active


@dataclass(frozen=True)
class NoiseSpec:
    mag_rel_sigma: float = 0.0
    angle_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("mag_rel_sigma", "angle_sigma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")

    @property
    def silent(self) -> bool:
        return self.mag_rel_sigma == 0.0 and self.angle_sigma == 0.0


def solve_single(source: TheveninParams, z_load: ComplexImpedance | None,
                 sample_id: int = 0, time: float = 0.0, source_id: str = "source") -> MeasurementSet:
    """Thevenin source feeding one load. ``z_load=None`` is an open circuit."""
    if z_load is None:
        return MeasurementSet(sample_id, time, Phasor(source.v_th, source.theta),
                              ((source_id, Phasor(0.0, 0.0)),))
    z_total = source.impedance.z + z_load.z
    if abs(z_total) < SINGULAR_TOL:
        raise SingularCircuitError(f"total impedance {z_total} is singular")
    i = source.source / z_total
    v = i * z_load.z
    return MeasurementSet(sample_id, time, Phasor.from_complex(v), ((source_id, Phasor.from_complex(i)),))


def solve_parallel(sources: Sequence[TheveninParams], z_load: ComplexImpedance | None,
                   source_ids: Sequence[str] | None = None, sample_id: int = 0,
                   time: float = 0.0) -> MeasurementSet:
    """Parallel Thevenin branches on one PCC node feeding one load.

    Solves V·(Σ 1/Z_k + 1/Z_L) = Σ E_k/Z_k and returns I_k = (E_k - V)/Z_k.
    """
    if not sources:
        raise ValueError("need at least one source")
    if source_ids is None:
        source_ids = [f"s{k}" for k in range(len(sources))]
    if len(source_ids) != len(sources):
        raise ValueError("source_ids and sources differ in length")
    if len(sources) == 1:
        return solve_single(sources[0], z_load, sample_id, time, source_ids[0])

    zs = [s.impedance.z for s in sources]
    for sid, z in zip(source_ids, zs):
        if abs(z) < SINGULAR_TOL:
            raise SingularCircuitError(f"branch {sid!r} impedance {z} is singular")
    y_total = sum(1.0 / z for z in zs)
    if z_load is not None:
        if abs(z_load.z) < SINGULAR_TOL:
            raise SingularCircuitError("load impedance is a short circuit")
        y_total += 1.0 / z_load.z
    if abs(y_total) < SINGULAR_TOL:
        raise SingularCircuitError(f"nodal admittance {y_total} is singular")
    injection = sum(s.source / z for s, z in zip(sources, zs))
    v = injection / y_total
    branches = tuple(
        (sid, Phasor.from_complex((s.source - v) / z)) for sid, s, z in zip(source_ids, sources, zs)
    )
    return MeasurementSet(sample_id, time, Phasor.from_complex(v), branches)


def sample_times(sample_period: float, horizon: float) -> np.ndarray:
    """Sample instants 0, dt, 2dt, ... up to and including the horizon."""
    if not sample_period > 0:
        raise ValueError("sample_period must be > 0")
    if horizon < sample_period:
        raise ValueError("horizon must be >= sample_period")
    n = int(math.floor(horizon / sample_period + 1e-9))
    return np.arange(n + 1) * sample_period


def _perturb(p: Phasor, noise: NoiseSpec, rng: np.random.Generator) -> Phasor:
    mag = p.magnitude * (1.0 + rng.normal(0.0, noise.mag_rel_sigma))
    ang = p.angle + rng.normal(0.0, noise.angle_sigma)
    return Phasor(abs(mag), ang)


def run_schedule(sources: Sequence[SourceSpec], schedule: LoadSchedule, noise: NoiseSpec,
                 sample_period: float, horizon: float) -> list[MeasurementSet]:
    """Simulate a measurement stream; deterministic for a fixed noise seed."""
    if not sources:
        raise ValueError("need at least one source")
    for s in sources:
        if s.step_event is not None and not (0.0 < s.step_event.time < horizon):
            raise ValueError(f"step event of {s.source_id!r} lies outside (0, horizon)")
    times = sample_times(sample_period, horizon)
    rng = np.random.default_rng(noise.seed)
    ids = [s.source_id for s in sources]
    out = []
    for k, t in enumerate(times):
        t = float(t)
        m = solve_parallel([s.at(t) for s in sources], schedule.load_at(t), ids, sample_id=k, time=t)
        if not noise.silent:
            v = _perturb(m.v_pcc, noise, rng)
            branches = tuple((sid, _perturb(i, noise, rng)) for sid, i in m.branch_currents)
            m = MeasurementSet(m.sample_id, m.time, v, branches)
        out.append(m)
    return out
