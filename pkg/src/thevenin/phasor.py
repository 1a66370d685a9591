"""Phasor values, measurement containers and the measurement CSV format."""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

TWO_PI = 2.0 * math.pi

CSV_HEADER = ("sample_id", "time_s", "source_id", "v_mag", "v_angle_rad", "i_mag", "i_angle_rad")

# Fortescue operator 1∠120°
ALPHA = complex(-0.5, math.sqrt(3.0) / 2.0)


class MeasurementFormatError(ValueError):
    """Raised for malformed or inconsistent measurement data."""


def normalize_angle(a: float) -> float:
    """Wrap an angle in radians into (-pi, pi]."""
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = a - TWO_PI * math.ceil((a - math.pi) / TWO_PI)
    if r > math.pi:
        r -= TWO_PI
    elif r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Phasor:
    """Magnitude/angle form of a steady-state sinusoid. Angle in radians."""

    magnitude: float
    angle: float = 0.0

    def __post_init__(self):
        mag = float(self.magnitude)
        if not math.isfinite(mag) or mag < 0.0:
            raise ValueError(f"phasor magnitude must be finite and >= 0, got {mag!r}")
        object.__setattr__(self, "magnitude", mag)
        object.__setattr__(self, "angle", normalize_angle(self.angle))

    @classmethod
    def from_complex(cls, z: complex) -> Phasor:
        return rect_to_phasor(z.real, z.imag)

    def to_complex(self) -> complex:
        re, im = phasor_to_rect(self)
        return complex(re, im)

    def __add__(self, other: Phasor) -> Phasor:
        return Phasor.from_complex(self.to_complex() + other.to_complex())

    def __sub__(self, other: Phasor) -> Phasor:
        return Phasor.from_complex(self.to_complex() - other.to_complex())

    def __mul__(self, other: Phasor | complex | float) -> Phasor:
        if isinstance(other, Phasor):
            return Phasor(self.magnitude * other.magnitude, self.angle + other.angle)
        return Phasor.from_complex(self.to_complex() * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Phasor | complex | float) -> Phasor:
        if isinstance(other, Phasor):
            other = other.to_complex()
        return Phasor.from_complex(self.to_complex() / complex(other))


ZERO = Phasor(0.0, 0.0)


def phasor_to_rect(p: Phasor) -> tuple[float, float]:
    return p.magnitude * math.cos(p.angle), p.magnitude * math.sin(p.angle)


def rect_to_phasor(re: float, im: float) -> Phasor:
    """Polar form of ``re + j im``; the origin maps to ``Phasor(0, 0)``."""
    if re == 0.0 and im == 0.0:
        return Phasor(0.0, 0.0)
    return Phasor(math.hypot(re, im), math.atan2(im, re))


@dataclass(frozen=True)
class ComplexImpedance:
    resistance: float
    reactance: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.resistance) and math.isfinite(self.reactance)):
            raise ValueError("impedance components must be finite")

    @property
    def z(self) -> complex:
        return complex(self.resistance, self.reactance)

    @property
    def magnitude(self) -> float:
        return abs(self.z)


@dataclass(frozen=True)
class TheveninParams:
    """Thevenin source voltage v_th∠theta behind r_th + j x_th."""

    v_th: float
    theta: float = 0.0
    r_th: float = 0.0
    x_th: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.v_th) or self.v_th < 0.0:
            raise ValueError(f"v_th must be finite and >= 0, got {self.v_th!r}")
        if not (math.isfinite(self.r_th) and math.isfinite(self.x_th)):
            raise ValueError("r_th and x_th must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def source(self) -> complex:
        return cmath.rect(self.v_th, self.theta)

    @property
    def impedance(self) -> ComplexImpedance:
        return ComplexImpedance(self.r_th, self.x_th)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v_th, self.theta, self.r_th, self.x_th)

    def to_dict(self) -> dict:
        return {"v_th": self.v_th, "theta_rad": self.theta, "r_th": self.r_th, "x_th": self.x_th}


@dataclass(frozen=True)
class ThreePhaseSample:
    phase_a: Phasor
    phase_b: Phasor
    phase_c: Phasor


def positive_sequence(s: ThreePhaseSample) -> Phasor:
    """Positive-sequence component (A + αB + α²C) / 3."""
    a, b, c = (p.to_complex() for p in (s.phase_a, s.phase_b, s.phase_c))
    return Phasor.from_complex((a + ALPHA * b + ALPHA * ALPHA * c) / 3.0)


@dataclass(frozen=True)
class MeasurementSet:
    """One steady-state snapshot at the PCC: the shared voltage and each branch current."""

    sample_id: int
    time: float
    v_pcc: Phasor
    branch_currents: tuple[tuple[str, Phasor], ...] = field(default=())

    def __post_init__(self):
        branches = tuple((str(sid), p) for sid, p in self.branch_currents)
        if not branches:
            raise MeasurementFormatError("a measurement set needs at least one branch current")
        ids = [sid for sid, _ in branches]
        if len(set(ids)) != len(ids):
            raise MeasurementFormatError(f"duplicate source_id in sample {self.sample_id}: {ids}")
        object.__setattr__(self, "branch_currents", branches)

    @property
    def source_ids(self) -> tuple[str, ...]:
        return tuple(sid for sid, _ in self.branch_currents)

    def current(self, source_id: str) -> Phasor:
        for sid, p in self.branch_currents:
            if sid == source_id:
                return p
        raise KeyError(source_id)

    def branch(self, source_id: str) -> MeasurementSet:
        """Single-branch view pairing the shared PCC voltage with one current."""
        return MeasurementSet(self.sample_id, self.time, self.v_pcc, ((source_id, self.current(source_id)),))


def check_batch(sets: Sequence[MeasurementSet]) -> tuple[str, ...]:
    """Validate that every set carries the same source_id list; return it."""
    if not sets:
        raise MeasurementFormatError("empty measurement batch")
    ids = sets[0].source_ids
    for m in sets[1:]:
        if m.source_ids != ids:
            raise MeasurementFormatError(
                f"sample {m.sample_id} has sources {list(m.source_ids)}, expected {list(ids)}"
            )
    return ids


def format_measurements(sets: Iterable[MeasurementSet]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for m in sets:
        for sid, i in m.branch_currents:
            w.writerow([m.sample_id, repr(float(m.time)), sid,
                        repr(m.v_pcc.magnitude), repr(m.v_pcc.angle),
                        repr(i.magnitude), repr(i.angle)])
    return buf.getvalue()


def parse_measurements(text: str) -> list[MeasurementSet]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MeasurementFormatError("measurement CSV is empty") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise MeasurementFormatError(f"unexpected CSV header {header}")

    groups: dict[int, dict] = {}
    order: list[int] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise MeasurementFormatError(f"line {lineno}: expected {len(CSV_HEADER)} fields")
        try:
            sid = int(row[0])
            t, vm, va, im, ia = (float(row[k]) for k in (1, 3, 4, 5, 6))
            v = Phasor(vm, va)
            i = Phasor(im, ia)
        except ValueError as exc:
            raise MeasurementFormatError(f"line {lineno}: {exc}") from None
        g = groups.get(sid)
        if g is None:
            groups[sid] = {"time": t, "v": (vm, va), "branches": [(row[2], i)]}
            order.append(sid)
        else:
            if (vm, va) != g["v"] or t != g["time"]:
                raise MeasurementFormatError(f"line {lineno}: sample {sid} rows disagree on time or PCC voltage")
            g["branches"].append((row[2], i))

    sets = [
        MeasurementSet(sid, groups[sid]["time"], Phasor(*groups[sid]["v"]), tuple(groups[sid]["branches"]))
        for sid in order
    ]
    check_batch(sets)
    return sets


def read_measurements(path: str | Path) -> list[MeasurementSet]:
    return parse_measurements(Path(path).read_text())
