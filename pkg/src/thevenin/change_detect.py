"""Sliding-window estimation over a measurement stream and step-change detection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .multi_source import estimate_one
from .nonlinear import NlsConfig
from .phasor import MeasurementSet
from .report import EstimateReport, EstimationError

log = logging.getLogger(__name__)

PARAMETERS = ("v_th", "theta", "r_th", "x_th")

# Denominator floors for relative jumps. Angles are compared on the scale of
# a half turn; a floor near zero would turn angle noise into huge jumps.
SCALE_FLOOR = {"v_th": 1e-9, "theta": math.pi, "r_th": 1e-9, "x_th": 1e-9}


@dataclass(frozen=True)
class WindowConfig:
    window_size: int = 4
    stride: int = 1
    method: str = "nonlinear"
    warm_start: bool = True
    nls: NlsConfig = NlsConfig()

    def __post_init__(self):
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if not 1 <= self.stride <= self.window_size:
            raise ValueError("stride must be in [1, window_size]")
        if self.method not in ("nonlinear", "linear"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def guard_points(self) -> int:
        """Trace points whose window can straddle a single step."""
        return -(-(self.window_size - 1) // self.stride)


@dataclass
class EstimateTrace:
    points: list[tuple[float, EstimateReport]]
    config: WindowConfig = WindowConfig()
    skipped: list[tuple[float, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.points])

    def values(self, parameter: str) -> np.ndarray:
        return np.array([getattr(r.params, parameter) for _, r in self.points])


@dataclass(frozen=True)
class ChangeEvent:
    detected_time: float
    parameter: str
    before: float
    after: float
    relative_jump: float

    def to_dict(self) -> dict:
        return {
            "detected_time": self.detected_time,
            "parameter": self.parameter,
            "before": self.before,
            "after": self.after,
            "relative_jump": self.relative_jump,
        }


def window_starts(n: int, cfg: WindowConfig) -> range:
    return range(0, n - cfg.window_size + 1, cfg.stride)


def sliding_estimate(stream: Sequence[MeasurementSet], cfg: WindowConfig = WindowConfig()) -> EstimateTrace:
    """One estimate per window position, stamped with the window's last sample time.

    Windows the estimator rejects (e.g. no load variation) are skipped and
    listed in ``trace.skipped``.
    """
    if len(stream) < cfg.window_size:
        raise EstimationError(f"stream has {len(stream)} sets, window needs {cfg.window_size}")
    times = [m.time for m in stream]
    if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
        raise EstimationError("stream is not time-ordered")

    trace = EstimateTrace([], cfg)
    nls = cfg.nls
    for start in window_starts(len(stream), cfg):
        window = stream[start:start + cfg.window_size]
        t = window[-1].time
        try:
            report = estimate_one(window, cfg.method, nls)
        except EstimationError as exc:
            log.warning("window ending at t=%g skipped: %s", t, exc)
            trace.skipped.append((t, str(exc)))
            continue
        trace.points.append((t, report))
        if cfg.warm_start and cfg.method == "nonlinear":
            nls = replace(cfg.nls, initial_guess=report.params)
    return trace


def relative_jump(before: float, after: float, floor: float = 1e-9) -> float:
    return abs(after - before) / max(abs(before), floor)


def detect_changes(trace: EstimateTrace, threshold_rel: float, settle_points: int,
                   parameters: Sequence[str] = PARAMETERS, guard: int | None = None) -> list[ChangeEvent]:
    """Find level shifts in the trace by comparing settled medians.

    At each candidate index k the median of the ``settle_points`` points
    from k onward is compared with the median of the ``settle_points``
    points ending ``guard`` points before k; the guard skips the windows that
    mix both regimes (by default derived from the trace's window config).
    Consecutive candidates collapse into one event, placed where the two
    settle windows are most homogeneous (smallest combined spread).
    """
    if threshold_rel <= 0:
        raise ValueError("threshold_rel must be > 0")
    if settle_points < 1:
        raise ValueError("settle_points must be >= 1")
    n = len(trace)
    if n < 2 * settle_points:
        raise EstimationError(f"trace of {n} points is shorter than 2 * settle_points = {2 * settle_points}")
    if guard is None:
        guard = trace.config.guard_points
    s = settle_points
    times = trace.times
    events = []
    for name in parameters:
        vals = trace.values(name)
        floor = SCALE_FLOOR.get(name, 1e-9)
        cands = []
        for k in range(s + guard, n - s + 1):
            lhs = vals[k - guard - s:k - guard]
            rhs = vals[k:k + s]
            before = float(np.median(lhs))
            after = float(np.median(rhs))
            jump = relative_jump(before, after, floor)
            if jump > threshold_rel:
                spread = float(np.ptp(lhs) + np.ptp(rhs))
                cands.append((k, before, after, jump, spread))
        runs: list[list[tuple]] = []
        for c in cands:
            if runs and c[0] - runs[-1][-1][0] <= s:
                runs[-1].append(c)
            else:
                runs.append([c])
        for run in runs:
            k, before, after, jump, _ = min(run, key=lambda c: (c[4], c[0]))
            events.append(ChangeEvent(float(times[k]), name, before, after, jump))
    events.sort(key=lambda e: (e.detected_time, PARAMETERS.index(e.parameter) if e.parameter in PARAMETERS else 99))
    return events
