"""Estimate reports, estimator errors and batch-to-array conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .phasor import MeasurementSet, TheveninParams, normalize_angle


class EstimationError(ValueError):
    """An estimator could not produce parameters from the given batch."""


class DegenerateSystemError(EstimationError):
    """The regression is rank deficient or too ill-conditioned to trust."""

    def __init__(self, message: str, condition_number: float = math.inf):
        super().__init__(message)
        self.condition_number = condition_number


def branch_arrays(sets: Sequence[MeasurementSet]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked ``y`` (2n) and per-set current components ``a``, ``b`` (n each).

    Every set must carry exactly one branch current.
    """
    n = len(sets)
    y = np.empty(2 * n)
    a = np.empty(n)
    b = np.empty(n)
    for k, m in enumerate(sets):
        if len(m.branch_currents) != 1:
            raise EstimationError(
                f"sample {m.sample_id} has {len(m.branch_currents)} branches; split by source first"
            )
        v = m.v_pcc
        i = m.branch_currents[0][1]
        y[2 * k] = v.magnitude * math.cos(v.angle)
        y[2 * k + 1] = v.magnitude * math.sin(v.angle)
        a[k] = i.magnitude * math.cos(i.angle)
        b[k] = i.magnitude * math.sin(i.angle)
    return y, a, b


def error_percentages(truth: TheveninParams, est: TheveninParams) -> dict[str, float]:
    """Signed ``100 (true - est) / true``; the angle is an absolute difference in radians."""

    def pct(t, e):
        if t == 0.0:
            return math.nan
        return 100.0 * (t - e) / t

    return {
        "v_th": pct(truth.v_th, est.v_th),
        "theta_rad": normalize_angle(truth.theta - est.theta),
        "r_th": pct(truth.r_th, est.r_th),
        "x_th": pct(truth.x_th, est.x_th),
    }


@dataclass
class EstimateReport:
    params: TheveninParams
    residual_norm: float
    iterations: int
    function_evals: int
    converged: bool
    condition_estimate: float
    method: str = "nonlinear"
    per_param_error_pct: dict[str, float] | None = None
    x_hat: tuple[float, float, float, float] | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def negative_impedance(self) -> bool:
        return self.params.r_th < 0 or self.params.x_th < 0

    def with_truth(self, truth: TheveninParams) -> EstimateReport:
        self.per_param_error_pct = error_percentages(truth, self.params)
        return self

    def to_dict(self, degrees: bool = False) -> dict:
        d = {
            "method": self.method,
            **self.params.to_dict(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "function_evals": self.function_evals,
            "converged": self.converged,
            "condition_estimate": self.condition_estimate,
            "negative_impedance": self.negative_impedance,
            "warnings": list(self.warnings),
        }
        if degrees:
            d["theta_deg"] = math.degrees(self.params.theta)
        if self.x_hat is not None:
            d["x_hat"] = list(self.x_hat)
            d["condition_number"] = self.condition_estimate
        if self.per_param_error_pct is not None:
            d["error_pct"] = dict(self.per_param_error_pct)
        return d
