"""Linearized Thevenin regression.

With ``x1 = V cos θ`` and ``x2 = V sin θ`` the per-set model becomes linear,
``[y1, y2] = [[1, 0, -a, b], [0, 1, -b, -a]] x``, and n sets stack into a
2n x 4 least-squares problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .phasor import MeasurementSet, TheveninParams
from .report import DegenerateSystemError, EstimateReport, EstimationError, branch_arrays

COND_ERROR = 1e10
COND_WARN = 1e6


@dataclass(frozen=True)
class LinearSystem:
    a_matrix: np.ndarray
    y_vector: np.ndarray
    n_sets: int


@dataclass(frozen=True)
class LinearEstimate:
    x_hat: np.ndarray
    params: TheveninParams
    condition_number: float
    residual_norm: float
    warning: str | None = None

    def to_report(self) -> EstimateReport:
        return EstimateReport(
            params=self.params,
            residual_norm=self.residual_norm,
            iterations=1,
            function_evals=1,
            converged=True,
            condition_estimate=self.condition_number,
            method="linear",
            x_hat=tuple(float(v) for v in self.x_hat),
            warnings=[self.warning] if self.warning else [],
        )


def regression_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    mat = np.zeros((2 * n, 4))
    mat[0::2, 0] = 1.0
    mat[1::2, 1] = 1.0
    mat[0::2, 2] = -a
    mat[0::2, 3] = b
    mat[1::2, 2] = -b
    mat[1::2, 3] = -a
    return mat


def assemble(measurements: Sequence[MeasurementSet]) -> LinearSystem:
    if len(measurements) < 2:
        raise EstimationError(f"linear regression needs >= 2 measurement sets, got {len(measurements)}")
    y, a, b = branch_arrays(measurements)
    return LinearSystem(regression_matrix(a, b), y, len(measurements))


def normal_condition(mat: np.ndarray) -> float:
    """Condition number of ``AᵀA`` from the singular values of ``A``."""
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] == 0.0:
        return math.inf
    return float((sv[0] / sv[-1]) ** 2)


def recover_polar(x_hat) -> TheveninParams:
    x1, x2, x3, x4 = (float(v) for v in x_hat)
    return TheveninParams(math.hypot(x1, x2), math.atan2(x2, x1), x3, x4)


def solve_linear(sys: LinearSystem) -> LinearEstimate:
    cond = normal_condition(sys.a_matrix)
    if not cond <= COND_ERROR:
        raise DegenerateSystemError(
            f"degenerate linear system: cond(AᵀA) = {cond:.3e} exceeds {COND_ERROR:.0e}; "
            "use more, and more distinct, load conditions",
            condition_number=cond,
        )
    q, r = np.linalg.qr(sys.a_matrix)
    x_hat = solve_triangular(r, q.T @ sys.y_vector)
    resid = sys.y_vector - sys.a_matrix @ x_hat
    warning = None
    if cond > COND_WARN:
        warning = f"ill-conditioned: cond(AᵀA) = {cond:.3e}"
    return LinearEstimate(x_hat, recover_polar(x_hat), cond, float(np.linalg.norm(resid)), warning)


def estimate_linear(measurements: Sequence[MeasurementSet]) -> EstimateReport:
    return solve_linear(assemble(measurements)).to_report()
