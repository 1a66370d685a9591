"""Nonlinear least-squares Thevenin fit over the exact polar model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import kernels
from .linear import estimate_linear, regression_matrix
from .phasor import MeasurementSet, TheveninParams, normalize_angle
from .report import EstimateReport, EstimationError, branch_arrays

InitialGuess = Union[str, TheveninParams]


@dataclass(frozen=True)
class NlsConfig:
    """Solver caps and tolerances.

    ``initial_guess`` is ``"random"`` (uniform draw seeded by ``seed``),
    ``"from_linear"`` (warm start from the linear estimator) or an explicit
    :class:`TheveninParams`.
    """

    max_iterations: int = 8000
    max_function_evals: int = 5000
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    initial_guess: InitialGuess = "random"
    seed: int = 0
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_function_evals <= 0:
            raise ValueError("iteration and evaluation caps must be positive")
        if self.gradient_tol <= 0 or self.step_tol <= 0:
            raise ValueError("tolerances must be positive")
        if isinstance(self.initial_guess, str) and self.initial_guess not in ("random", "from_linear"):
            raise ValueError(f"unknown initial_guess {self.initial_guess!r}")


def _single(m: MeasurementSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y, a, b = branch_arrays([m])
    return y, a, b


def model_f(x: TheveninParams, m: MeasurementSet) -> np.ndarray:
    _, a, b = _single(m)
    return kernels.model_eval(np.array(x.as_tuple()), a, b)


def jacobian_f(x: TheveninParams, m: MeasurementSet) -> np.ndarray:
    _, a, b = _single(m)
    return kernels.model_jacobian(np.array(x.as_tuple()), a, b)


def random_guess(y: np.ndarray, a: np.ndarray, b: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v_mag = np.hypot(y[0::2], y[1::2])
    i_mag = np.hypot(a, b)
    v_mean = float(v_mag.mean()) or 1.0
    live = i_mag > 0
    z_scale = float(np.mean(v_mag[live] / i_mag[live])) if live.any() else 1.0
    return np.array([
        rng.uniform(0.5, 2.0) * v_mean,
        normalize_angle(rng.uniform(-math.pi, math.pi)),
        rng.uniform(0.0, z_scale),
        rng.uniform(0.0, z_scale),
    ])


def _check_identifiable(a: np.ndarray, b: np.ndarray) -> None:
    # The polar Jacobian has the rank of the linear regression matrix wherever v_th != 0.
    rank = np.linalg.matrix_rank(regression_matrix(a, b))
    if rank < 4:
        raise EstimationError(
            f"measurement sets do not identify the source (regression rank {rank} < 4); "
            "need at least two distinct load conditions with nonzero current"
        )


def solve_arrays(y, a, b, x0, cfg: NlsConfig, history: np.ndarray | None = None):
    """Run the damped Gauss-Newton kernel on prepared arrays."""
    if history is None:
        history = np.empty(0)
    return kernels.lm_solve(
        np.asarray(x0, dtype=np.float64), y, a, b,
        cfg.max_iterations, cfg.max_function_evals,
        cfg.gradient_tol, cfg.step_tol,
        cfg.lambda0, cfg.lambda_up, cfg.lambda_down, history,
    )


def estimate_nonlinear(measurements: Sequence[MeasurementSet], cfg: NlsConfig = NlsConfig(),
                       history: np.ndarray | None = None) -> EstimateReport:
    """Fit (v_th, theta, r_th, x_th) to two or more single-branch snapshots.

    Pass a preallocated ``history`` array to record the objective at the
    start point and after each accepted step.
    """
    if len(measurements) < 2:
        raise EstimationError(f"nonlinear fit needs >= 2 measurement sets, got {len(measurements)}")
    y, a, b = branch_arrays(measurements)
    _check_identifiable(a, b)

    guess = cfg.initial_guess
    if isinstance(guess, TheveninParams):
        x0 = np.array(guess.as_tuple())
    elif guess == "from_linear":
        x0 = np.array(estimate_linear(measurements).params.as_tuple())
    else:
        x0 = random_guess(y, a, b, cfg.seed)

    x, iters, fevals, status, _ = solve_arrays(y, a, b, x0, cfg, history)

    v_th, theta, r_th, x_th = (float(v) for v in x)
    if v_th < 0:
        v_th, theta = -v_th, theta + math.pi
    params = TheveninParams(v_th, theta, r_th, x_th)

    final = np.array(params.as_tuple())
    resid = y - kernels.model_eval(final, a, b)
    jac = kernels.model_jacobian(final, a, b)
    report = EstimateReport(
        params=params,
        residual_norm=float(np.linalg.norm(resid)),
        iterations=int(iters),
        function_evals=int(fevals),
        converged=status != kernels.STATUS_CAPS,
        condition_estimate=float(np.linalg.cond(jac.T @ jac)),
        method="nonlinear",
    )
    if report.negative_impedance:
        report.warnings.append("negative resistance or reactance estimate; check the data")
    if not report.converged:
        report.warnings.append("iteration or function-evaluation cap reached before convergence")
    return report
