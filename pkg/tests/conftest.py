import numpy as np
import pytest

from thevenin.circuit import solve_parallel, solve_single
from thevenin.phasor import ComplexImpedance, TheveninParams

ISOLATED = TheveninParams(70.7107, 0.0, 1.0, 0.377)
GENERATOR = ISOLATED
GRID = TheveninParams(49.4975, 0.0, 0.5, 0.0377)

# 60 Hz resistive-inductive loads, X = 0.2 R
LOADS = [ComplexImpedance(r, 0.2 * r) for r in (2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0)]


def single_sets(truth, loads, source_id="source"):
    return [solve_single(truth, z, sample_id=k, time=float(k), source_id=source_id) for k, z in enumerate(loads)]


def parallel_sets(truths, ids, loads):
    return [solve_parallel(truths, z, ids, sample_id=k, time=float(k)) for k, z in enumerate(loads)]


def rel_err(a, b):
    return abs(a - b) / abs(b)


def assert_params_close(est, truth, rtol, atol_theta=None):
    atol_theta = rtol if atol_theta is None else atol_theta
    assert rel_err(est.v_th, truth.v_th) < rtol, (est, truth)
    assert abs(np.angle(np.exp(1j * (est.theta - truth.theta)))) < atol_theta, (est, truth)
    assert rel_err(est.r_th, truth.r_th) < rtol, (est, truth)
    assert rel_err(est.x_th, truth.x_th) < rtol, (est, truth)


def random_problem(rng, n_loads=3):
    """Random truth in the ranges used by the property checks plus distinct R-L loads."""
    truth = TheveninParams(rng.uniform(10, 500), rng.uniform(-np.pi, np.pi),
                           rng.uniform(0.01, 10), rng.uniform(0.001, 5))
    zmag = np.hypot(truth.r_th, truth.x_th)
    loads = []
    for k in range(n_loads):
        r = zmag * rng.uniform(1.0, 10.0) * (1 + k)
        loads.append(ComplexImpedance(r, r * rng.uniform(0.0, 0.5)))
    return truth, loads


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
