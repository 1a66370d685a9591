"""Hot loops of the nonlinear estimator.

Everything here is written in the numba-compatible subset of numpy so the
same source runs compiled or interpreted (see ``_accel``). Measurement
batches arrive as flat float64 arrays: ``y`` holds the stacked PCC voltage
components ``[V cos, V sin]`` per set, ``a``/``b`` the current components.
"""

import math

import numpy as np

from ._accel import jit

STATUS_CAPS = 0
STATUS_GRADIENT = 1
STATUS_STEP = 2

LAMBDA_MIN = 1e-15
LAMBDA_MAX = 1e20


@jit
def wrap_angle(a):
    two_pi = 2.0 * math.pi
    r = a - two_pi * math.ceil((a - math.pi) / two_pi)
    if r > math.pi:
        r -= two_pi
    elif r <= -math.pi:
        r += two_pi
    return r


@jit
def model_eval(x, a, b):
    """Stacked ``[x1 cos x2 - a x3 + b x4, x1 sin x2 - b x3 - a x4]`` per set."""
    n = a.shape[0]
    out = np.empty(2 * n)
    c = x[0] * math.cos(x[1])
    s = x[0] * math.sin(x[1])
    for k in range(n):
        out[2 * k] = c - a[k] * x[2] + b[k] * x[3]
        out[2 * k + 1] = s - b[k] * x[2] - a[k] * x[3]
    return out


@jit
def model_jacobian(x, a, b):
    n = a.shape[0]
    jac = np.empty((2 * n, 4))
    c = math.cos(x[1])
    s = math.sin(x[1])
    for k in range(n):
        jac[2 * k, 0] = c
        jac[2 * k, 1] = -x[0] * s
        jac[2 * k, 2] = -a[k]
        jac[2 * k, 3] = b[k]
        jac[2 * k + 1, 0] = s
        jac[2 * k + 1, 1] = x[0] * c
        jac[2 * k + 1, 2] = -b[k]
        jac[2 * k + 1, 3] = -a[k]
    return jac


@jit
def sum_squares(r):
    acc = 0.0
    for k in range(r.shape[0]):
        acc += r[k] * r[k]
    return acc


@jit
def lm_solve(x0, y, a, b, max_iter, max_fev, gtol, xtol, lam0, lam_up, lam_down, history):
    """Gauss-Newton with multiplicative Levenberg damping.

    ``history`` receives the objective of the start point and of every
    accepted step; its length bounds how many are recorded. Returns
    ``(x, iterations, function_evals, status, n_history)``.
    """
    x = x0.copy()
    x[1] = wrap_angle(x[1])
    r = y - model_eval(x, a, b)
    cost = sum_squares(r)
    fev = 1
    it = 0
    nh = 0
    if history.shape[0] > 0:
        history[0] = cost
        nh = 1
    lam = lam0
    status = STATUS_CAPS
    eye = np.eye(4)
    done = False
    while not done:
        jac = model_jacobian(x, a, b)
        g = jac.T @ r
        if np.max(np.abs(g)) < gtol:
            status = STATUS_GRADIENT
            break
        if it >= max_iter or fev >= max_fev:
            break
        h = jac.T @ jac
        while True:
            dx = np.linalg.solve(h + lam * eye, g)
            if np.max(np.abs(dx)) < xtol:
                status = STATUS_STEP
                done = True
                break
            xn = x + dx
            xn[1] = wrap_angle(xn[1])
            rn = y - model_eval(xn, a, b)
            fev += 1
            cn = sum_squares(rn)
            if cn <= cost:
                x = xn
                r = rn
                cost = cn
                it += 1
                lam = max(lam * lam_down, LAMBDA_MIN)
                if nh < history.shape[0]:
                    history[nh] = cost
                    nh += 1
                break
            lam = min(lam * lam_up, LAMBDA_MAX)
            if fev >= max_fev:
                done = True
                break
    return x, it, fev, status, nh
