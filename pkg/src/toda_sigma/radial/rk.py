"""Dormand-Prince 5(4) embedded Runge-Kutta pair with PI step-size control.

The local error estimate is held below ``tol * min(h, 1)`` (error per unit
step once steps are shorter than one time unit).  This keeps every local
error below the tolerance and makes the global error shrink slightly faster
than linearly in the tolerance, so halving the tolerances more than halves
the error in the asymptotic regime.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import NonConvergence

# Butcher tableau (Dormand & Prince 1980)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

ORDER = 5
SAFETY = 0.9
# the controlled quantity err/h scales like h**4
CONTROL_ORDER = 4
# PI controller exponents (DOPRI5 form, adapted to CONTROL_ORDER)
BETA = 0.04
ALPHA = 1.0 / CONTROL_ORDER - 0.75 * BETA
FAC_MIN = 0.2
FAC_MAX = 10.0
ERR_FLOOR = 1e-4


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    with np.errstate(over="ignore", invalid="ignore"):
        f1 = fun(t0 + direction * h0, y1)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if not math.isfinite(d2):
        return h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / ORDER)
    return min(100 * h0, h1, max_step)


def dopri54(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_step: float = math.inf,
    first_step: float | None = None,
    check: Callable[[float, np.ndarray], None] | None = None,
):
    """Integrate ``y' = fun(t, y)`` over ``t_span``; return accepted ``(ts, ys)``.

    ``ys`` has shape ``(len(y0), len(ts))``.  ``check(t, y)`` runs on every
    accepted state and may raise to abort.  Raises :class:`NonConvergence`
    when the step size underflows.
    """
    t0, t1 = map(float, t_span)
    if t1 <= t0:
        raise ValueError("t_span must be increasing")
    y = np.asarray(y0, dtype=float).copy()
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    f = fun(t0, y)
    h = first_step if first_step is not None else _initial_step(fun, t0, y, f, 1.0, rtol, atol, max_step)
    t = t0
    ts = [t]
    ys = [y.copy()]
    err_prev = ERR_FLOOR
    rejected = False
    K = np.empty((7, y.size))
    while t < t1:
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        h = min(h, max_step, t1 - t)
        if not h >= h_min:  # also catches NaN
            raise NonConvergence(f"step size underflow at t={t:.17g}", t=t)
        K[0] = f
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                dy = np.dot(K[:s].T, A[s]) * h
                K[s] = fun(t + C[s] * h, y + dy)
            y_new = y + h * np.dot(K[:6].T, B5[:6])
            err_vec = h * np.dot(K.T, E)
        err = _error_norm(err_vec, y, y_new, rtol, atol) / min(h, 1.0)
        if not math.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= FAC_MIN
            rejected = True
            continue
        if err <= 1.0:
            t_new = t + h
            if t1 - t_new < h_min:
                t_new = t1
            if check is not None:
                check(t_new, y_new)
            err = max(err, ERR_FLOOR)
            fac = SAFETY * err ** (-ALPHA) * err_prev ** BETA
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected:
                fac = min(fac, 1.0)
            err_prev = err
            rejected = False
            t, y, f = t_new, y_new, K[6].copy()
            ts.append(t)
            ys.append(y.copy())
            h *= fac
        else:
            h *= max(FAC_MIN, SAFETY * err ** (-1.0 / CONTROL_ORDER))
            rejected = True
    return np.array(ts), np.array(ys).T
