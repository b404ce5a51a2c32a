"""Dense primal log-barrier Newton method for small smooth convex programs.

Minimizes ``f0(x)`` subject to ``fi(x) <= 0``.  Callers supply

* ``objective(x) -> (value, grad, hess)``
* ``constraints(x) -> (values, jac, hess_sum)`` where ``hess_sum(w)`` returns
  ``sum_i w_i * hess f_i(x)`` as a dense matrix.

The starting point must be strictly feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_STEP = 1e-10
QUADRATIC_REGION = 1e-2


@dataclass
class BarrierResult:
    x: np.ndarray
    t: float
    newton_iters: int
    outer_iters: int
    converged: bool
    kkt_residual: float
    duals: np.ndarray


def _centering_terms(objective, constraints, x, t):
    f0, g0, h0 = objective(x)
    vals, jac, hess_sum = constraints(x)
    slack = -vals
    inv = 1.0 / slack
    phi = t * f0 - np.sum(np.log(slack))
    grad = t * g0 + jac.T @ inv
    hess = t * h0 + (jac * inv[:, None] ** 2).T @ jac + hess_sum(inv)
    return phi, grad, hess


def _phi(objective, constraints, x, t):
    vals, _, _ = constraints(x)
    if np.any(vals >= 0) or not np.all(np.isfinite(vals)):
        return np.inf
    f0 = objective(x)[0]
    return t * f0 - np.sum(np.log(-vals))


def _pure_step_helps(objective, constraints, x, dx, t, dec2):
    vals = constraints(x + dx)[0]
    if np.any(vals >= 0) or not np.all(np.isfinite(vals)):
        return False
    _, grad, hess = _centering_terms(objective, constraints, x + dx, t)
    new = -grad @ _newton_direction(hess, grad)
    return bool(np.isfinite(new) and new < 0.5 * dec2)


def _newton_direction(hess, grad):
    d = np.sqrt(np.maximum(np.diag(hess), 1e-300))
    scaled = hess / np.outer(d, d)
    rhs = -grad / d
    try:
        c = np.linalg.cholesky(scaled)
        z = np.linalg.solve(c.T, np.linalg.solve(c, rhs))
    except np.linalg.LinAlgError:
        z = np.linalg.lstsq(scaled + 1e-12 * np.eye(len(d)), rhs, rcond=None)[0]
    return z / d


def barrier_minimize(
    objective,
    constraints,
    x0,
    *,
    t0: float = 1.0,
    mu: float = 0.1,
    gap_tol: float = 1e-9,
    max_newton: int = 200,
    max_outer: int = 100,
    newton_tol: float = 1e-12,
    stop=None,
) -> BarrierResult:
    """Sequential centering with ``t <- t / mu`` until ``m / t <= gap_tol``.

    ``stop(x)`` is polled after every Newton step; returning True ends the
    run early (used for phase-I feasibility searches).
    """
    x = np.array(x0, dtype=float)
    m = len(constraints(x)[0])
    t = t0
    total = 0
    outer = 0
    converged = False
    while outer < max_outer:
        outer += 1
        for _ in range(max_newton):
            phi, grad, hess = _centering_terms(objective, constraints, x, t)
            dx = _newton_direction(hess, grad)
            dec2 = -grad @ dx
            if dec2 / 2 <= newton_tol:
                break
            step = 1.0
            # Near the center phi differences drown in rounding at large t, so
            # a pure Newton step is judged by whether it shrinks the decrement.
            if not (dec2 <= QUADRATIC_REGION and _pure_step_helps(objective, constraints, x, dx, t, dec2)):
                while _phi(objective, constraints, x + step * dx, t) > phi - 0.25 * step * dec2:
                    step *= 0.5
                    if step < MIN_STEP:
                        break
                if step < MIN_STEP:
                    break
            x = x + step * dx
            total += 1
            if stop is not None and stop(x):
                return _finish(objective, constraints, x, t, total, outer, True)
        if m / t <= gap_tol:
            converged = True
            break
        t /= mu
    return _finish(objective, constraints, x, t, total, outer, converged)


def _finish(objective, constraints, x, t, total, outer, converged):
    _, g0, _ = objective(x)
    vals, jac, _ = constraints(x)
    duals = 1.0 / (t * -vals)
    stationarity = np.max(np.abs(g0 + jac.T @ duals)) if len(x) else 0.0
    comp = np.max(np.abs(duals * vals)) if len(vals) else 0.0
    primal = max(0.0, float(np.max(vals))) if len(vals) else 0.0
    kkt = float(max(stationarity, comp, primal))
    return BarrierResult(x, t, total, outer, converged, kkt, duals)
