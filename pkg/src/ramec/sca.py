"""Frame-wide (static) pointing by successive convex approximation.

At a fixed allocation the offloading bits

    sum_m w_m tau_m B / v_m log2(1 + a_m ||h_m(F)||^2),   a_m = y_m / (tau_m sigma^2)

are linearized around the current pointing matrix.  The linear model separates
over antennas, and each per-antenna piece is maximized in closed form over
``{||f|| <= 1, cos(theta_max) <= f_z <= 1}`` and then renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .geometry import E3, ChannelSet, channel_power
from .resource import LN2, Allocation, TaskParams


@dataclass(frozen=True)
class ScaSettings:
    max_iters: int = 20
    rel_tol: float = 1e-6
    min_projection: float = 0.0
    # Halvings of the chord step tried when a full step fails to improve.
    max_backtracks: int = 12

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise InvalidArgument("rel_tol must be positive")
        if not 0 <= self.min_projection < 1:
            raise InvalidArgument("min_projection must lie in [0, 1)")


@dataclass(frozen=True)
class SurrogateCoefficients:
    coef: np.ndarray  # (K, 3) linear coefficient of each boresight
    weight: np.ndarray  # (M,) outer multiplier of each user's log term
    snr: np.ndarray  # (M,) operating SNR at the expansion point


def channel_gradient(f_current, direction, beta, directivity: int) -> np.ndarray:
    """Gradient of ``beta * max(0, f.q)**p`` with respect to ``f``."""
    f = np.asarray(f_current, dtype=float)
    q = np.asarray(direction, dtype=float)
    proj = float(f @ q)
    if proj <= 0:
        return np.zeros(3, dtype=complex)
    return beta * directivity * proj ** (directivity - 1) * q.astype(complex)


def _clamped_projections(pointing, channels: ChannelSet, floor: float = 0.0):
    proj = np.einsum("kc,kmc->km", pointing, channels.directions)
    proj = np.minimum(proj, 1.0)
    if floor > 0:
        proj = np.where(proj > 0, np.maximum(proj, floor), proj)
    return np.maximum(proj, 0.0)


def _snr_scale(allocation: Allocation, channels: ChannelSet):
    tau = allocation.slot
    on = tau > 0
    a = np.zeros_like(tau)
    a[on] = allocation.offload_energy[on] / (tau[on] * channels.params.noise_power)
    return a, on


def offload_objective(pointing, channels: ChannelSet, allocation: Allocation, params: TaskParams) -> float:
    """Weighted offloaded bits at a fixed allocation as a function of the pointing."""
    u = params.per_user(channels.n_users)
    a, on = _snr_scale(allocation, channels)
    power = channel_power(pointing, channels)
    bits = allocation.slot * u["bandwidth"] / u["overhead"] * np.log2(1 + a * power)
    return float(np.sum(np.where(on, u["weight"] * bits, 0.0)))


def surrogate_coefficients(
    pointing, channels: ChannelSet, allocation: Allocation, params: TaskParams,
    settings: ScaSettings | None = None,
) -> SurrogateCoefficients:
    """Linear coefficients of the first-order model of :func:`offload_objective`.

    The conjugate product of the channel with its gradient is real here, so
    ``coef[k] = sum_m W_m * 2 p |beta_mk|^2 (f_k.q_km)^(2p-1) q_km``.
    """
    settings = settings or ScaSettings()
    pointing = np.asarray(pointing, dtype=float)
    u = params.per_user(channels.n_users)
    p = channels.params.directivity
    a, on = _snr_scale(allocation, channels)
    power = channel_power(pointing, channels)
    snr = a * power
    weight = np.where(on, u["weight"] * allocation.slot * u["bandwidth"] / u["overhead"] * a
                      / (LN2 * (1 + snr)), 0.0)
    proj = _clamped_projections(pointing, channels, settings.min_projection)
    amp2 = np.abs(channels.beta) ** 2
    scal = weight[None, :] * 2 * p * amp2 * proj ** (2 * p - 1)  # (K, M)
    coef = np.einsum("km,kmc->kc", scal, channels.directions)
    return SurrogateCoefficients(coef, weight, snr)


def surrogate_value(pointing, expansion, channels, allocation, params, settings=None) -> float:
    """Value of the linear model built at ``expansion`` evaluated at ``pointing``."""
    sc = surrogate_coefficients(expansion, channels, allocation, params, settings)
    base = offload_objective(expansion, channels, allocation, params)
    return base + float(np.sum(sc.coef * (np.asarray(pointing) - np.asarray(expansion))))


def solve_linear_ball_slab(c, theta_max: float) -> np.ndarray:
    """Maximize ``c.f`` over the unit ball intersected with ``cos(theta_max) <= f_z <= 1``."""
    c = np.asarray(c, dtype=float)
    norm = np.linalg.norm(c)
    if norm == 0:
        return E3.copy()
    lo = np.cos(theta_max)
    t = min(max(c[2] / norm, lo), 1.0)
    cxy = np.hypot(c[0], c[1])
    if cxy == 0:
        return np.array([0.0, 0.0, t])
    r = np.sqrt(max(0.0, 1 - t * t))
    return np.array([r * c[0] / cxy, r * c[1] / cxy, t])


def _normalize(f):
    n = np.linalg.norm(f)
    return E3.copy() if n == 0 else f / n


def sca_step(
    pointing_in, channels: ChannelSet, allocation: Allocation, params: TaskParams,
    theta_max: float, settings: ScaSettings | None = None,
) -> np.ndarray:
    """One surrogate maximization followed by per-column renormalization."""
    sc = surrogate_coefficients(pointing_in, channels, allocation, params, settings)
    out = np.empty_like(np.asarray(pointing_in, dtype=float))
    for k, ck in enumerate(sc.coef):
        out[k] = _normalize(solve_linear_ball_slab(ck, theta_max))
    return out


def _chord(f_from, f_to, step):
    mix = (1 - step) * f_from + step * f_to
    n = np.linalg.norm(mix, axis=1, keepdims=True)
    return np.where(n > 0, mix / np.where(n > 0, n, 1.0), f_from)


def static_pointing_solve(
    pointing_init, channels: ChannelSet, allocation: Allocation, params: TaskParams,
    theta_max: float, settings: ScaSettings | None = None,
):
    """Iterate :func:`sca_step` from ``pointing_init``.

    Returns ``(pointing, trace, converged)``.  ``trace[i]`` is the best
    offloading objective after ``i`` steps, so it never decreases.  A step that
    lowers the true objective is shortened along the chord toward the
    candidate; if no shortened step helps the iteration stops.
    """
    settings = settings or ScaSettings()
    f_cur = np.array(pointing_init, dtype=float)
    obj = offload_objective(f_cur, channels, allocation, params)
    trace = [obj]
    converged = False
    for _ in range(settings.max_iters):
        cand = sca_step(f_cur, channels, allocation, params, theta_max, settings)
        new = offload_objective(cand, channels, allocation, params)
        step = 1.0
        tries = 0
        while new < obj and tries < settings.max_backtracks:
            step *= 0.5
            tries += 1
            trial = _chord(f_cur, cand, step)
            new = offload_objective(trial, channels, allocation, params)
            if new >= obj:
                cand = trial
        if new < obj:
            converged = True
            trace.append(obj)
            break
        change = new - obj
        f_cur, obj = cand, new
        trace.append(obj)
        if change <= settings.rel_tol * max(abs(obj), 1e-300):
            converged = True
            break
    return f_cur, trace, converged
