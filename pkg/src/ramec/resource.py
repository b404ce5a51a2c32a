"""Offloading resource allocation for a fixed pointing matrix.

For fixed per-user SNR gains ``gamma_m = ||h_m||^2 / sigma^2`` the problem

    max  sum_m w_m (T f_m / C + tau_m B / v_m log2(1 + y_m gamma_m / tau_m))
    s.t. y_m + tau_m p_c + T r_c f_m^3 <= E_max          (per user)
         sum_m tau_m <= T,  tau, y, f >= 0
         T f_m / C + R_off,m >= R_min                     (per user)

is jointly concave in ``(y, tau, f)`` where ``y_m = tau_m p_m`` is the offload
energy.  It is solved with a log-barrier Newton method on scaled variables
``tau / T``, ``y / E_max`` and ``f / f_cap`` with ``f_cap = (E_max / (T r_c))^(1/3)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ._barrier import barrier_minimize
from .errors import InfeasibleProblem, InvalidArgument
from .report import SolveReport

LN2 = np.log(2.0)
# Floor on tau / T when evaluating the perspective term inside Newton steps.
TAU_FLOOR = 1e-12
# Slots below this fraction of the frame are snapped to zero after solving.
TAU_SNAP = 1e-9


@dataclass(frozen=True)
class TaskParams:
    """Task, energy and link-budget constants.

    Every field except ``frame`` may be a scalar or a per-user array.
    """

    bandwidth: float | np.ndarray = 10e6
    overhead: float | np.ndarray = 1.1
    cycles_per_bit: float | np.ndarray = 1000.0
    frame: float = 1.0
    e_max: float | np.ndarray = 10.0
    circuit_power: float | np.ndarray = 0.1
    capacitance: float | np.ndarray = 1e-28
    r_min: float | np.ndarray = 0.0
    weight: float | np.ndarray = 1.0

    def __post_init__(self):
        def pos(name):
            if np.any(np.asarray(getattr(self, name), dtype=float) <= 0):
                raise InvalidArgument(f"{name} must be positive")

        for name in ("bandwidth", "cycles_per_bit", "frame", "capacitance", "weight"):
            pos(name)
        if np.any(np.asarray(self.overhead, dtype=float) <= 1):
            raise InvalidArgument("overhead must exceed 1")
        for name in ("e_max", "circuit_power", "r_min"):
            if np.any(np.asarray(getattr(self, name), dtype=float) < 0):
                raise InvalidArgument(f"{name} must be non-negative")

    def per_user(self, n_users: int) -> dict[str, np.ndarray]:
        out = {}
        for name in ("bandwidth", "overhead", "cycles_per_bit", "e_max",
                     "circuit_power", "capacitance", "r_min", "weight"):
            v = np.asarray(getattr(self, name), dtype=float)
            try:
                out[name] = np.broadcast_to(v, (n_users,)).copy()
            except ValueError:
                raise InvalidArgument(f"{name} has shape {v.shape}, expected ({n_users},)") from None
        return out


@dataclass(frozen=True)
class SolverSettings:
    kkt_tol: float = 1e-8
    barrier_mu: float = 0.1
    max_newton_iters: int = 200
    max_outer_iters: int = 100

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise InvalidArgument("kkt_tol must be positive")
        if not 0 < self.barrier_mu < 1:
            raise InvalidArgument("barrier_mu must lie in (0, 1)")


@dataclass(frozen=True)
class Allocation:
    offload_energy: np.ndarray
    slot: np.ndarray
    cpu_freq: np.ndarray
    transmit_power: np.ndarray
    r_loc: np.ndarray
    r_off: np.ndarray
    e_loc: np.ndarray
    e_off: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.slot)


def local_rate_energy(cpu_freq, params: TaskParams):
    """Bits processed and energy spent locally over one frame."""
    f = np.asarray(cpu_freq, dtype=float)
    T = params.frame
    return T * f / np.asarray(params.cycles_per_bit, float), T * np.asarray(params.capacitance, float) * f**3


def offload_rate(offload_energy, slot, gain, bandwidth, overhead):
    """``tau (B / v) log2(1 + y gamma / tau)``, taken as 0 where ``tau == 0``."""
    y, tau, gamma = np.broadcast_arrays(
        np.asarray(offload_energy, float), np.asarray(slot, float), np.asarray(gain, float)
    )
    safe = np.where(tau > 0, tau, 1.0)
    r = np.where(tau > 0, tau * np.asarray(bandwidth, float) / np.asarray(overhead, float)
                 * np.log2(1 + y * gamma / safe), 0.0)
    return r[()] if r.ndim == 0 else r


def make_allocation(offload_energy, slot, cpu_freq, gains, params: TaskParams) -> Allocation:
    y = np.asarray(offload_energy, dtype=float)
    tau = np.asarray(slot, dtype=float)
    f = np.asarray(cpu_freq, dtype=float)
    u = params.per_user(len(tau))
    r_loc, e_loc = local_rate_energy(f, params)
    r_off = offload_rate(y, tau, gains, u["bandwidth"], u["overhead"])
    p = np.where(tau > 0, y / np.where(tau > 0, tau, 1.0), 0.0)
    e_off = y + tau * u["circuit_power"]
    return Allocation(y, tau, f, p, np.broadcast_to(r_loc, tau.shape).copy(),
                      np.atleast_1d(r_off), np.broadcast_to(e_loc, tau.shape).copy(), e_off)


def zero_allocation(gains, params: TaskParams) -> Allocation:
    z = np.zeros(len(np.atleast_1d(gains)))
    return make_allocation(z, z, z, gains, params)


def allocation_objective(allocation: Allocation, params: TaskParams) -> float:
    w = params.per_user(allocation.n_users)["weight"]
    return float(np.sum(w * (allocation.r_loc + allocation.r_off)))


@dataclass(frozen=True)
class ResidualReport:
    energy: float
    time: float
    slot_bounds: float
    nonnegativity: float
    min_bits: float
    idle_energy: float
    objective: float

    @property
    def max_residual(self) -> float:
        return max(self.energy, self.time, self.slot_bounds, self.nonnegativity, self.min_bits,
                   self.idle_energy)


def validate_allocation(allocation: Allocation, gains, params: TaskParams) -> ResidualReport:
    """Largest violation of each constraint family, in physical units.

    Rates and energies are recomputed from the primal variables rather than
    trusted from the allocation record.
    """
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    fresh = make_allocation(allocation.offload_energy, allocation.slot, allocation.cpu_freq, gains, params)
    u = params.per_user(fresh.n_users)
    T = params.frame
    energy = np.max(fresh.e_off + fresh.e_loc - u["e_max"], initial=0.0)
    tsum = max(0.0, float(np.sum(fresh.slot)) - T)
    bounds = np.max(np.concatenate([fresh.slot - T, -fresh.slot]), initial=0.0)
    nonneg = np.max(-np.concatenate([fresh.offload_energy, fresh.cpu_freq]), initial=0.0)
    bits = np.max(u["r_min"] - fresh.r_loc - fresh.r_off, initial=0.0)
    idle = np.max(np.where(fresh.slot == 0, fresh.offload_energy, 0.0), initial=0.0)
    return ResidualReport(
        float(max(energy, 0.0)), tsum, float(max(bounds, 0.0)), float(max(nonneg, 0.0)),
        float(max(bits, 0.0)), float(max(idle, 0.0)), allocation_objective(fresh, params),
    )


class _Problem:
    """Scaled barrier formulation over ``x = [tau/T, y/E, f/f_cap]`` for active users."""

    def __init__(self, gains, u, frame):
        self.n = len(gains)
        T = frame
        E = u["e_max"]
        self.fcap = (E / (T * u["capacitance"])) ** (1.0 / 3.0)
        self.a = T * self.fcap / u["cycles_per_bit"]  # bits at f = f_cap
        self.b = T * u["bandwidth"] / (u["overhead"] * LN2)  # bits per nat at tau = T
        self.g = gains * E / T  # SNR per unit of scaled energy/slot
        self.c = T * u["circuit_power"] / E  # scaled circuit energy per scaled slot
        self.w = u["weight"]
        self.rmin = u["r_min"]
        self.rate_rows = np.flatnonzero(self.rmin > 0)
        self.scale = float(np.sum(self.w * (self.a + self.b * np.log1p(self.g))))
        if self.scale <= 0:
            self.scale = 1.0
        n = self.n
        # linear rows: -tau, -y, -f, sum(tau) - 1
        lin = np.zeros((3 * n + 1, 3 * n))
        lin[: 3 * n, :] = -np.eye(3 * n)
        lin[3 * n, :n] = 1.0
        self.lin = lin
        self.lin_b = np.zeros(3 * n + 1)
        self.lin_b[3 * n] = 1.0

    def split(self, x):
        n = self.n
        return x[:n], x[n: 2 * n], x[2 * n: 3 * n]

    def _perspective(self, tau, y, g):
        """``tau ln(1 + g y / tau)`` with its gradient and Hessian pieces."""
        te = np.maximum(tau, TAU_FLOOR)
        s = g * y / te
        with np.errstate(invalid="ignore"):  # trial points with y < 0 are rejected by the caller
            lg = np.log1p(s)
        val = te * lg
        d_tau = lg - s / (1 + s)
        d_y = g / (1 + s)
        # Hessian = -k * v v^T with v = (s, -g) in (tau, y)
        k = 1.0 / (te * (1 + s) ** 2)
        return val, d_tau, d_y, s, k

    def bits(self, x):
        tau, y, f = self.split(x)
        val, *_ = self._perspective(tau, y, self.g)
        return self.a * f + self.b * val

    def objective(self, x):
        n = self.n
        tau, y, f = self.split(x)
        val, d_tau, d_y, s, k = self._perspective(tau, y, self.g)
        coef = self.w / self.scale
        obj = -np.sum(coef * (self.a * f + self.b * val))
        grad = -np.concatenate([coef * self.b * d_tau, coef * self.b * d_y, coef * self.a])
        hess = np.zeros((3 * n, 3 * n))
        kk = coef * self.b * k
        idx = np.arange(n)
        hess[idx, idx] = kk * s * s
        hess[n + idx, n + idx] = kk * self.g * self.g
        hess[idx, n + idx] = -kk * s * self.g
        hess[n + idx, idx] = -kk * s * self.g
        return obj, grad, hess

    def constraints(self, x):
        n = self.n
        tau, y, f = self.split(x)
        lin_vals = self.lin @ x - self.lin_b
        # energy: y + c tau + f^3 - 1 <= 0
        e_vals = y + self.c * tau + f**3 - 1.0
        e_jac = np.zeros((n, 3 * n))
        idx = np.arange(n)
        e_jac[idx, idx] = self.c
        e_jac[idx, n + idx] = 1.0
        e_jac[idx, 2 * n + idx] = 3 * f**2
        rows = self.rate_rows
        if len(rows):
            val, d_tau, d_y, s, k = self._perspective(tau[rows], y[rows], self.g[rows])
            rm = self.rmin[rows]
            r_vals = (rm - self.a[rows] * f[rows] - self.b[rows] * val) / rm
            r_jac = np.zeros((len(rows), 3 * n))
            j = np.arange(len(rows))
            r_jac[j, rows] = -self.b[rows] * d_tau / rm
            r_jac[j, n + rows] = -self.b[rows] * d_y / rm
            r_jac[j, 2 * n + rows] = -self.a[rows] / rm
        else:
            r_vals = np.zeros(0)
            r_jac = np.zeros((0, 3 * n))
        vals = np.concatenate([lin_vals, e_vals, r_vals])
        jac = np.vstack([self.lin, e_jac, r_jac])
        n_lin = len(lin_vals)

        def hess_sum(wts):
            h = np.zeros((3 * n, 3 * n))
            we = wts[n_lin: n_lin + n]
            h[2 * n + idx, 2 * n + idx] = we * 6 * f
            if len(rows):
                wr = wts[n_lin + n:]
                kk = wr * self.b[rows] * k / self.rmin[rows]
                g = self.g[rows]
                h[rows, rows] += kk * s * s
                h[n + rows, n + rows] += kk * g * g
                h[rows, n + rows] += -kk * s * g
                h[n + rows, rows] += -kk * s * g
            return h

        return vals, jac, hess_sum

    def start(self):
        n = self.n
        tau = np.full(n, 0.5 / n)
        # keep circuit energy within a quarter of the budget
        tau = np.minimum(tau, 0.25 / np.maximum(self.c, 1e-300))
        y = np.full(n, 0.25)
        f = np.full(n, 0.25 ** (1.0 / 3.0))
        return np.concatenate([tau, y, f])


def _phase_one(prob: _Problem, x0, settings: SolverSettings):
    """Find a point strictly satisfying the minimum-bits rows, or report the worst user."""
    n3 = len(x0)
    rows = prob.rate_rows
    n_lin = 3 * prob.n + 1 + prob.n

    def objective(z):
        g = np.zeros(n3 + 1)
        g[-1] = 1.0
        return z[-1], g, np.zeros((n3 + 1, n3 + 1))

    def constraints(z):
        x, s = z[:-1], z[-1]
        vals, jac, hs = prob.constraints(x)
        vals = vals.copy()
        jac = np.hstack([jac, np.zeros((len(vals), 1))])
        vals[n_lin:] -= s
        jac[n_lin:, -1] = -1.0
        # keep s bounded below so phase I stays bounded
        vals = np.append(vals, -s - 1.0)
        jac = np.vstack([jac, np.eye(1, n3 + 1, n3) * -1.0])

        def hess_sum(w):
            h = np.zeros((n3 + 1, n3 + 1))
            h[:n3, :n3] = hs(w[:-1])
            return h

        return vals, jac, hess_sum

    vals0 = prob.constraints(x0)[0]
    s0 = max(0.0, float(np.max(vals0[n_lin:]))) + 1.0
    z0 = np.append(x0, s0)
    res = barrier_minimize(
        objective, constraints, z0, t0=1.0, mu=settings.barrier_mu, gap_tol=1e-10,
        max_newton=settings.max_newton_iters, max_outer=settings.max_outer_iters,
        stop=lambda z: z[-1] < -1e-6,
    )
    x, s = res.x[:-1], res.x[-1]
    if s >= 0:
        worst = rows[int(np.argmax(prob.constraints(x)[0][n_lin:]))]
        return None, int(worst)
    return x, None


def max_user_bits(gain: float, params: TaskParams, user: int = 0, settings: SolverSettings | None = None) -> float:
    """Most bits user ``user`` could process holding the whole frame and its whole budget."""
    single = _single_user_params(params, user)
    alloc, _ = solve_resource_allocation([gain], single, settings, _precheck=False)
    return float(alloc.r_loc[0] + alloc.r_off[0])


def _single_user_params(params: TaskParams, m: int) -> TaskParams:
    def pick(v):
        v = np.asarray(v, dtype=float)
        return float(v) if v.ndim == 0 else float(v[m])

    return TaskParams(
        bandwidth=pick(params.bandwidth), overhead=pick(params.overhead),
        cycles_per_bit=pick(params.cycles_per_bit), frame=params.frame, e_max=pick(params.e_max),
        circuit_power=pick(params.circuit_power), capacitance=pick(params.capacitance),
        r_min=0.0, weight=1.0,
    )


def solve_resource_allocation(
    gains, params: TaskParams, settings: SolverSettings | None = None, *, _precheck: bool = True
) -> tuple[Allocation, SolveReport]:
    """Maximize the weighted computation bits for fixed SNR gains.

    Raises
    ------
    InfeasibleProblem
        If some user's minimum-bits requirement cannot be met.
    """
    settings = settings or SolverSettings()
    start = time.perf_counter()
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    if np.any(gains < 0) or not np.all(np.isfinite(gains)):
        raise InvalidArgument("gains must be finite and non-negative")
    n_users = len(gains)
    u = params.per_user(n_users)
    T = params.frame

    active = u["e_max"] > 0
    for m in np.flatnonzero(~active):
        if u["r_min"][m] > 0:
            raise InfeasibleProblem(f"user {m} has no energy budget but requires {u['r_min'][m]} bits", m)
    if _precheck:
        for m in np.flatnonzero(active & (u["r_min"] > 0)):
            best = max_user_bits(gains[m], params, int(m), settings)
            if best < u["r_min"][m]:
                raise InfeasibleProblem(
                    f"user {m} can process at most {best:.6g} bits alone, below r_min={u['r_min'][m]:.6g}",
                    int(m),
                )

    y = np.zeros(n_users)
    tau = np.zeros(n_users)
    f = np.zeros(n_users)
    report = SolveReport(outer_iterations=0)
    if np.any(active):
        ua = {k: v[active] for k, v in u.items()}
        prob = _Problem(gains[active], ua, T)
        x0 = prob.start()
        if len(prob.rate_rows) and np.any(prob.constraints(x0)[0][3 * prob.n + 1 + prob.n:] >= 0):
            x0, worst = _phase_one(prob, x0, settings)
            if x0 is None:
                m = int(np.flatnonzero(active)[worst])
                raise InfeasibleProblem(f"minimum-bits requirements cannot be met jointly (user {m})", m)
        n_cons = len(prob.constraints(x0)[0])
        # complementary slackness of every constraint is 1/t at a central point
        res = barrier_minimize(
            prob.objective, prob.constraints, x0, t0=10.0, mu=settings.barrier_mu,
            gap_tol=settings.kkt_tol * n_cons, max_newton=settings.max_newton_iters,
            max_outer=settings.max_outer_iters,
        )
        ts, ys, fs = prob.split(res.x)
        tau[active] = T * ts
        y[active] = ua["e_max"] * ys
        f[active] = prob.fcap * fs
        report.outer_iterations = res.outer_iters
        report.newton_iterations = res.newton_iters
        report.converged = res.converged
        report.kkt_residual = res.kkt_residual
        if not res.converged:
            report.message = "barrier method stopped before reaching the duality-gap target"

    snap = (tau < TAU_SNAP * T) | (gains == 0)
    tau[snap] = 0.0
    y[snap] = 0.0
    y = np.maximum(y, 0.0)
    # Leftover budget (the barrier keeps a slack of order 1/t) goes to the CPU;
    # bits only grow, so every constraint stays satisfied.
    left = np.maximum(u["e_max"] - y - tau * u["circuit_power"], 0.0)
    f = np.maximum(np.maximum(f, 0.0), np.cbrt(left / (T * u["capacitance"])))
    alloc = make_allocation(y, tau, f, gains, params)
    check = validate_allocation(alloc, gains, params)
    report.max_constraint_residual = check.max_residual
    report.objective_trace = [check.objective]
    report.raw_trace = [check.objective]
    report.wall_time = time.perf_counter() - start
    return alloc, report
