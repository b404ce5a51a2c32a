"""Scenario-adaptive hybrid optimization: dynamic, static and fixed-antenna solves."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import ChannelSet, snr_gains
from .pointing import dynamic_pointing_all, fixed_pointing, is_feasible_pointing, optimal_pointing
from .report import SolveReport
from .resource import (
    Allocation,
    SolverSettings,
    TaskParams,
    allocation_objective,
    make_allocation,
    solve_resource_allocation,
    validate_allocation,
)
from .sca import ScaSettings, static_pointing_solve
from .scenario import Scenario


class SolveMode(str, Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"
    FIXED = "fixed"


@dataclass(frozen=True)
class AOSettings:
    tol: float = 1e-3
    max_outer: int = 30
    init: str = "fixed"  # or "centroid"
    sca: ScaSettings = field(default_factory=lambda: ScaSettings(max_iters=20))
    resource: SolverSettings = field(default_factory=SolverSettings)


@dataclass
class Solution:
    mode: SolveMode
    pointing: np.ndarray  # (K, 3), or (M, K, 3) with one matrix per slot in dynamic mode
    allocation: Allocation
    objective: float
    gains: np.ndarray
    report: SolveReport


def objective_of(pointing, allocation: Allocation, channels: ChannelSet, params: TaskParams) -> float:
    """Weighted computation bits of ``allocation`` recomputed from the pointing."""
    gains = snr_gains(pointing, channels)
    fresh = make_allocation(allocation.offload_energy, allocation.slot, allocation.cpu_freq, gains, params)
    return allocation_objective(fresh, params)


def _finish(mode, pointing, alloc, gains, scenario: Scenario, report: SolveReport, start):
    report.wall_time = time.perf_counter() - start
    check = validate_allocation(alloc, gains, scenario.task)
    report.max_constraint_residual = check.max_residual
    obj = objective_of(pointing, alloc, scenario.channels, scenario.task)
    return Solution(SolveMode(mode), pointing, alloc, obj, gains, report)


def _single_shot(mode, scenario: Scenario, pointing, settings: SolverSettings | None):
    start = time.perf_counter()
    gains = snr_gains(pointing, scenario.channels)
    alloc, rep = solve_resource_allocation(gains, scenario.task, settings)
    report = SolveReport(
        outer_iterations=1, converged=rep.converged, kkt_residual=rep.kkt_residual,
        newton_iterations=rep.newton_iterations, message=rep.message,
    )
    sol = _finish(mode, pointing, alloc, gains, scenario, report, start)
    report.objective_trace = [sol.objective]
    report.raw_trace = [sol.objective]
    return sol


def solve_fixed(scenario: Scenario, settings: SolverSettings | None = None) -> Solution:
    """Fixed-antenna baseline: every boresight at +z."""
    return _single_shot("fixed", scenario, fixed_pointing(scenario.channels.n_antennas), settings)


def solve_dynamic(scenario: Scenario, settings: SolverSettings | None = None) -> Solution:
    """Per-slot closed-form pointing followed by a single resource solve."""
    pointing = dynamic_pointing_all(scenario.array, scenario.channels)
    return _single_shot("dynamic", scenario, pointing, settings)


def centroid_pointing(scenario: Scenario) -> np.ndarray:
    mean = np.mean(scenario.channels.directions, axis=1)
    mean /= np.linalg.norm(mean, axis=1, keepdims=True)
    return optimal_pointing(mean, scenario.array.theta_max)


def solve_static(scenario: Scenario, ao: AOSettings | None = None) -> Solution:
    """Alternate SCA pointing updates and resource solves; return the best iterate.

    Iteration 0 is the initial pointing with its resource solve, which with the
    default ``init="fixed"`` is exactly the fixed-antenna solution.
    """
    ao = ao or AOSettings()
    start = time.perf_counter()
    channels, task = scenario.channels, scenario.task
    theta_max = scenario.array.theta_max
    if ao.init == "fixed":
        f_cur = fixed_pointing(channels.n_antennas)
    elif ao.init == "centroid":
        f_cur = centroid_pointing(scenario)
    else:
        raise ValueError(f"unknown init {ao.init!r}")

    gains = snr_gains(f_cur, channels)
    alloc, rep = solve_resource_allocation(gains, task, ao.resource)
    obj = objective_of(f_cur, alloc, channels, task)
    best = (obj, f_cur, alloc, gains)
    report = SolveReport(objective_trace=[obj], raw_trace=[obj], converged=False)
    report.newton_iterations = rep.newton_iterations
    kkt = rep.kkt_residual
    for i in range(1, ao.max_outer + 1):
        f_cur, _, _ = static_pointing_solve(f_cur, channels, alloc, task, theta_max, ao.sca)
        gains = snr_gains(f_cur, channels)
        alloc, rep = solve_resource_allocation(gains, task, ao.resource)
        report.newton_iterations += rep.newton_iterations
        obj = objective_of(f_cur, alloc, channels, task)
        report.raw_trace.append(obj)
        prev_best = best[0]
        if obj > prev_best:
            best = (obj, f_cur, alloc, gains)
            kkt = rep.kkt_residual
        report.objective_trace.append(best[0])
        report.outer_iterations = i
        if best[0] - prev_best <= ao.tol * max(abs(prev_best), 1e-300):
            report.converged = True
            break
    if not report.converged:
        report.message = f"no convergence within {ao.max_outer} outer iterations"
    report.kkt_residual = kkt
    _, f_best, alloc_best, gains_best = best
    assert is_feasible_pointing(f_best, theta_max)
    return _finish("static", f_best, alloc_best, gains_best, scenario, report, start)


def solve(scenario: Scenario, mode: str | SolveMode, ao: AOSettings | None = None) -> Solution:
    mode = SolveMode(mode)
    ao = ao or AOSettings()
    if mode is SolveMode.FIXED:
        return solve_fixed(scenario, ao.resource)
    if mode is SolveMode.DYNAMIC:
        return solve_dynamic(scenario, ao.resource)
    return solve_static(scenario, ao)
