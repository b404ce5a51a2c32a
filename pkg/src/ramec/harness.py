"""Monte Carlo driver: scenario generation, trials, sweeps and aggregation.

Trial seeds derive from ``(master_seed, trial_index)`` through splitmix64, and
every scenario is a pure function of ``(config, seed)``.  User placement and
fading come from separate child streams, so sweeping the array size keeps the
user drop fixed for a given seed.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ExperimentConfig, from_dict
from .errors import InfeasibleProblem
from .geometry import build_channels, user_position
from .saho import AOSettings, SolveMode, solve
from .scenario import Scenario

log = logging.getLogger(__name__)

_MASK = (1 << 64) - 1
THREADS_ENV = "RA_MEC_THREADS"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    return splitmix64(splitmix64(master_seed & _MASK) ^ (trial_index & _MASK))


def trial_seeds(config: ExperimentConfig) -> list[int]:
    run = config.run
    if run.seeds is not None:
        return [int(s) for s in run.seeds]
    return [trial_seed(run.master_seed, i) for i in range(run.seed_count)]


def generate_scenario(config: ExperimentConfig, seed: int) -> Scenario:
    users_ss, fading_ss = np.random.SeedSequence(seed).spawn(2)
    urng = np.random.default_rng(users_ss)
    frng = np.random.default_rng(fading_ss)
    us = config.users
    m = us.count
    lo, hi = (float(v) for v in us.horiz_dist_range_m)
    if us.area_uniform:
        rho = np.sqrt(urng.uniform(lo**2, hi**2, m))
    else:
        rho = urng.uniform(lo, hi, m)
    az_lim = np.pi / 2 if us.azimuth_halfspace else np.pi
    az = urng.uniform(-az_lim, az_lim, m)
    h = urng.uniform(*(float(v) for v in us.height_range_m), m)
    users = tuple(
        user_position(float(np.hypot(r, z)), float(np.arctan2(r, z)), float(a))
        for r, z, a in zip(rho, h, az)
    )
    array = config.array_geometry()
    params = config.channel_params()
    positions = np.array([u.position for u in users])
    channels = build_channels(array, positions, params, frng)
    return Scenario(array, users, params, config.task_params(), channels, seed)


@dataclass
class TrialRecord:
    seed: int
    mode: str
    objective_bits: float
    tau_s: list = field(default_factory=list)
    y_j: list = field(default_factory=list)
    p_w: list = field(default_factory=list)
    f_hz: list = field(default_factory=list)
    r_loc_bits: list = field(default_factory=list)
    r_off_bits: list = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = False
    wall_time_s: float = 0.0
    max_residual: float = 0.0
    kkt_residual: float = 0.0
    objective_trace: list = field(default_factory=list)
    raw_trace: list = field(default_factory=list)
    status: str = "ok"
    trial_index: int = 0
    sweep_parameter: str = ""
    sweep_value: float | int | str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def run_trial(scenario: Scenario, mode: str | SolveMode, ao: AOSettings | None = None) -> TrialRecord:
    """Solve one scenario in one mode; solver failures are recorded, not raised."""
    mode = SolveMode(mode)
    start = time.perf_counter()
    try:
        sol = solve(scenario, mode, ao)
    except (InfeasibleProblem, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.warning("trial seed=%s mode=%s failed: %s", scenario.seed, mode.value, exc)
        return TrialRecord(
            seed=scenario.seed, mode=mode.value, objective_bits=math.nan,
            wall_time_s=time.perf_counter() - start, status=f"failed: {exc}",
        )
    a = sol.allocation
    return TrialRecord(
        seed=scenario.seed,
        mode=mode.value,
        objective_bits=sol.objective,
        tau_s=a.slot.tolist(),
        y_j=a.offload_energy.tolist(),
        p_w=a.transmit_power.tolist(),
        f_hz=a.cpu_freq.tolist(),
        r_loc_bits=a.r_loc.tolist(),
        r_off_bits=a.r_off.tolist(),
        outer_iterations=sol.report.outer_iterations,
        converged=sol.report.converged,
        wall_time_s=sol.report.wall_time,
        max_residual=sol.report.max_constraint_residual,
        kkt_residual=sol.report.kkt_residual,
        objective_trace=list(sol.report.objective_trace),
        raw_trace=list(sol.report.raw_trace),
    )


def _run_point(task) -> list[TrialRecord]:
    cfg_dict, parameter, value, seed, index, modes = task
    cfg = from_dict(cfg_dict)
    if parameter:
        cfg = cfg.with_sweep_value(parameter, value)
    scenario = generate_scenario(cfg, seed)
    ao = cfg.ao_settings()
    out = []
    for mode in modes:
        rec = run_trial(scenario, mode, ao)
        rec.trial_index = index
        rec.sweep_parameter = parameter
        rec.sweep_value = value
        out.append(rec)
    return out


def worker_count(requested: int | None = None) -> int:
    """Explicit request, else ``RA_MEC_THREADS``, else the machine's CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _execute(tasks, workers: int) -> list[TrialRecord]:
    records: list[TrialRecord] = []
    if workers <= 1 or len(tasks) <= 1:
        for t in tasks:
            records.extend(_run_point(t))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
                records.extend(chunk)
    return sort_records(records)


def _value_key(v):
    return (0, float(v), "") if isinstance(v, (int, float)) else (1, 0.0, str(v))


def sort_records(records):
    return sorted(records, key=lambda r: (r.seed, r.mode, _value_key(r.sweep_value), r.trial_index))


def run_trials(config: ExperimentConfig, seeds=None, modes=None, workers: int | None = None):
    """Every mode on every seed of the base configuration (no sweep applied)."""
    seeds = trial_seeds(config) if seeds is None else list(seeds)
    modes = list(modes or config.run.modes)
    cfg_dict = config.to_dict()
    tasks = [(cfg_dict, "", "", int(s), i, modes) for i, s in enumerate(seeds)]
    return _execute(tasks, worker_count(workers))


def run_sweep(config: ExperimentConfig, workers: int | None = None):
    """Run every (sweep value, seed, mode) and aggregate.

    The same seed list is used for every sweep value and mode.  Without a
    sweep block the base configuration is the single point.
    Returns ``(records, table)``.
    """
    seeds = trial_seeds(config)
    modes = list(config.run.modes)
    cfg_dict = config.to_dict()
    if config.sweep is None:
        points = [("", "")]
    else:
        points = [(config.sweep.parameter, v) for v in config.sweep.values]
    tasks = [(cfg_dict, p, v, int(s), i, modes) for p, v in points for i, s in enumerate(seeds)]
    records = _execute(tasks, worker_count(workers))
    return records, aggregate(records)


@dataclass
class SweepRow:
    sweep_parameter: str
    sweep_value: float | int | str
    mode: str
    n_trials: int
    n_failed: int
    mean_objective_bits: float
    std_objective_bits: float
    complete: bool

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(records) -> list[SweepRow]:
    """Mean and sample standard deviation per (sweep value, mode)."""
    groups: dict = {}
    for r in sort_records(records):
        groups.setdefault((r.sweep_parameter, _value_key(r.sweep_value), r.mode), []).append(r)
    rows = []
    for key in sorted(groups):
        recs = groups[key]
        vals = np.array([r.objective_bits for r in recs if r.ok], dtype=float)
        n_failed = sum(not r.ok for r in recs)
        mean = float(np.mean(vals)) if len(vals) else math.nan
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        rows.append(SweepRow(recs[0].sweep_parameter, recs[0].sweep_value, recs[0].mode,
                             len(recs), n_failed, mean, std, n_failed == 0))
    return rows


def convergence_traces(config: ExperimentConfig, seed: int):
    """Per-iteration objective traces for one seed, for every mode and sweep value.

    Returns rows ``(sweep_parameter, sweep_value, mode, iteration, objective, best)``.
    """
    if config.sweep is None:
        points = [("", "")]
    else:
        points = [(config.sweep.parameter, v) for v in config.sweep.values]
    rows = []
    for parameter, value in points:
        recs = _run_point((config.to_dict(), parameter, value, int(seed), 0, list(config.run.modes)))
        for rec in recs:
            if not rec.ok:
                continue
            for i, (raw, best) in enumerate(zip(rec.raw_trace, rec.objective_trace)):
                rows.append((parameter, value, rec.mode, i, raw, best))
    return rows
