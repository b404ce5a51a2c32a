"""Command-line entry point: ``ramec {solve,sweep,convergence,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .errors import InfeasibleProblem
from .geometry import snr_gains
from .harness import convergence_traces, generate_scenario, run_sweep, run_trials, trial_seeds
from .pointing import dynamic_pointing_all
from .resource import max_user_bits
from .results import OutputError, emit_results, fmt, write_trace_csv

log = logging.getLogger("ramec")

MODES = ("dynamic", "static", "fixed", "all")


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    modes = ["dynamic", "static", "fixed"] if args.mode == "all" else [args.mode]
    records = run_trials(cfg, seeds=[args.seed], modes=modes, workers=1)
    for r in records:
        print(f"{r.mode:8s} seed={r.seed} status={r.status} objective_bits={fmt(r.objective_bits)} "
              f"outer_iterations={r.outer_iterations} max_residual={fmt(r.max_residual)}")
    if args.out:
        for p in emit_results(records, args.out, cfg, seeds=[args.seed]):
            log.info("wrote %s", p)
    return 0 if all(r.ok for r in records) else 1


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    records, table = run_sweep(cfg, workers=args.jobs)
    for row in table:
        print(f"{row.sweep_parameter or '-'}={fmt(row.sweep_value) or '-'} {row.mode:8s} "
              f"n={row.n_trials} failed={row.n_failed} mean={fmt(row.mean_objective_bits)} "
              f"std={fmt(row.std_objective_bits)}")
    out = Path(args.out)
    for p in emit_results(records, out, cfg, table=table, seeds=trial_seeds(cfg)):
        log.info("wrote %s", p)
    return 0 if all(row.complete for row in table) else 1


def _cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    rows = convergence_traces(cfg, args.seed)
    path = write_trace_csv(rows, Path(args.out) / "trace.csv")
    print(f"wrote {len(rows)} trace rows to {path}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: schema ok")
    configs = [cfg]
    if cfg.sweep is not None:
        configs = [cfg.with_sweep_value(cfg.sweep.parameter, v) for v in cfg.sweep.values]
    seed = trial_seeds(cfg)[0]
    status = 0
    for c in configs:
        scenario = generate_scenario(c, seed)
        task = c.task_params()
        r_min = np.broadcast_to(np.asarray(task.r_min, float), (scenario.n_users,))
        if not np.any(r_min > 0):
            continue
        # best-case gains: every antenna re-aimed per slot
        gains = snr_gains(dynamic_pointing_all(scenario.array, scenario.channels), scenario.channels)
        for m in np.flatnonzero(r_min > 0):
            best = max_user_bits(float(gains[m]), task, int(m))
            if best < r_min[m]:
                print(f"infeasible: user {m} (seed {seed}) reaches at most {best:.6g} bits < r_min {r_min[m]:.6g}")
                status = 1
    if status == 0:
        print("feasibility pre-check ok")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one seeded scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=MODES, default="all")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="Monte Carlo run over the sweep block")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $RA_MEC_THREADS or CPU count)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("convergence", help="per-iteration objective traces for one seed")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("validate", help="schema and feasibility pre-check")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OutputError, InfeasibleProblem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
