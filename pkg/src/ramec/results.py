"""CSV/JSON emission of trial records and sweep tables.

Column layouts (stable):

``trials.csv``
    seed, trial_index, sweep_parameter, sweep_value, mode, status, objective_bits,
    outer_iterations, converged, max_residual, tau_s, y_j, p_w, f_hz, r_loc_bits,
    r_off_bits.  Per-user columns hold ``;``-joined values in user order.
``sweep.csv``
    sweep_parameter, sweep_value, mode, n_trials, n_failed, mean_objective_bits,
    std_objective_bits, complete
``trace.csv``
    sweep_parameter, sweep_value, mode, iteration, objective_bits, best_objective_bits

Floats are written with 17 significant digits.  Wall-clock timings only go to
``run.json`` so the CSV files are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from . import __version__
from .harness import SweepRow, TrialRecord, aggregate, sort_records

TRIAL_COLUMNS = [
    "seed", "trial_index", "sweep_parameter", "sweep_value", "mode", "status", "objective_bits",
    "outer_iterations", "converged", "max_residual",
    "tau_s", "y_j", "p_w", "f_hz", "r_loc_bits", "r_off_bits",
]
SWEEP_COLUMNS = [
    "sweep_parameter", "sweep_value", "mode", "n_trials", "n_failed",
    "mean_objective_bits", "std_objective_bits", "complete",
]
TRACE_COLUMNS = ["sweep_parameter", "sweep_value", "mode", "iteration", "objective_bits", "best_objective_bits"]
PER_USER = ("tau_s", "y_j", "p_w", "f_hz", "r_loc_bits", "r_off_bits")


class OutputError(OSError):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def _write_csv(path: Path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def write_trials_csv(records, path) -> Path:
    rows = []
    for r in sort_records(records):
        d = r.to_dict()
        row = []
        for col in TRIAL_COLUMNS:
            v = d[col]
            row.append(";".join(fmt(float(x)) for x in v) if col in PER_USER else fmt(v))
        rows.append(row)
    return _write_csv(path, TRIAL_COLUMNS, rows)


def write_sweep_csv(table, path) -> Path:
    rows = [[fmt(getattr(r, c)) for c in SWEEP_COLUMNS] for r in table]
    return _write_csv(path, SWEEP_COLUMNS, rows)


def write_trace_csv(trace_rows, path) -> Path:
    return _write_csv(path, TRACE_COLUMNS, [[fmt(v) for v in row] for row in trace_rows])


def _seeds_in_trial_order(records):
    by_index = {r.trial_index: r.seed for r in records}
    return [by_index[i] for i in sorted(by_index)]


def write_run_json(path, config, records, table=None, seeds=None) -> Path:
    table = aggregate(records) if table is None else table
    doc = {
        "artifact_version": __version__,
        "config": config.to_dict(),
        "seeds": list(seeds) if seeds is not None else _seeds_in_trial_order(records),
        "records": [r.to_dict() for r in sort_records(records)],
        "table": [row.to_dict() for row in table],
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=1, allow_nan=True))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_run_json(path):
    """Return ``(document, records, table)`` from a ``run.json`` file."""
    doc = json.loads(Path(path).read_text())
    records = [TrialRecord(**r) for r in doc["records"]]
    table = [SweepRow(**r) for r in doc["table"]]
    return doc, records, table


def emit_results(records, out_dir, config, *, table=None, formats: str = "all", seeds=None) -> list[Path]:
    """Write ``trials.csv``, ``sweep.csv`` and ``run.json`` under ``out_dir``."""
    out = Path(out_dir)
    table = aggregate(records) if table is None else table
    written = []
    if formats in ("all", "csv"):
        written.append(write_trials_csv(records, out / "trials.csv"))
        written.append(write_sweep_csv(table, out / "sweep.csv"))
    if formats in ("all", "json"):
        written.append(write_run_json(out / "run.json", config, records, table, seeds))
    return written
