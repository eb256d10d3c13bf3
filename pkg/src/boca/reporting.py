"""CSV and JSON emission for run records and regret curves."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .gp import TrainingSet
from .harness import QueryRow, RegretCurve, RunRecord
from .kernels import KernelSpec

FLOAT_FORMAT = "{:.12g}"


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FORMAT.format(float(value))


def _parse(cell: str) -> float:
    return float("nan") if cell == "" else float(cell)


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: empty CSV, header row missing")
    return rows[0], rows[1:]


def write_regret_csv(curve: RegretCurve, path) -> Path:
    header = ["capital", "mean_regret", "stderr", "n_defined"] + [f"seed_{s}" for s in curve.seeds]
    rows = []
    for i, cap in enumerate(curve.capital):
        rows.append(
            [_fmt(cap), _fmt(curve.mean[i]), _fmt(curve.stderr[i]), _fmt(int(curve.n_defined[i]))]
            + [_fmt(v) for v in curve.per_seed[i]]
        )
    return _write_rows(path, header, rows)


def read_regret_csv(path) -> RegretCurve:
    header, rows = _read_rows(path)
    if header[:4] != ["capital", "mean_regret", "stderr", "n_defined"]:
        raise ValueError(f"{path}: not a regret CSV")
    seeds = [int(h.removeprefix("seed_")) for h in header[4:]]
    table = np.array([[_parse(c) for c in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    return RegretCurve(
        capital=table[:, 0],
        seeds=seeds,
        per_seed=table[:, 4:],
        mean=table[:, 1],
        stderr=table[:, 2],
        n_defined=table[:, 3].astype(int),
    )


def run_header(p: int, d: int) -> list[str]:
    return ["t"] + [f"z_{i + 1}" for i in range(p)] + [f"x_{i + 1}" for i in range(d)] + ["y", "cost", "cum_capital"]


def write_run_csv(record: RunRecord, path) -> Path:
    rows = [
        [_fmt(r.t)] + [_fmt(v) for v in r.z] + [_fmt(v) for v in r.x] + [_fmt(r.y), _fmt(r.cost), _fmt(r.cum_capital)]
        for r in record.rows
    ]
    return _write_rows(path, run_header(record.p, record.d), rows)


def read_run_rows(path) -> tuple[int, int, list[QueryRow]]:
    """Parse a run CSV into ``(p, d, rows)``."""
    header, rows = _read_rows(path)
    p = sum(h.startswith("z_") for h in header)
    d = sum(h.startswith("x_") for h in header)
    if header != run_header(p, d):
        raise ValueError(f"{path}: not a run CSV")
    out = []
    for r in rows:
        vals = [float(c) for c in r]
        out.append(QueryRow(int(vals[0]), np.array(vals[1:1 + p]), np.array(vals[1 + p:1 + p + d]),
                            vals[-3], vals[-2], vals[-1]))
    return p, d, out


def metadata_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_run(record: RunRecord, path) -> Path:
    """Write the run CSV and its JSON metadata sidecar."""
    path = write_run_csv(record, path)
    with metadata_path(path).open("w", encoding="utf-8") as fh:
        json.dump(record.metadata(), fh, indent=2)
    return path


def read_run(path) -> RunRecord:
    p, d, rows = read_run_rows(path)
    meta_file = metadata_path(path)
    if not meta_file.exists():
        raise FileNotFoundError(f"{path}: metadata sidecar {meta_file.name} missing")
    with meta_file.open(encoding="utf-8") as fh:
        meta = json.load(fh)
    hyper = [
        {
            "t": h["t"],
            "spec": KernelSpec(h["scale"], h["domain_bandwidths"], h["fidelity_bandwidths"]),
            "noise_variance": h["noise_variance"],
            "prior_mean": h["prior_mean"],
        }
        for h in meta.get("hyperparameters", [])
    ]
    return RunRecord(
        problem_id=meta["problem_id"], method=meta["method"], seed=meta["seed"], p=p, d=d,
        capital=meta["capital"], rows=rows, n_init=meta.get("n_init", 0),
        c_at_selection=meta.get("c_at_selection", []), hyperparameters=hyper,
        problem_seed=meta.get("problem_seed", 0), error=meta.get("error"),
    )


def run_filename(record: RunRecord) -> str:
    return f"{record.problem_id}_{record.method}_seed{record.seed}.csv"


def training_set(record: RunRecord, upto: int, to_unit) -> TrainingSet:
    """Observations from the first ``upto`` rows, with ``x`` mapped to unit coordinates."""
    rows = record.rows[:upto]
    if not rows:
        return TrainingSet.empty(record.p, record.d)
    return TrainingSet(
        np.array([r.z for r in rows]),
        np.array([to_unit(r.x) for r in rows]),
        np.array([r.y for r in rows]),
    )
