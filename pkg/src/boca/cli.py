"""Command-line entry point: ``boca run | regret | bench-info``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from pathlib import Path

from . import benchmarks as bm
from .harness import METHODS, ExperimentConfig, regret_curve, run_experiment
from .plotting import plot_regret
from .reporting import read_run, run_filename, write_regret_csv, write_run

log = logging.getLogger("boca")


def _config_from_args(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config) if args.config else None
    if config is None:
        if not args.problem:
            raise SystemExit("run: either --config or --problem is required")
        config = ExperimentConfig(problem_id=args.problem)
    if args.problem:
        config.problem_id = args.problem
    if args.method:
        config.method = args.method
    if args.capital is not None:
        config.capital = args.capital
    if args.seeds is not None:
        config.seeds = list(range(args.seeds))
    if args.out:
        config.output = args.out
    if args.jobs is not None:
        config.n_jobs = args.jobs
    return config


def cmd_run(args) -> int:
    config = _config_from_args(args)
    out = Path(config.output or ".")
    records = run_experiment(config)
    failed = 0
    for rec in records:
        path = write_run(rec, out / run_filename(rec))
        status = "ok" if rec.error is None else f"ABORTED ({rec.error})"
        print(f"{path}\tqueries={len(rec.rows)}\tspent={rec.total_cost:.6g}\t{status}")
        failed += rec.error is not None
    if failed:
        print(f"{failed} of {len(records)} seeds aborted", file=sys.stderr)
        return 1
    return 0


def _collect_runs(paths: list[str]) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(sorted(q for q in p.glob("*.csv") if q.with_suffix(".json").exists()))
        else:
            found.append(p)
    return found


def cmd_regret(args) -> int:
    groups = defaultdict(list)
    for path in _collect_runs(args.runs):
        rec = read_run(path)
        groups[(rec.problem_id, rec.problem_seed, rec.capital)].append(rec)
    if not groups:
        print("regret: no run files found", file=sys.stderr)
        return 2
    out = Path(args.out or ".")
    for (problem_id, problem_seed, capital), records in groups.items():
        problem = bm.get_problem(problem_id, problem_seed)
        by_method = defaultdict(list)
        for rec in records:
            by_method[rec.method].append(rec)
        curves = {}
        for method, recs in sorted(by_method.items()):
            recs.sort(key=lambda r: r.seed)
            curve = regret_curve(recs, problem)
            curves[method] = curve
            path = write_regret_csv(curve, out / f"regret_{problem_id}_{method}.csv")
            first = curve.first_defined_capital()
            print(f"{path}\tseeds={len(recs)}\tfinal_mean={curve.final_mean:.6g}\t"
                  f"final_stderr={curve.stderr[-1]:.3g}\tfirst_defined={first}")
        if not args.no_plot:
            fig = plot_regret(curves, out / f"regret_{problem_id}.png", title=f"{problem_id} (capital {capital:g})")
            print(fig)
    return 0


def cmd_bench_info(args) -> int:
    print("id\tp\td\ttop_cost\tnoise_variance\tsign\tdomain")
    for pid in bm.PROBLEM_IDS:
        pr = bm.get_problem(pid)
        box = "; ".join(f"[{lo:g}, {hi:g}]" for lo, hi in pr.domain_box)
        print(f"{pid}\t{pr.p}\t{pr.d}\t{pr.top_cost:g}\t{pr.noise_variance:g}\t{pr.sign:+g}\t{box}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boca", description="Multi-fidelity Bayesian optimisation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write one CSV per seed")
    run.add_argument("--config", help="JSON config file (flat ExperimentConfig fields)")
    run.add_argument("--problem", choices=bm.PROBLEM_IDS)
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--capital", type=float, help="total capital (default 30 x top-fidelity cost)")
    run.add_argument("--seeds", type=int, help="number of seeds; runs seeds 0..N-1")
    run.add_argument("--out", help="output directory")
    run.add_argument("--jobs", type=int, help="worker processes")
    run.set_defaults(func=cmd_run)

    regret = sub.add_parser("regret", help="turn run CSVs into regret CSVs and a figure")
    regret.add_argument("runs", nargs="+", help="run CSV files or directories containing them")
    regret.add_argument("--out", help="output directory")
    regret.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    regret.set_defaults(func=cmd_regret)

    info = sub.add_parser("bench-info", help="list benchmark problems")
    info.set_defaults(func=cmd_bench_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"boca {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
