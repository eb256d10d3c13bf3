"""Experiment orchestration: initialisation, capital accounting and regret curves."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import benchmarks as bm
from .baselines import best_top_observation, gp_ei_select, gp_ucb_select
from .gp import GPError, TrainingSet, fit, learn_hyperparameters
from .kernels import KernelSpec
from .policy import ACQ_BUDGET, BocaState, fidelity_grid, select_next, update

log = logging.getLogger(__name__)

METHODS = ("boca", "gp_ucb", "gp_ei")
DEFAULT_CAPITAL_MULTIPLE = 30
CAPITAL_GRID_POINTS = 100
# slack on capital comparisons so that k * cost == budget is not rejected by rounding
CAPITAL_TOL = 1e-9


@dataclass
class ExperimentConfig:
    problem_id: str
    method: str = "boca"
    capital: float | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    init_fraction: float = 0.1
    relearn_period: int | None = 25
    grid_per_axis: int | None = None
    output: str | None = None
    known_gp: bool | None = None
    problem_seed: int = 0
    acq_budget: int = ACQ_BUDGET
    n_jobs: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)

    def problem(self) -> bm.BenchmarkProblem:
        return bm.get_problem(self.problem_id, self.problem_seed)

    def resolved_capital(self, problem: bm.BenchmarkProblem) -> float:
        if self.capital is None:
            return DEFAULT_CAPITAL_MULTIPLE * problem.top_cost
        return float(self.capital)

    def validate(self, problem: bm.BenchmarkProblem) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        capital = self.resolved_capital(problem)
        if capital < 2 * problem.top_cost:
            raise ValueError(f"capital {capital} is below twice the top-fidelity cost {problem.top_cost}")
        if not 0 < self.init_fraction <= 0.5:
            raise ValueError("init_fraction must lie in (0, 0.5]")
        if not self.seeds:
            raise ValueError("at least one seed is required")


@dataclass
class QueryRow:
    t: int
    z: np.ndarray
    x: np.ndarray  # raw domain coordinates
    y: float
    cost: float
    cum_capital: float


@dataclass
class RunRecord:
    problem_id: str
    method: str
    seed: int
    p: int
    d: int
    capital: float
    rows: list[QueryRow] = field(default_factory=list)
    n_init: int = 0
    # c in force when each row was selected; None for initial rows
    c_at_selection: list = field(default_factory=list)
    hyperparameters: list[dict] = field(default_factory=list)
    problem_seed: int = 0
    error: str | None = None

    @property
    def total_cost(self) -> float:
        return self.rows[-1].cum_capital if self.rows else 0.0

    def metadata(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "problem_seed": self.problem_seed,
            "method": self.method,
            "seed": self.seed,
            "p": self.p,
            "d": self.d,
            "capital": self.capital,
            "n_init": self.n_init,
            "c_at_selection": self.c_at_selection,
            "hyperparameters": [
                {"t": h["t"], **h["spec"].to_dict(), "noise_variance": h["noise_variance"], "prior_mean": h["prior_mean"]}
                for h in self.hyperparameters
            ],
            "error": self.error,
        }

    def hyperparameters_at(self, t: int) -> dict:
        """Hyperparameter event in force when query ``t`` was selected."""
        active = [h for h in self.hyperparameters if h["t"] <= t]
        return active[-1]


def _fallback_hyperparameters(data: TrainingSet):
    scale = max(float(np.var(data.y)), 1.0) if data.n else 1.0
    spec = KernelSpec(scale, (0.5,) * data.d, (0.5,) * data.p)
    return spec, 0.01 * spec.scale, float(np.median(data.y)) if data.n else 0.0


def run_seed(config: ExperimentConfig, seed: int) -> RunRecord:
    """One complete run: random initialisation, then the chosen policy until capital runs out."""
    problem = config.problem()
    config.validate(problem)
    capital = config.resolved_capital(problem)
    dmap = bm.normalize_domain(problem)
    z_star = problem.z_star
    grid = fidelity_grid(problem.p, config.grid_per_axis)
    init_grid = grid[~np.all(np.isclose(grid, z_star), axis=1)]
    rng = np.random.default_rng(seed)
    record = RunRecord(problem.id, config.method, seed, problem.p, problem.d, capital, problem_seed=config.problem_seed)
    data = TrainingSet.empty(problem.p, problem.d)
    cum = 0.0

    def spend(z, u):
        nonlocal cum, data
        x = dmap.from_unit(u)
        y = problem.sign * bm.observe(problem, z, x, rng)
        lam = bm.cost(problem, z)
        cum += lam
        data = data.append(z, u, y)
        record.rows.append(QueryRow(len(record.rows) + 1, np.array(z, dtype=float), x, y, lam, cum))
        return y

    init_budget = config.init_fraction * capital
    while True:
        u = rng.uniform(size=problem.d)
        z = init_grid[rng.integers(len(init_grid))] if config.method == "boca" else z_star
        if cum + bm.cost(problem, z) > init_budget + CAPITAL_TOL:
            break
        spend(z, u)
        record.c_at_selection.append(None)
    record.n_init = len(record.rows)

    known = problem.true_kernel is not None and config.known_gp is not False
    relearn = None if known else config.relearn_period
    try:
        if known:
            spec, noise, mean = problem.true_kernel, problem.noise_variance, 0.0
        elif data.n >= 2 and np.ptp(data.y) > 0:
            spec, noise, mean = learn_hyperparameters(data)
        else:
            spec, noise, mean = _fallback_hyperparameters(data)
        record.hyperparameters.append({"t": data.n + 1, "spec": spec, "noise_variance": noise, "prior_mean": mean})
        state = BocaState(
            posterior=fit(spec, data, noise, mean),
            z_star=z_star,
            cost=lambda Z: bm.cost(problem, Z),
            fidelity_grid=grid,
            relearn_period=relearn,
            adapt_threshold=config.method == "boca",
            acq_budget=config.acq_budget,
        )
        while True:
            if config.method == "boca":
                decision = select_next(state)
                z, u = decision.z, decision.x
            elif config.method == "gp_ucb":
                z, u = z_star, gp_ucb_select(state)
            elif not np.any(np.all(state.data.Z == z_star, axis=1)):
                # EI has no incumbent before the first top-fidelity observation
                z, u = z_star, rng.uniform(size=problem.d)
            else:
                best = best_top_observation(state.posterior, z_star)
                z, u = z_star, gp_ei_select(state.posterior, best, z_star, config.acq_budget)
            if cum + bm.cost(problem, z) > capital + CAPITAL_TOL:
                break
            record.c_at_selection.append(state.c)
            y = spend(z, u)
            n_events = len(state.relearn_events)
            update(state, z, u, y)
            if len(state.relearn_events) > n_events:
                record.hyperparameters.append(state.relearn_events[-1])
    except GPError as exc:
        log.warning("seed %d aborted: %s", seed, exc)
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def _run_one(args):
    config, seed = args
    return run_seed(config, seed)


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Run every seed in ``config``; seeds are independent and may run in parallel."""
    config.validate(config.problem())
    jobs = [(config, s) for s in config.seeds]
    if config.n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


# Regret ----------------------------------------------------------------------------

@dataclass
class SeedCurve:
    seed: int
    capital: np.ndarray
    values: np.ndarray  # NaN where undefined


@dataclass
class RegretCurve:
    capital: np.ndarray
    seeds: list[int]
    per_seed: np.ndarray  # (grid points, seeds), NaN where undefined
    mean: np.ndarray
    stderr: np.ndarray
    n_defined: np.ndarray

    def first_defined_capital(self) -> float | None:
        idx = np.flatnonzero(self.n_defined > 0)
        return float(self.capital[idx[0]]) if idx.size else None

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])


def capital_grid(problem: bm.BenchmarkProblem, capital: float, points: int = CAPITAL_GRID_POINTS) -> np.ndarray:
    return np.linspace(problem.top_cost, capital, points)


def simple_regret(record: RunRecord, problem: bm.BenchmarkProblem, grid: np.ndarray, f_star: float | None = None) -> SeedCurve:
    """Best ``f* - f(x)`` over top-fidelity queries affordable within each capital level."""
    if f_star is None:
        f_star = problem.known_optimum
    if f_star is None or not np.isfinite(f_star):
        raise ValueError(f"no known optimum for {problem.id}")
    z_star = problem.z_star
    spent, gaps = [], []
    for row in record.rows:
        if np.allclose(row.z, z_star):
            spent.append(row.cum_capital)
            gaps.append(f_star - problem.sign * bm.evaluate(problem, z_star, row.x))
    values = np.full(len(grid), np.nan)
    if spent:
        spent = np.asarray(spent)
        running = np.minimum.accumulate(np.asarray(gaps))
        # rows are in capital order, so the last affordable row holds the running minimum
        idx = np.searchsorted(spent, np.asarray(grid) + CAPITAL_TOL, side="right") - 1
        ok = idx >= 0
        values[ok] = running[idx[ok]]
    return SeedCurve(record.seed, np.asarray(grid, dtype=float), values)


def aggregate(curves: list[SeedCurve]) -> RegretCurve:
    """Mean and standard error across seeds, ignoring undefined cells."""
    if not curves:
        raise ValueError("need at least one curve")
    grid = curves[0].capital
    for c in curves[1:]:
        if c.capital.shape != grid.shape or not np.allclose(c.capital, grid, rtol=1e-12, atol=0):
            raise ValueError("curves are on different capital grids")
    per_seed = np.column_stack([c.values for c in curves])
    n_defined = np.sum(~np.isnan(per_seed), axis=1)
    mean = np.full(len(grid), np.nan)
    stderr = np.full(len(grid), np.nan)
    for i, n in enumerate(n_defined):
        if n == 0:
            continue
        vals = per_seed[i][~np.isnan(per_seed[i])]
        mean[i] = vals.mean()
        stderr[i] = vals.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    return RegretCurve(grid.copy(), [c.seed for c in curves], per_seed, mean, stderr, n_defined)


def regret_curve(records: list[RunRecord], problem: bm.BenchmarkProblem | None = None) -> RegretCurve:
    """Aggregate simple-regret curve for runs sharing one problem and capital."""
    problem = problem or bm.get_problem(records[0].problem_id, records[0].problem_seed)
    grid = capital_grid(problem, records[0].capital)
    return aggregate([simple_regret(r, problem, grid) for r in records])
