"""Synthetic multi-fidelity benchmarks.

Each problem exposes ``g(z, x)`` in its raw domain coordinates, a cost
``lambda(z)`` and an observation noise variance. Fidelities already live in
``[0, 1]^p`` with the top fidelity at ``1_p``. All problems are maximised:
``sign`` flips the conventionally minimised ones (Branin) so that
``sign * g`` is the quantity to maximise.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import direct
from .gp import jittered_cholesky
from .kernels import KernelSpec, gram

OPTIMUM_BUDGET = 100_000
GP_SAMPLE_GRID = 50
GP_SAMPLE_DOMAIN_BANDWIDTH = 0.1


@dataclass(frozen=True)
class DomainMap:
    """Per-dimension affine bijection between a raw box and the unit cube."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise ValueError("degenerate domain box")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)

    def from_unit(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    p: int
    d: int
    domain_box: np.ndarray
    noise_variance: float
    g: Callable = field(repr=False)
    cost_fn: Callable = field(repr=False)
    sign: float = 1.0
    # hyperparameters of the generating GP, when the problem was drawn from one
    true_kernel: KernelSpec | None = None
    key: tuple = ()

    @property
    def z_star(self) -> np.ndarray:
        return np.ones(self.p)

    @property
    def top_cost(self) -> float:
        return float(cost(self, self.z_star))

    @property
    def known_optimum(self) -> float:
        """Maximum of ``sign * g(z_star, .)``, found by a long DIRECT run."""
        return known_optimum(self)[1]


def _check(problem: BenchmarkProblem, z, x):
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if z.shape[-1:] != (problem.p,) or x.shape[-1:] != (problem.d,):
        raise ValueError(f"{problem.id} expects z with {problem.p} and x with {problem.d} coordinates")
    box = problem.domain_box
    slack = 1e-9 * (box[:, 1] - box[:, 0])
    if np.any(x < box[:, 0] - slack) or np.any(x > box[:, 1] + slack):
        raise ValueError(f"x outside the {problem.id} domain")
    if np.any(z < -1e-12) or np.any(z > 1 + 1e-12):
        raise ValueError("fidelity outside [0, 1]^p")
    single = z.ndim == 1 and x.ndim == 1
    z2, x2 = np.atleast_2d(z), np.atleast_2d(x)
    m = max(len(z2), len(x2))
    if len(z2) not in (1, m) or len(x2) not in (1, m):
        raise ValueError(f"cannot pair {len(z2)} fidelities with {len(x2)} points")
    return np.broadcast_to(z2, (m, problem.p)), np.broadcast_to(x2, (m, problem.d)), single


def evaluate(problem: BenchmarkProblem, z, x):
    """Noiseless ``g(z, x)`` with ``x`` in raw coordinates (single point or rows)."""
    z2, x2, single = _check(problem, z, x)
    out = np.asarray(problem.g(z2, x2), dtype=float)
    return float(out[0]) if single else out


def cost(problem: BenchmarkProblem, z):
    z = np.asarray(z, dtype=float)
    out = np.asarray(problem.cost_fn(np.atleast_2d(z)), dtype=float)
    return float(out[0]) if z.ndim == 1 else out


def observe(problem: BenchmarkProblem, z, x, rng: np.random.Generator) -> float:
    """One noisy evaluation ``g(z, x) + N(0, noise_variance)``."""
    value = evaluate(problem, z, x)
    if problem.noise_variance == 0:
        return value
    return value + math.sqrt(problem.noise_variance) * float(rng.standard_normal())


def normalize_domain(problem: BenchmarkProblem) -> DomainMap:
    return DomainMap(problem.domain_box[:, 0], problem.domain_box[:, 1])


def objective(problem: BenchmarkProblem, z, u):
    """``sign * g(z, x)`` for ``u`` in unit-cube coordinates."""
    return problem.sign * evaluate(problem, z, normalize_domain(problem).from_unit(u))


# Currin exponential ---------------------------------------------------------

def _currin(z, x):
    x1, x2 = x[:, 0], x[:, 1]
    with np.errstate(divide="ignore"):
        decay = np.exp(-1.0 / (2.0 * x2))
    ratio = (2300 * x1**3 + 1900 * x1**2 + 2092 * x1 + 60) / (100 * x1**3 + 500 * x1**2 + 4 * x1 + 20)
    return (1 - 0.1 * (1 - z[:, 0]) * decay) * ratio


# Hartmann ----------------------------------------------------------------------

HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN3_A = np.array([[3, 10, 30], [0.1, 10, 35], [3, 10, 30], [0.1, 10, 35]], dtype=float)
HARTMANN3_P = 1e-4 * np.array([[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]], dtype=float)
HARTMANN6_A = np.array([
    [10, 3, 17, 3.5, 1.7, 8],
    [0.05, 10, 17, 0.1, 8, 14],
    [3, 3.5, 1.7, 10, 17, 8],
    [17, 8, 0.05, 10, 0.1, 14],
], dtype=float)
HARTMANN6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
], dtype=float)


def _hartmann(A, P):
    def g(z, x):
        p = z.shape[1]
        shift = np.zeros((len(z), 4))
        shift[:, :p] = 0.1 * (1 - z)
        alpha = HARTMANN_ALPHA - shift
        inner = ((x[:, None, :] - P[None]) ** 2 * A[None]).sum(-1)
        return (alpha * np.exp(-inner)).sum(1)
    return g


def _hartmann3_cost(z):
    return 0.05 + 0.95 * z[:, 0] ** 3 * z[:, 1] ** 2 * z[:, 2] ** 1.5 * z[:, 3]


def _hartmann6_cost(z):
    return 0.05 + 0.95 * z[:, 0] ** 3 * z[:, 1] ** 2


# Borehole ------------------------------------------------------------------------

BOREHOLE_BOX = np.array([
    [0.05, 0.15], [100, 50_000], [63_070, 115_600], [990, 1110],
    [63.1, 116], [700, 820], [1120, 1680], [9855, 12_045],
], dtype=float)


def borehole_high(x):
    x1, x2, x3, x4, x5, x6, x7, x8 = x.T
    log_ratio = np.log(x2 / x1)
    return 2 * np.pi * x3 * (x4 - x6) / (log_ratio * (1 + 2 * x7 * x3 / (log_ratio * x1**2 * x8) + x3 / x5))


def borehole_low(x):
    x1, x2, x3, x4, x5, x6, x7, x8 = x.T
    log_ratio = np.log(x2 / x1)
    return 5 * x3 * (x4 - x6) / (log_ratio * (1.5 + 2 * x7 * x3 / (log_ratio * x1**2 * x8) + x3 / x5))


def _borehole(z, x):
    w = z[:, 0]
    return w * borehole_high(x) + (1 - w) * borehole_low(x)


# Branin --------------------------------------------------------------------------

def _branin(z, x):
    b = 5.1 / (4 * np.pi**2) - 0.01 * (1 - z[:, 0])
    c = 5 / np.pi - 0.1 * (1 - z[:, 1])
    t = 1 / (8 * np.pi) + 0.05 * (1 - z[:, 2])
    x1, x2 = x[:, 0], x[:, 1]
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


# GP samples ----------------------------------------------------------------------

def _gp_sample_cost(z):
    return 0.2 + 6 * z[:, 0] ** 2


@functools.lru_cache(maxsize=4)
def _gp_sample_factor(fidelity_bandwidth: float) -> np.ndarray:
    grid = np.linspace(0, 1, GP_SAMPLE_GRID)
    zz, xx = np.meshgrid(grid, grid, indexing="ij")
    pts = np.column_stack([zz.ravel(), xx.ravel()])
    spec = KernelSpec(1.0, (GP_SAMPLE_DOMAIN_BANDWIDTH,), (fidelity_bandwidth,))
    return jittered_cholesky(gram(pts, pts, spec), spec.scale)


def gp_sample_grid(seed: int, fidelity_bandwidth: float) -> np.ndarray:
    """Sampled values on the 50 x 50 grid, indexed ``[z, x]``."""
    L = _gp_sample_factor(float(fidelity_bandwidth))
    rng = np.random.default_rng(seed)
    return (L @ rng.standard_normal(L.shape[0])).reshape(GP_SAMPLE_GRID, GP_SAMPLE_GRID)


def make_gp_sample_problem(seed: int = 0, fidelity_bandwidth: float = 1.0) -> BenchmarkProblem:
    """A function drawn from the SE product GP on ``[0,1] x [0,1]``, splined off-grid."""
    if fidelity_bandwidth not in (1.0, 0.01):
        raise ValueError("fidelity_bandwidth must be 1 (smooth) or 0.01 (rough)")
    values = gp_sample_grid(seed, fidelity_bandwidth)
    grid = np.linspace(0, 1, GP_SAMPLE_GRID)
    spline = RectBivariateSpline(grid, grid, values, kx=3, ky=3, s=0)

    def g(z, x):
        return spline.ev(z[:, 0], x[:, 0])

    name = "gp_sample_smooth" if fidelity_bandwidth == 1.0 else "gp_sample_rough"
    return BenchmarkProblem(
        id=name, p=1, d=1, domain_box=np.array([[0.0, 1.0]]), noise_variance=0.05,
        g=g, cost_fn=_gp_sample_cost,
        true_kernel=KernelSpec(1.0, (GP_SAMPLE_DOMAIN_BANDWIDTH,), (fidelity_bandwidth,)),
        key=(name, seed),
    )


# Registry ------------------------------------------------------------------------

PROBLEM_IDS = ("currin", "hartmann3", "hartmann6", "borehole", "branin", "gp_sample_smooth", "gp_sample_rough")


def get_problem(problem_id: str, seed: int = 0) -> BenchmarkProblem:
    """Look up a benchmark by id; ``seed`` only affects the GP-sample problems."""
    if problem_id == "currin":
        return BenchmarkProblem("currin", 1, 2, np.array([[0.0, 1.0]] * 2), 0.5, _currin,
                                lambda z: 0.1 + z[:, 0] ** 2, key=("currin",))
    if problem_id == "hartmann3":
        return BenchmarkProblem("hartmann3", 4, 3, np.array([[0.0, 1.0]] * 3), 0.01,
                                _hartmann(HARTMANN3_A, HARTMANN3_P), _hartmann3_cost, key=("hartmann3",))
    if problem_id == "hartmann6":
        return BenchmarkProblem("hartmann6", 2, 6, np.array([[0.0, 1.0]] * 6), 0.05,
                                _hartmann(HARTMANN6_A, HARTMANN6_P), _hartmann6_cost, key=("hartmann6",))
    if problem_id == "borehole":
        return BenchmarkProblem("borehole", 1, 8, BOREHOLE_BOX.copy(), 5.0, _borehole,
                                lambda z: 0.1 + z[:, 0] ** 1.5, key=("borehole",))
    if problem_id == "branin":
        return BenchmarkProblem("branin", 3, 2, np.array([[-5.0, 10.0], [0.0, 15.0]]), 0.05, _branin,
                                lambda z: 0.05 + z[:, 0] ** 3 * z[:, 1] ** 2 * z[:, 2] ** 1.5,
                                sign=-1.0, key=("branin",))
    if problem_id == "gp_sample_smooth":
        return make_gp_sample_problem(seed, 1.0)
    if problem_id == "gp_sample_rough":
        return make_gp_sample_problem(seed, 0.01)
    raise KeyError(f"unknown problem {problem_id!r}; choose from {', '.join(PROBLEM_IDS)}")


_OPTIMA: dict[tuple, tuple[np.ndarray, float]] = {}


def known_optimum(problem: BenchmarkProblem) -> tuple[np.ndarray, float]:
    """``(x_star_raw, f_star)`` on the top-fidelity slice, cached per problem."""
    if problem.key not in _OPTIMA:
        dmap = normalize_domain(problem)
        z_star = problem.z_star

        def f(u):
            return problem.sign * problem.g(np.broadcast_to(z_star, (len(u), problem.p)), dmap.from_unit(u))

        u, value = direct.maximize(f, [(0.0, 1.0)] * problem.d, budget=OPTIMUM_BUDGET, vectorized=True)
        _OPTIMA[problem.key] = (dmap.from_unit(u), float(value))
    return _OPTIMA[problem.key]
