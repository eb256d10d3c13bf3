"""The BOCA query policy: UCB over the target slice plus fidelity filtering."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import direct
from .gp import GPPosterior, TrainingSet, fit, learn_hyperparameters, predict, predict_target
from .kernels import KernelSpec, information_gap

C_MIN, C_MAX = 0.1, 20.0
ACQ_BUDGET = 1000
GRID_POINTS_PER_AXIS = {1: 100, 2: 30, 3: 10, 4: 6}


def fidelity_grid(p: int, per_axis: int | None = None) -> np.ndarray:
    """Regular grid over ``[0, 1]^p``; it contains the corner ``1_p``."""
    n = per_axis or GRID_POINTS_PER_AXIS.get(p)
    if n is None:
        raise ValueError(f"no default grid density for p={p}; pass per_axis")
    axis = np.linspace(0.0, 1.0, n)
    return np.array(list(itertools.product(axis, repeat=p)))


def farthest_fidelity(z_star: np.ndarray) -> np.ndarray:
    """Corner of the unit cube farthest from ``z_star`` (per-coordinate)."""
    return np.where(np.asarray(z_star) >= 0.5, 0.0, 1.0)


@dataclass
class BocaState:
    posterior: GPPosterior
    z_star: np.ndarray
    cost: Callable[[np.ndarray], np.ndarray]
    fidelity_grid: np.ndarray
    c: float = 1.0
    relearn_period: int | None = 25
    adapt_period: int = 20
    adapt_threshold: bool = True
    acq_budget: int = ACQ_BUDGET
    n_updates: int = 0
    recent_top_flags: deque = field(default_factory=deque)
    c_trace: list = field(default_factory=list)
    relearn_events: list = field(default_factory=list)

    def __post_init__(self):
        self.z_star = np.asarray(self.z_star, dtype=float)
        self.fidelity_grid = np.atleast_2d(np.asarray(self.fidelity_grid, dtype=float))
        self.recent_top_flags = deque(self.recent_top_flags, maxlen=self.adapt_period)
        self.c = float(np.clip(self.c, C_MIN, C_MAX))

    @property
    def spec(self) -> KernelSpec:
        return self.posterior.spec

    @property
    def data(self) -> TrainingSet:
        return self.posterior.training

    @property
    def t(self) -> int:
        """Index of the next query: one more than the number of observations."""
        return self.data.n + 1

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def top_cost(self) -> float:
        return float(self.cost(self.z_star[None])[0])


@dataclass(frozen=True)
class FidelityDecision:
    z: np.ndarray
    x: np.ndarray
    candidates_nonempty: bool


def beta_t(t: int, d: int, ell: float) -> float:
    """``0.5 d log(2 ell t + 1)``."""
    if t < 1:
        raise ValueError("t starts at 1")
    return 0.5 * d * math.log(2.0 * ell * t + 1.0)


def effective_l1_diameter(spec: KernelSpec) -> float:
    """L1 diameter of the unit cube after scaling each axis by ``1 / h_X``."""
    return float(sum(1.0 / h for h in spec.domain_bandwidths))


def state_beta(state: BocaState) -> float:
    return beta_t(state.t, state.d, effective_l1_diameter(state.spec))


def ucb(state: BocaState, x):
    """``mu(x) + sqrt(beta_t) sigma(x)`` on the target slice; vectorised over rows."""
    mu, sigma = predict_target(state.posterior, x, state.z_star)
    return mu + math.sqrt(state_beta(state)) * sigma


def maximize_ucb(state: BocaState) -> np.ndarray:
    x, _ = direct.maximize(lambda X: ucb(state, X), [(0.0, 1.0)] * state.d,
                           budget=state.acq_budget, vectorized=True)
    return x


def gamma_threshold(z, state: BocaState):
    """``c sqrt(scale) xi(z) (cost(z) / cost(z_star))^(1/(d+p+2))``."""
    z = np.asarray(z, dtype=float)
    top = state.top_cost
    if not top > 0:
        raise ValueError("cost at the top fidelity must be positive")
    lam = state.cost(np.atleast_2d(z))
    ratio = (lam / top) ** (1.0 / (state.d + state.p + 2))
    xi = information_gap(np.atleast_2d(z), state.z_star, state.spec)
    out = state.c * math.sqrt(state.spec.scale) * xi * ratio
    return float(out[0]) if z.ndim == 1 else out


def filter_conditions(state: BocaState, x_t, Z=None) -> np.ndarray:
    """Boolean ``(m, 3)`` array: the cheaper / uncertain / informative tests per grid point."""
    Z = state.fidelity_grid if Z is None else np.atleast_2d(Z)
    lam = state.cost(Z)
    cheaper = lam < state.top_cost
    _, tau = predict(state.posterior, Z, np.asarray(x_t, dtype=float)[None])
    uncertain = tau > gamma_threshold(Z, state)
    xi = information_gap(Z, state.z_star, state.spec)
    xi_far = information_gap(farthest_fidelity(state.z_star), state.z_star, state.spec)
    informative = xi > xi_far / math.sqrt(state_beta(state))
    return np.column_stack([cheaper, uncertain, informative])


def candidate_fidelities(state: BocaState, x_t) -> np.ndarray:
    """Grid fidelities passing all three filter conditions, as rows."""
    mask = filter_conditions(state, x_t).all(axis=1)
    return state.fidelity_grid[mask]


def cheapest(candidates: np.ndarray, state: BocaState) -> np.ndarray:
    """Lowest cost; ties go to the closest to ``z_star``, then lexicographic order."""
    lam = state.cost(candidates)
    dist = np.linalg.norm(candidates - state.z_star, axis=1)
    keys = [candidates[:, j] for j in reversed(range(candidates.shape[1]))] + [dist, lam]
    return candidates[np.lexsort(keys)[0]]


def select_next(state: BocaState) -> FidelityDecision:
    x_t = maximize_ucb(state)
    candidates = candidate_fidelities(state, x_t)
    if len(candidates) == 0:
        return FidelityDecision(state.z_star.copy(), x_t, False)
    return FidelityDecision(cheapest(candidates, state), x_t, True)


def adapt_multiplier(c: float, top_fraction: float) -> float:
    """Halve above 75% top-fidelity queries, double below 25%, clip to [0.1, 20]."""
    if top_fraction > 0.75:
        c = c / 2.0
    elif top_fraction < 0.25:
        c = c * 2.0
    return float(min(max(c, C_MIN), C_MAX))


def update(state: BocaState, z, x, y) -> BocaState:
    """Record an observation, refit, and run the periodic c / hyperparameter updates."""
    z = np.asarray(z, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if z.size != state.p or x.size != state.d:
        raise ValueError("observation dimensions do not match the model")
    post = state.posterior
    data = post.training.append(z, x, y)
    state.n_updates += 1
    state.recent_top_flags.append(bool(np.allclose(z, state.z_star)))
    if state.adapt_threshold and state.n_updates % state.adapt_period == 0:
        frac = sum(state.recent_top_flags) / len(state.recent_top_flags)
        state.c = adapt_multiplier(state.c, frac)
    spec, noise, mean = post.spec, post.noise_variance, post.prior_mean
    if state.relearn_period and state.n_updates % state.relearn_period == 0:
        spec, noise, mean = learn_hyperparameters(data)
        state.relearn_events.append({"t": data.n + 1, "spec": spec, "noise_variance": noise, "prior_mean": mean})
    state.posterior = fit(spec, data, noise, mean)
    state.c_trace.append(state.c)
    return state
