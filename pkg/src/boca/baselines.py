"""Single-fidelity baselines that only ever query the top fidelity."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from . import direct
from .gp import GPPosterior, predict_target
from .policy import BocaState, maximize_ucb


def gp_ucb_select(state: BocaState) -> np.ndarray:
    """GP-UCB: maximise the same UCB as BOCA and always pair it with ``z_star``."""
    return maximize_ucb(state)


def expected_improvement(mu, sigma, best: float):
    """Noiseless EI for maximisation; reduces to ``max(0, mu - best)`` where ``sigma == 0``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gain = mu - best
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(sigma > 0, gain / sigma, 0.0)
        ei = np.where(sigma > 0, gain * norm.cdf(u) + sigma * norm.pdf(u), np.maximum(gain, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def best_top_observation(posterior: GPPosterior, z_star) -> float:
    data = posterior.training
    at_top = np.all(np.isclose(data.Z, np.asarray(z_star, dtype=float)), axis=1)
    if not at_top.any():
        raise ValueError("GP-EI needs at least one observation at the top fidelity")
    return float(data.y[at_top].max())


def gp_ei_select(posterior: GPPosterior, best_observed: float, z_star, budget: int = 1000) -> np.ndarray:
    """Maximise expected improvement over the best observed top-fidelity value."""
    best_top_observation(posterior, z_star)
    d = posterior.spec.d

    def acquisition(X):
        mu, sigma = predict_target(posterior, X, z_star)
        return expected_improvement(mu, sigma, best_observed)

    x, _ = direct.maximize(acquisition, [(0.0, 1.0)] * d, budget=budget, vectorized=True)
    return x
