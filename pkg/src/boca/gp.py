"""Gaussian-process regression over the joint fidelity/domain space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import direct
from .kernels import KernelSpec, gram

JITTER_START = 1e-10
JITTER_MAX = 1e-4
NEGATIVE_VARIANCE_TOL = -1e-10


class GPError(RuntimeError):
    """Numerical breakdown inside GP inference."""


class FactorizationError(GPError):
    """``K + noise * I`` could not be factorised even with maximal jitter."""


@dataclass(frozen=True)
class TrainingSet:
    """Observations ``(z_i, x_i, y_i)``; ``Z`` is ``(n, p)``, ``X`` is ``(n, d)``."""

    Z: np.ndarray
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if Z.ndim != 2 or X.ndim != 2:
            raise ValueError("Z and X must be 2-d arrays")
        if not (len(Z) == len(X) == len(y)):
            raise ValueError(f"length mismatch: {len(Z)} fidelities, {len(X)} points, {len(y)} values")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def empty(cls, p: int, d: int) -> "TrainingSet":
        return cls(np.empty((0, p)), np.empty((0, d)), np.empty(0))

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def points(self) -> np.ndarray:
        return np.hstack([self.Z, self.X])

    def append(self, z, x, y) -> "TrainingSet":
        z = np.asarray(z, dtype=float).reshape(1, self.p)
        x = np.asarray(x, dtype=float).reshape(1, self.d)
        return TrainingSet(np.vstack([self.Z, z]), np.vstack([self.X, x]), np.append(self.y, float(y)))


def jittered_cholesky(A: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor of ``A``, escalating diagonal jitter on failure."""
    try:
        return cholesky(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START
    eye = np.eye(len(A))
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return cholesky(A + jitter * scale * eye, lower=True)
        except np.linalg.LinAlgError:
            jitter *= 10
    raise FactorizationError(f"matrix of size {len(A)} not positive definite after jitter {JITTER_MAX}*scale")


@dataclass(frozen=True)
class GPPosterior:
    spec: KernelSpec
    noise_variance: float
    prior_mean: float
    training: TrainingSet
    factor: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def predict(self, z, x):
        return predict(self, z, x)

    def predict_target(self, x, z_star):
        return predict_target(self, x, z_star)


def fit(spec: KernelSpec, data: TrainingSet, noise_variance: float, prior_mean: float = 0.0) -> GPPosterior:
    if not noise_variance > 0:
        raise ValueError("noise variance must be positive")
    if data.p != spec.p or data.d != spec.d:
        raise ValueError(f"data has (p, d) = ({data.p}, {data.d}), kernel expects ({spec.p}, {spec.d})")
    if data.n == 0:
        return GPPosterior(spec, float(noise_variance), float(prior_mean), data, np.empty((0, 0)), np.empty(0))
    U = data.points
    K = gram(U, U, spec)
    K[np.diag_indices_from(K)] += noise_variance
    L = jittered_cholesky(K, spec.scale)
    resid = data.y - prior_mean
    alpha = solve_triangular(L.T, solve_triangular(L, resid, lower=True), lower=False)
    return GPPosterior(spec, float(noise_variance), float(prior_mean), data, L, alpha)


def _rows(a: np.ndarray, width: int) -> np.ndarray:
    if a.shape[-1:] != (width,):
        raise ValueError(f"expected points with {width} coordinates, got shape {a.shape}")
    if width == 0:
        return np.empty((len(a) if a.ndim > 1 else 1, 0))
    return a.reshape(-1, width)


def _joint(z, x, spec: KernelSpec) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    single = z.ndim <= 1 and x.ndim <= 1
    z2 = _rows(z, spec.p)
    x2 = _rows(x, spec.d)
    m = max(len(z2), len(x2))
    if len(z2) not in (1, m) or len(x2) not in (1, m):
        raise ValueError(f"cannot pair {len(z2)} fidelities with {len(x2)} points")
    U = np.hstack([np.broadcast_to(z2, (m, spec.p)), np.broadcast_to(x2, (m, spec.d))])
    return U, single


def predict(post: GPPosterior, z, x):
    """Posterior mean and standard deviation of ``g`` at ``(z, x)``.

    Accepts a single point (returns floats) or batches of rows, where a single
    fidelity broadcasts against many domain points and vice versa.
    """
    U, single = _joint(z, x, post.spec)
    if post.training.n == 0:
        mean = np.full(len(U), post.prior_mean)
        var = np.full(len(U), post.spec.scale)
    else:
        k = gram(post.training.points, U, post.spec)
        mean = post.prior_mean + k.T @ post.weights
        v = solve_triangular(post.factor, k, lower=True)
        var = post.spec.scale - (v * v).sum(0)
    if np.any(var < NEGATIVE_VARIANCE_TOL * post.spec.scale):
        raise GPError(f"negative predictive variance {var.min():.3e}")
    std = np.sqrt(np.maximum(var, 0.0))
    if single:
        return float(mean[0]), float(std[0])
    return mean, std


def predict_target(post: GPPosterior, x, z_star):
    """Mean and standard deviation of the target slice ``g(z_star, .)``."""
    return predict(post, z_star, x)


def log_marginal_likelihood(spec: KernelSpec, data: TrainingSet, noise_variance: float, prior_mean: float = 0.0) -> float:
    if data.n == 0:
        raise ValueError("log marginal likelihood needs at least one observation")
    post = fit(spec, data, noise_variance, prior_mean)
    resid = data.y - prior_mean
    return float(
        -0.5 * resid @ post.weights
        - np.log(np.diag(post.factor)).sum()
        - 0.5 * data.n * math.log(2 * math.pi)
    )


@dataclass(frozen=True)
class HyperBounds:
    """Log-space search box ``[log scale, log h_X..., log h_Z..., log noise]``."""

    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def default(cls, data: TrainingSet) -> "HyperBounds":
        var = float(np.var(data.y))
        lo = [math.log(1e-3 * var)] + [math.log(0.01)] * (data.d + data.p) + [math.log(1e-6 * var)]
        hi = [math.log(1e3 * var)] + [math.log(10.0)] * (data.d + data.p) + [math.log(var)]
        return cls(np.array(lo), np.array(hi))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta: np.ndarray) -> bool:
        return bool(np.all(theta >= self.lower - 1e-12) and np.all(theta <= self.upper + 1e-12))


def unpack(theta: np.ndarray, d: int, p: int) -> tuple[KernelSpec, float]:
    theta = np.exp(np.asarray(theta, dtype=float))
    spec = KernelSpec(theta[0], tuple(theta[1:1 + d]), tuple(theta[1 + d:1 + d + p]))
    return spec, float(theta[-1])


def pack(spec: KernelSpec, noise_variance: float) -> np.ndarray:
    return np.log([spec.scale, *spec.domain_bandwidths, *spec.fidelity_bandwidths, noise_variance])


def learn_hyperparameters(data: TrainingSet, bounds: HyperBounds | None = None, budget: int = 500):
    """Maximise the evidence over scale, bandwidths and noise; mean is the median.

    Returns ``(spec, noise_variance, prior_mean)``.
    """
    if data.n < 2:
        raise ValueError("need at least two observations to learn hyperparameters")
    if not np.ptp(data.y) > 0:
        raise ValueError("observations are constant; hyperparameters are not identifiable")
    bounds = bounds or HyperBounds.default(data)
    prior_mean = float(np.median(data.y))
    d, p = data.d, data.p

    def objective(theta):
        spec, noise = unpack(theta, d, p)
        try:
            return log_marginal_likelihood(spec, data, noise, prior_mean)
        except GPError:
            return -1e300

    theta, _ = direct.maximize(objective, np.column_stack([bounds.lower, bounds.upper]), budget=budget)
    spec, noise = unpack(theta, d, p)
    return spec, noise, prior_mean
