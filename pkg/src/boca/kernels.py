"""Squared-exponential kernels on the product space Z x X.

Points of the joint space are stored as concatenated rows ``[z, x]`` with the
``p`` fidelity coordinates first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class KernelSpec:
    """Hyperparameters of ``scale * phi_Z(|z - z'|) * phi_X(|x - x'|)``.

    Each radial factor is an SE kernel whose argument is the Euclidean norm of
    the coordinate differences divided by their per-dimension bandwidths.
    """

    scale: float
    domain_bandwidths: tuple[float, ...]
    fidelity_bandwidths: tuple[float, ...]
    family: str = "se"

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "domain_bandwidths", tuple(float(h) for h in self.domain_bandwidths))
        object.__setattr__(self, "fidelity_bandwidths", tuple(float(h) for h in self.fidelity_bandwidths))
        if self.family != "se":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not self.scale > 0:
            raise ValueError(f"kernel scale must be positive, got {self.scale}")
        if any(not h > 0 for h in self.domain_bandwidths + self.fidelity_bandwidths):
            raise ValueError("all bandwidths must be positive")

    @property
    def d(self) -> int:
        return len(self.domain_bandwidths)

    @property
    def p(self) -> int:
        return len(self.fidelity_bandwidths)

    @property
    def bandwidths(self) -> np.ndarray:
        """Bandwidths in joint ``[z, x]`` order."""
        return np.array(self.fidelity_bandwidths + self.domain_bandwidths)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "domain_bandwidths": list(self.domain_bandwidths),
            "fidelity_bandwidths": list(self.fidelity_bandwidths),
        }


def se_radial(r, h):
    """SE radial profile ``exp(-r^2 / (2 h^2))``."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ValueError("bandwidth must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial distance must be nonnegative")
    out = np.exp(-0.5 * (r / h) ** 2)
    return float(out) if out.ndim == 0 else out


def _scaled_sqdist(a: np.ndarray, b: np.ndarray, bandwidths: np.ndarray) -> np.ndarray:
    return cdist(a / bandwidths, b / bandwidths, "sqeuclidean")


def gram(a, b, spec: KernelSpec) -> np.ndarray:
    """Cross-covariance matrix between two batches of joint points."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    width = spec.p + spec.d
    if a.shape[1] != width or b.shape[1] != width:
        raise ValueError(f"expected points with {width} coordinates, got {a.shape[1]} and {b.shape[1]}")
    return spec.scale * np.exp(-0.5 * _scaled_sqdist(a, b, spec.bandwidths))


def product_kernel(a, b, spec: KernelSpec) -> float:
    """Kernel value between two joint points ``[z, x]``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != spec.p + spec.d or b.size != spec.p + spec.d:
        raise ValueError(f"expected {spec.p} + {spec.d} coordinates, got {a.size} and {b.size}")
    p = spec.p
    hz = np.array(spec.fidelity_bandwidths)
    hx = np.array(spec.domain_bandwidths)
    rz = np.linalg.norm((a[:p] - b[:p]) / hz) if p else 0.0
    rx = np.linalg.norm((a[p:] - b[p:]) / hx)
    return spec.scale * se_radial(rz, 1.0) * se_radial(rx, 1.0)


def information_gap(z, z_star, spec: KernelSpec):
    """``sqrt(1 - phi_Z(|z - z_star|)^2)``; accepts one point or a batch of rows."""
    z = np.asarray(z, dtype=float)
    z_star = np.asarray(z_star, dtype=float).ravel()
    if z_star.size != spec.p or z.shape[-1] != spec.p:
        raise ValueError(f"fidelity points must have {spec.p} coordinates")
    hz = np.array(spec.fidelity_bandwidths)
    r2 = (((z - z_star) / hz) ** 2).sum(-1)
    # 1 - exp(-r2) computed without cancellation near z_star
    out = np.sqrt(-np.expm1(-r2))
    return float(out) if out.ndim == 0 else out
