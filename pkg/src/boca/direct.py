"""DIRECT (DIviding RECTangles) global maximiser on a box.

Cells live in the unit cube. A cell that has been trisected ``k`` times in
total has side ``3**-(m+1)`` along its first ``k % n`` axes and ``3**-m``
along the rest, where ``m = k // n``: splitting always happens along the
lowest-index longest side, so the level ``k`` determines the cell shape.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Partition:
    """Cells of a DIRECT run, kept in unit-cube coordinates."""

    n: int
    centers: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    values: list = field(default_factory=list)
    # level -> heap of (-value, order, cell index), only for live cells
    groups: dict = field(default_factory=dict)
    _order: itertools.count = field(default_factory=itertools.count)

    def add(self, center: np.ndarray, level: int, value: float) -> int:
        idx = len(self.centers)
        self.centers.append(center)
        self.levels.append(level)
        self.values.append(value)
        heapq.heappush(self.groups.setdefault(level, []), (-value, next(self._order), idx))
        return idx

    def side_lengths(self, level: int) -> np.ndarray:
        m, r = divmod(level, self.n)
        sides = np.full(self.n, 3.0 ** -m)
        sides[:r] /= 3.0
        return sides

    def size(self, level: int) -> float:
        return 0.5 * float(np.linalg.norm(self.side_lengths(level)))

    def cells(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Live cells as ``(lower, upper)`` corner pairs."""
        out = []
        for heap in self.groups.values():
            for _, _, idx in heap:
                half = 0.5 * self.side_lengths(self.levels[idx])
                c = self.centers[idx]
                out.append((c - half, c + half))
        return out


def _potentially_optimal(part: Partition, fmax: float, eps: float) -> list[int]:
    """Levels whose best cell lies on the upper-right hull of (size, value)."""
    # Work in minimisation form: f = -value.
    pts = []
    for level, heap in part.groups.items():
        if heap:
            pts.append((part.size(level), heap[0][0], level))
    pts.sort()
    fmin = -fmax
    # start from the best value; ties go to the larger cell
    best = min(range(len(pts)), key=lambda i: (pts[i][1], -pts[i][0]))
    hull = [pts[best]]
    for pt in pts[best + 1:]:
        while len(hull) >= 2:
            (d1, f1, _), (d2, f2, _) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the chord hull[-2] -> pt
            if (f2 - f1) * (pt[0] - d1) >= (pt[1] - f1) * (d2 - d1):
                hull.pop()
            else:
                break
        hull.append(pt)
    chosen = []
    for i, (d, f, level) in enumerate(hull):
        if i + 1 < len(hull):
            d2, f2, _ = hull[i + 1]
            slope = (f2 - f) / (d2 - d)
            if f - slope * d > fmin - eps * abs(fmin):
                continue
        chosen.append(level)
    return chosen


def _run(objective, lower, upper, budget, eps, vectorized):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("bounds must be two 1-d arrays of equal length")
    if np.any(upper <= lower):
        raise ValueError("box must be nondegenerate")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    n = lower.size
    width = upper - lower

    def evaluate(unit_pts: list[np.ndarray]) -> list[float]:
        raw = lower + np.asarray(unit_pts) * width
        if vectorized:
            vals = np.asarray(objective(raw), dtype=float).reshape(len(unit_pts))
        else:
            vals = np.array([float(objective(x)) for x in raw])
        if np.any(np.isnan(vals)):
            raise ValueError("objective returned NaN")
        return vals.tolist()

    part = Partition(n)
    center = np.full(n, 0.5)
    v0 = evaluate([center])[0]
    part.add(center, 0, v0)
    nfev = 1
    best_idx = 0

    while nfev + 2 <= budget:
        levels = _potentially_optimal(part, part.values[best_idx], eps)
        splits = []
        for level in levels:
            if nfev + 2 * (len(splits) + 1) > budget:
                break
            _, _, idx = heapq.heappop(part.groups[level])
            if not part.groups[level]:
                del part.groups[level]
            splits.append(idx)
        if not splits:
            break
        new_pts, meta = [], []
        for idx in splits:
            level = part.levels[idx]
            axis = level % n
            delta = part.side_lengths(level)[axis] / 3.0
            c = part.centers[idx]
            for sign in (-1.0, 1.0):
                q = c.copy()
                q[axis] += sign * delta
                new_pts.append(q)
            meta.append(idx)
        vals = evaluate(new_pts)
        nfev += len(new_pts)
        for k, idx in enumerate(meta):
            level = part.levels[idx] + 1
            # parent keeps its center and shrinks
            part.levels[idx] = level
            heapq.heappush(part.groups.setdefault(level, []), (-part.values[idx], next(part._order), idx))
            for j in (2 * k, 2 * k + 1):
                new = part.add(new_pts[j], level, vals[j])
                if vals[j] > part.values[best_idx]:
                    best_idx = new

    x_best = lower + part.centers[best_idx] * width
    return x_best, part.values[best_idx], nfev, part


def _as_bounds(bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] == 0:
        raise ValueError("bounds must be a nonempty sequence of (low, high) pairs")
    return bounds


def maximize(objective, bounds, budget: int = 1000, eps: float = 1e-4, vectorized: bool = False):
    """Maximise ``objective`` over the box ``bounds`` with at most ``budget`` calls.

    ``bounds`` is a sequence of ``(low, high)`` pairs. With ``vectorized=True``
    the objective receives an ``(m, n)`` array of points and returns ``m``
    values; otherwise it is called once per point.

    Returns ``(x_best, value_best)``; the box center is always evaluated first.
    """
    bounds = _as_bounds(bounds)
    x, v, _, _ = _run(objective, bounds[:, 0], bounds[:, 1], budget, eps, vectorized)
    return x, v


def partition(objective, bounds, budget: int = 1000, eps: float = 1e-4, vectorized: bool = False) -> Partition:
    """Run DIRECT and return the final cell partition (for inspection)."""
    bounds = _as_bounds(bounds)
    return _run(objective, bounds[:, 0], bounds[:, 1], budget, eps, vectorized)[3]
