"""2-Wasserstein distance and projection onto the space of quantile functions.

Distances are L2 distances between quantile functions on [0, 1], evaluated
by trapezoid quadrature on an equispaced probability grid. Arbitrary (non-
monotone) candidates are mapped back into quantile space by isotonic
regression (pool adjacent violators) followed by clipping to a box, which
is the exact L2 projection onto the intersection of the two constraint sets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, LengthMismatch
from .exceedance import QuantileProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawQuantileCandidate:
    """A possibly non-monotone function on a probability grid."""

    prob_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "prob_grid", p)
        object.__setattr__(self, "values", v)
        if p.shape != v.shape or p.ndim != 1 or p.size < 2:
            raise ValueError("prob_grid and values must be matching 1-d arrays")
        if not np.all(np.isfinite(v)):
            raise ValueError("candidate values must be finite")


def wasserstein_distance(
    q1: QuantileProfile, q2: QuantileProfile, allow_resample: bool = True
) -> float:
    """sqrt of the trapezoid approximation of the integral of (Q1 - Q2)^2."""
    p1, p2 = q1.prob_grid, q2.prob_grid
    if p1.shape == p2.shape and np.array_equal(p1, p2):
        grid, a, b = p1, q1.q_values, q2.q_values
    elif allow_resample:
        grid = p1 if p1.size >= p2.size else p2
        a = np.interp(grid, p1, q1.q_values)
        b = np.interp(grid, p2, q2.q_values)
    else:
        raise GridMismatch("quantile profiles live on different probability grids")
    d2 = np.trapezoid((a - b) ** 2, grid)
    return float(np.sqrt(max(d2, 0.0)))


def weighted_quantile_mean(
    profiles: list[QuantileProfile], weights
) -> RawQuantileCandidate:
    """(1/n) * sum_i w_i Q_i on the shared probability grid; the result can
    be non-monotone because Frechet weights may be negative."""
    weights = np.asarray(weights, dtype=float)
    if len(profiles) != weights.size:
        raise LengthMismatch(
            f"{len(profiles)} profiles but {weights.size} weights"
        )
    if len(profiles) == 0:
        raise LengthMismatch("need at least one profile")
    grid = profiles[0].prob_grid
    for p in profiles[1:]:
        if p.prob_grid.shape != grid.shape or not np.array_equal(p.prob_grid, grid):
            raise GridMismatch("profiles must share a probability grid")
    stacked = np.stack([p.q_values for p in profiles])
    return RawQuantileCandidate(grid, weights @ stacked / weights.size)


def pava(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators: the L2 projection onto nondecreasing
    sequences with equal weights."""
    y = np.asarray(y, dtype=float)
    vals = []
    counts = []
    for v in y:
        vals.append(float(v))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return np.repeat(vals, counts)


def project_to_quantile_space(
    candidate: RawQuantileCandidate, box: tuple[float, float]
) -> QuantileProfile:
    """Project onto {nondecreasing sequences with values in box}: isotonic
    regression, then componentwise clipping (exact for this intersection)."""
    u_min, u_max = box
    if not u_min < u_max:
        raise ValueError("box must satisfy u_min < u_max")
    v = candidate.values
    violation = np.maximum(
        np.maximum.accumulate(v) - v, 0.0
    ).max(initial=0.0)
    if violation > 0.1 * (u_max - u_min):
        logger.info(
            "pre-projection monotonicity violation %.3g exceeds 10%% of the box range",
            violation,
        )
    projected = np.clip(pava(v), u_min, u_max)
    return QuantileProfile(candidate.prob_grid, projected)
