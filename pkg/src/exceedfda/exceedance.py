"""Exceedance profiles of a reconstructed trajectory.

A trajectory Y on a time domain T induces, for each threshold u, the
normalized Lebesgue measure of {t : Y(t) >= u}. Indexed by u this is a
survival-like function S; F = 1 - S behaves like a distribution function
with quantile function Q, density f (by difference quotients), and hazard
analogue f / (1 - F), the force of centrality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DeltaOutOfRange,
    EmptyCentralityDomain,
    EmptyTrajectory,
    GridMismatch,
    InvalidCount,
)
from .smoothing import SmoothedTrajectory


@dataclass(frozen=True)
class ThresholdGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("threshold grid needs at least 3 points")
        if np.any(np.diff(v) <= 0):
            raise ValueError("threshold grid must be strictly increasing")

    @property
    def u_min(self) -> float:
        return float(self.values[0])

    @property
    def u_max(self) -> float:
        return float(self.values[-1])

    @property
    def range(self) -> float:
        return self.u_max - self.u_min


def make_threshold_grid(u_min: float, u_max: float, size: int = 201) -> ThresholdGrid:
    return ThresholdGrid(np.linspace(u_min, u_max, size))


@dataclass(frozen=True)
class ExceedanceProfile:
    grid: ThresholdGrid
    s_values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s_values, dtype=float)
        object.__setattr__(self, "s_values", s)
        if s.shape != self.grid.values.shape:
            raise ValueError("s_values must match the threshold grid")
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise ValueError("exceedance values must lie in [0, 1]")
        if np.any(np.diff(s) > 1e-12):
            raise ValueError("exceedance values must be nonincreasing")


@dataclass(frozen=True)
class DistributionProfile:
    grid: ThresholdGrid
    f_values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f_values, dtype=float)
        object.__setattr__(self, "f_values", f)
        if f.shape != self.grid.values.shape:
            raise ValueError("f_values must match the threshold grid")
        if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
            raise ValueError("distribution values must lie in [0, 1]")
        if np.any(np.diff(f) < -1e-12):
            raise ValueError("distribution values must be nondecreasing")


@dataclass(frozen=True)
class QuantileProfile:
    prob_grid: np.ndarray
    q_values: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob_grid, dtype=float)
        q = np.asarray(self.q_values, dtype=float)
        object.__setattr__(self, "prob_grid", p)
        object.__setattr__(self, "q_values", q)
        if p.shape != q.shape or p.ndim != 1 or p.size < 3:
            raise ValueError("prob_grid and q_values must be matching 1-d arrays")
        if abs(p[0]) > 1e-12 or abs(p[-1] - 1) > 1e-12:
            raise ValueError("prob_grid must span [0, 1]")
        if np.any(np.diff(q) < -1e-9):
            raise ValueError("quantile values must be nondecreasing")


@dataclass(frozen=True)
class DensityProfile:
    grid: ThresholdGrid
    d_values: np.ndarray
    delta: float

    def __post_init__(self):
        d = np.asarray(self.d_values, dtype=float)
        object.__setattr__(self, "d_values", d)
        if d.shape != self.grid.values.shape:
            raise ValueError("d_values must match the threshold grid")
        if np.any(d < 0):
            raise ValueError("density values must be nonnegative")


@dataclass(frozen=True)
class CentralityProfile:
    grid: np.ndarray
    h_values: np.ndarray
    eps_tail: float

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        h = np.asarray(self.h_values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "h_values", h)
        if g.shape != h.shape:
            raise ValueError("grid and h_values must match")
        if np.any(h < 0):
            raise ValueError("force of centrality must be nonnegative")


def superlevel_measures(times, values, thresholds):
    """Exact Lebesgue measure of {t : y(t) >= u} for the piecewise-linear
    interpolant, per threshold.

    ``values`` may be (M,) or (n, M); returns (G,) or (n, G). The >=
    convention only matters on flat segments, which count fully when at or
    above the threshold.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    squeeze = values.ndim == 1
    V = np.atleast_2d(values)
    seg_len = np.diff(times)                       # (M-1,)
    a, b = V[:, :-1], V[:, 1:]
    lo = np.minimum(a, b)[:, None, :]              # (n, 1, M-1)
    hi = np.maximum(a, b)[:, None, :]
    u = thresholds[None, :, None]
    span = hi - lo
    flat = span <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.clip((hi - u) / np.where(flat, 1.0, span), 0.0, 1.0)
    frac = np.where(flat, (lo >= u).astype(float), frac)
    meas = frac @ seg_len                          # (n, G)
    return meas[0] if squeeze else meas


def exceedance_function(
    traj: SmoothedTrajectory, grid: ThresholdGrid
) -> ExceedanceProfile:
    """Exceedance profile S(u) of the piecewise-linear trajectory."""
    if traj.grid.size < 2:
        raise EmptyTrajectory("trajectory needs at least 2 grid points")
    total = traj.grid[-1] - traj.grid[0]
    s = superlevel_measures(traj.grid, traj.values, grid.values) / total
    return ExceedanceProfile(grid, np.clip(s, 0.0, 1.0))


def distribution_from_exceedance(exc: ExceedanceProfile) -> DistributionProfile:
    return DistributionProfile(exc.grid, 1.0 - exc.s_values)


def quantile_values(u_grid, f_values, probs):
    """Left-continuous generalized inverse inf{u : F(u) >= q} of a
    piecewise-linear nondecreasing F, evaluated at each prob."""
    u = np.asarray(u_grid, dtype=float)
    F = np.asarray(f_values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    q = np.empty_like(probs)
    idx = np.searchsorted(F, probs, side="left")
    at_left = idx == 0
    beyond = idx == F.size                         # q above F(u_max): clamp
    q[at_left] = u[0]
    q[beyond] = u[-1]
    mid = ~(at_left | beyond)
    i = idx[mid]
    dF = F[i] - F[i - 1]
    q[mid] = u[i - 1] + (probs[mid] - F[i - 1]) * (u[i] - u[i - 1]) / dF
    return q


def quantile_from_distribution(
    dist: DistributionProfile, prob_grid_size: int = 201
) -> QuantileProfile:
    if prob_grid_size < 3:
        raise InvalidCount("prob_grid_size must be >= 3")
    probs = np.linspace(0.0, 1.0, prob_grid_size)
    return QuantileProfile(probs, quantile_values(dist.grid.values, dist.f_values, probs))


def default_delta(N: int, n: int, range_: float) -> float:
    """range * (log(N*n)/N)^(1/5), capped at range/4."""
    if N < 2 or n < 1:
        raise InvalidCount(f"need N >= 2 and n >= 1, got N={N}, n={n}")
    if not range_ > 0:
        raise InvalidCount("range must be positive")
    return min(range_ * (np.log(N * n) / N) ** 0.2, range_ / 4.0)


def exceedance_density(dist: DistributionProfile, delta: float) -> DensityProfile:
    """Difference-quotient density with one-sided boundary formulas."""
    u = dist.grid.values
    u_min, u_max = dist.grid.u_min, dist.grid.u_max
    if not 0 < delta < (u_max - u_min) / 2:
        raise DeltaOutOfRange(
            f"delta={delta} not in (0, {(u_max - u_min) / 2})"
        )
    F = lambda x: np.interp(x, u, dist.f_values)
    d = (F(u + delta) - F(u - delta)) / (2 * delta)
    left = u < u_min + delta
    right = u > u_max - delta
    d[left] = (F(u[left] + delta) - F(np.full(left.sum(), u_min))) / (
        (u[left] - u_min) + delta
    )
    d[right] = (F(np.full(right.sum(), u_max)) - F(u[right] - delta)) / (
        (u_max - u[right]) + delta
    )
    return DensityProfile(dist.grid, np.maximum(d, 0.0), delta)


def force_of_centrality(
    density: DensityProfile, dist: DistributionProfile, eps_tail: float = 0.05
) -> CentralityProfile:
    """h(u) = f(u) / (1 - F(u)) on the thresholds with 1 - F(u) >= eps_tail."""
    if not 0 < eps_tail < 1:
        raise ValueError("eps_tail must be in (0, 1)")
    if density.grid.values.shape != dist.grid.values.shape or not np.array_equal(
        density.grid.values, dist.grid.values
    ):
        raise GridMismatch("density and distribution profiles must share a grid")
    surv = 1.0 - dist.f_values
    keep = surv >= eps_tail
    if not keep.any():
        raise EmptyCentralityDomain(
            f"no threshold satisfies 1 - F(u) >= {eps_tail}"
        )
    return CentralityProfile(
        dist.grid.values[keep], density.d_values[keep] / surv[keep], eps_tail
    )


@dataclass(frozen=True)
class ExceedanceChain:
    """All five profiles of one trajectory on a shared threshold grid."""

    exceedance: ExceedanceProfile
    distribution: DistributionProfile
    quantile: QuantileProfile
    density: DensityProfile
    centrality: CentralityProfile


def exceedance_chain(
    traj: SmoothedTrajectory,
    grid: ThresholdGrid,
    prob_grid_size: int = 201,
    delta: float | None = None,
    eps_tail: float = 0.05,
) -> ExceedanceChain:
    """Run the full per-trajectory pipeline S -> F -> Q, f, h."""
    exc = exceedance_function(traj, grid)
    dist = distribution_from_exceedance(exc)
    quant = quantile_from_distribution(dist, prob_grid_size)
    if delta is None:
        delta = default_delta(traj.grid.size, 1, grid.range)
    dens = exceedance_density(dist, delta)
    cent = force_of_centrality(dens, dist, eps_tail)
    return ExceedanceChain(exc, dist, quant, dens, cent)
