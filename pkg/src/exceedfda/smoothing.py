"""Local-linear reconstruction of trajectories from noisy discrete data.

The fit at a point t minimizes the kernel-weighted least squares of an
affine function; the intercept has the closed form

    beta0 = (Q0*P2 - Q1*P1) / (P0*P2 - P1^2),

where P_r and Q_r are kernel-weighted moments of (t_ij - t)^r, without and
with the responses Z_ij.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    InsufficientData,
    InsufficientLocalData,
    InvalidCount,
    SingularLocalDesign,
)
from .kernels import KernelSpec


@dataclass(frozen=True)
class RawTrajectory:
    """One subject's discrete noisy observations on a closed time domain."""

    subject_id: str
    times: np.ndarray
    values: np.ndarray
    domain: tuple[float, float]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        z = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", z)
        if t.ndim != 1 or z.shape != t.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy T_start < T_end")
        if t.size and (t[0] < lo - 1e-12 or t[-1] > hi + 1e-12):
            raise ValueError("observation times outside the domain")
        if np.any(np.diff(t) < 0):
            raise ValueError("observation times must be sorted ascending")
        if np.unique(t).size < 2:
            raise ValueError("need at least 2 observations with distinct times")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(z))):
            raise ValueError("non-finite observation")

    @property
    def domain_length(self) -> float:
        return self.domain[1] - self.domain[0]


@dataclass(frozen=True)
class SmoothingConfig:
    bandwidth: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    ridge_epsilon: float = 1e-10
    max_bandwidth_expansions: int = 5

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.ridge_epsilon > 0:
            raise ValueError("ridge_epsilon must be positive")


@dataclass(frozen=True)
class SmoothedTrajectory:
    """Piecewise-linear reconstruction on a strictly increasing time grid."""

    subject_id: str
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if g.shape != v.shape or g.ndim != 1:
            raise ValueError("grid and values must match in shape")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite smoothed value")

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


def default_bandwidth(N: int, n: int, domain_length: float = 1.0) -> float:
    """Rate-based bandwidth domain_length * (log(N*n)/N)^(1/5)."""
    if N < 2 or n < 1:
        raise InvalidCount(f"need N >= 2 and n >= 1, got N={N}, n={n}")
    if not domain_length > 0:
        raise InvalidCount("domain_length must be positive")
    return domain_length * (np.log(N * n) / N) ** 0.2


def panel_beta0(t_obs, Z, t_eval, h, kernel: KernelSpec):
    """Closed-form local-linear intercepts for subjects sharing a design.

    Z has shape (n, N) (or (N,)); returns (beta0, denom) where beta0 has
    shape (n, M) (or (M,)) and denom (M,) is the shared design determinant
    P0*P2 - P1^2 used for singularity checks.
    """
    t_obs = np.asarray(t_obs, dtype=float)
    Z = np.asarray(Z, dtype=float)
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    d = t_obs[None, :] - t_eval[:, None]          # (M, N)
    w = kernel(d / h) / h
    N = t_obs.size
    wd = w * d
    p0 = w.sum(axis=1) / N
    p1 = wd.sum(axis=1) / N
    p2 = (wd * d).sum(axis=1) / N
    q0 = Z @ w.T / N                              # (n, M)
    q1 = Z @ wd.T / N
    denom = p0 * p2 - p1 * p1
    with np.errstate(divide="ignore", invalid="ignore"):
        beta0 = (q0 * p2 - q1 * p1) / denom
    return beta0, denom


def _distinct_in_window(t_obs, t, h) -> int:
    sel = np.abs(t_obs - t) <= h
    return np.unique(t_obs[sel]).size


def local_linear_fit(traj: RawTrajectory, t: float, cfg: SmoothingConfig) -> float:
    """Local-linear estimate at time t, expanding h x1.5 when the window
    is data-starved or the local design is near singular."""
    lo, hi = traj.domain
    if not lo - 1e-12 <= t <= hi + 1e-12:
        raise ValueError(f"t={t} outside domain [{lo}, {hi}]")
    h = cfg.bandwidth
    last_denom = 0.0
    saw_enough_points = False
    for _ in range(cfg.max_bandwidth_expansions + 1):
        if _distinct_in_window(traj.times, t, h) >= 2:
            saw_enough_points = True
            beta0, denom = panel_beta0(traj.times, traj.values, t, h, cfg.kernel)
            last_denom = float(denom[0])
            if last_denom >= cfg.ridge_epsilon:
                return float(beta0[0])
        h *= 1.5
    if not saw_enough_points:
        raise InsufficientLocalData(
            f"fewer than 2 distinct times near t={t} in every expanded window"
        )
    raise SingularLocalDesign(
        f"design denominator {last_denom:.3e} below ridge epsilon at t={t}"
    )


def smooth_on_grid(
    traj: RawTrajectory, grid_size: int, cfg: SmoothingConfig
) -> SmoothedTrajectory:
    """Evaluate the local-linear fit on an equispaced grid over the domain."""
    if grid_size < 2:
        raise InvalidCount("grid_size must be >= 2")
    grid = np.linspace(traj.domain[0], traj.domain[1], grid_size)
    beta0, denom = panel_beta0(traj.times, traj.values, grid, cfg.bandwidth, cfg.kernel)
    values = np.asarray(beta0, dtype=float)
    bad = ~(np.isfinite(values) & (denom >= cfg.ridge_epsilon))
    for j in np.nonzero(bad)[0]:
        try:
            values[j] = local_linear_fit(traj, grid[j], cfg)
        except (InsufficientLocalData, SingularLocalDesign) as exc:
            raise type(exc)(f"at grid point t={grid[j]}: {exc}") from exc
    return SmoothedTrajectory(traj.subject_id, grid, values)


def _select_bandwidth(candidates, errors, rel_tol=1e-9):
    # Ties broken toward the larger bandwidth.
    errors = np.asarray(errors, dtype=float)
    finite = np.isfinite(errors)
    if not finite.any():
        raise InsufficientData("every candidate bandwidth failed leave-one-out")
    best = errors[finite].min()
    tol = max(abs(best) * rel_tol, 1e-18)
    ok = finite & (errors <= best + tol)
    return float(np.max(np.asarray(candidates, dtype=float)[ok]))


def cv_bandwidth(
    traj: RawTrajectory, candidates: Sequence[float], cfg_base: SmoothingConfig
) -> float:
    """Leave-one-out cross-validated bandwidth for one trajectory."""
    cands = sorted(float(c) for c in candidates)
    if len(cands) == 0:
        raise InsufficientData("no candidate bandwidths")
    if len(cands) == 1:
        return cands[0]
    if traj.times.size < 10:
        raise InsufficientData("need >= 10 observations for cross-validation")
    errors = [
        _loo_sse(traj.times, traj.values[None, :], h, cfg_base).mean()
        for h in cands
    ]
    return _select_bandwidth(cands, errors)


def _loo_sse(t_obs, Z, h, cfg: SmoothingConfig):
    """Squared leave-one-out residuals at every observation time.

    Exploits that dropping observation j only removes the self term
    K(0)/(N h) from P0 and K(0)/(N h) * Z_j from Q0 when evaluating at t_j.
    Returns an (n, N) array with non-finite entries where the leave-one-out
    design is unusable.
    """
    t_obs = np.asarray(t_obs, dtype=float)
    Z = np.asarray(Z, dtype=float)
    N = t_obs.size
    d = t_obs[None, :] - t_obs[:, None]
    w = cfg.kernel(d / h) / h
    wd = w * d
    self_w = float(cfg.kernel(np.zeros(1))[0]) / h
    p0 = w.sum(axis=1) / N - self_w / N
    p1 = wd.sum(axis=1) / N
    p2 = (wd * d).sum(axis=1) / N
    q0 = Z @ w.T / N - (self_w / N) * Z
    q1 = Z @ wd.T / N
    denom = p0 * p2 - p1 * p1
    with np.errstate(divide="ignore", invalid="ignore"):
        pred = (q0 * p2 - q1 * p1) / denom
    res2 = (pred - Z) ** 2
    res2[:, denom < cfg.ridge_epsilon] = np.nan
    return res2


def pooled_cv_bandwidth(
    t_obs, Z, candidates: Sequence[float], cfg_base: SmoothingConfig
) -> float:
    """Bandwidth minimizing pooled leave-one-out error over a panel of
    subjects observed on a shared design (same tie-break as cv_bandwidth)."""
    cands = sorted(float(c) for c in candidates)
    if len(cands) == 0:
        raise InsufficientData("no candidate bandwidths")
    if len(cands) == 1:
        return cands[0]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    errors = []
    for h in cands:
        res2 = _loo_sse(t_obs, Z, h, cfg_base)
        errors.append(np.nan if np.isnan(res2).any() else res2.mean())
    return _select_bandwidth(cands, errors)
