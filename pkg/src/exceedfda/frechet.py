"""Global and local Frechet regression of exceedance quantile profiles.

Responses are quantile profiles on a shared probability grid; predictors
are Euclidean. The global estimator uses the linear-regression-like weights

    s_i(x) = 1 + (X_i - Xbar)' Sigma^{-1} (x - Xbar),

with the 1/n covariance convention; the local estimator (scalar predictors
only) uses local-linear weights built from kernel moments. The weighted
mean of the response quantile profiles is then projected back onto quantile
space, and all other conditional profiles follow by inversion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLocalDesign,
    ExtrapolationWarning,
    InvalidCount,
    LengthMismatch,
    SingularCovariance,
    ThresholdOutOfRange,
)
from .exceedance import (
    CentralityProfile,
    DensityProfile,
    DistributionProfile,
    ExceedanceProfile,
    QuantileProfile,
    ThresholdGrid,
    default_delta,
    exceedance_density,
    force_of_centrality,
    make_threshold_grid,
)
from .kernels import KernelSpec
from .wasserstein import RawQuantileCandidate, pava, project_to_quantile_space

CONDITION_NUMBER_CAP = 1e10
_SIGMA0_RIDGE = 1e-12


@dataclass(frozen=True)
class ConditionalExceedance:
    """The conditional profiles at one query covariate value."""

    x: np.ndarray | float
    quantile: QuantileProfile
    distribution: DistributionProfile
    exceedance: ExceedanceProfile
    density: DensityProfile
    centrality: CentralityProfile


def global_weights(X: np.ndarray, x) -> np.ndarray:
    """Empirical global Frechet weights for each sample row at query x."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1:
        X = X.T
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n, p = X.shape
    if p < 1:
        raise InvalidCount("need at least one covariate column")
    if n < p + 2:
        raise InvalidCount(f"need n >= p + 2 rows, got n={n}, p={p}")
    xbar = X.mean(axis=0)
    centered = X - xbar
    sigma = centered.T @ centered / n
    if np.linalg.cond(sigma) > CONDITION_NUMBER_CAP:
        raise SingularCovariance(
            "covariate covariance is numerically singular "
            f"(condition number above {CONDITION_NUMBER_CAP:.0e})"
        )
    return 1.0 + centered @ np.linalg.solve(sigma, x - xbar)


def local_weights(xs, x: float, b: float, kernel: KernelSpec) -> np.ndarray:
    """Local-linear Frechet weights at a scalar query x with bandwidth b.

    When the local design is degenerate (a single support point inside the
    kernel window) the weights fall back to the local-constant form, which
    preserves the identity (1/n) sum s_i = 1 and makes the estimator
    interpolate the response at isolated design points as b -> 0.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("local regression requires scalar covariates")
    if not b > 0:
        raise ValueError("bandwidth must be positive")
    d = xs - x
    kb = kernel(d / b) / b
    u0 = kb.mean()
    if u0 <= 0.0:
        raise DegenerateLocalDesign(f"no kernel mass near x={x} with b={b}")
    u1 = (kb * d).mean()
    u2 = (kb * d * d).mean()
    sigma0 = u0 * u2 - u1 * u1
    if sigma0 <= _SIGMA0_RIDGE * max(u0 * u2, u0 * u0 * b * b, 1e-300):
        return kb / u0
    return kb * (u2 - u1 * d) / sigma0


def default_local_bandwidth(n: int, x_sd: float) -> float:
    """Rule-of-thumb bandwidth 1.06 * sd * n^(-1/5)."""
    if n < 5:
        raise InvalidCount("need n >= 5")
    if not x_sd > 0:
        raise InvalidCount("x_sd must be positive")
    return 1.06 * x_sd * n ** (-0.2)


def _stack_profiles(profiles: list[QuantileProfile]):
    grid = profiles[0].prob_grid
    for p in profiles[1:]:
        if p.prob_grid.shape != grid.shape or not np.array_equal(p.prob_grid, grid):
            raise LengthMismatch("profiles must share a probability grid")
    return grid, np.stack([p.q_values for p in profiles])


@dataclass(frozen=True)
class GlobalFrechetModel:
    X: np.ndarray
    prob_grid: np.ndarray
    responses: np.ndarray          # (n, P) stacked quantile values
    box: tuple[float, float]
    threshold_grid_size: int = 201
    n_obs_per_subject: int | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def mean_x(self) -> np.ndarray:
        return self.X.mean(axis=0)

    @property
    def cov_x(self) -> np.ndarray:
        c = self.X - self.mean_x
        return c.T @ c / self.n

    def weights(self, x) -> np.ndarray:
        return global_weights(self.X, x)


@dataclass(frozen=True)
class LocalFrechetModel:
    xs: np.ndarray
    prob_grid: np.ndarray
    responses: np.ndarray
    bandwidth: float
    box: tuple[float, float]
    kernel: KernelSpec = field(default_factory=KernelSpec)
    threshold_grid_size: int = 201
    n_obs_per_subject: int | None = None

    @property
    def n(self) -> int:
        return self.xs.size

    def weights(self, x) -> np.ndarray:
        x = float(np.asarray(x).reshape(()))
        lo = self.xs.min() - self.bandwidth
        hi = self.xs.max() + self.bandwidth
        if not lo <= x <= hi:
            warnings.warn(
                f"query x={x} outside [{lo}, {hi}]", ExtrapolationWarning,
                stacklevel=2,
            )
        return local_weights(self.xs, x, self.bandwidth, self.kernel)


def fit_global(
    profiles: list[QuantileProfile],
    X,
    box: tuple[float, float] | None = None,
    threshold_grid_size: int = 201,
    n_obs_per_subject: int | None = None,
) -> GlobalFrechetModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1:
        X = X.T
    grid, Q = _stack_profiles(profiles)
    if Q.shape[0] != X.shape[0]:
        raise LengthMismatch(
            f"{Q.shape[0]} profiles but {X.shape[0]} covariate rows"
        )
    global_weights(X, X.mean(axis=0))  # surface singular covariance at fit time
    if box is None:
        box = (float(Q.min()), float(Q.max()))
    return GlobalFrechetModel(X, grid, Q, box, threshold_grid_size, n_obs_per_subject)


def fit_local(
    profiles: list[QuantileProfile],
    xs,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    box: tuple[float, float] | None = None,
    threshold_grid_size: int = 201,
    n_obs_per_subject: int | None = None,
) -> LocalFrechetModel:
    xs = np.asarray(xs, dtype=float).ravel()
    grid, Q = _stack_profiles(profiles)
    if Q.shape[0] != xs.size:
        raise LengthMismatch(f"{Q.shape[0]} profiles but {xs.size} covariates")
    if kernel is None:
        kernel = KernelSpec()
    if bandwidth is None:
        sd = float(xs.std())
        if sd <= 0:
            raise DegenerateLocalDesign("all covariate values identical")
        bandwidth = default_local_bandwidth(xs.size, sd)
    if box is None:
        box = (float(Q.min()), float(Q.max()))
    return LocalFrechetModel(
        xs, grid, Q, bandwidth, box, kernel, threshold_grid_size, n_obs_per_subject
    )


def predict_quantile(model, x) -> QuantileProfile:
    """Weighted mean of the response profiles, projected onto quantile space."""
    w = model.weights(x)
    raw = RawQuantileCandidate(model.prob_grid, w @ model.responses / model.n)
    return project_to_quantile_space(raw, model.box)


def distribution_from_quantile(
    quantile: QuantileProfile, grid: ThresholdGrid
) -> DistributionProfile:
    """Generalized inverse of a nondecreasing quantile profile on a
    threshold grid: F(u) = sup{q : Q(q) <= u}."""
    Q = quantile.q_values
    p = quantile.prob_grid
    u = grid.values
    idx = np.searchsorted(Q, u, side="right")
    F = np.empty_like(u)
    below = idx == 0
    above = idx == Q.size
    F[below] = 0.0
    F[above] = 1.0
    mid = ~(below | above)
    i = idx[mid]
    dQ = Q[i] - Q[i - 1]
    F[mid] = p[i - 1] + (u[mid] - Q[i - 1]) * (p[i] - p[i - 1]) / dQ
    return DistributionProfile(grid, np.clip(F, 0.0, 1.0))


def predict_conditional(
    model,
    x,
    density_delta: float | None = None,
    eps_tail: float = 0.05,
    threshold_grid: ThresholdGrid | None = None,
) -> ConditionalExceedance:
    """Full conditional chain Q -> F -> S -> f -> h at a query point."""
    quantile = predict_quantile(model, x)
    if threshold_grid is None:
        threshold_grid = make_threshold_grid(
            model.box[0], model.box[1], model.threshold_grid_size
        )
    dist = distribution_from_quantile(quantile, threshold_grid)
    exc = ExceedanceProfile(threshold_grid, 1.0 - dist.f_values)
    if density_delta is None:
        N_ref = model.n_obs_per_subject or max(model.n, 2)
        density_delta = default_delta(N_ref, model.n, threshold_grid.range)
    dens = exceedance_density(dist, density_delta)
    cent = force_of_centrality(dens, dist, eps_tail)
    return ConditionalExceedance(x, quantile, dist, exc, dens, cent)


def predict_quantile_batch(model, xs) -> np.ndarray:
    """Projected conditional quantile values for many query points; rows of
    the returned (len(xs), P) array match predict_quantile elementwise."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty((xs.shape[0], model.prob_grid.size))
    for k in range(xs.shape[0]):
        out[k] = np.clip(
            pava(model.weights(xs[k]) @ model.responses / model.n),
            model.box[0],
            model.box[1],
        )
    return out


def threshold_exceedance_function(model, u: float, xs, domain_length: float):
    """eta_u(x) = |T| * S(u, x) on a grid of query covariate values."""
    if not model.box[0] <= u <= model.box[1]:
        raise ThresholdOutOfRange(
            f"threshold {u} outside box {model.box}"
        )
    if not domain_length > 0:
        raise ValueError("domain_length must be positive")
    xs = np.asarray(xs, dtype=float)
    grid = ThresholdGrid(
        np.array([model.box[0], u, model.box[1]])
        if model.box[0] < u < model.box[1]
        else np.linspace(model.box[0], model.box[1], 3)
    )
    Qs = predict_quantile_batch(model, xs)
    out = np.empty(xs.shape[0])
    for k in range(xs.shape[0]):
        quant = QuantileProfile(model.prob_grid, Qs[k])
        dist = distribution_from_quantile(quant, grid)
        F_u = np.interp(u, grid.values, dist.f_values)
        out[k] = domain_length * (1.0 - F_u)
    return out
