import numpy as np
import pytest

from exceedfda import (
    DeltaOutOfRange,
    DistributionProfile,
    EmptyCentralityDomain,
    GridMismatch,
    InvalidCount,
    ThresholdGrid,
    default_delta,
    distribution_from_exceedance,
    exceedance_chain,
    exceedance_density,
    exceedance_function,
    force_of_centrality,
    make_threshold_grid,
    quantile_from_distribution,
)
from exceedfda.smoothing import SmoothedTrajectory


def traj_from(times, values, sid="s"):
    return SmoothedTrajectory(sid, np.asarray(times, float), np.asarray(values, float))


def segment_sum_oracle(times, values, u):
    """Independent superlevel measure: per-segment interval arithmetic with
    explicit crossing solves for the piecewise-linear interpolant."""
    total = 0.0
    for j in range(len(times) - 1):
        t0, t1 = times[j], times[j + 1]
        y0, y1 = values[j], values[j + 1]
        if y0 == y1:
            if y0 >= u:
                total += t1 - t0
            continue
        # solve y0 + (y1-y0)*(t-t0)/(t1-t0) = u
        tc = t0 + (u - y0) * (t1 - t0) / (y1 - y0)
        tc = min(max(tc, t0), t1)
        if y1 > y0:               # upcrossing: [tc, t1] is at or above u
            total += t1 - tc
        else:                     # downcrossing: [t0, tc]
            total += tc - t0
    return total


# ---------------------------------------------------------------------------
# ThresholdGrid
# ---------------------------------------------------------------------------

def test_threshold_grid_needs_three_increasing_points():
    with pytest.raises(ValueError):
        ThresholdGrid(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        ThresholdGrid(np.array([0.0, 1.0, 1.0]))
    g = make_threshold_grid(0.0, 2.0, 5)
    assert g.u_min == 0.0 and g.u_max == 2.0 and g.range == 2.0


# ---------------------------------------------------------------------------
# exceedance_function
# ---------------------------------------------------------------------------

def test_identity_trajectory():
    t = np.linspace(0, 1, 2001)
    prof = exceedance_function(traj_from(t, t), make_threshold_grid(0, 1, 11))
    assert prof.s_values[3] == pytest.approx(0.7, abs=1e-12)  # u = 0.3
    np.testing.assert_allclose(prof.s_values, 1.0 - prof.grid.values, atol=1e-12)


def test_constant_trajectory():
    t = np.linspace(0, 1, 11)
    prof = exceedance_function(
        traj_from(t, np.full_like(t, 5.0)), ThresholdGrid(np.array([4.0, 5.0, 6.0]))
    )
    assert prof.s_values[0] == 1.0     # u=4 below the constant
    assert prof.s_values[1] == 1.0     # flat segment at u counts (>= convention)
    assert prof.s_values[2] == 0.0     # u=6 above


def test_sine_half_period():
    t = np.linspace(0, 1, 4001)
    y = np.sin(2 * np.pi * t)
    prof = exceedance_function(traj_from(t, y), ThresholdGrid(np.array([-2.0, 0.0, 2.0])))
    assert prof.s_values[1] == pytest.approx(0.5, abs=1e-6)


def test_exactness_against_segment_sum_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        m = rng.integers(3, 12)
        t = np.sort(rng.random(m))
        t[0], t[-1] = 0.0, 1.0
        t = np.unique(t)
        y = rng.uniform(-2, 2, t.size)
        grid = make_threshold_grid(-2.5, 2.5, 31)
        prof = exceedance_function(traj_from(t, y), grid)
        for u, s in zip(grid.values, prof.s_values):
            assert abs(s - segment_sum_oracle(t, y, u)) < 1e-12


def test_monotone_nonincreasing_always():
    rng = np.random.default_rng(2)
    t = np.linspace(0, 1, 50)
    y = rng.standard_normal(50).cumsum()
    prof = exceedance_function(traj_from(t, y), make_threshold_grid(y.min() - 1, y.max() + 1, 101))
    assert np.all(np.diff(prof.s_values) <= 1e-12)


def test_s_plus_f_is_one_bit_exact():
    t = np.linspace(0, 1, 100)
    prof = exceedance_function(traj_from(t, np.sin(7 * t)), make_threshold_grid(-2, 2, 41))
    dist = distribution_from_exceedance(prof)
    assert np.all(prof.s_values + dist.f_values == 1.0)


def test_perturbation_stability():
    # Trajectories differing by <= b uniformly, slope magnitude >= Delta at
    # every threshold crossing: S profiles differ by <= 4 b / Delta.
    t = np.linspace(0, 1, 1001)
    delta_slope = 2.0
    b = 0.01
    y1 = delta_slope * (t - 0.5)
    y2 = y1 + b * np.sin(20 * t)
    grid = make_threshold_grid(-0.8, 0.8, 33)
    s1 = exceedance_function(traj_from(t, y1), grid).s_values
    s2 = exceedance_function(traj_from(t, y2), grid).s_values
    assert np.max(np.abs(s1 - s2)) <= 4 * b / delta_slope + 1e-12


# ---------------------------------------------------------------------------
# quantile_from_distribution
# ---------------------------------------------------------------------------

def test_quantile_of_uniform():
    grid = make_threshold_grid(0, 1, 201)
    dist = DistributionProfile(grid, grid.values.copy())
    quant = quantile_from_distribution(dist, 201)
    np.testing.assert_allclose(quant.q_values, quant.prob_grid, atol=1e-10)


def test_quantile_inf_convention_on_flat_stretch():
    # F is flat at 0.5 over [2, 3]; Q(0.5) must be the left endpoint.
    u = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    F = np.array([0.0, 0.25, 0.5, 0.5, 1.0])
    quant = quantile_from_distribution(DistributionProfile(ThresholdGrid(u), F), 5)
    assert quant.q_values[2] == pytest.approx(2.0, abs=1e-12)   # q = 0.5


def test_quantile_matches_dense_scan():
    rng = np.random.default_rng(31)
    u = np.sort(rng.uniform(0, 10, 20))
    u[0], u[-1] = 0.0, 10.0
    F = np.sort(rng.random(20))
    F[0], F[-1] = 0.0, 1.0
    dist = DistributionProfile(ThresholdGrid(u), F)
    quant = quantile_from_distribution(dist, 41)
    dense_u = np.linspace(0, 10, 100_001)
    dense_F = np.interp(dense_u, u, F)
    step = dense_u[1] - dense_u[0]
    for q, qv in zip(quant.prob_grid, quant.q_values):
        hit = dense_u[dense_F >= q - 1e-15]
        oracle = hit[0] if hit.size else dense_u[-1]
        assert abs(qv - oracle) <= step + 1e-12


def test_inverse_consistency():
    rng = np.random.default_rng(8)
    u = np.linspace(-1, 4, 51)
    F = np.clip(np.sort(rng.random(51)), 0, 1)
    F[0], F[-1] = 0.0, 1.0
    dist = DistributionProfile(ThresholdGrid(u), F)
    quant = quantile_from_distribution(dist, 101)
    res_u = u[1] - u[0]
    for q, qv in zip(quant.prob_grid, quant.q_values):
        assert np.interp(qv, u, F) >= q - 1e-9 - 1.0 / 100
    for ui, Fi in zip(u, F):
        q_at = np.interp(Fi, quant.prob_grid, quant.q_values)
        assert q_at <= ui + res_u + 1e-9


def test_quantile_grid_size_validation():
    grid = make_threshold_grid(0, 1, 5)
    dist = DistributionProfile(grid, np.linspace(0, 1, 5))
    with pytest.raises(InvalidCount):
        quantile_from_distribution(dist, 2)


# ---------------------------------------------------------------------------
# exceedance_density
# ---------------------------------------------------------------------------

def test_density_of_uniform_is_one_interior():
    grid = make_threshold_grid(0, 1, 101)
    dist = DistributionProfile(grid, grid.values.copy())
    dens = exceedance_density(dist, 0.1)
    interior = (grid.values >= 0.1) & (grid.values <= 0.9)
    np.testing.assert_allclose(dens.d_values[interior], 1.0, atol=1e-12)


def test_density_of_quadratic_is_2u_interior():
    grid = make_threshold_grid(0, 1, 101)
    dist = DistributionProfile(grid, grid.values**2)
    dens = exceedance_density(dist, 0.05)
    interior = (grid.values >= 0.06) & (grid.values <= 0.94)
    np.testing.assert_allclose(dens.d_values[interior], 2 * grid.values[interior], atol=1e-10)


def test_density_left_boundary_formula_on_identity():
    delta = 0.1
    grid = make_threshold_grid(0, 1, 201)
    dist = DistributionProfile(grid, grid.values.copy())
    dens = exceedance_density(dist, delta)
    u = delta / 2
    j = np.argmin(np.abs(grid.values - u))
    # (F(u+delta) - F(0)) / (u + delta) = 1 for F(u)=u
    assert dens.d_values[j] == pytest.approx(1.0, abs=1e-10)


def test_density_delta_out_of_range():
    grid = make_threshold_grid(0, 1, 11)
    dist = DistributionProfile(grid, grid.values.copy())
    with pytest.raises(DeltaOutOfRange):
        exceedance_density(dist, 0.6)
    with pytest.raises(DeltaOutOfRange):
        exceedance_density(dist, 0.0)


def test_density_nonnegative_and_integral_matches_mass():
    rng = np.random.default_rng(23)
    grid = make_threshold_grid(0, 2, 201)
    F = np.sort(rng.random(201))
    F[0], F[-1] = 0.0, 1.0
    dist = DistributionProfile(grid, F)
    delta = 0.2
    dens = exceedance_density(dist, delta)
    assert np.all(dens.d_values >= 0)
    integral = np.trapezoid(dens.d_values, grid.values)
    assert abs(integral - 1.0) <= 5 * delta


# ---------------------------------------------------------------------------
# default_delta
# ---------------------------------------------------------------------------

def test_default_delta_cap():
    uncapped = (np.log(500 * 200) / 500) ** 0.2
    assert uncapped > 0.25          # the rate value exceeds the cap here
    assert default_delta(500, 200, 1.0) == 0.25


def test_default_delta_linear_in_range():
    # Large N keeps the value uncapped so linearity is visible.
    assert default_delta(10**8, 1, 2.0) == pytest.approx(
        2 * default_delta(10**8, 1, 1.0), rel=1e-14
    )


def test_default_delta_small_for_large_N():
    v = default_delta(10**8, 1, 1.0)
    assert v < 0.05
    assert v < 0.25  # uncapped


def test_default_delta_validation():
    with pytest.raises(InvalidCount):
        default_delta(1, 1, 1.0)
    with pytest.raises(InvalidCount):
        default_delta(10, 1, 0.0)


# ---------------------------------------------------------------------------
# force_of_centrality
# ---------------------------------------------------------------------------

def test_uniform_hazard():
    grid = make_threshold_grid(0, 1, 401)
    dist = DistributionProfile(grid, grid.values.copy())
    delta = 0.02
    dens = exceedance_density(dist, delta)
    cent = force_of_centrality(dens, dist, 0.1)
    assert cent.grid.max() <= 0.9 + 1e-12
    expected = 1.0 / (1.0 - cent.grid)
    interior = (cent.grid >= delta) & (cent.grid <= 1 - delta)
    np.testing.assert_allclose(cent.h_values[interior], expected[interior], rtol=1e-8)


def test_exponential_constant_hazard():
    grid = make_threshold_grid(0, 5, 501)
    S = np.exp(-grid.values)
    dist = DistributionProfile(grid, 1.0 - S)
    delta = 0.05
    dens = exceedance_density(dist, delta)
    cent = force_of_centrality(dens, dist, 0.05)
    assert np.max(np.abs(cent.h_values - 1.0)) < 5 * delta


def test_centrality_domain_exact():
    grid = make_threshold_grid(0, 1, 101)
    dist = DistributionProfile(grid, grid.values.copy())
    dens = exceedance_density(dist, 0.05)
    cent = force_of_centrality(dens, dist, 0.3)
    keep = 1.0 - dist.f_values >= 0.3
    np.testing.assert_array_equal(cent.grid, grid.values[keep])


def test_empty_centrality_domain():
    grid = make_threshold_grid(0, 1, 11)
    dist = DistributionProfile(grid, np.ones(11))   # all mass below u_min
    dens = exceedance_density(dist, 0.1)
    with pytest.raises(EmptyCentralityDomain):
        force_of_centrality(dens, dist, 0.05)


def test_centrality_grid_mismatch():
    g1 = make_threshold_grid(0, 1, 11)
    g2 = make_threshold_grid(0, 2, 11)
    d1 = DistributionProfile(g1, g1.values.copy())
    dens = exceedance_density(d1, 0.1)
    d2 = DistributionProfile(g2, g2.values / 2)
    with pytest.raises(GridMismatch):
        force_of_centrality(dens, d2, 0.05)


# ---------------------------------------------------------------------------
# full chain
# ---------------------------------------------------------------------------

def test_exceedance_chain_consistency():
    t = np.linspace(0, 1, 501)
    y = 2.0 + np.sin(2 * np.pi * t)
    grid = make_threshold_grid(0.5, 3.5, 61)
    chain = exceedance_chain(traj_from(t, y), grid, prob_grid_size=101)
    assert np.all(chain.exceedance.s_values + chain.distribution.f_values == 1.0)
    assert np.all(np.diff(chain.quantile.q_values) >= -1e-9)
    assert np.all(chain.density.d_values >= 0)
    assert np.all(1.0 - np.interp(chain.centrality.grid, grid.values,
                                  chain.distribution.f_values) >= 0.05 - 1e-12)
