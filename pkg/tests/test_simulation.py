import numpy as np
import pytest

from exceedfda import (
    InvalidCount,
    KappaSpec,
    SimConfig,
    TruncatedNormalLaw,
    UniformLaw,
    generate_regression_sample,
    generate_trajectory,
    regression_spec,
    run_marginal_rmse,
    run_regression_rmse,
    setting_one,
    setting_two,
)
from exceedfda.simulation import softplus


class ZeroScoreRng:
    """Deterministic stand-in: all normal draws are zero, uniforms fixed."""

    def standard_normal(self, shape):
        return np.zeros(shape)

    def random(self, n):
        return np.full(n, 0.5)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def test_degenerate_randomness_gives_softplus_mean():
    spec = setting_two(0.0)
    raw, true = generate_trajectory(spec, 50, ZeroScoreRng())
    np.testing.assert_array_equal(raw.values, softplus(spec.mean(raw.times)))
    np.testing.assert_array_equal(true.values, softplus(spec.mean(true.grid)))


def test_same_seed_bit_identical():
    spec = setting_one(0.5)
    r1, t1 = generate_trajectory(spec, 100, np.random.default_rng(123))
    r2, t2 = generate_trajectory(spec, 100, np.random.default_rng(123))
    np.testing.assert_array_equal(r1.values, r2.values)
    np.testing.assert_array_equal(t1.values, t2.values)


def test_score_variance_matches_analytic():
    spec = setting_two(0.0)
    rng = np.random.default_rng(99)
    t0 = 0.25                                   # a design point of N = 5
    vals = []
    for _ in range(10_000):
        raw, _ = generate_trajectory(spec, 5, rng, dense_grid_size=3)
        vals.append(np.log(np.expm1(raw.values[1])))  # inverse softplus -> V(t0)
    vals = np.asarray(vals)
    phi = spec.eigen_matrix(np.array([t0]))[:, 0]
    target_var = float(np.sum(spec.eigenvalues * phi**2))
    sample_var = vals.var(ddof=1)
    se = target_var * np.sqrt(2.0 / (len(vals) - 1))
    assert abs(sample_var - target_var) < 3 * se


def test_heteroscedastic_noise_profile_positive():
    spec = setting_one(1.0)
    t = np.linspace(0, 1, 101)
    assert np.all(spec.noise_sd(t) > 0)
    np.testing.assert_allclose(
        spec.noise_sd(t), np.sqrt(1.5 + np.sin(4 * np.pi * t)), atol=1e-12
    )


def test_truncated_normal_support_and_mean():
    law = TruncatedNormalLaw(3.0, 0.5, 1.0, 5.0)
    rng = np.random.default_rng(7)
    draws = law.sample(10_000, rng)
    assert draws.min() >= 1.0 and draws.max() <= 5.0
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - law.mean()) < 3 * se


def test_uniform_law_quantile():
    law = UniformLaw(1.0, 5.0)
    np.testing.assert_allclose(law.quantile([0.0, 0.5, 1.0]), [1.0, 3.0, 5.0])


def test_kappa_constant_when_no_slope_or_noise():
    spec = regression_spec("I", "global", 0.0)
    kappa = KappaSpec(a1=2.0, b1=0.0, noise_sd=0.0)
    out = kappa.evaluate(np.array([1.0, 3.0, 5.0]), np.zeros(3))
    np.testing.assert_array_equal(out, np.full(3, 2.0))
    assert spec.kappa.b1 == 5.0


def test_regression_sample_shapes_and_scaling():
    spec = regression_spec("I", "global", 0.0)
    rng = np.random.default_rng(21)
    X, t_obs, Z, t_dense, Y_true = generate_regression_sample(spec, 8, 60, rng)
    assert X.shape == (8,) and Z.shape == (8, 60) and Y_true.shape[0] == 8
    assert np.all((X >= 1.0) & (X <= 5.0))


def test_setting_two_optional_third_component():
    assert len(setting_two(0.1).eigen_fns) == 2
    assert len(setting_two(0.1, include_third_component=True).eigen_fns) == 3


# ---------------------------------------------------------------------------
# Experiments (desk-scale smoke; full-scale runs live in the acceptance suite)
# ---------------------------------------------------------------------------

def small_cfg(**kw):
    base = dict(n=20, N=150, B=3, seed=42, time_grid_size=151,
                dense_grid_size=301, threshold_grid_size=101, prob_grid_size=101)
    base.update(kw)
    return SimConfig(**base)


def test_marginal_noiseless_beats_noisy():
    cfg = small_cfg()
    clean = run_marginal_rmse("I", cfg, 0.0).mean_rmse
    noisy = run_marginal_rmse("I", cfg, 1.0).mean_rmse
    assert clean < noisy


def test_marginal_deterministic_and_thread_invariant():
    cfg = small_cfg(B=2)
    a = run_marginal_rmse("II", cfg, 0.5).rmse_by_subject
    b = run_marginal_rmse("II", cfg, 0.5).rmse_by_subject
    np.testing.assert_array_equal(a, b)
    c = run_marginal_rmse("II", small_cfg(B=2, threads=2), 0.5).rmse_by_subject
    np.testing.assert_array_equal(a, c)


def test_marginal_rejects_unknown_setting():
    with pytest.raises(ValueError):
        run_marginal_rmse("III", small_cfg(), 0.5)


def test_regression_zero_noise_rmse_shrinks_with_density():
    spec = regression_spec("I", "global", 0.0)
    coarse = run_regression_rmse("global", spec, small_cfg(n=40, N=100, B=2), "I")
    dense = run_regression_rmse("global", spec, small_cfg(n=40, N=400, B=2), "I")
    noisy = run_regression_rmse(
        "global", regression_spec("I", "global", 1.0), small_cfg(n=40, N=400, B=2), "I"
    )
    # without noise the only gap to the oracle is discretization/smoothing,
    # which shrinks as the design gets denser
    assert dense.mean_rmse < coarse.mean_rmse
    assert dense.mean_rmse < noisy.mean_rmse


def test_regression_local_runs():
    spec = regression_spec("II", "local", 0.5)
    res = run_regression_rmse("local", spec, small_cfg(n=40, B=2), "II")
    assert np.isfinite(res.mean_rmse) and res.rmse_by_replicate.shape == (2,)


def test_sim_config_validation():
    with pytest.raises(InvalidCount):
        SimConfig(n=0)
    with pytest.raises(ValueError):
        SimConfig(bandwidth_rule="plugin")


def test_regression_spec_validation():
    with pytest.raises(ValueError):
        regression_spec("X", "global", 0.1)
    with pytest.raises(ValueError):
        regression_spec("I", "ridge", 0.1)
