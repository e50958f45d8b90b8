import itertools

import numpy as np
import pytest

from exceedfda import (
    GridMismatch,
    LengthMismatch,
    QuantileProfile,
    RawQuantileCandidate,
    pava,
    project_to_quantile_space,
    wasserstein_distance,
    weighted_quantile_mean,
)


def qp(values, P=None):
    values = np.asarray(values, float)
    P = P or values.size
    return QuantileProfile(np.linspace(0, 1, P), values)


def partition_oracle(y, box):
    """Exhaustive minimizer of ||v - y||^2 over nondecreasing in-box v,
    by enumerating every consecutive-block partition; each block is constant
    at its clipped block mean."""
    P = len(y)
    best, best_val = None, np.inf
    for cuts in itertools.product([0, 1], repeat=P - 1):
        blocks, start = [], 0
        for j, c in enumerate(cuts, start=1):
            if c:
                blocks.append((start, j))
                start = j
        blocks.append((start, P))
        v = np.empty(P)
        for a, b in blocks:
            v[a:b] = np.clip(np.mean(y[a:b]), box[0], box[1])
        if np.any(np.diff(v) < -1e-12):
            continue
        val = np.sum((v - y) ** 2)
        if val < best_val - 1e-15:
            best, best_val = v, val
    return best


# ---------------------------------------------------------------------------
# wasserstein_distance
# ---------------------------------------------------------------------------

def test_distance_zero_on_identical():
    q = qp(np.linspace(2, 5, 201))
    assert wasserstein_distance(q, q) == 0.0


def test_translation_distance():
    rng = np.random.default_rng(1)
    base = np.sort(rng.uniform(0, 3, 201))
    c = -1.25
    d = wasserstein_distance(qp(base), qp(base + c))
    assert abs(d - abs(c)) < 1e-12


def test_uniform_vs_uniform_closed_form():
    p = np.linspace(0, 1, 201)
    d = wasserstein_distance(QuantileProfile(p, p), QuantileProfile(p, 2 * p))
    assert abs(d - 1 / np.sqrt(3)) <= 1e-4


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(12)
    for _ in range(200):
        a, b, c = (qp(np.sort(rng.uniform(-2, 2, 51))) for _ in range(3))
        dab = wasserstein_distance(a, b)
        dba = wasserstein_distance(b, a)
        assert abs(dab - dba) < 1e-12
        assert dab <= wasserstein_distance(a, c) + wasserstein_distance(c, b) + 1e-10


def test_resampling_grid_mismatch_paths():
    a = qp(np.linspace(0, 1, 101))
    b = qp(np.linspace(0, 1, 201))
    d = wasserstein_distance(a, b)               # resampled silently
    assert d < 1e-6
    with pytest.raises(GridMismatch):
        wasserstein_distance(a, b, allow_resample=False)


def test_resampling_consistency_under_refinement():
    f = lambda p: 2 * p + 0.5 * np.sin(3 * p)    # Lipschitz, still increasing
    g = lambda p: 2.5 * p
    coarse = wasserstein_distance(qp(f(np.linspace(0, 1, 201))),
                                  qp(g(np.linspace(0, 1, 201))))
    fine = wasserstein_distance(qp(f(np.linspace(0, 1, 401))),
                                qp(g(np.linspace(0, 1, 401))))
    assert abs(coarse - fine) <= 1e-3


# ---------------------------------------------------------------------------
# weighted_quantile_mean
# ---------------------------------------------------------------------------

def test_single_profile_weight_n():
    prof = qp(np.linspace(1, 2, 21))
    out = weighted_quantile_mean([prof], [1.0])
    np.testing.assert_array_equal(out.values, prof.q_values)


def test_two_profiles_weights_two_zero():
    p1, p2 = qp(np.linspace(0, 1, 11)), qp(np.linspace(5, 6, 11))
    out = weighted_quantile_mean([p1, p2], [2.0, 0.0])
    np.testing.assert_allclose(out.values, p1.q_values, atol=1e-15)


def test_unit_weights_give_plain_average():
    rng = np.random.default_rng(4)
    profiles = [qp(np.sort(rng.uniform(0, 1, 31))) for _ in range(5)]
    out = weighted_quantile_mean(profiles, np.ones(5))
    oracle = sum(p.q_values for p in profiles) / 5
    np.testing.assert_allclose(out.values, oracle, atol=1e-14)


def test_weighted_mean_length_mismatch():
    p = qp(np.linspace(0, 1, 11))
    with pytest.raises(LengthMismatch):
        weighted_quantile_mean([p, p], [1.0])
    with pytest.raises(LengthMismatch):
        weighted_quantile_mean([], [])


def test_weighted_mean_grid_mismatch():
    with pytest.raises(GridMismatch):
        weighted_quantile_mean([qp(np.zeros(11)), qp(np.zeros(21))], [1.0, 1.0])


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_projection_idempotent_on_feasible():
    vals = np.array([0.0, 0.5, 0.5, 1.0, 2.0])
    cand = RawQuantileCandidate(np.linspace(0, 1, 5), vals)
    out = project_to_quantile_space(cand, (0.0, 3.0))
    np.testing.assert_array_equal(out.q_values, vals)


def test_projection_pools_violating_pair():
    cand = RawQuantileCandidate(np.array([0.0, 0.5, 1.0]), np.array([2.0, 1.0, 3.0]))
    out = project_to_quantile_space(cand, (0.0, 3.0))
    np.testing.assert_allclose(out.q_values, [1.5, 1.5, 3.0], atol=1e-15)


def test_projection_matches_partition_enumeration():
    rng = np.random.default_rng(77)
    box = (-1.0, 1.0)
    for _ in range(200):
        P = int(rng.integers(3, 7))
        y = rng.uniform(-2, 2, P)
        got = np.clip(pava(y), box[0], box[1])
        oracle = partition_oracle(y, box)
        np.testing.assert_allclose(got, oracle, atol=1e-8)


def test_projection_nonexpansive():
    rng = np.random.default_rng(5)
    box = (0.0, 2.0)
    for _ in range(100):
        a, b = rng.uniform(-1, 3, 20), rng.uniform(-1, 3, 20)
        pa = np.clip(pava(a), *box)
        pb = np.clip(pava(b), *box)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-10


def test_projection_optimality_vs_random_feasible():
    rng = np.random.default_rng(99)
    box = (0.0, 1.0)
    for _ in range(20):
        y = rng.uniform(-0.5, 1.5, 15)
        proj = np.clip(pava(y), *box)
        d_proj = np.linalg.norm(y - proj)
        for _ in range(100):
            w = np.sort(rng.uniform(box[0], box[1], 15))
            assert d_proj <= np.linalg.norm(y - w) + 1e-10


def test_projection_output_satisfies_invariants():
    cand = RawQuantileCandidate(np.linspace(0, 1, 9), np.array([5.0, -3, 2, 1, 0, 4, 9, -2, 3.0]))
    out = project_to_quantile_space(cand, (0.0, 3.0))
    assert np.all(np.diff(out.q_values) >= 0)
    assert out.q_values.min() >= 0.0 and out.q_values.max() <= 3.0


def test_projection_invalid_box():
    cand = RawQuantileCandidate(np.linspace(0, 1, 3), np.zeros(3))
    with pytest.raises(ValueError):
        project_to_quantile_space(cand, (1.0, 1.0))
