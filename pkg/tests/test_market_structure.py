import numpy as np
import pytest
from hypothesis import given, strategies as st

from endo_capm.errors import InfeasibleBounds, UndefinedForSingleAsset
from endo_capm.market_structure import (
    WeightLaw,
    dirichlet_weights,
    normalized_hhi,
    power_law_weights,
    project_to_constraint,
    sample_constrained_beta,
)


def test_flat_law():
    np.testing.assert_array_equal(power_law_weights(WeightLaw(0, 4)), [0.25] * 4)


def test_harmonic_two_assets():
    np.testing.assert_allclose(power_law_weights(WeightLaw(1, 2)), [2 / 3, 1 / 3], rtol=1e-15)


def test_steep_law_two_assets():
    w = power_law_weights(WeightLaw(8, 2))
    assert w[0] >= 0.996
    assert w[0] == pytest.approx(1 / (1 + 2.0 ** -8), rel=1e-15)


def test_infinite_gamma_is_unit_vector():
    np.testing.assert_array_equal(power_law_weights(WeightLaw(np.inf, 3)), [1, 0, 0])


@pytest.mark.parametrize("bad", [dict(gamma=-0.1, n_assets=3), dict(gamma=1, n_assets=0)])
def test_law_rejects(bad):
    with pytest.raises(ValueError):
        WeightLaw(**bad)


@given(st.floats(0, 20), st.integers(1, 2000))
def test_law_invariants(gamma, n):
    w = power_law_weights(WeightLaw(gamma, n))
    assert np.all(w > 0)
    assert abs(w.sum() - 1) <= 1e-12
    assert np.all(np.diff(w) <= 0)


@pytest.mark.parametrize("n", [2, 10, 500])
def test_hhi_monotone_in_gamma(n):
    gammas = np.linspace(0, 5, 51)
    h = [normalized_hhi(power_law_weights(WeightLaw(g, n))) for g in gammas]
    assert h[0] == 0.0
    assert np.all(np.diff(h) >= 0)


@pytest.mark.parametrize("n", [2, 7, 100])
def test_hhi_endpoints(n):
    assert normalized_hhi(np.full(n, 1 / n)) == 0.0
    e = np.zeros(n)
    e[0] = 1
    assert normalized_hhi(e) == pytest.approx(1.0, abs=1e-15)


def test_hhi_hand_value():
    assert normalized_hhi([0.75, 0.25]) == pytest.approx(0.25, abs=1e-15)


def test_hhi_matches_textbook_form():
    w = dirichlet_weights(30, seed=4)
    n = w.size
    assert normalized_hhi(w) == pytest.approx((w @ w - 1 / n) / (1 - 1 / n), abs=1e-12)


def test_hhi_single_asset():
    with pytest.raises(UndefinedForSingleAsset):
        normalized_hhi([1.0])


def test_sampler_forced_point():
    b = sample_constrained_beta([0.3, 0.7], (1, 1), seed=0)
    np.testing.assert_array_equal(b, [1, 1])


def test_sampler_postcondition():
    w = np.array([0.5, 0.5])
    b = sample_constrained_beta(w, (-5, 5), seed=12)
    assert abs(w @ b - 1) <= 1e-12
    assert np.all((b >= -5) & (b <= 5))


def test_sampler_infeasible():
    with pytest.raises(InfeasibleBounds):
        sample_constrained_beta([0.5, 0.5], (2, 3), seed=0)
    with pytest.raises(InfeasibleBounds):
        sample_constrained_beta([0.5, 0.5], (-3, 0.5), seed=0)


@given(st.integers(2, 300), st.integers(0, 2**31), st.sampled_from([(-10, 10), (-2, 3), (0.5, 1.5), (1, 4)]))
def test_sampler_invariants_and_reproducible(n, seed, bounds):
    w = dirichlet_weights(n, seed=seed, concentration=0.5)
    b = sample_constrained_beta(w, bounds, seed=seed)
    assert abs(w @ b - 1) <= 1e-12
    assert np.all(b >= bounds[0]) and np.all(b <= bounds[1])
    np.testing.assert_array_equal(b, sample_constrained_beta(w, bounds, seed=seed))


def test_projection_is_nearest_point():
    # brute force on a 2-D problem: scan the feasible segment
    w = np.array([0.3, 0.7])
    z = np.array([5.0, -4.0])
    lo, hi = -1.0, 2.0
    x = project_to_constraint(z, w, (lo, hi))
    b1 = np.linspace(lo, hi, 200001)
    b2 = (1 - w[0] * b1) / w[1]
    ok = (b2 >= lo) & (b2 <= hi)
    dist = (b1[ok] - z[0]) ** 2 + (b2[ok] - z[1]) ** 2
    k = np.argmin(dist)
    np.testing.assert_allclose(x, [b1[ok][k], b2[ok][k]], atol=1e-4)
    assert abs(w @ x - 1) <= 1e-14


def test_projection_keeps_feasible_points():
    w = dirichlet_weights(8, seed=1)
    b = sample_constrained_beta(w, (-2, 3), seed=2)
    np.testing.assert_allclose(project_to_constraint(b, w, (-2, 3)), b, atol=1e-14)
