import numpy as np
import pytest
from hypothesis import given, settings

from endo_capm.equilibrium import MarketParams, solve_equilibrium
from endo_capm.sensitivity import (
    FROZEN,
    PROJECTED,
    atomistic_gap,
    central_difference_jacobian,
    endogenous_jacobian,
    fd_jacobian_oracle,
    off_diagonal_mass,
    sensitivity_report,
    standard_jacobian,
    tangent_jacobian,
)

from conftest import markets, random_market


def test_two_asset_is_not_diagonal(two_asset):
    jac = endogenous_jacobian(two_asset)
    assert off_diagonal_mass(jac) > 1e-3


def test_two_asset_values(two_asset):
    # finite differences of the closed-form minimum-norm solution, frozen row 0
    jac = endogenous_jacobian(two_asset)
    fd = fd_jacobian_oracle(two_asset, 1e-6, FROZEN).matrix
    np.testing.assert_allclose(jac, fd, atol=1e-8)


def test_standard_jacobian_examples(two_asset):
    np.testing.assert_allclose(standard_jacobian(two_asset, 0.004), np.diag([-0.016, -0.016]),
                               atol=1e-17)
    assert np.all(standard_jacobian(two_asset, 0.02) == 0)
    one = MarketParams([1.0], [1.0], 0.02)
    np.testing.assert_allclose(standard_jacobian(one, 0.1), [[0.08]])


@given(markets(max_n=8))
def test_standard_jacobian_diagonal(params):
    sol = solve_equilibrium(params)
    std = standard_jacobian(params, sol.market_return)
    assert np.all(std == np.diag(np.diag(std)))
    assert np.all(np.diag(std) == std[0, 0])


def test_fd_linear_map_sanity():
    w = np.array([0.2, 0.3, 0.5])
    b = np.array([2.0, 1.0, 0.6])
    r = 0.05
    d = np.eye(3) - np.outer(b, w)
    f = lambda x: (1 - x) * r
    np.testing.assert_allclose(central_difference_jacobian(f, b, 1e-3), -r * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(central_difference_jacobian(f, b, 1e-3, d), -r * d, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(markets(max_n=10))
def test_frozen_fd_matches_jacobian(params):
    jac = endogenous_jacobian(params)
    fd = fd_jacobian_oracle(params, 1e-6, FROZEN)
    assert fd.mode == FROZEN
    assert np.max(np.abs(jac - fd.matrix)) <= 1e-5


@settings(max_examples=40, deadline=None)
@given(markets(max_n=8))
def test_projected_fd_matches_tangent_jacobian(params):
    jac = endogenous_jacobian(params)
    d = np.eye(params.n_assets) - np.outer(params.betas, params.weights)
    fd = fd_jacobian_oracle(params, 1e-6, PROJECTED)
    assert fd.mode == PROJECTED
    assert np.max(np.abs(jac @ d - fd.matrix)) <= 1e-5


def test_random_three_asset_report():
    rep = sensitivity_report(random_market(11, 3))
    assert rep.max_abs_deviation <= 1e-5
    assert rep.projected_max_abs_deviation <= 1e-5


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_step_halving_order_two(seed):
    params = random_market(seed, 4, r=1.0)
    jac = endogenous_jacobian(params)
    steps = [0.1 * 2.0 ** -k for k in range(8)]
    err = [np.max(np.abs(fd_jacobian_oracle(params, h).matrix - jac)) for h in steps]
    ratios = [a / b for a, b in zip(err, err[1:]) if b > 1e-8]
    assert len(ratios) >= 5
    assert all(3.5 <= q <= 4.5 for q in ratios)


def test_zero_weight_rows_are_nan():
    p = MarketParams([0.5, 0.0, 0.5], [0.5, 3.0, 1.5], 0.02)
    jac = endogenous_jacobian(p)
    assert np.all(np.isnan(jac[1]))
    assert np.all(jac[[0, 2], 1] == 0)
    ref = endogenous_jacobian(MarketParams([0.5, 0.5], [0.5, 1.5], 0.02))
    np.testing.assert_allclose(jac[np.ix_([0, 2], [0, 2])], ref, atol=1e-15)


def test_single_asset_jacobian_zero():
    jac = endogenous_jacobian(MarketParams([1.0, 0.0], [1.0, 2.0], 0.02))
    assert jac[0, 0] == 0


def test_unknown_mode(two_asset):
    with pytest.raises(ValueError):
        fd_jacobian_oracle(two_asset, 1e-6, "sideways")


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_atomistic_bound(n):
    from endo_capm.market_structure import sample_constrained_beta
    w = np.full(n, 1 / n)
    b = sample_constrained_beta(w, (-3, 3), seed=n)
    measured, bound = atomistic_gap(MarketParams(w, b, 0.05))
    assert measured <= np.max(np.abs(b)) / n * (1 + 4e-16)
    assert measured <= 3 / n * (1 + 4e-16)


def test_tangent_jacobian_decays_atomistically():
    from endo_capm.market_structure import sample_constrained_beta
    masses = []
    for n in (10, 100, 1000):
        w = np.full(n, 1 / n)
        b = sample_constrained_beta(w, (-3, 3), seed=n)
        masses.append(off_diagonal_mass(tangent_jacobian(MarketParams(w, b, 0.05))))
    assert masses[0] > masses[1] > masses[2]
    assert masses[2] < 1e-3


def test_report_tangent_matches_projected_fd():
    rep = sensitivity_report(random_market(5, 6))
    np.testing.assert_allclose(rep.tangent_jacobian, rep.projected_fd_jacobian, atol=1e-5)
