"""Response of equilibrium returns to changes in beta."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import (
    MarketParams,
    _reduced_solve,
    build_system_matrix,
    embed_pseudoinverse,
    reduced_pseudoinverse,
    solve_equilibrium,
    validate_market,
)
from .errors import NumericalError, PerturbationInfeasible

DEFAULT_STEP = 1e-6
FROZEN = "frozen"
PROJECTED = "projected"


def endogenous_jacobian(params: MarketParams) -> np.ndarray:
    """``d mu / d beta = (mu_M - r) P + (P D - I) w mu^T P``.

    ``P`` is the reduced right inverse padded with a zero column at the
    eliminated row. Rows of zero-weight assets are NaN, their columns zero.
    """
    sol = solve_equilibrium(params)
    n = params.n_assets
    act = sol.active
    idx = np.flatnonzero(act)
    jac = np.zeros((n, n))
    jac[~act, :] = np.nan
    if idx.size == 1:
        # mu_i = r regardless of beta
        return jac
    sub = params.restrict(act)
    sub_row = int(np.flatnonzero(idx == sol.removed_row)[0])
    sys = build_system_matrix(sub, removed_row=sub_row)
    p = embed_pseudoinverse(reduced_pseudoinverse(sys), sys.removed_row)
    mu = sol.mu[idx]
    r = params.risk_free_rate
    m = idx.size
    sub_jac = (sol.market_return - r) * p + (p @ sys.d - np.eye(m)) @ np.outer(sub.weights, mu @ p)
    jac[np.ix_(idx, idx)] = sub_jac
    return jac


def tangent_jacobian(params: MarketParams, jac: np.ndarray | None = None) -> np.ndarray:
    """Derivative along the admissible directions ``e_j - w_j beta``: ``J @ D``.

    The eliminated row of ``J`` itself does not shrink as weights become
    atomistic (that return is pinned by all other equations); ``J @ D`` does.
    """
    if jac is None:
        jac = endogenous_jacobian(params)
    d = np.eye(params.n_assets) - np.outer(params.betas, params.weights)
    act = params.active
    out = np.full_like(jac, np.nan)
    out[np.ix_(act, act)] = jac[np.ix_(act, act)] @ d[np.ix_(act, act)]
    out[np.ix_(act, ~act)] = 0.0
    return out


def standard_jacobian(params: MarketParams, mu_m: float) -> np.ndarray:
    """Exogenous-market counterpart: ``(mu_M - r) I``."""
    return (mu_m - params.risk_free_rate) * np.eye(params.n_assets)


def central_difference_jacobian(func, x, step=DEFAULT_STEP, directions=None) -> np.ndarray:
    """Central differences of ``func`` at ``x`` along the columns of ``directions``.

    Column ``j`` is ``(f(x + h d_j) - f(x - h d_j)) / (2h)``; identity
    directions give the ordinary Jacobian.
    """
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if directions is None:
        directions = np.eye(x.size)
    cols = []
    for d in np.asarray(directions, dtype=float).T:
        cols.append((np.asarray(func(x + step * d)) - np.asarray(func(x - step * d))) / (2 * step))
    return np.column_stack(cols)


@dataclass(frozen=True)
class FiniteDifferenceJacobian:
    matrix: np.ndarray
    mode: str
    step: float
    directions: np.ndarray


def fd_jacobian_oracle(params: MarketParams, step: float = DEFAULT_STEP, mode: str = FROZEN
                       ) -> FiniteDifferenceJacobian:
    """Finite-difference check on the Jacobian of the equilibrium returns.

    ``mode="frozen"`` perturbs each beta coordinate freely (leaving the
    constraint surface) while keeping the eliminated row of the base point;
    it matches :func:`endogenous_jacobian` entrywise.

    ``mode="projected"`` moves along ``e_j - w_j beta``, which keeps
    ``w @ beta = 1``, and re-solves the full problem; it matches
    ``endogenous_jacobian(params) @ D``.
    """
    validate_market(params)
    sol = solve_equilibrium(params)
    act = sol.active
    idx = np.flatnonzero(act)
    sub = params.restrict(act)
    n = params.n_assets
    r = params.risk_free_rate

    if mode == FROZEN:
        directions = np.eye(idx.size)
        if idx.size == 1:
            func = lambda b: np.array([r])
        else:
            sub_row = int(np.flatnonzero(idx == sol.removed_row)[0])

            def func(b):
                return _reduced_solve(sub.weights, b, r, sub_row)[0]
    elif mode == PROJECTED:
        directions = np.eye(idx.size) - np.outer(sub.betas, sub.weights)

        def func(b):
            try:
                return solve_equilibrium(sub.with_betas(b)).mu
            except (ValueError, NumericalError) as exc:
                raise PerturbationInfeasible(f"projected perturbation failed: {exc}") from exc
    else:
        raise ValueError(f"unknown mode {mode!r}; use {FROZEN!r} or {PROJECTED!r}")

    sub_fd = central_difference_jacobian(func, sub.betas, step, directions)
    fd = np.zeros((n, n))
    fd[~act, :] = np.nan
    fd[np.ix_(idx, idx)] = sub_fd
    full_dirs = np.zeros((n, n))
    full_dirs[np.ix_(idx, idx)] = directions
    return FiniteDifferenceJacobian(matrix=fd, mode=mode, step=step, directions=full_dirs)


def off_diagonal_mass(jac: np.ndarray) -> float:
    off = jac - np.diag(np.diag(jac))
    return float(np.nanmax(np.abs(off))) if off.size > 1 else 0.0


@dataclass(frozen=True)
class SensitivityReport:
    endogenous_jacobian: np.ndarray
    standard_jacobian: np.ndarray
    fd_jacobian: np.ndarray
    max_abs_deviation: float
    off_diagonal_mass: float
    projected_fd_jacobian: np.ndarray
    projected_max_abs_deviation: float
    step: float
    market_return: float
    tangent_jacobian: np.ndarray
    tangent_off_diagonal_mass: float


def sensitivity_report(params: MarketParams, step: float = DEFAULT_STEP) -> SensitivityReport:
    """Both Jacobians plus finite-difference checks in both perturbation modes."""
    sol = solve_equilibrium(params)
    jac = endogenous_jacobian(params)
    std = standard_jacobian(params, sol.market_return)
    frozen = fd_jacobian_oracle(params, step, FROZEN)
    projected = fd_jacobian_oracle(params, step, PROJECTED)
    act = sol.active
    dev = np.abs(jac - frozen.matrix)[np.ix_(act, act)]
    d = np.eye(params.n_assets) - np.outer(params.betas, params.weights)
    pdev = np.abs(jac[np.ix_(act, act)] @ d[np.ix_(act, act)] - projected.matrix[np.ix_(act, act)])
    return SensitivityReport(
        endogenous_jacobian=jac,
        standard_jacobian=std,
        fd_jacobian=frozen.matrix,
        max_abs_deviation=float(dev.max()),
        off_diagonal_mass=off_diagonal_mass(jac[np.ix_(act, act)]),
        projected_fd_jacobian=projected.matrix,
        projected_max_abs_deviation=float(pdev.max()),
        step=step,
        market_return=sol.market_return,
        tangent_jacobian=tangent_jacobian(params, jac),
        tangent_off_diagonal_mass=off_diagonal_mass(tangent_jacobian(params, jac)[np.ix_(act, act)]),
    )


def atomistic_gap(params: MarketParams) -> tuple[float, float]:
    """Measured ``max |D - I|`` and the bound ``max|beta| * max(w)``.

    The entries of ``D - I`` are ``-beta_i w_j``; they are taken directly
    rather than by subtracting the identity from ``D``, which would add a
    rounding error on the diagonal. For equal weights the bound is
    ``max|beta| / N``.
    """
    measured = float(np.max(np.abs(np.outer(params.betas, params.weights))))
    bound = float(np.max(np.abs(params.betas)) * np.max(params.weights))
    return measured, bound
