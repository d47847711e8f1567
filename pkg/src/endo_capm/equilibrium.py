"""Equilibrium returns with an endogenous market return.

Substituting the market return ``mu_M = w @ mu`` into the CAPM gives the
linear system ``(I - beta w^T) mu = (1 - beta) r``. Because ``w @ beta = 1``
the matrix is singular with null space spanned by ``beta``; its left null
space is spanned by ``w``, so dropping any row with positive weight leaves a
full-row-rank system whose minimum-norm solution is unique.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    BetaConstraintViolated,
    LengthMismatch,
    NegativeWeight,
    NonFiniteInput,
    RankDeficiencyBeyondOne,
    SingularGram,
    WeightsNotNormalized,
    ZeroBetaVector,
)

CONSTRAINT_TOL = 1e-12
RANK_RTOL = 1e-10


def _as_vector(x) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MarketParams:
    """Market snapshot: weights ``w``, betas and the risk-free rate ``r``.

    Construction does not validate; call :func:`validate_market`.
    """

    weights: np.ndarray
    betas: np.ndarray
    risk_free_rate: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_vector(self.weights))
        object.__setattr__(self, "betas", _as_vector(self.betas))
        object.__setattr__(self, "risk_free_rate", float(self.risk_free_rate))

    @property
    def n_assets(self) -> int:
        return self.weights.shape[0]

    @property
    def active(self) -> np.ndarray:
        """Mask of assets with strictly positive weight."""
        return self.weights > 0

    def with_betas(self, betas) -> "MarketParams":
        return MarketParams(self.weights, betas, self.risk_free_rate)

    def with_rate(self, r: float) -> "MarketParams":
        return MarketParams(self.weights, self.betas, r)

    def restrict(self, mask) -> "MarketParams":
        mask = np.asarray(mask, dtype=bool)
        return MarketParams(self.weights[mask], self.betas[mask], self.risk_free_rate)


def validate_market(params: MarketParams, tol: float = CONSTRAINT_TOL) -> MarketParams:
    """Return ``params`` unchanged if it describes a valid market, else raise."""
    w, b, r = params.weights, params.betas, params.risk_free_rate
    if w.shape != b.shape:
        raise LengthMismatch(f"weights have length {w.size}, betas have length {b.size}")
    if w.size < 1:
        raise LengthMismatch("market must contain at least one asset")
    if not np.isfinite(r):
        raise NonFiniteInput(f"risk_free_rate={r!r} is not finite")
    for name, vec in (("weights", w), ("betas", b)):
        bad = np.flatnonzero(~np.isfinite(vec))
        if bad.size:
            i = int(bad[0])
            raise NonFiniteInput(f"{name}[{i}]={float(vec[i])!r} is not finite")
    neg = np.flatnonzero(w < 0)
    if neg.size:
        i = int(neg[0])
        raise NegativeWeight(f"weights[{i}]={float(w[i])!r} is negative")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise WeightsNotNormalized(f"weights sum to {float(total)!r}, expected 1")
    wb = float(w @ b)
    if abs(wb - 1.0) > tol:
        raise BetaConstraintViolated(f"w @ beta = {wb!r}, expected 1")
    return params


@dataclass(frozen=True)
class SystemMatrix:
    d: np.ndarray
    reduced: np.ndarray
    removed_row: int
    rank_estimate: int
    singular_values: np.ndarray = field(repr=False)


def numerical_rank(sv: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Count singular values above ``rtol`` times the largest."""
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def _full_row_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    if a.shape[0] == 0:
        return True
    sv = np.linalg.svd(a, compute_uv=False)
    return numerical_rank(sv, rtol) == a.shape[0]


def build_system_matrix(params: MarketParams, removed_row: int | None = None) -> SystemMatrix:
    """Form ``D = I - beta w^T`` and drop one redundant row.

    By default the row of the largest weight is removed; if that leaves a
    rank-deficient system every other row is tried in turn. Passing
    ``removed_row`` forces the choice and raises if it is not admissible.
    """
    w, b = params.weights, params.betas
    n = w.size
    d = np.eye(n) - np.outer(b, w)
    sv = np.linalg.svd(d, compute_uv=False)
    rank = numerical_rank(sv)
    if rank < n - 1:
        raise RankDeficiencyBeyondOne(
            f"numerical rank of I - beta w^T is {rank}, expected {n - 1}; "
            "remove duplicated or degenerate assets"
        )
    if removed_row is not None:
        if not 0 <= removed_row < n:
            raise IndexError(f"removed_row={removed_row} out of range for {n} assets")
        candidates = [removed_row]
    else:
        first = int(np.argmax(w))
        candidates = [first] + [k for k in range(n) if k != first]
    for k in candidates:
        reduced = np.delete(d, k, axis=0)
        if _full_row_rank(reduced):
            return SystemMatrix(d=d, reduced=reduced, removed_row=k,
                                rank_estimate=rank, singular_values=sv)
    raise RankDeficiencyBeyondOne(
        f"no admissible row to remove among {candidates}; reduced system stays rank-deficient"
    )


def reduced_pseudoinverse(sys: SystemMatrix) -> np.ndarray:
    """Right inverse ``A^T (A A^T)^{-1}`` of the reduced matrix ``A``.

    Uses a Cholesky factorization of the Gram matrix and falls back to an SVD
    pseudoinverse when the factorization breaks down.
    """
    a = sys.reduced
    if a.shape[0] == 0:
        return np.zeros((a.shape[1], 0))
    gram = a @ a.T
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=True)
        pinv = scipy.linalg.cho_solve(factor, a).T
        if np.all(np.isfinite(pinv)):
            return pinv
    except (np.linalg.LinAlgError, ValueError):
        pass
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise SingularGram(
            f"reduced Gram matrix is singular: smallest singular value {s[-1]:.3e}, "
            f"largest {s[0]:.3e}"
        )
    return (vt.T / s) @ u.T


def embed_pseudoinverse(pinv: np.ndarray, removed_row: int) -> np.ndarray:
    """Pad an ``N x (N-1)`` right inverse to ``N x N`` with a zero column."""
    return np.insert(pinv, removed_row, 0.0, axis=1)


@dataclass(frozen=True)
class EquilibriumSolution:
    """Solved expected returns.

    ``mu`` carries NaN for zero-weight assets, which are removed before
    solving. ``removed_row`` indexes the original asset list and is ``None``
    when a single asset carries all weight; that case is the documented
    limit ``mu_i = r`` (``documented_limit`` is set) rather than a
    pseudoinverse output.
    """

    mu: np.ndarray
    market_return: float
    capm_residual_norm: float
    removed_row: int | None
    min_norm_certificate: float
    active: np.ndarray
    documented_limit: bool = False
    rank_estimate: int | None = None


def market_return(params: MarketParams, mu) -> float:
    """Weighted average ``w @ mu``; zero-weight entries are ignored."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape != params.weights.shape:
        raise LengthMismatch(f"mu has length {mu.size}, market has {params.n_assets} assets")
    act = params.active
    return float(params.weights[act] @ mu[act])


def capm_residual(params: MarketParams, mu) -> np.ndarray:
    """Entrywise ``mu - r - beta (w @ mu - r)``."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    r = params.risk_free_rate
    mm = market_return(params, mu)
    return mu - r - params.betas * (mm - r)


def _reduced_solve(weights, betas, r, removed_row):
    """Minimum-norm solution of the reduced system, no validation.

    Also used off the constraint surface by the finite-difference oracle.
    """
    params = MarketParams(weights, betas, r)
    sys = build_system_matrix(params, removed_row=removed_row)
    pinv = reduced_pseudoinverse(sys)
    rhs = np.delete((1.0 - params.betas) * r, sys.removed_row)
    return pinv @ rhs, sys


def solve_equilibrium(params: MarketParams, removed_row: int | None = None) -> EquilibriumSolution:
    """Minimum-norm CAPM-consistent returns with ``mu_M = w @ mu``.

    ``removed_row`` (original indexing) overrides the default elimination
    choice; it must refer to a positive-weight asset.
    """
    validate_market(params)
    n = params.n_assets
    act = params.active
    idx = np.flatnonzero(act)
    sub = params.restrict(act)
    r = params.risk_free_rate
    mu = np.full(n, np.nan)

    if idx.size == 1:
        # w = e_i forces beta_i = 1 and D = [0]; take the limit value mu_i = r.
        mu[idx[0]] = r
        res = capm_residual(params, mu)
        return EquilibriumSolution(
            mu=mu, market_return=r, capm_residual_norm=float(np.nanmax(np.abs(res))),
            removed_row=None, min_norm_certificate=float(sub.betas[0] * r),
            active=act, documented_limit=True, rank_estimate=0,
        )

    sub_row = None
    if removed_row is not None:
        hits = np.flatnonzero(idx == removed_row)
        if hits.size == 0:
            raise IndexError(f"removed_row={removed_row} is not a positive-weight asset")
        sub_row = int(hits[0])
    mu_sub, sys = _reduced_solve(sub.weights, sub.betas, r, sub_row)
    mu[idx] = mu_sub
    res = capm_residual(sub, mu_sub)
    return EquilibriumSolution(
        mu=mu,
        market_return=float(sub.weights @ mu_sub),
        capm_residual_norm=float(np.max(np.abs(res))),
        removed_row=int(idx[sys.removed_row]),
        min_norm_certificate=float(sub.betas @ mu_sub),
        active=act,
        rank_estimate=sys.rank_estimate,
    )


@dataclass(frozen=True)
class SolutionFamily:
    """Affine line ``base_point + t * direction`` of CAPM-consistent returns.

    Along the line the market return equals ``t``.
    """

    base_point: np.ndarray
    direction: np.ndarray
    min_norm_parameter: float

    def at(self, t: float) -> np.ndarray:
        return self.base_point + t * self.direction

    @property
    def min_norm_point(self) -> np.ndarray:
        return self.at(self.min_norm_parameter)


def solution_family_oracle(params: MarketParams) -> SolutionFamily:
    validate_market(params)
    b = params.betas
    r = params.risk_free_rate
    bb = float(b @ b)
    if bb == 0.0:
        raise ZeroBetaVector("beta is the zero vector")
    return SolutionFamily(
        base_point=(1.0 - b) * r,
        direction=b.copy(),
        min_norm_parameter=r * (1.0 - b.sum() / bb),
    )


def market_return_over_r(betas) -> float:
    """``mu_M / r`` of the minimum-norm equilibrium, from the solution family.

    Valid for markets without zero weights: ``1 - sum(beta) / |beta|^2``.
    """
    b = np.asarray(betas, dtype=float)
    return 1.0 - b.sum() / (b @ b)


def market_return_over_r_gradient(betas) -> np.ndarray:
    """Gradient of :func:`market_return_over_r` with respect to ``beta``."""
    b = np.asarray(betas, dtype=float)
    s = b.sum()
    q = b @ b
    return (2.0 * s * b - q) / (q * q)
