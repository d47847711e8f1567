"""Market weight laws, concentration, and sampling of admissible betas."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleBounds, UndefinedForSingleAsset, WeightsNotNormalized

DEFAULT_BETA_BOUNDS = (-10.0, 10.0)


@dataclass(frozen=True)
class WeightLaw:
    """Power law ``w_i ~ i^(-gamma)`` over ``n_assets`` assets."""

    gamma: float
    n_assets: int

    def __post_init__(self):
        if self.n_assets < 1:
            raise ValueError(f"n_assets must be positive, got {self.n_assets}")
        if not (self.gamma >= 0):
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    def weights(self) -> np.ndarray:
        return power_law_weights(self)


def power_law_weights(law: WeightLaw) -> np.ndarray:
    n, g = law.n_assets, float(law.gamma)
    if g == 0.0:
        return np.full(n, 1.0 / n)
    if np.isinf(g):
        w = np.zeros(n)
        w[0] = 1.0
        return w
    # log-space keeps large gamma from underflowing the leading terms
    logw = -g * np.log(np.arange(1, n + 1, dtype=float))
    w = np.exp(logw - logw.max())
    return w / w.sum()


def normalized_hhi(weights) -> float:
    """Herfindahl index rescaled so equal weights give 0 and one asset gives 1.

    Computed as ``sum((w - 1/N)^2) / (1 - 1/N)``, which equals
    ``(w @ w - 1/N) / (1 - 1/N)`` for normalized weights and is exactly zero
    for equal weights.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    if n < 2:
        raise UndefinedForSingleAsset("normalized HHI is undefined for a single asset")
    if abs(w.sum() - 1.0) > 1e-12:
        raise WeightsNotNormalized(f"weights sum to {w.sum()!r}, expected 1")
    dev = w - 1.0 / n
    return float(min(1.0, (dev @ dev) / (1.0 - 1.0 / n)))


def _check_bounds(weights, bounds):
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo <= hi:
        raise InfeasibleBounds(f"empty beta interval [{lo}, {hi}]")
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    # w @ beta ranges over [lo * sum(w), hi * sum(w)] inside the box
    if lo * s > 1.0 + 1e-12 or hi * s < 1.0 - 1e-12:
        raise InfeasibleBounds(
            f"no beta in [{lo}, {hi}]^N satisfies w @ beta = 1 (achievable range "
            f"[{lo * s}, {hi * s}])"
        )
    return lo, hi


def project_to_constraint(beta, weights, bounds=DEFAULT_BETA_BOUNDS) -> np.ndarray:
    """Euclidean projection onto ``{w @ beta = 1} ∩ [lo, hi]^N``.

    The projection has the form ``clip(beta + lam * w, lo, hi)``; ``lam`` is
    found by root finding on the monotone map ``lam -> w @ clip(...)``, then
    the free coordinates absorb the remaining roundoff.
    """
    lo, hi = _check_bounds(weights, bounds)
    w = np.asarray(weights, dtype=float)
    z = np.asarray(beta, dtype=float)
    ww = w @ w

    lam = (1.0 - w @ z) / ww
    x = z + lam * w
    if not (np.all(x >= lo) and np.all(x <= hi)):
        pos = w > 0

        def excess(t):
            return w @ np.clip(z + t * w, lo, hi) - 1.0

        t_lo = np.min((lo - z[pos]) / w[pos])
        t_hi = np.max((hi - z[pos]) / w[pos])
        if excess(t_lo) >= 0:
            lam = t_lo
        elif excess(t_hi) <= 0:
            lam = t_hi
        else:
            lam = brentq(excess, t_lo, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        x = np.clip(z + lam * w, lo, hi)

    for _ in range(3):
        gap = 1.0 - w @ x
        if abs(gap) <= 1e-14:
            break
        free = (x > lo) & (x < hi) & (w > 0)
        if not free.any():
            free = w > 0
        wf = w[free]
        x[free] = np.clip(x[free] + gap * wf / (wf @ wf), lo, hi)
    return x


def sample_constrained_beta(weights, bounds=DEFAULT_BETA_BOUNDS, seed=0) -> np.ndarray:
    """Draw ``beta`` uniformly in the box and project onto ``w @ beta = 1``.

    ``seed`` may be an int or a sequence of ints (passed to
    ``numpy.random.default_rng``).
    """
    lo, hi = _check_bounds(weights, bounds)
    w = np.asarray(weights, dtype=float)
    rng = np.random.default_rng(seed)
    raw = rng.uniform(lo, hi, size=w.size)
    return project_to_constraint(raw, w, (lo, hi))


def dirichlet_weights(n_assets: int, seed=0, concentration: float = 1.0) -> np.ndarray:
    """Random normalized weights (all positive), for tests and experiments."""
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.full(n_assets, concentration))
    w = np.maximum(w, 1e-300)
    return w / w.sum()
