"""Greedy action oracles: top-K selection and revenue-optimal assortments.

Ties are always broken toward the smaller item index so that regret traces
are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RankedListAction, SubsetAction


@dataclass(frozen=True)
class AssortmentSolverConfig:
    tolerance: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.tolerance <= 0 or self.max_iter < 1:
            raise ValueError("tolerance must be positive, max_iter >= 1")


def _descending_order(theta: np.ndarray) -> np.ndarray:
    # Stable sort on the negated values: equal entries keep index order.
    return np.argsort(-np.asarray(theta, dtype=np.float64), kind="stable")


def top_k(theta, k: int) -> SubsetAction:
    """The k indices with the largest values; ties go to smaller indices."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 0 <= k <= theta.size:
        raise ValueError(f"k={k} out of range for {theta.size} items")
    return SubsetAction(tuple(int(i) for i in _descending_order(theta)[:k]))


def rank_top_k(theta, k: int) -> RankedListAction:
    """As top_k but ordered by value descending."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 0 <= k <= theta.size:
        raise ValueError(f"k={k} out of range for {theta.size} items")
    return RankedListAction(tuple(int(i) for i in _descending_order(theta)[:k]))


def assortment_revenue(v, eta, items) -> float:
    """Expected revenue of offering ``items``: sum eta*v / (1 + sum v)."""
    v = np.asarray(v, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    idx = np.asarray(tuple(items), dtype=np.int64)
    if idx.size == 0:
        return 0.0
    return float(np.sum(eta[idx] * v[idx]) / (1.0 + np.sum(v[idx])))


def _best_set_value(v, eta, k, lam):
    """max over |A| <= k of sum_{i in A} v_i (eta_i - lam), and that A."""
    values = v * (eta - lam)
    order = _descending_order(values)
    chosen = [int(i) for i in order[:k] if values[i] > 0]
    total = float(values[chosen].sum()) if chosen else 0.0
    return total, chosen


def optimal_assortment(v, eta, k: int,
                       config: AssortmentSolverConfig | None = None) -> SubsetAction:
    """Revenue-maximizing assortment of at most k items.

    Parametric fixed-point search on the candidate revenue lam: the best
    assortment at lam clears lam exactly when the true optimum is >= lam,
    so bisection on [0, max eta] converges to the optimal revenue and the
    maximizer set.  Result is within tolerance * (1 + sum v) of optimal.
    """
    config = config or AssortmentSolverConfig()
    v = np.asarray(v, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if v.shape != eta.shape or v.ndim != 1:
        raise ValueError("v and eta must be 1-D arrays of equal length")
    if np.any(~np.isfinite(v)) or np.any(~np.isfinite(eta)):
        raise ValueError("v and eta must be finite")
    if np.any(v <= 0) or np.any(eta <= 0):
        raise ValueError("v and eta must be positive")
    if not 0 <= k <= v.size:
        raise ValueError(f"k={k} out of range for {v.size} items")
    if k == 0:
        return SubsetAction(())
    lo, hi = 0.0, float(eta.max())
    for _ in range(config.max_iter):
        if hi - lo <= config.tolerance:
            break
        mid = 0.5 * (lo + hi)
        total, _ = _best_set_value(v, eta, k, mid)
        if total >= mid:
            lo = mid
        else:
            hi = mid
    else:
        raise RuntimeError(
            f"assortment search did not converge: bracket [{lo}, {hi}]")
    _, chosen = _best_set_value(v, eta, k, lo)
    return SubsetAction(tuple(chosen))
