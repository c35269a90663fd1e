"""Beta-family generalization models driven by a logistic feature link.

Item-level means theta_i get mean-precision Beta priors whose mean is a
logistic transform of x_i^T gamma (optionally shifted into (1/2, 1) for
the purchase model).  Conjugate updates handle binary and epoch-count
feedback; the coefficient posterior is sampled with an adaptive
Metropolis-within-Gibbs chain whose hot loop lives in ``kernels``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import BernoulliStats, GeometricStats, ItemCatalog
from .lmm import GaussianBelief
from .rng import derive_kernel_seed

logger = logging.getLogger(__name__)

THETA_EPS = 1e-12


@dataclass(frozen=True)
class BetaLogisticSpec:
    """Mean-precision Beta prior with a (possibly shifted) logistic mean."""

    psi: float
    shifted: bool
    gamma_prior: GaussianBelief

    def __post_init__(self):
        if not self.psi > 0:
            raise ValueError("precision psi must be positive")

    @property
    def dim(self) -> int:
        return self.gamma_prior.dim


@dataclass(frozen=True)
class BetaBelief:
    """Per-item Beta(alpha, beta) parameters (position-indexed)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if np.any(self.alpha <= 0) or np.any(self.beta <= 0):
            raise ValueError("Beta parameters must be positive")

    @property
    def mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


@dataclass
class GammaSamplerConfig:
    """Metropolis-within-Gibbs settings for the coefficient posterior."""

    n_burnin: int = 500
    n_keep: int = 500
    proposal_scale: float | None = None  # default 0.1 / sqrt(d)
    adapt_target: float = 0.3
    gibbs_theta_refresh: bool = True
    refresh_iters: int = 50

    def __post_init__(self):
        if self.n_burnin < 0 or self.n_keep < 1 or self.refresh_iters < 1:
            raise ValueError("invalid chain lengths")
        if self.proposal_scale is not None and self.proposal_scale <= 0:
            raise ValueError("proposal scale must be positive")
        if not 0 < self.adapt_target < 1:
            raise ValueError("adapt_target must lie in (0, 1)")

    def initial_scale(self, dim: int) -> float:
        if self.proposal_scale is not None:
            return self.proposal_scale
        return 0.1 / np.sqrt(dim)


def link_mean(spec: BetaLogisticSpec, z: np.ndarray) -> np.ndarray:
    """Stable logistic (or shifted-logistic) mean, clipped inside (0, 1)."""
    z = np.asarray(z, dtype=np.float64)
    m = np.empty_like(z)
    pos = z >= 0
    m[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    m[~pos] = e / (1.0 + e)
    if spec.shifted:
        m = 0.5 * (m + 1.0)
    return np.clip(m, THETA_EPS, 1.0 - THETA_EPS)


def prior_from_gamma(spec: BetaLogisticSpec, catalog: ItemCatalog,
                     gamma: np.ndarray) -> BetaBelief:
    """Feature-guided prior Beta(m * psi, (1 - m) * psi) for every item."""
    m = link_mean(spec, catalog.features @ gamma)
    return BetaBelief(m * spec.psi, (1.0 - m) * spec.psi)


def update_bernoulli(belief: BetaBelief, item: int, success: bool) -> BetaBelief:
    alpha = belief.alpha.copy()
    beta = belief.beta.copy()
    if success:
        alpha[item] += 1.0
    else:
        beta[item] += 1.0
    return BetaBelief(alpha, beta)


def update_geometric(belief: BetaBelief, item: int, purchases: int) -> BetaBelief:
    if purchases < 0:
        raise ValueError("purchase count must be non-negative")
    alpha = belief.alpha.copy()
    beta = belief.beta.copy()
    alpha[item] += 1.0
    beta[item] += float(purchases)
    return BetaBelief(alpha, beta)


def counts_pair(stats) -> tuple[np.ndarray, np.ndarray]:
    """Map sufficient statistics onto the shared (a, b) count pair.

    Binary feedback contributes (successes, failures); epoch feedback
    contributes (epochs, purchases).  Both enter the Beta updates and the
    chain target identically.
    """
    if isinstance(stats, BernoulliStats):
        return stats.successes.astype(np.float64), stats.failures.astype(np.float64)
    if isinstance(stats, GeometricStats):
        return stats.epochs.astype(np.float64), stats.purchases.astype(np.float64)
    raise TypeError(f"unsupported statistics type {type(stats).__name__}")


def posterior_from_stats(spec: BetaLogisticSpec, catalog: ItemCatalog,
                         gamma: np.ndarray, stats) -> BetaBelief:
    """Prior from the coefficients composed with all conjugate updates."""
    a_cnt, b_cnt = counts_pair(stats)
    prior = prior_from_gamma(spec, catalog, gamma)
    return BetaBelief(prior.alpha + a_cnt, prior.beta + b_cnt)


def sample_theta_given_gamma(spec: BetaLogisticSpec, catalog: ItemCatalog,
                             stats, gamma: np.ndarray,
                             rng: np.random.Generator) -> np.ndarray:
    """Independent per-item Beta draws from the conditional posterior.

    Draws are addressed by item id (one Beta variate per id slot), so the
    result is equivariant under relabeling of catalog positions.
    """
    post = posterior_from_stats(spec, catalog, gamma, stats)
    cap = catalog.id_capacity
    alpha = np.ones(cap)
    beta = np.ones(cap)
    alpha[catalog.item_ids] = post.alpha
    beta[catalog.item_ids] = post.beta
    draws = rng.beta(alpha, beta)[catalog.item_ids]
    return np.clip(draws, THETA_EPS, 1.0 - THETA_EPS)


class GammaChain:
    """Warm-startable Metropolis-within-Gibbs chain for the coefficients.

    The first run performs the full burn-in (with proposal-scale
    adaptation) plus n_keep iterations; later runs continue from the
    current state for config.refresh_iters iterations.  ``point_mass=True``
    targets the degenerate model theta_i = link(x_i^T gamma) instead of
    the hierarchical one.
    """

    def __init__(self, spec: BetaLogisticSpec, config: GammaSamplerConfig,
                 point_mass: bool = False):
        self.spec = spec
        self.config = config
        self.point_mass = point_mass
        self.gamma: np.ndarray | None = None
        self.scale = config.initial_scale(spec.dim)
        self.started = False
        self.clamp_count = 0
        self.theta_draw_count = 0
        self.accept_count = 0
        self.iter_count = 0
        self.last_draws: np.ndarray | None = None

    @property
    def clamp_fraction(self) -> float:
        if self.theta_draw_count == 0:
            return 0.0
        return self.clamp_count / self.theta_draw_count

    def _chain_inputs(self, catalog: ItemCatalog, stats):
        a_cnt, b_cnt = counts_pair(stats)
        order = np.argsort(catalog.item_ids)
        observed = order[(a_cnt[order] + b_cnt[order]) > 0]
        x = np.ascontiguousarray(catalog.features[observed])
        return x, a_cnt[observed], b_cnt[observed]

    def run(self, catalog: ItemCatalog, stats, rng: np.random.Generator,
            n_iter: int | None = None) -> np.ndarray:
        """Advance the chain and return the kept draws (last rows newest)."""
        x, a_cnt, b_cnt = self._chain_inputs(catalog, stats)
        prior = self.spec.gamma_prior
        if not self.started:
            iters = self.config.n_burnin + self.config.n_keep
            n_adapt = self.config.n_burnin
            gamma0 = prior.mean.copy()
        else:
            iters = self.config.refresh_iters if n_iter is None else n_iter
            n_adapt = 0
            gamma0 = self.gamma.copy()
        if n_iter is not None:
            iters = n_iter
        n_keep = min(self.config.n_keep, iters)
        draws, scale, n_acc, n_clamp = kernels.gamma_chain(
            x, a_cnt, b_cnt, float(self.spec.psi), bool(self.spec.shifted),
            bool(self.point_mass), prior.mean, prior.precision, gamma0,
            float(self.scale), float(self.config.adapt_target), int(n_adapt),
            bool(self.config.gibbs_theta_refresh), int(iters), int(n_keep),
            derive_kernel_seed(rng))
        self.gamma = draws[-1].copy()
        self.scale = scale
        self.started = True
        if n_clamp:
            logger.debug("clamped %d boundary draws of the item means "
                         "(total %d)", int(n_clamp),
                         self.clamp_count + int(n_clamp))
        self.clamp_count += int(n_clamp)
        self.accept_count += int(n_acc)
        self.iter_count += int(iters)
        if not self.point_mass:
            self.theta_draw_count += int(iters) * a_cnt.size
        self.last_draws = draws
        return draws

    def sample(self, catalog: ItemCatalog, stats,
               rng: np.random.Generator) -> np.ndarray:
        """One posterior coefficient draw (the chain state after a run)."""
        return self.run(catalog, stats, rng)[-1]


def sample_gamma_posterior(spec: BetaLogisticSpec, catalog: ItemCatalog,
                           stats, config: GammaSamplerConfig,
                           rng: np.random.Generator) -> np.ndarray:
    """Fresh-chain draw from the coefficient posterior given the history."""
    chain = GammaChain(spec, config)
    return chain.sample(catalog, stats, rng)
