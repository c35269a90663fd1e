"""Exact Gaussian posteriors for the linear-mixed observation model.

The model: coefficient vector gamma ~ N(mu_gamma, sigma_gamma); per-item
mean theta_i ~ N(x_i^T gamma, sigma1^2); each pull of item i returns
N(theta_i, sigma2^2).  Everything here is computable from the collapsed
per-item statistics (pull count, reward sum), so posteriors cost O(N d^2)
regardless of history length.  Dense joint forms are kept for the
N-dimensional marginal (test-oracle scale only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .core import GaussianStats, ItemCatalog


class DenseLimitError(ValueError):
    """Raised when a dense N x N computation is requested beyond its limit."""


def chol_spd(mat: np.ndarray) -> np.ndarray:
    """Cholesky factor with a single bounded jitter retry.

    On failure adds 1e-10 * trace/d to the diagonal once; a second failure
    is a hard error.
    """
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        d = mat.shape[0]
        jitter = 1e-10 * np.trace(mat) / d
        return np.linalg.cholesky(mat + jitter * np.eye(d))


def _logdet_from_chol(chol: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


@dataclass(frozen=True)
class LmmSpec:
    """Known hyperparameters of the linear-mixed model."""

    mu_gamma: np.ndarray
    sigma_gamma: np.ndarray
    sigma1: float
    sigma2: float

    def __post_init__(self):
        mu = np.asarray(self.mu_gamma, dtype=np.float64)
        cov = np.asarray(self.sigma_gamma, dtype=np.float64)
        if mu.ndim != 1 or cov.shape != (mu.size, mu.size):
            raise ValueError("mu_gamma and sigma_gamma shapes are inconsistent")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("sigma_gamma must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("sigma_gamma must be positive definite") from None
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigma1 and sigma2 must be positive")
        object.__setattr__(self, "mu_gamma", mu)
        object.__setattr__(self, "sigma_gamma", cov)

    @property
    def dim(self) -> int:
        return self.mu_gamma.size


class GaussianBelief:
    """Multivariate Gaussian stored in information form.

    Holds (precision, shift) with shift = precision @ mean; the moment form
    is materialized lazily through Cholesky factorizations.
    """

    def __init__(self, precision: np.ndarray, shift: np.ndarray):
        precision = np.asarray(precision, dtype=np.float64)
        shift = np.asarray(shift, dtype=np.float64)
        if precision.shape != (shift.size, shift.size):
            raise ValueError("precision and shift shapes are inconsistent")
        self.precision = 0.5 * (precision + precision.T)
        self.shift = shift
        self._chol_prec = None
        self._mean = None
        self._cov = None
        self._chol_cov = None

    @classmethod
    def from_moments(cls, mean, cov) -> "GaussianBelief":
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        chol = chol_spd(cov)
        precision = cho_solve((chol, True), np.eye(mean.size))
        belief = cls(precision, precision @ mean)
        belief._mean = mean.copy()
        belief._cov = 0.5 * (cov + cov.T)
        return belief

    @property
    def dim(self) -> int:
        return self.shift.size

    def _prec_chol(self):
        if self._chol_prec is None:
            self._chol_prec = chol_spd(self.precision)
        return self._chol_prec

    @property
    def mean(self) -> np.ndarray:
        if self._mean is None:
            self._mean = cho_solve((self._prec_chol(), True), self.shift)
        return self._mean

    @property
    def covariance(self) -> np.ndarray:
        if self._cov is None:
            cov = cho_solve((self._prec_chol(), True), np.eye(self.dim))
            self._cov = 0.5 * (cov + cov.T)
        return self._cov

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance)

    def logdet_precision(self) -> float:
        return _logdet_from_chol(self._prec_chol())

    def sample(self, rng: np.random.Generator, size: int | None = None,
               z: np.ndarray | None = None) -> np.ndarray:
        """Draw via the Cholesky factor of the covariance."""
        if self._chol_cov is None:
            self._chol_cov = chol_spd(self.covariance)
        if z is None:
            shape = (self.dim,) if size is None else (size, self.dim)
            z = rng.standard_normal(shape)
        return self.mean + z @ self._chol_cov.T


@dataclass(frozen=True)
class PerItemGaussian:
    """Independent per-item Gaussian posteriors (position-indexed)."""

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        if np.any(self.variances <= 0):
            raise ValueError("per-item variances must be positive")

    def sample(self, rng: np.random.Generator,
               z: np.ndarray | None = None) -> np.ndarray:
        if z is None:
            z = rng.standard_normal(self.means.size)
        return self.means + np.sqrt(self.variances) * z


def _check_stats(stats: GaussianStats):
    if np.any(stats.n < 0):
        raise ValueError("pull counts must be non-negative")
    idle = stats.n == 0
    if np.any(stats.reward_sum[idle] != 0):
        raise ValueError("reward sums must be zero for unpulled items")


def _ordered(catalog: ItemCatalog, *arrays):
    # Reductions run in item-id order so results are bit-identical under
    # any relabeling of catalog positions.
    order = np.argsort(catalog.item_ids)
    return (catalog.features[order],) + tuple(np.asarray(a)[order] for a in arrays)


def _gamma_information_form(spec: LmmSpec, stats: GaussianStats,
                            catalog: ItemCatalog):
    x, n, s = _ordered(catalog, stats.n, stats.reward_sum)
    denom = spec.sigma2**2 + spec.sigma1**2 * n
    w = n / denom
    u = s / denom
    chol_prior = chol_spd(spec.sigma_gamma)
    prec_prior = cho_solve((chol_prior, True), np.eye(spec.dim))
    prec_prior = 0.5 * (prec_prior + prec_prior.T)
    precision = prec_prior + (x * w[:, None]).T @ x
    shift = prec_prior @ spec.mu_gamma + x.T @ u
    return precision, shift, chol_prior


def posterior_gamma(spec: LmmSpec, stats: GaussianStats,
                    catalog: ItemCatalog) -> GaussianBelief:
    """Posterior over the coefficient vector from collapsed statistics."""
    _check_stats(stats)
    precision, shift, _ = _gamma_information_form(spec, stats, catalog)
    return GaussianBelief(precision, shift)


def posterior_theta_given_gamma(spec: LmmSpec, stats: GaussianStats,
                                catalog: ItemCatalog,
                                gamma: np.ndarray) -> PerItemGaussian:
    """Conditional per-item posteriors given a fixed coefficient vector."""
    _check_stats(stats)
    prec = spec.sigma1**-2 + spec.sigma2**-2 * stats.n
    variances = 1.0 / prec
    means = variances * (spec.sigma1**-2 * (catalog.features @ gamma)
                         + spec.sigma2**-2 * stats.reward_sum)
    return PerItemGaussian(means, variances)


def posterior_theta_marginal(spec: LmmSpec, stats: GaussianStats,
                             catalog: ItemCatalog,
                             dense_limit: int = 200) -> GaussianBelief:
    """Joint N-dimensional posterior with the coefficients integrated out.

    Dense N x N computation, intended as an oracle for composing
    posterior_gamma with posterior_theta_given_gamma; refuses N beyond
    ``dense_limit``.
    """
    _check_stats(stats)
    n_items = catalog.n_items
    if n_items > dense_limit:
        raise DenseLimitError(
            f"dense marginal limited to N <= {dense_limit}, got {n_items}")
    x = catalog.features
    prior_cov = x @ spec.sigma_gamma @ x.T + spec.sigma1**2 * np.eye(n_items)
    prior_prec = cho_solve((chol_spd(prior_cov), True), np.eye(n_items))
    prior_prec = 0.5 * (prior_prec + prior_prec.T)
    precision = prior_prec + np.diag(spec.sigma2**-2 * stats.n)
    shift = prior_prec @ (x @ spec.mu_gamma) + spec.sigma2**-2 * stats.reward_sum
    return GaussianBelief(precision, shift)


def gamma_information_gain(spec: LmmSpec, stats: GaussianStats,
                           catalog: ItemCatalog) -> float:
    """Information gained about the coefficients by one history.

    Equals 0.5 * logdet(prior covariance x posterior precision); zero for
    an empty history and non-decreasing in the observations.
    """
    _check_stats(stats)
    precision, _, chol_prior = _gamma_information_form(spec, stats, catalog)
    value = 0.5 * (_logdet_from_chol(chol_prior)
                   + _logdet_from_chol(chol_spd(precision)))
    return max(value, 0.0)


def theta_information_gain(spec: LmmSpec, n_i: int) -> float:
    """Information gained about one item's mean from n_i of its pulls."""
    if n_i < 0:
        raise ValueError("pull count must be non-negative")
    return 0.5 * math.log1p(spec.sigma1**2 / spec.sigma2**2 * n_i)


def log_marginal_likelihood(spec: LmmSpec, stats: GaussianStats,
                            catalog: ItemCatalog) -> float:
    """Exact log marginal likelihood of the observed rewards.

    Both the per-item means and the coefficient vector are integrated out
    analytically; needs only the collapsed statistics (count, sum, sum of
    squares).  Used by the empirical-Bayes grid search over sigma1.
    """
    _check_stats(stats)
    x, n, s, q = _ordered(catalog, stats.n, stats.reward_sum,
                          stats.reward_sumsq)
    pulled = n > 0
    n_p, s_p, q_p = n[pulled], s[pulled], q[pulled]
    sig2sq = spec.sigma2**2
    denom = sig2sq + spec.sigma1**2 * n_p
    const = -0.5 * float(np.sum(
        q_p / sig2sq
        - spec.sigma1**2 * s_p**2 / (sig2sq * denom)
        + (n_p - 1) * math.log(sig2sq)
        + np.log(denom)
        + n_p * math.log(2.0 * math.pi)
    ))
    precision, shift, chol_prior = _gamma_information_form(spec, stats, catalog)
    chol_post = chol_spd(precision)
    half_quad_post = 0.5 * float(shift @ cho_solve((chol_post, True), shift))
    zmu = solve_triangular(chol_prior, spec.mu_gamma, lower=True)
    half_quad_prior = 0.5 * float(zmu @ zmu)
    return (const
            - 0.5 * _logdet_from_chol(chol_prior)
            - 0.5 * _logdet_from_chol(chol_post)
            + half_quad_post - half_quad_prior)


def blr_gamma_posterior(mu_gamma, sigma_gamma, sigma2: float,
                        stats: GaussianStats,
                        catalog: ItemCatalog) -> GaussianBelief:
    """Coefficient posterior under the degenerate model theta_i = x_i^T gamma.

    Textbook Bayesian linear regression with observation noise sigma2; the
    sigma1 -> 0 limit of posterior_gamma.
    """
    _check_stats(stats)
    x, n, s = _ordered(catalog, stats.n, stats.reward_sum)
    chol_prior = chol_spd(np.asarray(sigma_gamma, dtype=np.float64))
    prec_prior = cho_solve((chol_prior, True), np.eye(len(mu_gamma)))
    prec_prior = 0.5 * (prec_prior + prec_prior.T)
    w = n / sigma2**2
    precision = prec_prior + (x * w[:, None]).T @ x
    shift = prec_prior @ np.asarray(mu_gamma, dtype=np.float64) + x.T @ (s / sigma2**2)
    return GaussianBelief(precision, shift)
