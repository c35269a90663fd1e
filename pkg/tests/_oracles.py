"""Independent oracles used by the test suite.

Everything here recomputes expected values through a different route than
the library: dense joint-Gaussian algebra built from raw event lists,
exhaustive enumeration, grid quadrature, and hand-simulated recursions.
"""

from itertools import combinations

import numpy as np
from scipy.special import betaln


def dense_gamma_posterior(mu_gamma, sigma_gamma, sigma1, sigma2, pulls,
                          rewards, features):
    """Coefficient posterior from the uncollapsed observation-level matrices.

    pulls: list of item indices, one per scalar observation (in order);
    rewards: matching observed values.
    """
    mu_gamma = np.asarray(mu_gamma, dtype=float)
    phi = features[np.asarray(pulls, dtype=int)]
    y = np.asarray(rewards, dtype=float)
    c_t = len(pulls)
    n_items = features.shape[0]
    z = np.zeros((n_items, c_t))
    for a, item in enumerate(pulls):
        z[item, a] = 1.0
    big = (sigma2**2 * np.eye(c_t) + phi @ sigma_gamma @ phi.T
           + sigma1**2 * z.T @ z)
    big_inv = np.linalg.inv(big)
    mean = mu_gamma + sigma_gamma @ phi.T @ big_inv @ (y - phi @ mu_gamma)
    cov = sigma_gamma - sigma_gamma @ phi.T @ big_inv @ phi @ sigma_gamma
    return mean, cov


def dense_theta_marginal(mu_gamma, sigma_gamma, sigma1, sigma2, pulls,
                         rewards, features):
    """Joint posterior over all item means from the dense appendix-style form."""
    mu_gamma = np.asarray(mu_gamma, dtype=float)
    n_items = features.shape[0]
    phi = features[np.asarray(pulls, dtype=int)]
    y = np.asarray(rewards, dtype=float)
    c_t = len(pulls)
    z = np.zeros((n_items, c_t))
    for a, item in enumerate(pulls):
        z[item, a] = 1.0
    prior_cov = features @ sigma_gamma @ features.T + sigma1**2 * np.eye(n_items)
    prior_mean = features @ mu_gamma
    big = (sigma2**2 * np.eye(c_t) + phi @ sigma_gamma @ phi.T
           + sigma1**2 * z.T @ z)
    big_inv = np.linalg.inv(big)
    cross = features @ sigma_gamma @ phi.T + sigma1**2 * z
    mean = prior_mean + cross @ big_inv @ (y - phi @ mu_gamma)
    cov = prior_cov - cross @ big_inv @ cross.T
    return mean, cov


def dense_log_marginal(mu_gamma, sigma_gamma, sigma1, sigma2, pulls, rewards,
                       features):
    """Log density of the observed rewards with everything integrated out."""
    phi = features[np.asarray(pulls, dtype=int)]
    y = np.asarray(rewards, dtype=float)
    c_t = len(pulls)
    n_items = features.shape[0]
    z = np.zeros((n_items, c_t))
    for a, item in enumerate(pulls):
        z[item, a] = 1.0
    cov = (sigma2**2 * np.eye(c_t) + phi @ sigma_gamma @ phi.T
           + sigma1**2 * z.T @ z)
    resid = y - phi @ np.asarray(mu_gamma, dtype=float)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    quad = resid @ np.linalg.solve(cov, resid)
    return -0.5 * (quad + logdet + c_t * np.log(2.0 * np.pi))


def random_lmm_history(rng, n_items, dim, k, t, unit_norm=False):
    """Random features, coefficients and a uniformly-played event list."""
    features = rng.standard_normal((n_items, dim))
    if unit_norm:
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        features = features / np.maximum(norms, 1.0)
    gamma = rng.standard_normal(dim)
    pulls, rewards = [], []
    for _ in range(t):
        for item in rng.choice(n_items, size=k, replace=False):
            pulls.append(int(item))
            rewards.append(float(features[item] @ gamma
                                 + rng.standard_normal()))
    return features, pulls, rewards


def stats_from_pulls(n_items, pulls, rewards):
    n = np.zeros(n_items, dtype=np.int64)
    s = np.zeros(n_items)
    q = np.zeros(n_items)
    for item, y in zip(pulls, rewards):
        n[item] += 1
        s[item] += y
        q[item] += y * y
    return n, s, q


def brute_force_assortment(v, eta, k):
    """Exhaustive search over all subsets of size <= k."""
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    best_set, best_val = (), 0.0
    for size in range(1, k + 1):
        for subset in combinations(range(v.size), size):
            idx = list(subset)
            val = float(np.sum(eta[idx] * v[idx]) / (1.0 + np.sum(v[idx])))
            if val > best_val:
                best_set, best_val = subset, val
    return tuple(sorted(best_set)), best_val


def cascade_examined_positions(w_values):
    """Hand-simulated examination recursion for a ranked list.

    w_values: attraction indicators per displayed position.  Returns the
    list of examined positions and the click position (or None).
    """
    examined = []
    e = 1
    click = None
    for pos, w in enumerate(w_values):
        if e == 0:
            break
        examined.append(pos)
        if w == 1:
            click = pos
            break
    return examined, click


def grid_beta_logistic_posterior_mean(psi, shifted, a_count, b_count,
                                      prior_mean=0.0, prior_var=1.0,
                                      lo=-6.0, hi=6.0, points=2001):
    """1-D quadrature posterior mean of the coefficient.

    The item-level mean is marginalized analytically (Beta-function ratio)
    on a uniform grid over [lo, hi]; the item has feature x = 1.
    """
    grid = np.linspace(lo, hi, points)
    m = 1.0 / (1.0 + np.exp(-grid))
    if shifted:
        m = 0.5 * (m + 1.0)
    a0 = m * psi
    b0 = (1.0 - m) * psi
    log_post = (-0.5 * (grid - prior_mean)**2 / prior_var
                + betaln(a0 + a_count, b0 + b_count) - betaln(a0, b0))
    w = np.exp(log_post - log_post.max())
    w /= w.sum()
    return float(np.sum(w * grid))
