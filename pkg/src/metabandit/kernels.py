"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The two sequential inner loops that dominate runtime live here: the
Metropolis-within-Gibbs chain for the meta-coefficient vector under the
Beta-logistic observation models, and the multinomial-choice epoch
simulator.  Both exist twice: a scalar-loop version compiled with numba
``@njit`` and a vectorized numpy version.  The active backend is chosen at
import time from the ``METABANDIT_NUMBA`` environment variable ("0",
"false", "off" or "no" selects the numpy path; anything else, or the
variable being unset, selects numba when it is importable).

Both backends are deterministic given the 32-bit kernel seed, but they are
not bit-identical to each other: numba's Beta sampler is a different
algorithm than numpy's legacy one.  See ``benchmarks/bench_kernels.py``
for a side-by-side timing and statistical-agreement check.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import gammaln

_THETA_EPS = 1e-12
_MEAN_EPS = 1e-12


def _numba_requested() -> bool:
    flag = os.environ.get("METABANDIT_NUMBA", "auto").strip().lower()
    return flag not in {"0", "false", "off", "no"}


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# Pure-numpy implementations
# ---------------------------------------------------------------------------


def _link_mean_np(z: np.ndarray, shifted: bool) -> np.ndarray:
    m = np.empty_like(z)
    pos = z >= 0
    m[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    m[~pos] = e / (1.0 + e)
    if shifted:
        m = 0.5 * (m + 1.0)
    return np.clip(m, _MEAN_EPS, 1.0 - _MEAN_EPS)


def _log_target_np(gamma, theta, x, a_cnt, b_cnt, psi, shifted, point_mass,
                   mu_q, prec_q):
    diff = gamma - mu_q
    lp = -0.5 * diff @ prec_q @ diff
    m = _link_mean_np(x @ gamma, shifted)
    if point_mass:
        lp += np.sum(a_cnt * np.log(m) + b_cnt * np.log1p(-m))
    else:
        am = m * psi
        bm = (1.0 - m) * psi
        lp += np.sum(
            (am - 1.0) * np.log(theta)
            + (bm - 1.0) * np.log1p(-theta)
            - gammaln(am)
            - gammaln(bm)
        )
        lp += theta.size * math.lgamma(psi)
    return lp


def gamma_chain_py(x, a_cnt, b_cnt, psi, shifted, point_mass, mu_q, prec_q,
                   gamma0, scale0, adapt_target, n_adapt, redraw_theta,
                   n_iter, n_keep, seed):
    """Vectorized fallback for the gamma chain.

    Returns (draws, final_scale, n_accept, n_clamped); ``draws`` holds the
    state after each of the last ``n_keep`` iterations.
    """
    rs = np.random.RandomState(seed & 0xFFFFFFFF)
    d = gamma0.size
    n_obs = a_cnt.size
    gamma = gamma0.copy()
    log_scale = math.log(scale0)
    draws = np.empty((n_keep, d))
    theta = np.full(n_obs, 0.5)
    n_accept = 0
    n_clamped = 0
    lp_cur = -np.inf
    for it in range(n_iter):
        if not point_mass and n_obs and (redraw_theta or it == 0):
            m = _link_mean_np(x @ gamma, shifted)
            theta = rs.beta(m * psi + a_cnt, (1.0 - m) * psi + b_cnt)
            low = theta < _THETA_EPS
            high = theta > 1.0 - _THETA_EPS
            n_clamped += int(low.sum() + high.sum())
            theta[low] = _THETA_EPS
            theta[high] = 1.0 - _THETA_EPS
            lp_cur = _log_target_np(gamma, theta, x, a_cnt, b_cnt, psi,
                                    shifted, point_mass, mu_q, prec_q)
        elif it == 0:
            lp_cur = _log_target_np(gamma, theta, x, a_cnt, b_cnt, psi,
                                    shifted, point_mass, mu_q, prec_q)
        prop = gamma + math.exp(log_scale) * rs.standard_normal(d)
        lp_prop = _log_target_np(prop, theta, x, a_cnt, b_cnt, psi, shifted,
                                 point_mass, mu_q, prec_q)
        log_u = math.log(rs.random_sample())
        delta = lp_prop - lp_cur
        if log_u < delta:
            gamma = prop
            lp_cur = lp_prop
            n_accept += 1
        if it < n_adapt:
            acc_prob = min(1.0, math.exp(min(delta, 0.0)))
            log_scale += (acc_prob - adapt_target) / (it + 1.0) ** 0.66
        k = it - (n_iter - n_keep)
        if k >= 0:
            draws[k] = gamma
    return draws, math.exp(log_scale), n_accept, n_clamped


def mnl_epoch_py(v, max_rounds, seed):
    """Vectorized fallback for one purchase epoch.

    Offers the fixed assortment with utilities ``v`` round after round until
    the no-purchase option is chosen or ``max_rounds`` rounds have elapsed.
    Returns (counts, rounds, ended) where ``ended`` is False when the round
    budget cut the epoch short.
    """
    rs = np.random.RandomState(seed & 0xFFFFFFFF)
    n = v.size
    counts = np.zeros(n, dtype=np.int64)
    denom = 1.0 + float(v.sum())
    cuts = np.empty(n + 1)
    cuts[0] = 1.0 / denom
    if n:
        cuts[1:] = cuts[0] + np.cumsum(v) / denom
    rounds = 0
    while rounds < max_rounds:
        u = rs.random_sample()
        rounds += 1
        if u < cuts[0]:
            return counts, rounds, True
        counts[int(np.searchsorted(cuts, u, side="right")) - 1] += 1
    return counts, rounds, False


# ---------------------------------------------------------------------------
# Numba implementations (same contracts, scalar loops)
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:

    @njit(cache=True)
    def _link_mean_nb(z, shifted):
        if z >= 0.0:
            m = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            m = e / (1.0 + e)
        if shifted:
            m = 0.5 * (m + 1.0)
        if m < _MEAN_EPS:
            m = _MEAN_EPS
        elif m > 1.0 - _MEAN_EPS:
            m = 1.0 - _MEAN_EPS
        return m

    @njit(cache=True)
    def _log_target_nb(gamma, theta, x, a_cnt, b_cnt, psi, shifted,
                       point_mass, mu_q, prec_q):
        d = gamma.size
        lp = 0.0
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += prec_q[i, j] * (gamma[j] - mu_q[j])
            lp -= 0.5 * (gamma[i] - mu_q[i]) * acc
        lgpsi = math.lgamma(psi)
        for j in range(a_cnt.size):
            z = 0.0
            for i in range(d):
                z += x[j, i] * gamma[i]
            m = _link_mean_nb(z, shifted)
            if point_mass:
                lp += a_cnt[j] * math.log(m) + b_cnt[j] * math.log1p(-m)
            else:
                am = m * psi
                bm = (1.0 - m) * psi
                lp += (am - 1.0) * math.log(theta[j])
                lp += (bm - 1.0) * math.log1p(-theta[j])
                lp += lgpsi - math.lgamma(am) - math.lgamma(bm)
        return lp

    @njit(cache=True)
    def gamma_chain_jit(x, a_cnt, b_cnt, psi, shifted, point_mass, mu_q,
                        prec_q, gamma0, scale0, adapt_target, n_adapt,
                        redraw_theta, n_iter, n_keep, seed):
        np.random.seed(seed & 0xFFFFFFFF)
        d = gamma0.size
        n_obs = a_cnt.size
        gamma = gamma0.copy()
        prop = np.empty(d)
        log_scale = math.log(scale0)
        draws = np.empty((n_keep, d))
        theta = np.full(n_obs, 0.5)
        n_accept = 0
        n_clamped = 0
        lp_cur = -np.inf
        for it in range(n_iter):
            if (not point_mass) and n_obs > 0 and (redraw_theta or it == 0):
                for j in range(n_obs):
                    z = 0.0
                    for i in range(d):
                        z += x[j, i] * gamma[i]
                    m = _link_mean_nb(z, shifted)
                    t = np.random.beta(m * psi + a_cnt[j],
                                       (1.0 - m) * psi + b_cnt[j])
                    if t < _THETA_EPS:
                        t = _THETA_EPS
                        n_clamped += 1
                    elif t > 1.0 - _THETA_EPS:
                        t = 1.0 - _THETA_EPS
                        n_clamped += 1
                    theta[j] = t
                lp_cur = _log_target_nb(gamma, theta, x, a_cnt, b_cnt, psi,
                                        shifted, point_mass, mu_q, prec_q)
            elif it == 0:
                lp_cur = _log_target_nb(gamma, theta, x, a_cnt, b_cnt, psi,
                                        shifted, point_mass, mu_q, prec_q)
            scale = math.exp(log_scale)
            for i in range(d):
                prop[i] = gamma[i] + scale * np.random.normal()
            lp_prop = _log_target_nb(prop, theta, x, a_cnt, b_cnt, psi,
                                     shifted, point_mass, mu_q, prec_q)
            delta = lp_prop - lp_cur
            if math.log(np.random.random()) < delta:
                for i in range(d):
                    gamma[i] = prop[i]
                lp_cur = lp_prop
                n_accept += 1
            if it < n_adapt:
                acc_prob = math.exp(min(delta, 0.0))
                log_scale += (acc_prob - adapt_target) / (it + 1.0) ** 0.66
            k = it - (n_iter - n_keep)
            if k >= 0:
                for i in range(d):
                    draws[k, i] = gamma[i]
        return draws, math.exp(log_scale), n_accept, n_clamped

    @njit(cache=True)
    def mnl_epoch_jit(v, max_rounds, seed):
        np.random.seed(seed & 0xFFFFFFFF)
        n = v.size
        counts = np.zeros(n, dtype=np.int64)
        denom = 1.0
        for j in range(n):
            denom += v[j]
        p_stop = 1.0 / denom
        rounds = 0
        while rounds < max_rounds:
            u = np.random.random()
            rounds += 1
            if u < p_stop:
                return counts, rounds, True
            acc = p_stop
            for j in range(n):
                acc += v[j] / denom
                if u < acc:
                    counts[j] += 1
                    break
        return counts, rounds, False

    gamma_chain = gamma_chain_jit
    mnl_epoch = mnl_epoch_jit
else:
    gamma_chain = gamma_chain_py
    mnl_epoch = mnl_epoch_py
