import numpy as np

from _oracles import grid_beta_logistic_posterior_mean
from metabandit import kernels


def _chain_args(**overrides):
    args = dict(
        x=np.array([[1.0]]),
        a_cnt=np.array([20.0]),
        b_cnt=np.array([5.0]),
        psi=2.0,
        shifted=False,
        point_mass=False,
        mu_q=np.zeros(1),
        prec_q=np.eye(1),
        gamma0=np.zeros(1),
        scale0=0.1,
        adapt_target=0.3,
        n_adapt=1000,
        redraw_theta=True,
        n_iter=41_000,
        n_keep=40_000,
        seed=123,
    )
    args.update(overrides)
    return args


def test_backend_flag_exposed():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.NUMBA_ENABLED == (kernels.BACKEND == "numba")


def test_active_and_fallback_chains_agree_statistically():
    oracle = grid_beta_logistic_posterior_mean(2.0, False, 20, 5)
    draws_active, _, _, _ = kernels.gamma_chain(**_chain_args())
    draws_py, _, _, _ = kernels.gamma_chain_py(**_chain_args(seed=321))
    assert abs(draws_active[:, 0].mean() - oracle) < 0.05
    assert abs(draws_py[:, 0].mean() - oracle) < 0.05
    assert abs(draws_active[:, 0].mean() - draws_py[:, 0].mean()) < 0.08


def test_chain_deterministic_per_backend():
    a, _, _, _ = kernels.gamma_chain(**_chain_args(n_iter=2000, n_keep=100))
    b, _, _, _ = kernels.gamma_chain(**_chain_args(n_iter=2000, n_keep=100))
    assert np.array_equal(a, b)
    c, _, _, _ = kernels.gamma_chain_py(**_chain_args(n_iter=2000, n_keep=100))
    d, _, _, _ = kernels.gamma_chain_py(**_chain_args(n_iter=2000, n_keep=100))
    assert np.array_equal(c, d)


def test_point_mass_mode_matches_logistic_grid_oracle():
    # Deterministic link: posterior over the coefficient of a
    # logistic-Bernoulli likelihood with a standard normal prior.
    grid = np.linspace(-6, 6, 4001)
    m = 1.0 / (1.0 + np.exp(-grid))
    log_post = -0.5 * grid**2 + 14 * np.log(m) + 6 * np.log1p(-m)
    w = np.exp(log_post - log_post.max())
    w /= w.sum()
    oracle = float(np.sum(w * grid))
    for fn in (kernels.gamma_chain, kernels.gamma_chain_py):
        draws, _, _, _ = fn(**_chain_args(
            a_cnt=np.array([14.0]), b_cnt=np.array([6.0]), point_mass=True,
            n_iter=31_000, n_keep=30_000))
        assert abs(draws[:, 0].mean() - oracle) < 0.05


def test_adaptation_reaches_target_acceptance():
    draws, scale, n_acc, _ = kernels.gamma_chain(**_chain_args(
        n_iter=20_000, n_keep=1, n_adapt=5000, scale0=5.0))
    assert 0.15 <= n_acc / 20_000 <= 0.45
    assert scale != 5.0


def test_chain_handles_zero_observations():
    for fn in (kernels.gamma_chain, kernels.gamma_chain_py):
        draws, _, _, clamped = fn(**_chain_args(
            x=np.zeros((0, 1)), a_cnt=np.zeros(0), b_cnt=np.zeros(0),
            n_iter=5000, n_keep=4000))
        assert clamped == 0
        # Target collapses to the standard normal prior.
        assert abs(draws[:, 0].mean()) < 0.1


def test_mnl_epoch_contracts():
    v = np.array([1.0, 0.5])
    for fn in (kernels.mnl_epoch, kernels.mnl_epoch_py):
        counts, rounds, ended = fn(v, 10_000, 5)
        assert ended
        assert rounds == counts.sum() + 1
        counts2, rounds2, ended2 = fn(v, 10_000, 5)
        assert np.array_equal(counts, counts2) and rounds == rounds2

        empty_counts, one, done = fn(np.zeros(0), 10, 99)
        assert done and one == 1 and empty_counts.size == 0

        t_counts, t_rounds, t_ended = fn(np.array([1e9]), 3, 7)
        assert not t_ended and t_rounds == 3


def test_mnl_epoch_backends_agree_on_means():
    v = np.array([0.8, 0.3, 1.2])
    means = {}
    for name, fn in [("active", kernels.mnl_epoch), ("py", kernels.mnl_epoch_py)]:
        totals = np.zeros(3)
        n_epochs = 30_000
        for e in range(n_epochs):
            counts, _, ended = fn(v, 1_000_000, e)
            assert ended
            totals += counts
        means[name] = totals / n_epochs
    assert np.allclose(means["active"], v, atol=0.05)
    assert np.allclose(means["py"], v, atol=0.05)
