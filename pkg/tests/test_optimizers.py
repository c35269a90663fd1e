import numpy as np
import pytest

from _oracles import brute_force_assortment
from metabandit.optimizers import (AssortmentSolverConfig, assortment_revenue,
                                   optimal_assortment, rank_top_k, top_k)


def test_top_k_examples():
    assert top_k([0.1, 0.5, 0.3], 2).items == (1, 2)
    assert top_k([0.1, 0.5, 0.3], 3).items == (0, 1, 2)
    assert top_k([0.5, 0.5, 0.1], 1).items == (0,)


def test_top_k_invariant_under_increasing_transform():
    rng = np.random.default_rng(0)
    for _ in range(50):
        theta = rng.normal(size=12)
        k = int(rng.integers(1, 12))
        base = top_k(theta, k)
        assert top_k(np.exp(theta), k) == base
        assert top_k(3.0 * theta + 1.0, k) == base


def test_rank_top_k_examples():
    assert rank_top_k([0.2, 0.9, 0.5], 2).items == (1, 2)
    assert rank_top_k([0.2, 0.9, 0.5], 1).items == (1,)
    assert rank_top_k([0.7, 0.7, 0.1], 2).items == (0, 1)


def test_cascade_reward_permutation_invariant_over_ranked_set():
    rng = np.random.default_rng(1)
    theta = rng.uniform(0.05, 0.95, size=8)
    ranked = rank_top_k(theta, 4).items
    value = 1.0 - np.prod(1.0 - theta[list(ranked)])
    perm = tuple(np.random.default_rng(2).permutation(ranked))
    assert np.isclose(value, 1.0 - np.prod(1.0 - theta[list(perm)]), atol=1e-15)


def test_top_k_bounds_checked():
    with pytest.raises(ValueError):
        top_k([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        rank_top_k([1.0], -1)


def test_assortment_singleton_picks_argmax_utility():
    v = np.array([0.3, 0.9, 0.5])
    eta = np.ones(3)
    assert optimal_assortment(v, eta, 1).items == (1,)


def test_assortment_two_item_example():
    action = optimal_assortment(np.array([2.0, 1.0]), np.ones(2), 1)
    oracle_set, oracle_val = brute_force_assortment([2.0, 1.0], [1.0, 1.0], 1)
    assert action.items == oracle_set == (0,)
    assert np.isclose(oracle_val, 2.0 / 3.0)
    assert np.isclose(assortment_revenue([2.0, 1.0], [1.0, 1.0], action.items),
                      2.0 / 3.0)


def test_assortment_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(150):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, min(n, 4) + 1))
        v = rng.uniform(0.05, 3.0, size=n)
        eta = rng.uniform(0.1, 2.0, size=n)
        got = optimal_assortment(v, eta, k)
        want, _ = brute_force_assortment(v, eta, k)
        assert got.items == want


def test_assortment_value_monotone_in_k():
    rng = np.random.default_rng(9)
    v = rng.uniform(0.05, 2.0, size=10)
    eta = rng.uniform(0.1, 2.0, size=10)
    values = [assortment_revenue(v, eta, optimal_assortment(v, eta, k).items)
              for k in range(1, 8)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_assortment_input_validation():
    with pytest.raises(ValueError):
        optimal_assortment([1.0, -1.0], [1.0, 1.0], 1)
    with pytest.raises(ValueError):
        optimal_assortment([1.0], [1.0, 1.0], 1)
    with pytest.raises(ValueError):
        optimal_assortment([np.nan], [1.0], 1)
    with pytest.raises(ValueError):
        AssortmentSolverConfig(tolerance=0.0)


def test_assortment_k_zero_is_empty():
    assert optimal_assortment([1.0], [1.0], 0).items == ()
