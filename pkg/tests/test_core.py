import numpy as np
import pytest

from _oracles import cascade_examined_positions
from metabandit.core import (CascadeObs, InteractionHistory, ItemCatalog,
                             MnlEpochObs, ProblemKind, RankedListAction,
                             RegretTrace, SemiBanditObs, SubsetAction,
                             make_ranked, make_subset, read_catalog_csv,
                             replay_statistics, write_catalog_csv)


def test_empty_log_gives_zero_counts():
    for kind in ProblemKind:
        stats = replay_statistics([], kind, 5)
        assert np.all(stats.n == 0)


def test_semi_bandit_replay_sums():
    log = [
        (SubsetAction((0, 1)), SemiBanditObs((2.0, 3.0))),
        (SubsetAction((0,)), SemiBanditObs((1.0,))),
    ]
    stats = replay_statistics(log, ProblemKind.SEMI, 2)
    assert stats.n.tolist() == [2, 1]
    assert stats.reward_sum.tolist() == [3.0, 3.0]
    assert stats.reward_sumsq.tolist() == [5.0, 9.0]


def test_cascade_click_marks_only_examined_prefix():
    # Ranked (4, 7) with a click at the first position: per the examination
    # recursion, position 1 is never examined.
    examined, click = cascade_examined_positions([1, 0])
    assert examined == [0] and click == 0
    log = [(RankedListAction((4, 7)), CascadeObs(click_pos=0))]
    stats = replay_statistics(log, ProblemKind.CASCADE, 8)
    assert stats.successes[4] == 1 and stats.failures[4] == 0
    assert stats.n[7] == 0


def test_cascade_no_click_examines_everything():
    examined, click = cascade_examined_positions([0, 0, 0])
    assert examined == [0, 1, 2] and click is None
    log = [(RankedListAction((2, 0, 1)), CascadeObs(None))]
    stats = replay_statistics(log, ProblemKind.CASCADE, 3)
    assert stats.failures.tolist() == [1, 1, 1]
    assert stats.successes.sum() == 0


def test_mnl_replay_counts_epochs_and_purchases():
    log = [
        (SubsetAction((1, 3)), MnlEpochObs((2, 0), rounds=3)),
        (SubsetAction((3,)), MnlEpochObs((5,), rounds=6)),
    ]
    stats = replay_statistics(log, ProblemKind.MNL, 4)
    assert stats.epochs.tolist() == [0, 1, 0, 2]
    assert stats.purchases.tolist() == [0, 2, 0, 5]


@pytest.mark.parametrize("kind,log,wanted", [
    (ProblemKind.SEMI, [(SubsetAction((9,)), SemiBanditObs((1.0,)))], "position 0"),
    (ProblemKind.SEMI, [(SubsetAction((0,)), SemiBanditObs((1.0, 2.0)))], "position 0"),
    (ProblemKind.CASCADE, [(RankedListAction((0, 1)), CascadeObs(5))], "position 0"),
    (ProblemKind.MNL, [(SubsetAction((0,)), MnlEpochObs((-1,), rounds=0))], "position 0"),
    (ProblemKind.MNL, [(SubsetAction((0,)), MnlEpochObs((2,), rounds=5))], "position 0"),
])
def test_malformed_events_carry_position(kind, log, wanted):
    with pytest.raises(ValueError, match=wanted):
        replay_statistics(log, kind, 3)


def test_malformed_event_position_is_reported_for_later_events():
    log = [
        (SubsetAction((0,)), SemiBanditObs((1.0,))),
        (SubsetAction((7,)), SemiBanditObs((1.0,))),
    ]
    with pytest.raises(ValueError, match="position 1"):
        replay_statistics(log, ProblemKind.SEMI, 3)


def test_incremental_history_matches_replay():
    rng = np.random.default_rng(0)
    hist = InteractionHistory(ProblemKind.SEMI, 6)
    for _ in range(40):
        items = tuple(int(i) for i in rng.choice(6, size=2, replace=False))
        action = SubsetAction(items)
        obs = SemiBanditObs(tuple(float(r) for r in rng.normal(size=2)))
        hist.push(action, obs)
    replayed = replay_statistics(hist.events, ProblemKind.SEMI, 6)
    assert np.array_equal(hist.stats.n, replayed.n)
    assert np.array_equal(hist.stats.reward_sum, replayed.reward_sum)
    assert np.array_equal(hist.stats.reward_sumsq, replayed.reward_sumsq)
    assert hist.t == 40


def test_replay_is_idempotent_for_cascade_and_mnl():
    rng = np.random.default_rng(1)
    log_c = []
    for _ in range(30):
        ranked = tuple(int(i) for i in rng.choice(5, size=3, replace=False))
        click = None if rng.random() < 0.4 else int(rng.integers(0, 3))
        log_c.append((RankedListAction(ranked), CascadeObs(click)))
    first = replay_statistics(log_c, ProblemKind.CASCADE, 5)
    second = replay_statistics(log_c, ProblemKind.CASCADE, 5)
    assert np.array_equal(first.successes, second.successes)
    assert np.array_equal(first.failures, second.failures)

    log_m = []
    for _ in range(30):
        items = tuple(int(i) for i in rng.choice(5, size=2, replace=False))
        buys = tuple(int(b) for b in rng.integers(0, 4, size=2))
        log_m.append((SubsetAction(items), MnlEpochObs(buys, rounds=1 + sum(buys))))
    first = replay_statistics(log_m, ProblemKind.MNL, 5)
    second = replay_statistics(log_m, ProblemKind.MNL, 5)
    assert np.array_equal(first.epochs, second.epochs)
    assert np.array_equal(first.purchases, second.purchases)


def test_action_construction_validates():
    with pytest.raises(ValueError):
        SubsetAction((1, 1))
    with pytest.raises(ValueError):
        RankedListAction((0, -1))
    with pytest.raises(ValueError):
        make_subset((0, 1, 2), n_items=10, k_max=2)
    with pytest.raises(ValueError):
        make_ranked((0, 11), n_items=10, k_max=5)
    assert make_subset((2, 0), n_items=3, k_max=2).items == (0, 2)
    assert make_ranked((2, 0), n_items=3, k_max=2).items == (2, 0)


def test_regret_trace_cumulative_and_floor():
    trace = RegretTrace(np.array([1.0, 0.0, 2.0]))
    assert np.allclose(trace.cumulative, [1.0, 1.0, 3.0])
    RegretTrace(np.array([0.0, -1e-13]))  # inside tolerance
    with pytest.raises(ValueError):
        RegretTrace(np.array([0.0, -1e-6]))


def test_catalog_validation():
    with pytest.raises(ValueError):
        ItemCatalog.from_features(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        ItemCatalog.from_features(np.eye(3), true_theta=np.zeros(2))
    with pytest.raises(ValueError):
        ItemCatalog.from_features(np.eye(2), revenues=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        ItemCatalog(np.eye(2), np.array([1, 1]))
    cat = ItemCatalog.from_features(np.eye(2) * 0.5)
    assert cat.has_unit_norm()


def test_catalog_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    cat = ItemCatalog.from_features(rng.normal(size=(4, 3)),
                                    true_theta=rng.uniform(0.5, 0.9, size=4),
                                    revenues=np.ones(4))
    path = tmp_path / "catalog.csv"
    write_catalog_csv(cat, path)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "item_id,x0,x1,x2,theta,revenue"
    back = read_catalog_csv(path)
    assert np.array_equal(back.features, cat.features)
    assert np.array_equal(back.true_theta, cat.true_theta)
    assert np.array_equal(back.revenues, cat.revenues)
    assert np.array_equal(back.item_ids, cat.item_ids)

    bare = ItemCatalog.from_features(rng.normal(size=(2, 2)))
    write_catalog_csv(bare, path)
    back = read_catalog_csv(path)
    assert back.true_theta is None and back.revenues is None


def test_history_reset_items_drops_counts():
    hist = InteractionHistory(ProblemKind.SEMI, 3)
    hist.push(SubsetAction((0, 1)), SemiBanditObs((1.0, 2.0)))
    hist.push(SubsetAction((1, 2)), SemiBanditObs((3.0, 4.0)))
    total = hist.stats.n.sum()
    hist.reset_items([1])
    assert hist.stats.n.sum() == total - 2
    assert hist.stats.reward_sum[1] == 0
