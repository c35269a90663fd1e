"""Shared domain types: items, actions, observations, histories, regret.

Conventions used across the library:

* Item positions are 0-based row indices into the catalog; every item also
  carries a persistent integer id (``item_ids``) that survives relabeling
  and cold-start rotation.  All per-item random draws and reductions are
  keyed by id, which makes agent behaviour exactly equivariant under
  permutations of the catalog rows.
* Cascade click positions are 0-based indices into the ranked list.
* Statistics are kept incrementally but remain reproducible by replaying
  the append-only event log.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np


class ProblemKind(enum.Enum):
    SEMI = "semi"
    CASCADE = "cascade"
    MNL = "mnl"


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ItemCatalog:
    """N items with d-dimensional features and optional simulation truth."""

    features: np.ndarray
    item_ids: np.ndarray
    true_theta: np.ndarray | None = None
    revenues: np.ndarray | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D array")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        ids = np.asarray(self.item_ids, dtype=np.int64)
        if ids.shape != (feats.shape[0],):
            raise ValueError("item_ids must have one entry per item")
        if np.unique(ids).size != ids.size or ids.min() < 0:
            raise ValueError("item_ids must be distinct non-negative integers")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "item_ids", ids)
        if self.true_theta is not None:
            theta = np.asarray(self.true_theta, dtype=np.float64)
            if theta.shape != (feats.shape[0],):
                raise ValueError("true_theta must have one entry per item")
            object.__setattr__(self, "true_theta", theta)
        if self.revenues is not None:
            rev = np.asarray(self.revenues, dtype=np.float64)
            if rev.shape != (feats.shape[0],) or np.any(rev <= 0):
                raise ValueError("revenues must be positive, one per item")
            object.__setattr__(self, "revenues", rev)

    @classmethod
    def from_features(cls, features, true_theta=None, revenues=None,
                      item_ids=None) -> "ItemCatalog":
        features = np.asarray(features, dtype=np.float64)
        if item_ids is None:
            item_ids = np.arange(features.shape[0], dtype=np.int64)
        return cls(features, item_ids, true_theta, revenues)

    @property
    def n_items(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def id_capacity(self) -> int:
        return int(self.item_ids.max()) + 1

    def has_unit_norm(self) -> bool:
        """Whether every feature row satisfies the ||x||_2 <= 1 assumption."""
        return bool(np.all(np.linalg.norm(self.features, axis=1) <= 1.0 + 1e-12))


def write_catalog_csv(catalog: ItemCatalog, path) -> None:
    """Write a catalog as ``item_id,x0,...,x{d-1}[,theta][,revenue]``."""
    header = ["item_id"] + [f"x{j}" for j in range(catalog.dim)]
    if catalog.true_theta is not None:
        header.append("theta")
    if catalog.revenues is not None:
        header.append("revenue")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(catalog.n_items):
            row = [int(catalog.item_ids[i])]
            row += [repr(float(v)) for v in catalog.features[i]]
            if catalog.true_theta is not None:
                row.append(repr(float(catalog.true_theta[i])))
            if catalog.revenues is not None:
                row.append(repr(float(catalog.revenues[i])))
            writer.writerow(row)


def read_catalog_csv(path) -> ItemCatalog:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    feat_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    if header[0] != "item_id" or not feat_cols:
        raise ValueError("catalog CSV must start with item_id,x0,...")
    theta_col = header.index("theta") if "theta" in header else None
    rev_col = header.index("revenue") if "revenue" in header else None
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    feats = np.array([[float(r[i]) for i in feat_cols] for r in rows])
    theta = (np.array([float(r[theta_col]) for r in rows])
             if theta_col is not None else None)
    rev = (np.array([float(r[rev_col]) for r in rows])
           if rev_col is not None else None)
    return ItemCatalog(feats, ids, theta, rev)


# ---------------------------------------------------------------------------
# Actions and observations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetAction:
    """Unordered set of item positions, stored sorted ascending."""

    items: tuple[int, ...]

    def __post_init__(self):
        items = tuple(int(i) for i in self.items)
        if len(set(items)) != len(items) or any(i < 0 for i in items):
            raise ValueError("action items must be distinct and non-negative")
        object.__setattr__(self, "items", tuple(sorted(items)))

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class RankedListAction:
    """Ordered list of item positions (display order matters)."""

    items: tuple[int, ...]

    def __post_init__(self):
        items = tuple(int(i) for i in self.items)
        if len(set(items)) != len(items) or any(i < 0 for i in items):
            raise ValueError("action items must be distinct and non-negative")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)


def make_subset(items, n_items: int, k_max: int) -> SubsetAction:
    """Construct a size- and range-checked subset action."""
    action = SubsetAction(tuple(items))
    _check_bounds(action.items, n_items, k_max)
    return action


def make_ranked(items, n_items: int, k_max: int) -> RankedListAction:
    """Construct a size- and range-checked ranked-list action."""
    action = RankedListAction(tuple(items))
    _check_bounds(action.items, n_items, k_max)
    return action


def _check_bounds(items, n_items, k_max):
    if len(items) > k_max:
        raise ValueError(f"action has {len(items)} items, limit is {k_max}")
    if items and max(items) >= n_items:
        raise ValueError(f"item index {max(items)} out of range (N={n_items})")


@dataclass(frozen=True)
class SemiBanditObs:
    """One real reward per chosen item, aligned with the sorted subset."""

    rewards: tuple[float, ...]


@dataclass(frozen=True)
class CascadeObs:
    """0-based click position in the ranked list, or None for no click."""

    click_pos: int | None


@dataclass(frozen=True)
class MnlEpochObs:
    """Per-offered-item purchase counts over one complete epoch."""

    purchases: tuple[int, ...]
    rounds: int


Observation = SemiBanditObs | CascadeObs | MnlEpochObs
Action = SubsetAction | RankedListAction


# ---------------------------------------------------------------------------
# Sufficient statistics and history
# ---------------------------------------------------------------------------


@dataclass
class GaussianStats:
    """Per-item pull counts and reward sums for real-valued feedback."""

    n: np.ndarray
    reward_sum: np.ndarray
    reward_sumsq: np.ndarray

    @classmethod
    def zeros(cls, n_items: int) -> "GaussianStats":
        return cls(np.zeros(n_items, dtype=np.int64), np.zeros(n_items),
                   np.zeros(n_items))


@dataclass
class BernoulliStats:
    """Per-item success/failure counts for binary feedback."""

    successes: np.ndarray
    failures: np.ndarray

    @classmethod
    def zeros(cls, n_items: int) -> "BernoulliStats":
        return cls(np.zeros(n_items, dtype=np.int64),
                   np.zeros(n_items, dtype=np.int64))

    @property
    def n(self) -> np.ndarray:
        return self.successes + self.failures


@dataclass
class GeometricStats:
    """Per-item epoch counts and total purchases for epoch feedback."""

    epochs: np.ndarray
    purchases: np.ndarray

    @classmethod
    def zeros(cls, n_items: int) -> "GeometricStats":
        return cls(np.zeros(n_items, dtype=np.int64),
                   np.zeros(n_items, dtype=np.int64))

    @property
    def n(self) -> np.ndarray:
        return self.epochs


def _reject(pos: int, reason: str):
    raise ValueError(f"malformed event at position {pos}: {reason}")


def apply_event(stats, kind: ProblemKind, pos: int, action, obs, n_items):
    if kind is ProblemKind.SEMI:
        if not isinstance(action, SubsetAction) or not isinstance(obs, SemiBanditObs):
            _reject(pos, "semi-bandit event needs SubsetAction + SemiBanditObs")
        if len(obs.rewards) != len(action.items):
            _reject(pos, "reward list length differs from action size")
        for item, reward in zip(action.items, obs.rewards):
            if item >= n_items:
                _reject(pos, f"item index {item} out of range")
            stats.n[item] += 1
            stats.reward_sum[item] += reward
            stats.reward_sumsq[item] += reward * reward
    elif kind is ProblemKind.CASCADE:
        if not isinstance(action, RankedListAction) or not isinstance(obs, CascadeObs):
            _reject(pos, "cascade event needs RankedListAction + CascadeObs")
        k = len(action.items)
        click = obs.click_pos
        if click is not None and not (0 <= click < k):
            _reject(pos, f"click position {click} outside ranked list")
        examined = k if click is None else click + 1
        for p in range(examined):
            item = action.items[p]
            if item >= n_items:
                _reject(pos, f"item index {item} out of range")
            if click is not None and p == click:
                stats.successes[item] += 1
            else:
                stats.failures[item] += 1
    elif kind is ProblemKind.MNL:
        if not isinstance(action, SubsetAction) or not isinstance(obs, MnlEpochObs):
            _reject(pos, "MNL event needs SubsetAction + MnlEpochObs")
        if len(obs.purchases) != len(action.items):
            _reject(pos, "purchase list length differs from assortment size")
        total = 0
        for item, count in zip(action.items, obs.purchases):
            if item >= n_items:
                _reject(pos, f"item index {item} out of range")
            if count < 0 or int(count) != count:
                _reject(pos, f"negative or non-integer purchase count {count}")
            stats.epochs[item] += 1
            stats.purchases[item] += int(count)
            total += int(count)
        if obs.rounds != total + 1:
            _reject(pos, "epoch length must equal 1 + total purchases")
    else:  # pragma: no cover
        raise ValueError(f"unknown problem kind {kind}")


def empty_stats(kind: ProblemKind, n_items: int):
    if kind is ProblemKind.SEMI:
        return GaussianStats.zeros(n_items)
    if kind is ProblemKind.CASCADE:
        return BernoulliStats.zeros(n_items)
    return GeometricStats.zeros(n_items)


def replay_statistics(log, kind: ProblemKind, n_items: int):
    """Rebuild per-item sufficient statistics from an event log.

    Malformed events are rejected with the position of the offending event;
    replay is idempotent, so two identical logs always produce identical
    statistics.
    """
    stats = empty_stats(kind, n_items)
    for pos, (action, obs) in enumerate(log):
        apply_event(stats, kind, pos, action, obs, n_items)
    return stats


class InteractionHistory:
    """Append-only event log with incrementally maintained statistics.

    A single history is mutated by one logical thread; snapshots of the
    statistics arrays may be shared freely.
    """

    def __init__(self, kind: ProblemKind, n_items: int):
        self.kind = kind
        self.n_items = n_items
        self.t = 0
        self.events: list[tuple[Action, Observation]] = []
        self.stats = empty_stats(kind, n_items)

    def push(self, action, obs, rounds: int = 1) -> None:
        apply_event(self.stats, self.kind, len(self.events), action, obs,
                     self.n_items)
        self.events.append((action, obs))
        self.t += rounds

    def reset_items(self, positions) -> None:
        """Drop the statistics of replaced item positions (cold start)."""
        for arrays in vars(self.stats).values():
            arrays[np.asarray(positions, dtype=np.int64)] = 0


# ---------------------------------------------------------------------------
# Regret bookkeeping
# ---------------------------------------------------------------------------

REGRET_TOL = 1e-12


@dataclass
class RegretTrace:
    """Per-round instantaneous regret for one replication."""

    inst: np.ndarray
    replication: int = 0
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        inst = np.asarray(self.inst, dtype=np.float64)
        if inst.ndim != 1:
            raise ValueError("instantaneous regret must be a 1-D array")
        if np.any(inst < -REGRET_TOL):
            raise ValueError("negative instantaneous regret beyond tolerance")
        self.inst = inst

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.inst)

    def __len__(self) -> int:
        return self.inst.size
