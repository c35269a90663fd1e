"""Ground-truth simulators for the three feedback models.

Each environment exposes stochastic feedback plus closed-form expected and
optimal rewards against the true per-item means.  Scenario descriptions
(instance law, cold-start rotation, named presets) live here too.

Environment draws are addressed by item id (a full id-capacity vector is
drawn per round and gathered), so simulated trajectories are equivariant
under relabeling of catalog positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (CascadeObs, ItemCatalog, MnlEpochObs, ProblemKind,
                   RankedListAction, SemiBanditObs, SubsetAction)
from .lmm import GaussianBelief
from .optimizers import assortment_revenue, optimal_assortment, rank_top_k, top_k
from .rng import derive_kernel_seed

MNL_EPOCH_CAP = 1_000_000


# ---------------------------------------------------------------------------
# Instance laws and scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LmmSource:
    """theta_i = x_i^T gamma + N(0, sigma1^2)."""

    sigma1: float


@dataclass(frozen=True)
class BetaLogisticSource:
    """theta_i ~ Beta(m*psi, (1-m)*psi), m the (shifted) logistic mean."""

    psi: float
    shifted: bool = False


@dataclass(frozen=True)
class MisspecCosSource:
    """Cosine mixture: N(lam*cos(c z_i)/c + (1-lam)*z_i, sigma1^2), z=x^T gamma.

    lam in [0, 1] interpolates between the linear law (0) and a purely
    nonlinear one (1); c is one shared normalizer per instance keeping
    c*z_i inside [-pi/2, pi/2].
    """

    lam: float
    sigma1: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")


ThetaSource = LmmSource | BetaLogisticSource | MisspecCosSource


@dataclass(frozen=True)
class ColdStart:
    """Replace delta_n items with fresh draws every ``period`` rounds."""

    delta_n: int
    period: int = 100

    def __post_init__(self):
        if self.period < 1 or self.delta_n < 0:
            raise ValueError("period must be >= 1 and delta_n >= 0")


@dataclass(frozen=True)
class Scenario:
    """A named problem instance law."""

    name: str
    kind: ProblemKind
    n_items: int
    k: int
    dim: int
    source: ThetaSource
    sigma2: float = 1.0
    revenue: float = 1.0
    gamma_prior_sd: float | None = None  # None -> 1/sqrt(d)
    cold_start: ColdStart | None = None

    def __post_init__(self):
        if self.k > self.n_items:
            raise ValueError("k cannot exceed the number of items")
        if self.cold_start is not None and self.cold_start.delta_n > self.n_items:
            raise ValueError("cold-start delta_n cannot exceed the item count")

    def gamma_prior(self) -> GaussianBelief:
        sd = self.gamma_prior_sd
        var = (1.0 / self.dim) if sd is None else sd * sd
        return GaussianBelief.from_moments(np.zeros(self.dim),
                                           var * np.eye(self.dim))


def _logistic(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _draw_features(n_items, dim, rng):
    x = np.empty((n_items, dim))
    x[:, 0] = 1.0
    if dim > 1:
        x[:, 1:] = rng.standard_normal((n_items, dim - 1))
    return x


def _draw_theta(source, x, gamma_true, rng, cos_norm=None):
    z = x @ gamma_true
    if isinstance(source, LmmSource):
        return z + source.sigma1 * rng.standard_normal(z.size), None
    if isinstance(source, BetaLogisticSource):
        m = _logistic(z)
        if source.shifted:
            m = 0.5 * (m + 1.0)
        return rng.beta(m * source.psi, (1.0 - m) * source.psi), None
    if isinstance(source, MisspecCosSource):
        if cos_norm is None:
            zmax = float(np.max(np.abs(z)))
            cos_norm = (math.pi / 2.0) / zmax if zmax > 0 else 1.0
        mean = (source.lam * np.cos(cos_norm * z) / cos_norm
                + (1.0 - source.lam) * z)
        return mean + source.sigma1 * rng.standard_normal(z.size), cos_norm
    raise TypeError(f"unknown theta source {type(source).__name__}")


def draw_instance(scenario: Scenario, gamma_true: np.ndarray,
                  rng: np.random.Generator) -> tuple[ItemCatalog, dict]:
    """Draw a full problem instance; returns (catalog, instance metadata)."""
    if gamma_true.shape != (scenario.dim,):
        raise ValueError("gamma_true dimension mismatch")
    x = _draw_features(scenario.n_items, scenario.dim, rng)
    theta, cos_norm = _draw_theta(scenario.source, x, gamma_true, rng)
    revenues = None
    if scenario.kind is ProblemKind.MNL:
        revenues = np.full(scenario.n_items, scenario.revenue)
    catalog = ItemCatalog.from_features(x, true_theta=theta, revenues=revenues)
    info = {"cos_norm": cos_norm} if cos_norm is not None else {}
    return catalog, info


def rotate_items(catalog: ItemCatalog, scenario: Scenario,
                 gamma_true: np.ndarray, rng: np.random.Generator,
                 cos_norm: float | None = None
                 ) -> tuple[ItemCatalog, np.ndarray]:
    """Replace delta_n uniformly chosen items with fresh draws.

    Returns the new catalog and a boolean keep-mask over positions;
    replaced positions receive fresh ids, features and true means.
    """
    if scenario.cold_start is None:
        raise ValueError("scenario has no cold-start configuration")
    delta_n = scenario.cold_start.delta_n
    if delta_n > catalog.n_items:
        raise ValueError("cannot replace more items than exist")
    kept = np.ones(catalog.n_items, dtype=bool)
    if delta_n == 0:
        return catalog, kept
    positions = rng.choice(catalog.n_items, size=delta_n, replace=False)
    kept[positions] = False
    new_x = _draw_features(delta_n, scenario.dim, rng)
    new_theta, _ = _draw_theta(scenario.source, new_x, gamma_true, rng,
                               cos_norm=cos_norm)
    features = catalog.features.copy()
    features[positions] = new_x
    ids = catalog.item_ids.copy()
    ids[positions] = catalog.id_capacity + np.arange(delta_n)
    theta = catalog.true_theta.copy()
    theta[positions] = new_theta
    revenues = catalog.revenues
    if revenues is not None:
        revenues = revenues.copy()
        revenues[positions] = scenario.revenue
    return ItemCatalog(features, ids, theta, revenues), kept


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemiBanditEnv:
    catalog: ItemCatalog
    sigma2: float
    k: int

    def __post_init__(self):
        if self.catalog.true_theta is None:
            raise ValueError("simulation environment needs true_theta")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")


@dataclass(frozen=True)
class CascadeEnv:
    catalog: ItemCatalog
    k: int

    def __post_init__(self):
        theta = self.catalog.true_theta
        if theta is None or np.any(theta <= 0) or np.any(theta >= 1):
            raise ValueError("cascade environment needs true_theta in (0, 1)")


@dataclass(frozen=True)
class MnlEnv:
    catalog: ItemCatalog
    k: int

    def __post_init__(self):
        theta = self.catalog.true_theta
        if theta is None or np.any(theta <= 0) or np.any(theta >= 1):
            raise ValueError("MNL environment needs true_theta in (0, 1)")
        if self.catalog.revenues is None:
            raise ValueError("MNL environment needs revenues")

    @property
    def utilities(self) -> np.ndarray:
        return 1.0 / self.catalog.true_theta - 1.0


def env_for(scenario: Scenario, catalog: ItemCatalog):
    if scenario.kind is ProblemKind.SEMI:
        return SemiBanditEnv(catalog, scenario.sigma2, scenario.k)
    if scenario.kind is ProblemKind.CASCADE:
        return CascadeEnv(catalog, scenario.k)
    return MnlEnv(catalog, scenario.k)


def step_semi(env: SemiBanditEnv, action: SubsetAction,
              rng: np.random.Generator) -> tuple[SemiBanditObs, float]:
    """Per-item Gaussian rewards for the chosen subset; returns their sum too."""
    items = np.asarray(action.items, dtype=np.int64)
    noise = rng.standard_normal(env.catalog.id_capacity)
    rewards = (env.catalog.true_theta[items]
               + env.sigma2 * noise[env.catalog.item_ids[items]])
    return SemiBanditObs(tuple(float(r) for r in rewards)), float(rewards.sum())


def step_cascade(env: CascadeEnv, action: RankedListAction,
                 rng: np.random.Generator) -> CascadeObs:
    """Scan the ranked list top-down; click the first attractive item."""
    items = np.asarray(action.items, dtype=np.int64)
    u = rng.random(env.catalog.id_capacity)
    attracted = u[env.catalog.item_ids[items]] < env.catalog.true_theta[items]
    hits = np.flatnonzero(attracted)
    return CascadeObs(int(hits[0]) if hits.size else None)


def run_epoch_mnl(env: MnlEnv, assortment: SubsetAction,
                  rng: np.random.Generator,
                  max_rounds: int | None = None
                  ) -> tuple[MnlEpochObs | None, int]:
    """Offer one assortment until no-purchase (or the round budget).

    Returns (observation, rounds).  The observation is None when the
    budget truncated the epoch before a no-purchase; hitting the internal
    runaway cap without a budget is a hard error (invalid true means).
    """
    items = np.asarray(assortment.items, dtype=np.int64)
    id_order = np.argsort(env.catalog.item_ids[items])
    v_sorted = np.ascontiguousarray(env.utilities[items[id_order]])
    budget = MNL_EPOCH_CAP if max_rounds is None else min(max_rounds, MNL_EPOCH_CAP)
    counts_sorted, rounds, ended = kernels.mnl_epoch(
        v_sorted, budget, derive_kernel_seed(rng))
    if not ended:
        if max_rounds is None or rounds >= MNL_EPOCH_CAP:
            raise RuntimeError(
                f"epoch exceeded {MNL_EPOCH_CAP} rounds; true means invalid")
        return None, int(rounds)
    counts = np.zeros(items.size, dtype=np.int64)
    counts[id_order] = counts_sorted
    return MnlEpochObs(tuple(int(c) for c in counts), int(rounds)), int(rounds)


def expected_reward(env, action) -> float:
    """Closed-form expected reward of an action under the true means."""
    theta = env.catalog.true_theta
    items = np.asarray(action.items, dtype=np.int64)
    if isinstance(env, SemiBanditEnv):
        return float(theta[items].sum())
    if isinstance(env, CascadeEnv):
        return float(1.0 - np.prod(1.0 - theta[items]))
    if isinstance(env, MnlEnv):
        return assortment_revenue(env.utilities, env.catalog.revenues,
                                  action.items)
    raise TypeError(f"unknown environment {type(env).__name__}")


def optimal_action(env):
    theta = env.catalog.true_theta
    if isinstance(env, SemiBanditEnv):
        return top_k(theta, env.k)
    if isinstance(env, CascadeEnv):
        return rank_top_k(theta, env.k)
    if isinstance(env, MnlEnv):
        return optimal_assortment(env.utilities, env.catalog.revenues, env.k)
    raise TypeError(f"unknown environment {type(env).__name__}")


def optimal_value(env) -> float:
    return expected_reward(env, optimal_action(env))


# ---------------------------------------------------------------------------
# Named presets
# ---------------------------------------------------------------------------

PRESETS: dict[str, Scenario] = {
    "semi-6.1": Scenario("semi-6.1", ProblemKind.SEMI, 3000, 10, 5,
                         LmmSource(sigma1=0.5), sigma2=1.0),
    "cascade-6.1": Scenario("cascade-6.1", ProblemKind.CASCADE, 1000, 3, 5,
                            BetaLogisticSource(psi=4.0)),
    "mnl-6.1": Scenario("mnl-6.1", ProblemKind.MNL, 1000, 5, 5,
                        BetaLogisticSource(psi=4.0, shifted=True)),
    "semi-6.1-desk": Scenario("semi-6.1-desk", ProblemKind.SEMI, 200, 5, 5,
                              LmmSource(sigma1=0.5), sigma2=1.0),
    "cascade-6.1-desk": Scenario("cascade-6.1-desk", ProblemKind.CASCADE,
                                 100, 3, 5, BetaLogisticSource(psi=4.0)),
    "mnl-6.1-desk": Scenario("mnl-6.1-desk", ProblemKind.MNL, 100, 5, 5,
                             BetaLogisticSource(psi=4.0, shifted=True)),
    "semi-coldstart-desk": Scenario(
        "semi-coldstart-desk", ProblemKind.SEMI, 200, 5, 5,
        LmmSource(sigma1=0.5), sigma2=1.0,
        cold_start=ColdStart(delta_n=40, period=100)),
    "semi-misspec-desk": Scenario(
        "semi-misspec-desk", ProblemKind.SEMI, 200, 5, 5,
        MisspecCosSource(lam=1.0, sigma1=0.5), sigma2=1.0),
}


def get_scenario(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
