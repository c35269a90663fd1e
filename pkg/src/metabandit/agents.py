"""The four policies: hierarchical meta-TS and its three baselines.

Each agent owns per-item sufficient statistics and three named random
streams: one for coefficient draws, one for per-item draws, one feeding
the MCMC kernel.  Per-item draws are addressed by item id and per-item
reductions run in id order, so a fixed (agent, environment, seed) triple
reproduces the identical action sequence under any relabeling of catalog
positions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, logsumexp

from . import betamodel, core, lmm
from .betamodel import BetaLogisticSpec, GammaChain, GammaSamplerConfig
from .core import ItemCatalog, ProblemKind, empty_stats
from .envs import BetaLogisticSource, LmmSource, MisspecCosSource, Scenario
from .lmm import LmmSpec
from .optimizers import optimal_assortment, rank_top_k, top_k
from .rng import seeded_rng

AGENT_NAMES = ("meta", "oracle", "agnostic", "determined")


@dataclass(frozen=True)
class Schedule:
    """When to draw a fresh coefficient sample (offline-training style).

    Exactly one of ``every`` (refresh every m rounds) or ``at_times``
    (explicit 0-based round indices, strictly increasing) is set.  The
    first selection always draws, so a cached sample exists from round 0.
    """

    every: int | None = 1
    at_times: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.every is None) == (self.at_times is None):
            raise ValueError("set exactly one of every / at_times")
        if self.every is not None and self.every < 1:
            raise ValueError("refresh interval must be >= 1")
        if self.at_times is not None:
            times = tuple(self.at_times)
            if any(b <= a for a, b in zip(times, times[1:])) or (
                    times and times[0] < 0):
                raise ValueError("at_times must be strictly increasing and >= 0")


class _ScheduleCursor:
    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self._next_due = 0
        self._ptr = 0

    def should_fire(self, t: int) -> bool:
        if self.schedule.every is not None:
            if t >= self._next_due:
                self._next_due = t + self.schedule.every
                return True
            return False
        times = self.schedule.at_times
        fired = t == 0 and self._ptr == 0 and (not times or times[0] > 0)
        while self._ptr < len(times) and times[self._ptr] <= t:
            self._ptr += 1
            fired = True
        return fired


@dataclass(frozen=True)
class EbConfig:
    """Empirical-Bayes refresh of the generalization-noise hyperparameter."""

    grid: tuple[float, ...]
    enabled: bool = True
    refresh_period: int = 500

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        if not grid or any(g <= 0 for g in grid) or list(grid) != sorted(grid):
            raise ValueError("grid must be non-empty, positive and sorted")
        if self.refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")
        object.__setattr__(self, "grid", grid)


def empirical_bayes_sigma1(spec: LmmSpec, stats, catalog: ItemCatalog,
                           grid) -> float:
    """Grid argmax of the exact reward marginal likelihood over sigma1.

    Ties go to the smaller grid value; an empty history returns the
    current value unchanged.
    """
    if int(np.sum(stats.n)) == 0:
        return spec.sigma1
    scores = [lmm.log_marginal_likelihood(
        dataclasses.replace(spec, sigma1=float(g)), stats, catalog)
        for g in grid]
    return float(grid[int(np.argmax(scores))])


def empirical_bayes_psi(spec: BetaLogisticSpec, stats, catalog: ItemCatalog,
                        grid, gamma_draws: np.ndarray) -> float:
    """Monte-Carlo marginal-likelihood grid argmax over the Beta precision.

    Averages the analytic per-coefficient marginal (Beta function ratios)
    over the supplied chain draws.
    """
    a_cnt, b_cnt = betamodel.counts_pair(stats)
    observed = (a_cnt + b_cnt) > 0
    if not np.any(observed):
        return spec.psi
    order = np.argsort(catalog.item_ids)
    obs = order[observed[order]]
    a_o, b_o = a_cnt[obs], b_cnt[obs]
    x_o = catalog.features[obs]
    best_psi, best = None, -np.inf
    for psi in grid:
        trial = dataclasses.replace(spec, psi=float(psi))
        lls = np.empty(len(gamma_draws))
        for j, gamma in enumerate(gamma_draws):
            m = betamodel.link_mean(trial, x_o @ gamma)
            a0 = m * psi
            b0 = (1.0 - m) * psi
            lls[j] = float(np.sum(betaln(a0 + a_o, b0 + b_o) - betaln(a0, b0)))
        score = logsumexp(lls) - np.log(len(lls))
        if score > best:
            best_psi, best = float(psi), score
    return best_psi


def _agent_rngs(seed: int):
    return (seeded_rng(seed, "agent/gamma"),
            seeded_rng(seed, "agent/theta"),
            seeded_rng(seed, "agent/chain"))


class _BaseAgent:
    """Shared bookkeeping: statistics, round counter, id-addressed draws."""

    def __init__(self, kind: ProblemKind, catalog: ItemCatalog, k: int,
                 seed: int):
        self.kind = kind
        self.catalog = catalog
        self.k = k
        self.stats = empty_stats(kind, catalog.n_items)
        self.t = 0
        self._events = 0
        self.gamma_sample_count = 0
        self._rng_gamma, self._rng_theta, self._rng_chain = _agent_rngs(seed)

    def _std_normal_by_id(self) -> np.ndarray:
        z = self._rng_theta.standard_normal(self.catalog.id_capacity)
        return z[self.catalog.item_ids]

    def _beta_by_id(self, alpha, beta) -> np.ndarray:
        cap = self.catalog.id_capacity
        a = np.ones(cap)
        b = np.ones(cap)
        a[self.catalog.item_ids] = alpha
        b[self.catalog.item_ids] = beta
        draws = self._rng_theta.beta(a, b)[self.catalog.item_ids]
        return np.clip(draws, betamodel.THETA_EPS, 1.0 - betamodel.THETA_EPS)

    def observe(self, action, obs, rounds: int = 1) -> None:
        core.apply_event(self.stats, self.kind, self._events, action, obs,
                         self.catalog.n_items)
        self._events += 1
        self.t += rounds
        self._after_observe()

    def _after_observe(self) -> None:
        pass

    def on_rotation(self, new_catalog: ItemCatalog,
                    kept_mask: np.ndarray) -> None:
        replaced = np.flatnonzero(~kept_mask)
        for arrays in vars(self.stats).values():
            arrays[replaced] = 0
        self.catalog = new_catalog

    def select_action(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Linear-mixed-model family (semi-bandits)
# ---------------------------------------------------------------------------


class SemiMetaTS(_BaseAgent):
    """Hierarchical TS: sample coefficients, then item means, act greedily."""

    def __init__(self, spec: LmmSpec, catalog: ItemCatalog, k: int, seed: int,
                 schedule: Schedule = Schedule(every=100),
                 eb: EbConfig | None = None):
        super().__init__(ProblemKind.SEMI, catalog, k, seed)
        self.spec = spec
        self._cursor = _ScheduleCursor(schedule)
        self.eb = eb
        self._gamma: np.ndarray | None = None

    def select_action(self):
        if self._cursor.should_fire(self.t):
            belief = lmm.posterior_gamma(self.spec, self.stats, self.catalog)
            self._gamma = belief.sample(self._rng_gamma)
            self.gamma_sample_count += 1
        per_item = lmm.posterior_theta_given_gamma(
            self.spec, self.stats, self.catalog, self._gamma)
        theta = per_item.sample(self._rng_theta, z=self._std_normal_by_id())
        return top_k(theta, self.k)

    def _after_observe(self):
        if (self.eb is not None and self.eb.enabled
                and self.t % self.eb.refresh_period == 0):
            sigma1 = empirical_bayes_sigma1(self.spec, self.stats,
                                            self.catalog, self.eb.grid)
            self.spec = dataclasses.replace(self.spec, sigma1=sigma1)


class SemiOracleTS(_BaseAgent):
    """TS with the true coefficients known a priori (the skyline)."""

    def __init__(self, spec: LmmSpec, catalog: ItemCatalog, k: int, seed: int,
                 gamma_true: np.ndarray):
        super().__init__(ProblemKind.SEMI, catalog, k, seed)
        self.spec = spec
        self.gamma_true = np.asarray(gamma_true, dtype=np.float64)

    def select_action(self):
        per_item = lmm.posterior_theta_given_gamma(
            self.spec, self.stats, self.catalog, self.gamma_true)
        theta = per_item.sample(self._rng_theta, z=self._std_normal_by_id())
        return top_k(theta, self.k)


class SemiAgnosticTS(_BaseAgent):
    """Independent per-item Gaussian TS with a manual prior; never reads features."""

    def __init__(self, catalog: ItemCatalog, k: int, seed: int,
                 prior_var: float, sigma2: float, prior_mean: float = 0.0):
        super().__init__(ProblemKind.SEMI, catalog, k, seed)
        if prior_var <= 0:
            raise ValueError("prior variance must be positive")
        self.prior_mean = prior_mean
        self.prior_var = prior_var
        self.sigma2 = sigma2

    def select_action(self):
        prec = 1.0 / self.prior_var + self.stats.n / self.sigma2**2
        var = 1.0 / prec
        mean = var * (self.prior_mean / self.prior_var
                      + self.stats.reward_sum / self.sigma2**2)
        theta = mean + np.sqrt(var) * self._std_normal_by_id()
        return top_k(theta, self.k)


class SemiDeterminedTS(_BaseAgent):
    """TS under the restricted model theta_i = x_i^T gamma exactly."""

    def __init__(self, mu_gamma, sigma_gamma, sigma2: float,
                 catalog: ItemCatalog, k: int, seed: int):
        super().__init__(ProblemKind.SEMI, catalog, k, seed)
        self.mu_gamma = np.asarray(mu_gamma, dtype=np.float64)
        self.sigma_gamma = np.asarray(sigma_gamma, dtype=np.float64)
        self.sigma2 = sigma2

    def gamma_belief(self) -> lmm.GaussianBelief:
        return lmm.blr_gamma_posterior(self.mu_gamma, self.sigma_gamma,
                                       self.sigma2, self.stats, self.catalog)

    def select_action(self):
        gamma = self.gamma_belief().sample(self._rng_gamma)
        self.gamma_sample_count += 1
        theta = self.catalog.features @ gamma
        return top_k(theta, self.k)


# ---------------------------------------------------------------------------
# Beta-logistic family (cascade and MNL)
# ---------------------------------------------------------------------------


def _beta_kind_check(kind: ProblemKind):
    if kind not in (ProblemKind.CASCADE, ProblemKind.MNL):
        raise ValueError("Beta-model agents serve cascade or MNL problems")


class _BetaActionMixin:
    def _act(self, theta: np.ndarray):
        if self.kind is ProblemKind.CASCADE:
            return rank_top_k(theta, self.k)
        v = 1.0 / theta - 1.0
        return optimal_assortment(v, self.revenues, self.k)


class BetaMetaTS(_BaseAgent, _BetaActionMixin):
    """Hierarchical TS for Beta-logistic models with an MCMC coefficient chain."""

    def __init__(self, spec: BetaLogisticSpec, kind: ProblemKind,
                 catalog: ItemCatalog, k: int, seed: int,
                 schedule: Schedule = Schedule(every=500),
                 sampler: GammaSamplerConfig | None = None,
                 revenues: np.ndarray | None = None,
                 eb: EbConfig | None = None):
        _beta_kind_check(kind)
        super().__init__(kind, catalog, k, seed)
        self.spec = spec
        self.revenues = revenues
        self._cursor = _ScheduleCursor(schedule)
        self.sampler = sampler or GammaSamplerConfig()
        self.chain = GammaChain(spec, self.sampler)
        self.eb = eb
        self._gamma: np.ndarray | None = None

    def select_action(self):
        if self._cursor.should_fire(self.t):
            self._gamma = self.chain.sample(self.catalog, self.stats,
                                            self._rng_chain)
            self.gamma_sample_count += 1
        theta = betamodel.sample_theta_given_gamma(
            self.spec, self.catalog, self.stats, self._gamma, self._rng_theta)
        return self._act(theta)

    def _after_observe(self):
        if (self.eb is not None and self.eb.enabled
                and self.t % self.eb.refresh_period == 0
                and self.chain.last_draws is not None):
            draws = self.chain.last_draws[::max(1, len(self.chain.last_draws) // 50)]
            psi = empirical_bayes_psi(self.spec, self.stats, self.catalog,
                                      self.eb.grid, draws)
            self.spec = dataclasses.replace(self.spec, psi=psi)
            self.chain.spec = self.spec


class BetaOracleTS(_BaseAgent, _BetaActionMixin):
    """Feature-guided TS with the true coefficients known a priori."""

    def __init__(self, spec: BetaLogisticSpec, kind: ProblemKind,
                 catalog: ItemCatalog, k: int, seed: int,
                 gamma_true: np.ndarray,
                 revenues: np.ndarray | None = None):
        _beta_kind_check(kind)
        super().__init__(kind, catalog, k, seed)
        self.spec = spec
        self.revenues = revenues
        self.gamma_true = np.asarray(gamma_true, dtype=np.float64)

    def select_action(self):
        theta = betamodel.sample_theta_given_gamma(
            self.spec, self.catalog, self.stats, self.gamma_true,
            self._rng_theta)
        return self._act(theta)


class BetaAgnosticTS(_BaseAgent, _BetaActionMixin):
    """Per-item Beta(1, 1) TS with conjugate updates; never reads features."""

    def __init__(self, kind: ProblemKind, catalog: ItemCatalog, k: int,
                 seed: int, revenues: np.ndarray | None = None):
        _beta_kind_check(kind)
        super().__init__(kind, catalog, k, seed)
        self.revenues = revenues

    def select_action(self):
        a_cnt, b_cnt = betamodel.counts_pair(self.stats)
        theta = self._beta_by_id(1.0 + a_cnt, 1.0 + b_cnt)
        return self._act(theta)


class BetaDeterminedTS(_BaseAgent, _BetaActionMixin):
    """TS under the restricted model theta_i = link(x_i^T gamma) exactly.

    Maintains a warm Metropolis chain on the point-mass likelihood and
    redraws the coefficients every round.
    """

    def __init__(self, spec: BetaLogisticSpec, kind: ProblemKind,
                 catalog: ItemCatalog, k: int, seed: int,
                 sampler: GammaSamplerConfig | None = None,
                 revenues: np.ndarray | None = None,
                 per_round_iters: int = 5):
        _beta_kind_check(kind)
        super().__init__(kind, catalog, k, seed)
        self.spec = spec
        self.revenues = revenues
        self.sampler = sampler or GammaSamplerConfig()
        self.chain = GammaChain(spec, self.sampler, point_mass=True)
        self.per_round_iters = per_round_iters

    def select_action(self):
        if not self.chain.started:
            gamma = self.chain.sample(self.catalog, self.stats,
                                      self._rng_chain)
        else:
            gamma = self.chain.run(self.catalog, self.stats, self._rng_chain,
                                   n_iter=self.per_round_iters)[-1]
        self.gamma_sample_count += 1
        theta = betamodel.link_mean(self.spec, self.catalog.features @ gamma)
        return self._act(theta)


def run_mnl_agent_epoch(agent, env, rng_env: np.random.Generator,
                        max_rounds: int | None = None):
    """One epoch-level step: choose an assortment, hold it, update once.

    Returns (assortment, rounds).  The assortment stays fixed for the
    whole epoch and the agent's beliefs are updated exactly once per
    offered item; an epoch truncated by the round budget produces no
    belief update (its counts are not a complete epoch observation).
    """
    from .envs import run_epoch_mnl

    assortment = agent.select_action()
    obs, rounds = run_epoch_mnl(env, assortment, rng_env,
                                max_rounds=max_rounds)
    if obs is not None:
        agent.observe(assortment, obs, rounds=rounds)
    return assortment, rounds


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------


# Modeled generalization noise is floored at a tiny positive value so the
# Gaussian machinery stays valid when the instance law is degenerate.
SIGMA1_FLOOR = 1e-9


def lmm_spec_for(scenario: Scenario) -> LmmSpec:
    source = scenario.source
    if isinstance(source, (LmmSource, MisspecCosSource)):
        sigma1 = max(source.sigma1, SIGMA1_FLOOR)
    else:
        raise ValueError("semi-bandit agents need a Gaussian theta source")
    prior = scenario.gamma_prior()
    return LmmSpec(prior.mean, prior.covariance, sigma1,
                   max(scenario.sigma2, SIGMA1_FLOOR))


def beta_spec_for(scenario: Scenario) -> BetaLogisticSpec:
    source = scenario.source
    if not isinstance(source, BetaLogisticSource):
        raise ValueError("Beta-model agents need a Beta-logistic theta source")
    return BetaLogisticSpec(source.psi, scenario.kind is ProblemKind.MNL,
                            scenario.gamma_prior())


def make_agent(name: str, scenario: Scenario, catalog: ItemCatalog,
               gamma_true: np.ndarray, seed: int,
               schedule: Schedule | None = None,
               eb: EbConfig | None = None,
               sampler: GammaSamplerConfig | None = None):
    """Build one of the four policies for a scenario instance."""
    if name not in AGENT_NAMES:
        raise ValueError(f"unknown agent {name!r}; expected one of {AGENT_NAMES}")
    kind, k = scenario.kind, scenario.k
    if kind is ProblemKind.SEMI:
        spec = lmm_spec_for(scenario)
        if name == "meta":
            return SemiMetaTS(spec, catalog, k, seed,
                              schedule or Schedule(every=100), eb)
        if name == "oracle":
            return SemiOracleTS(spec, catalog, k, seed, gamma_true)
        if name == "agnostic":
            prior_var = float(np.linalg.eigvalsh(spec.sigma_gamma)[-1]
                              + spec.sigma1**2)
            return SemiAgnosticTS(catalog, k, seed, prior_var, spec.sigma2)
        return SemiDeterminedTS(spec.mu_gamma, spec.sigma_gamma, spec.sigma2,
                                catalog, k, seed)
    spec = beta_spec_for(scenario)
    revenues = catalog.revenues if kind is ProblemKind.MNL else None
    if name == "meta":
        return BetaMetaTS(spec, kind, catalog, k, seed,
                          schedule or Schedule(every=500), sampler,
                          revenues, eb)
    if name == "oracle":
        return BetaOracleTS(spec, kind, catalog, k, seed, gamma_true, revenues)
    if name == "agnostic":
        return BetaAgnosticTS(kind, catalog, k, seed, revenues)
    return BetaDeterminedTS(spec, kind, catalog, k, seed, sampler, revenues)
