"""Experiment runner: replication grids, regret aggregation, CSV output."""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, kernels
from .agents import EbConfig, GammaSamplerConfig, Schedule, make_agent
from .core import ProblemKind, RegretTrace
from .envs import (BetaLogisticSource, ColdStart, LmmSource, MisspecCosSource,
                   PRESETS, Scenario, draw_instance, env_for, expected_reward,
                   optimal_value, rotate_items, step_cascade, step_semi)
from .rng import seeded_rng


class ConfigError(ValueError):
    """Raised when a run configuration fails to parse or validate."""


def replication_seed(seed_base: int, scenario_name: str, rep: int) -> int:
    """Stable per-replication seed, independent of the grid composition.

    All agents in a (scenario, replication) cell share the seed, so they
    face the same instance and the comparisons are paired.
    """
    token = f"{seed_base}|{scenario_name}|{rep}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(token).digest()[:8], "little")


def run_replication(scenario: Scenario, agent_name: str, T: int, seed: int,
                    schedule: Schedule | None = None,
                    eb: EbConfig | None = None,
                    sampler: GammaSamplerConfig | None = None) -> RegretTrace:
    """One full interaction trajectory; returns the per-round regret trace."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng_true = seeded_rng(seed, "gamma_true")
    rng_inst = seeded_rng(seed, "instance")
    rng_env = seeded_rng(seed, "env")
    rng_rot = seeded_rng(seed, "rotation")
    gamma_true = scenario.gamma_prior().sample(rng_true)
    catalog, info = draw_instance(scenario, gamma_true, rng_inst)
    env = env_for(scenario, catalog)
    agent = make_agent(agent_name, scenario, catalog, gamma_true, seed,
                       schedule=schedule, eb=eb, sampler=sampler)
    opt = optimal_value(env)
    inst = np.empty(T)
    cold = scenario.cold_start
    if scenario.kind is ProblemKind.MNL:
        if cold is not None:
            raise ConfigError("cold-start rotation is not supported for MNL")
        from .agents import run_mnl_agent_epoch

        t = 0
        while t < T:
            assortment, rounds = run_mnl_agent_epoch(agent, env, rng_env,
                                                     max_rounds=T - t)
            inst[t:t + rounds] = opt - expected_reward(env, assortment)
            t += rounds
    else:
        for t in range(T):
            if cold is not None and t > 0 and t % cold.period == 0:
                catalog, kept = rotate_items(catalog, scenario, gamma_true,
                                             rng_rot,
                                             cos_norm=info.get("cos_norm"))
                env = env_for(scenario, catalog)
                agent.on_rotation(catalog, kept)
                opt = optimal_value(env)
            action = agent.select_action()
            inst[t] = opt - expected_reward(env, action)
            if scenario.kind is ProblemKind.SEMI:
                obs, _ = step_semi(env, action, rng_env)
            else:
                obs = step_cascade(env, action, rng_env)
            agent.observe(action, obs)
    return RegretTrace(inst, replication=0, seed=seed,
                       meta={"scenario": scenario.name, "agent": agent_name,
                             **info})


@dataclass
class Aggregate:
    """Per-round mean and standard error across replications."""

    mean_cum: np.ndarray
    stderr_cum: np.ndarray
    mean_inst: np.ndarray
    n_replications: int
    se_degenerate: bool = False


def aggregate(traces: list[RegretTrace]) -> Aggregate:
    if not traces:
        raise ValueError("cannot aggregate an empty list of traces")
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have unequal lengths: {sorted(lengths)}")
    cum = np.stack([t.cumulative for t in traces])
    inst = np.stack([t.inst for t in traces])
    m = len(traces)
    if m == 1:
        stderr = np.zeros(cum.shape[1])
        return Aggregate(cum[0], stderr, inst[0], 1, se_degenerate=True)
    stderr = np.std(cum, axis=0, ddof=1) / np.sqrt(m)
    return Aggregate(cum.mean(axis=0), stderr, inst.mean(axis=0), m)


CSV_HEADER = "round,mean_cum_regret,stderr_cum_regret,mean_inst_regret,n_replications"


def write_curve_csv(agg: Aggregate, path) -> None:
    """One row per round, LF line endings, spec column order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for t in range(agg.mean_cum.size):
            fh.write(f"{t + 1},{float(agg.mean_cum[t])!r},"
                     f"{float(agg.stderr_cum[t])!r},"
                     f"{float(agg.mean_inst[t])!r},{agg.n_replications}\n")


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_SOURCE_TYPES = {
    "lmm": (LmmSource, {"sigma1"}),
    "beta_logistic": (BetaLogisticSource, {"psi", "shifted"}),
    "misspec_cos": (MisspecCosSource, {"lam", "sigma1"}),
}

_CONFIG_KEYS = {"scenario", "agents", "T", "replications", "seed_base",
                "schedule", "eb", "output_dir", "sampler"}


def _parse_source(obj) -> LmmSource | BetaLogisticSource | MisspecCosSource:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("source must be an object with a 'type' field")
    kind = obj["type"]
    if kind not in _SOURCE_TYPES:
        raise ConfigError(f"unknown source type {kind!r}")
    cls, allowed = _SOURCE_TYPES[kind]
    kwargs = {k: v for k, v in obj.items() if k != "type"}
    if not set(kwargs) <= allowed:
        raise ConfigError(f"unexpected source fields {set(kwargs) - allowed}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid source: {exc}") from exc


def _parse_scenario(obj) -> Scenario:
    if isinstance(obj, str):
        if obj not in PRESETS:
            raise ConfigError(f"unknown preset {obj!r}; see 'presets list'")
        return PRESETS[obj]
    if not isinstance(obj, dict):
        raise ConfigError("scenario must be a preset name or an object")
    try:
        cold = obj.get("cold_start")
        return Scenario(
            name=obj["name"],
            kind=ProblemKind(obj["kind"]),
            n_items=int(obj["n_items"]),
            k=int(obj["k"]),
            dim=int(obj["dim"]),
            source=_parse_source(obj["source"]),
            sigma2=float(obj.get("sigma2", 1.0)),
            revenue=float(obj.get("revenue", 1.0)),
            gamma_prior_sd=obj.get("gamma_prior_sd"),
            cold_start=ColdStart(**cold) if cold else None,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


@dataclass
class RunConfig:
    scenarios: list[Scenario]
    agents: list[str]
    T: int
    replications: int
    seed_base: int
    schedule: Schedule | None
    eb: EbConfig | None
    sampler: GammaSamplerConfig | None
    output_dir: str
    raw: dict

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(obj) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("scenario", "agents", "T", "replications", "output_dir"):
            if key not in obj:
                raise ConfigError(f"missing required config key {key!r}")
        scen = obj["scenario"]
        scenarios = [_parse_scenario(s) for s in
                     (scen if isinstance(scen, list) else [scen])]
        agents = list(obj["agents"])
        if not agents:
            raise ConfigError("agents list is empty")
        from .agents import AGENT_NAMES

        unknown_agents = [a for a in agents if a not in AGENT_NAMES]
        if unknown_agents:
            raise ConfigError(f"unknown agents {unknown_agents}; "
                              f"expected {list(AGENT_NAMES)}")
        T = int(obj["T"])
        reps = int(obj["replications"])
        if T < 1 or reps < 1:
            raise ConfigError("T and replications must be >= 1")
        schedule = None
        if obj.get("schedule") is not None:
            sch = obj["schedule"]
            try:
                schedule = Schedule(
                    every=sch.get("every") if "at_times" not in sch else None,
                    at_times=tuple(sch["at_times"]) if "at_times" in sch else None)
            except (AttributeError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid schedule: {exc}") from exc
        eb = None
        if obj.get("eb") is not None:
            try:
                eb = EbConfig(**obj["eb"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid eb config: {exc}") from exc
        sampler = None
        if obj.get("sampler") is not None:
            try:
                sampler = GammaSamplerConfig(**obj["sampler"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid sampler config: {exc}") from exc
        return cls(scenarios, agents, T, reps, int(obj.get("seed_base", 0)),
                   schedule, eb, sampler, str(obj["output_dir"]), obj)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(obj)


# ---------------------------------------------------------------------------
# Grid execution
# ---------------------------------------------------------------------------


def _replication_task(scenario, agent_name, T, seed, schedule, eb, sampler):
    trace = run_replication(scenario, agent_name, T, seed, schedule=schedule,
                            eb=eb, sampler=sampler)
    return trace.inst


@dataclass
class CellResult:
    scenario: str
    agent: str
    traces: list[RegretTrace]
    errors: list[str]
    csv_path: str | None = None


def run_grid(config: RunConfig, workers: int = 1,
             dry_run: bool = False, out_dir=None) -> tuple[int, dict]:
    """Execute every (scenario, agent, replication) cell and write CSVs.

    Returns (exit_code, metadata).  Exit code 2 flags partial failures;
    cells are independent, so removing one never changes another's bytes.
    """
    out_dir = str(out_dir if out_dir is not None else config.output_dir)
    if dry_run:
        return 0, {"dry_run": True,
                   "cells": [{"scenario": s.name, "agent": a}
                             for s in config.scenarios for a in config.agents]}
    os.makedirs(out_dir, exist_ok=True)
    started = time.time()
    cells: list[CellResult] = []
    jobs = []
    for scenario in config.scenarios:
        for agent in config.agents:
            cell = CellResult(scenario.name, agent, [], [])
            cells.append(cell)
            for rep in range(config.replications):
                seed = replication_seed(config.seed_base, scenario.name, rep)
                jobs.append((cell, rep, scenario, agent, seed))

    def _finish(cell, rep, seed, outcome, error=None):
        if error is not None:
            cell.errors.append(f"replication {rep}: {error}")
        else:
            cell.traces.append(RegretTrace(outcome, replication=rep, seed=seed))

    if workers <= 1:
        for cell, rep, scenario, agent, seed in jobs:
            try:
                inst = _replication_task(scenario, agent, config.T, seed,
                                         config.schedule, config.eb,
                                         config.sampler)
                _finish(cell, rep, seed, inst)
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                _finish(cell, rep, seed, None, repr(exc))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_replication_task, scenario, agent, config.T,
                            seed, config.schedule, config.eb, config.sampler):
                (cell, rep, seed)
                for cell, rep, scenario, agent, seed in jobs}
            for fut in concurrent.futures.as_completed(futures):
                cell, rep, seed = futures[fut]
                try:
                    _finish(cell, rep, seed, fut.result())
                except Exception as exc:  # noqa: BLE001
                    _finish(cell, rep, seed, None, repr(exc))

    any_failed = False
    for cell in cells:
        cell.traces.sort(key=lambda tr: tr.replication)
        if cell.errors:
            any_failed = True
        if cell.traces:
            agg = aggregate(cell.traces)
            path = os.path.join(out_dir, f"{cell.scenario}__{cell.agent}.csv")
            write_curve_csv(agg, path)
            cell.csv_path = path
    metadata = {
        "config": config.raw,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "wall_time_s": round(time.time() - started, 3),
        "cells": [{"scenario": c.scenario, "agent": c.agent,
                   "n_ok": len(c.traces), "n_failed": len(c.errors),
                   "errors": c.errors, "csv": c.csv_path}
                  for c in cells],
    }
    meta_path = os.path.join(out_dir, "run_metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return (2 if any_failed else 0), metadata
