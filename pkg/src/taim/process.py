"""The seeding process: T alternating seeding and diffusing steps, over many trials."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffusion import Status, advance_round
from .graph import Graph
from .policies import Policy, PolicyState
from .rng import stream


class ContractViolation(RuntimeError):
    """A policy broke its contract (over budget, active or repeated seeds)."""


@dataclass(frozen=True)
class ProcessConfig:
    T: int
    K: int
    trials: int = 1
    master_seed: int = 0
    workers: int = 1
    keep_traces: bool = False

    def __post_init__(self):
        if self.T < 1 or self.K < 0 or self.trials < 1:
            raise ValueError("need T >= 1, K >= 0 and trials >= 1")


@dataclass
class TrialResult:
    trial: int
    influence: int
    seeds_used: tuple
    cumulative: tuple
    wall_time: float
    decision_times: tuple
    seeds: tuple = ()
    traces: list = field(default_factory=list)

    @property
    def mean_decision_time(self) -> float:
        return float(np.mean(self.decision_times)) if self.decision_times else 0.0


@dataclass
class TrialsSummary:
    mean: float
    stddev: float
    ci95: float
    trials: int
    influences: np.ndarray
    curves: np.ndarray
    mean_decision_time: float
    results: list

    def as_dict(self) -> dict:
        return {"mean_influence": self.mean, "stddev": self.stddev, "ci95": self.ci95,
                "trials": self.trials, "mean_wall_time_per_decision": self.mean_decision_time}


def _check_decision(graph: Graph, status: Status, seeds, k: int, policy: Policy, step: int) -> tuple:
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) > k:
        raise ContractViolation(f"{policy.label()} returned {len(seeds)} seeds at step {step} with budget {k}")
    if len(set(seeds)) != len(seeds):
        raise ContractViolation(f"{policy.label()} returned repeated seeds {seeds} at step {step}")
    for s in seeds:
        if not 0 <= s < graph.n:
            raise ContractViolation(f"{policy.label()} returned unknown node {s} at step {step}")
        if status.active[s]:
            raise ContractViolation(f"{policy.label()} seeded active node {s} at step {step}")
    return seeds


def run_seeding_process(graph: Graph, policy: Policy, cfg: ProcessConfig, trial_id: int = 0) -> TrialResult:
    start = time.perf_counter()
    policy.start(graph, cfg.T, cfg.K)
    status = Status.empty(graph)
    k, t = cfg.K, cfg.T
    used, cum, times, placed, traces = [], [], [], [], []
    total = 0
    for step in range(1, cfg.T + 1):
        state = PolicyState(status, t, k, step)
        t0 = time.perf_counter()
        decision = policy.decide(graph, state, stream(cfg.master_seed, trial_id, step, "policy"))
        times.append(time.perf_counter() - t0)
        seeds = _check_decision(graph, status, decision.seeds, k, policy, step)
        k -= len(seeds)
        total += len(seeds)
        used.append(len(seeds))
        cum.append(total)
        placed.extend(seeds)
        if cfg.keep_traces:
            traces.append({"step": step, "t": t, "seeds": seeds, **decision.trace})
        status = advance_round(graph, status, seeds, stream(cfg.master_seed, trial_id, step, "diffusion"))
        t -= 1
    return TrialResult(trial_id, status.n_active, tuple(used), tuple(cum), time.perf_counter() - start,
                       tuple(times), tuple(placed), traces)


def _run_chunk(args):
    graph, policy, cfg, ids = args
    return [run_seeding_process(graph, policy, cfg, i) for i in ids]


def run_trials(graph: Graph, policy: Policy, cfg: ProcessConfig) -> TrialsSummary:
    """Independent processes for trial ids 0..trials-1, summarized.

    Results do not depend on ``cfg.workers``: every trial draws from its
    own (master seed, trial id) streams.
    """
    ids = list(range(cfg.trials))
    if cfg.workers > 1 and cfg.trials > 1:
        chunks = [ids[i::cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(graph, policy, cfg, c) for c in chunks]) for r in part]
        results.sort(key=lambda r: r.trial)
    else:
        results = _run_chunk((graph, policy, cfg, ids))
    return summarize(results)


def summarize(results: list) -> TrialsSummary:
    infl = np.array([r.influence for r in results], dtype=np.float64)
    n = len(results)
    sd = float(infl.std(ddof=1)) if n > 1 else 0.0
    times = [x for r in results for x in r.decision_times]
    return TrialsSummary(
        mean=float(infl.mean()),
        stddev=sd,
        ci95=1.96 * sd / math.sqrt(n),
        trials=n,
        influences=infl,
        curves=np.array([r.cumulative for r in results], dtype=np.int64),
        mean_decision_time=float(np.mean(times)) if times else 0.0,
        results=results,
    )
