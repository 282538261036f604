"""Seeding policies: Static, Greedy, SOF, FF and the non-adaptive baseline.

Every policy maps a ``PolicyState`` to a ``PolicyDecision`` through
``decide(graph, state, rng)``. The free functions (``static_decide``,
``sof_decide`` and so on) hold the actual rules; the classes only bind
their parameters so the process runner can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .diffusion import Status, _kernel_inputs, advance_round, estimate_g_forward, is_final
from .graph import Graph
from .rng import as_generator, kernel_seed
from .rrset import SelectorConfig, select_seeds_gr


@dataclass(frozen=True)
class PolicyState:
    status: Status
    t: int
    k: int
    step_index: int = 1


@dataclass(frozen=True)
class PolicyDecision:
    seeds: tuple = ()
    trace: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SeedingPattern:
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(a) for a in self.counts))
        if any(a < 0 for a in self.counts):
            raise ValueError("pattern entries must be non-negative")

    @property
    def T(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def at(self, step_index: int) -> int:
        """Seeds scheduled for the 1-based ``step_index`` (0 past the end)."""
        if 1 <= step_index <= len(self.counts):
            return self.counts[step_index - 1]
        return 0


@dataclass(frozen=True)
class ForesightConfig:
    """Sampling parameters shared by SOF and FF.

    ``samples`` is L. ``inner_selector`` and ``inner_samples`` drive the
    nested gr and g evaluations inside the SOF estimate.
    """

    samples: int = 50
    theta: float = 0.5
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    inner_selector: SelectorConfig = field(default_factory=lambda: SelectorConfig.fixed(500))
    inner_samples: int = 1
    delta_factor: float = 1e-6

    def __post_init__(self):
        if self.samples < 1 or self.inner_samples < 1:
            raise ValueError("sample counts must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


SelectFn = Callable[[Graph, Status, int, int, np.random.Generator], list]


def _rr_select(cfg: SelectorConfig | None) -> SelectFn:
    def select(graph, status, t, k, rng, info=None):
        return select_seeds_gr(graph, status, t, k, cfg, rng, info)
    return select


def make_k_filter_pattern(T: int, K: int, k: int) -> SeedingPattern:
    """Equal batches every k steps starting at step 1; leftovers at step T."""
    if T < 1 or K < 1:
        raise ValueError("T and K must be positive")
    if not 1 <= k <= T:
        raise ValueError(f"filter size must lie in [1, T={T}], got {k}")
    d = T // k
    base = K // d
    counts = [0] * T
    for j in range(d):
        counts[j * k] = base
    counts[T - 1] += K - d * base
    return SeedingPattern(tuple(counts))


# ---------------------------------------------------------------------------
# simple rules

def static_decide(graph: Graph, state: PolicyState, pattern: SeedingPattern,
                  selector: SelectorConfig | None = None, rng=None) -> PolicyDecision:
    a = min(pattern.at(state.step_index), state.k)
    if a <= 0:
        return PolicyDecision((), {"scheduled": pattern.at(state.step_index)})
    info: dict = {}
    seeds = select_seeds_gr(graph, state.status, state.t, a, selector, rng, info)
    return PolicyDecision(tuple(seeds), {"scheduled": a, **info})


def greedy_decide(graph: Graph, state: PolicyState, selector: SelectorConfig | None = None,
                  rng=None) -> PolicyDecision:
    if state.k <= 0:
        return PolicyDecision(())
    info: dict = {}
    if state.t == 1:
        seeds = select_seeds_gr(graph, state.status, 1, state.k, selector, rng, info)
        return PolicyDecision(tuple(seeds), {"case": "last_round", **info})
    if is_final(graph, state.status):
        seeds = select_seeds_gr(graph, state.status, state.t, 1, selector, rng, info)
        return PolicyDecision(tuple(seeds), {"case": "final", **info})
    return PolicyDecision((), {"case": "wait"})


def nonad_decide(graph: Graph, state: PolicyState, K: int, selector: SelectorConfig | None = None,
                 rng=None) -> PolicyDecision:
    if state.step_index != 1:
        return PolicyDecision(())
    info: dict = {}
    seeds = select_seeds_gr(graph, state.status, state.t, min(K, state.k), selector, rng, info)
    return PolicyDecision(tuple(seeds), info)


# ---------------------------------------------------------------------------
# SOF

def estimate_beta_bar(graph: Graph, state: PolicyState, k1: int, cfg: ForesightConfig | None = None,
                      rng=None, first_stage=None, select_fn: SelectFn | None = None) -> float:
    """Sampled profit of seeding k1 greedy nodes now and the rest one round later.

    ``first_stage`` may pass a precomputed gr(U, t, k) ordering whose first
    k1 entries are used. The L samples use streams derived from one seed,
    so calls with the same ``rng`` state share random numbers across k1.
    """
    cfg = cfg or ForesightConfig()
    if state.t < 2:
        raise ValueError("estimate_beta_bar needs t >= 2")
    if not 0 <= k1 <= state.k:
        raise ValueError("k1 must lie in [0, k]")
    outer = select_fn or _rr_select(cfg.selector)
    inner = select_fn or _rr_select(cfg.inner_selector)
    rng = as_generator(rng)
    base = kernel_seed(rng)
    if first_stage is None:
        first_stage = outer(graph, state.status, state.t, k1, rng)
    first = list(first_stage)[:k1]
    staged = state.status.with_active(first) if first else state.status
    rest = state.k - k1
    vals = np.empty(cfg.samples)
    for j in range(cfg.samples):
        sub = np.random.default_rng([base, j])
        ustar = advance_round(graph, staged, (), sub)
        second = inner(graph, ustar, state.t - 1, rest, sub) if rest > 0 else []
        vals[j] = estimate_g_forward(graph, ustar, second, state.t - 1, cfg.inner_samples, sub)
    return float(vals.mean())


def sof_decide(graph: Graph, state: PolicyState, cfg: ForesightConfig | None = None, rng=None,
               beta_fn: Callable[[Graph, PolicyState, int], float] | None = None,
               select_fn: SelectFn | None = None) -> PolicyDecision:
    """Seed gr(U, t, k*) with k* the largest maximizer of the beta estimates.

    ``beta_fn(graph, state, k1)`` replaces the sampled estimate (the oracle
    passes the exact value); ``select_fn`` replaces the RR-set selector.
    """
    cfg = cfg or ForesightConfig()
    rng = as_generator(rng)
    if state.k <= 0:
        return PolicyDecision(())
    select = select_fn or _rr_select(cfg.selector)
    first = list(select(graph, state.status, state.t, state.k, rng))
    if state.t == 1:
        return PolicyDecision(tuple(first), {"k_star": len(first), "beta": []})
    beta_rng_seed = kernel_seed(rng)
    betas = []
    for i in range(len(first) + 1):
        if beta_fn is not None:
            betas.append(float(beta_fn(graph, state, i)))
        else:
            betas.append(estimate_beta_bar(graph, state, i, cfg, np.random.default_rng(beta_rng_seed),
                                           first_stage=first))
    best = max(betas)
    k_star = max(i for i, b in enumerate(betas) if b >= best)
    return PolicyDecision(tuple(first[:k_star]), {"k_star": k_star, "beta": betas})


# ---------------------------------------------------------------------------
# FF

def alpha(t: int) -> float:
    if t < 1:
        raise ValueError("t must be >= 1")
    return 1.0 - 1.0 / t


class ForesightSampler:
    """Shared realizations for the Ma / h estimates of one decision.

    Per sample it keeps distances from A(U) and from A(U) + S_i (the
    current accepted prefix), plus a histogram of the latter, so each
    candidate costs one bounded BFS per sample.
    """

    def __init__(self, graph: Graph, status: Status, t: int, samples: int, rng=None,
                 S=(), horizon: int | None = None):
        if t < 1:
            raise ValueError("t must be >= 1")
        self.graph = graph
        self.status = status
        self.t = t
        self.samples = samples
        self.cap = t + (t if horizon is None else horizon)
        self.seed = kernel_seed(rng)
        g = graph
        zero, push = _kernel_inputs(g, status, ())
        self.d_act = _kernels.distances(g.out_ptr, g.dst, g.prob, status.edge_state, zero, push,
                                        t, self.seed, 0, samples)
        zero_s, push_s = _kernel_inputs(g, status, S)
        self.d_sel = _kernels.distances(g.out_ptr, g.dst, g.prob, status.edge_state, zero_s, push_s,
                                        self.cap, self.seed, 0, samples)
        self.hist = _kernels.distance_histogram(self.d_sel, self.cap)

    def _run(self, v, ta, tb, merge):
        if max(ta, tb) > self.cap - self.t:
            raise ValueError("foresight horizon exceeds the sampler's distance cap")
        g = self.graph
        return _kernels.candidate_stats(g.out_ptr, g.dst, g.prob, self.status.edge_state, int(v),
                                        self.d_sel, self.d_act, self.hist, self.t, int(ta), int(tb),
                                        self.seed, 0, merge)

    def stats(self, v: int, ta: int | None = None, tb: int | None = None):
        """Per-sample (gain_sel, gain_act, h_a, h_b) for candidate ``v``."""
        ta = self.t if ta is None else ta
        tb = self.t - 1 if tb is None else tb
        return self._run(v, ta, tb, False)

    def add(self, v: int) -> None:
        """Extend S_i by ``v`` on every stored realization."""
        self._run(v, 0, 0, True)


def _ma_from(gain_sel, gain_act, delta):
    den = float(np.mean(gain_act))
    if den < delta:
        return 0.0
    return min(max(float(np.mean(gain_sel)) / den, 0.0), 1.0)


def _mt_from(t, h_now, h_late, delta):
    if t == 1:
        return 1.0
    now = float(np.mean(h_now))
    if now < delta:
        return 0.0
    return min(max((now - float(np.mean(h_late))) / now, 0.0), 1.0)


def compute_h(graph: Graph, status: Status, S_i, v: int, t: int, t_star: int, samples: int, rng=None) -> float:
    """E over U* (t rounds after seeding S_i) of g(U*, {v}, t_star) - |A(U*)|.

    Each sample draws one realization; U* and the continuation are read
    off the same realization, which has the right joint distribution
    because the continuation only flips edges U* has not observed.
    """
    if not 0 <= t_star <= t:
        raise ValueError("t_star must lie in [0, t]")
    sampler = ForesightSampler(graph, status, t, samples, rng, S_i)
    _, _, h, _ = sampler.stats(v, t_star, t_star)
    return float(h.mean())


def compute_ma(graph: Graph, status: Status, S_i, v: int, t: int, samples: int, rng=None,
               delta: float | None = None) -> float:
    delta = 1e-6 * graph.n if delta is None else delta
    sampler = ForesightSampler(graph, status, t, samples, rng, S_i, horizon=0)
    gs, ga, _, _ = sampler.stats(v, 0, 0)
    return _ma_from(gs, ga, delta)


def compute_mt(graph: Graph, status: Status, S_i, v: int, t: int, samples: int, rng=None,
               delta: float | None = None) -> float:
    if t == 1:
        return 1.0
    delta = 1e-6 * graph.n if delta is None else delta
    sampler = ForesightSampler(graph, status, t, samples, rng, S_i)
    _, _, h_now, h_late = sampler.stats(v)
    return _mt_from(t, h_now, h_late, delta)


def ff_decide(graph: Graph, state: PolicyState, cfg: ForesightConfig | None = None, rng=None) -> PolicyDecision:
    """Accept gr(U, t, k) candidates in order while Ind >= theta."""
    cfg = cfg or ForesightConfig(samples=500)
    rng = as_generator(rng)
    if state.k <= 0:
        return PolicyDecision(())
    info: dict = {}
    cands = select_seeds_gr(graph, state.status, state.t, state.k, cfg.selector, rng, info)
    a = alpha(state.t)
    trace = {"candidates": list(cands), "ma": [], "mt": [], "ind": [], **info}
    if state.t == 1:
        n = len(cands)
        trace.update(ma=[None] * n, mt=[1.0] * n, ind=[1.0] * n)
        return PolicyDecision(tuple(cands), trace)
    delta = cfg.delta_factor * graph.n
    sampler = ForesightSampler(graph, state.status, state.t, cfg.samples, rng)
    accepted: list[int] = []
    for i, v in enumerate(cands):
        gs, ga, h_now, h_late = sampler.stats(v)
        ma = _ma_from(gs, ga, delta)
        mt = _mt_from(state.t, h_now, h_late, delta)
        ind = a * ma + (1.0 - a) * mt
        trace["ma"].append(ma)
        trace["mt"].append(mt)
        trace["ind"].append(ind)
        if ind < cfg.theta:
            break
        accepted.append(v)
        if i + 1 < len(cands):
            sampler.add(v)
    return PolicyDecision(tuple(accepted), trace)


# ---------------------------------------------------------------------------
# policy objects

class Policy:
    name = "policy"

    def start(self, graph: Graph, T: int, K: int) -> None:
        """Called once per seeding process before the first decision."""

    def decide(self, graph: Graph, state: PolicyState, rng=None) -> PolicyDecision:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def label(self) -> str:
        p = self.params()
        if not p:
            return self.name
        return self.name + "(" + ",".join(f"{k}={v}" for k, v in p.items()) + ")"

    def __repr__(self):
        return self.label()


class StaticPolicy(Policy):
    name = "static"

    def __init__(self, filter_size: int | None = None, pattern=None, selector: SelectorConfig | None = None):
        if (filter_size is None) == (pattern is None):
            raise ValueError("give exactly one of filter_size and pattern")
        self.filter_size = filter_size
        self.pattern = None if pattern is None else SeedingPattern(tuple(pattern))
        self.selector = selector
        self._active = self.pattern

    def start(self, graph, T, K):
        if self.filter_size is not None:
            self._active = make_k_filter_pattern(T, K, self.filter_size)

    def decide(self, graph, state, rng=None):
        if self._active is None:
            raise RuntimeError("StaticPolicy.start must run before decide")
        return static_decide(graph, state, self._active, self.selector, rng)

    def params(self):
        if self.filter_size is not None:
            return {"k": self.filter_size}
        return {"pattern": "-".join(map(str, self.pattern.counts))}


class GreedyPolicy(Policy):
    name = "greedy"

    def __init__(self, selector: SelectorConfig | None = None):
        self.selector = selector

    def decide(self, graph, state, rng=None):
        return greedy_decide(graph, state, self.selector, rng)


class NonAdaptivePolicy(Policy):
    name = "nonad"

    def __init__(self, selector: SelectorConfig | None = None):
        self.selector = selector
        self.K = None

    def start(self, graph, T, K):
        self.K = K

    def decide(self, graph, state, rng=None):
        K = state.k if self.K is None else self.K
        return nonad_decide(graph, state, K, self.selector, rng)


class SOFPolicy(Policy):
    name = "sof"

    def __init__(self, cfg: ForesightConfig | None = None, beta_fn=None, select_fn=None):
        self.cfg = cfg or ForesightConfig(samples=50)
        self.beta_fn = beta_fn
        self.select_fn = select_fn

    def decide(self, graph, state, rng=None):
        return sof_decide(graph, state, self.cfg, rng, self.beta_fn, self.select_fn)

    def params(self):
        if self.beta_fn is not None:
            return {"mode": "exact"}
        return {"L": self.cfg.samples, "inner_rr": self.cfg.inner_selector.count,
                "inner_samples": self.cfg.inner_samples}


class FFPolicy(Policy):
    name = "ff"

    def __init__(self, cfg: ForesightConfig | None = None):
        self.cfg = cfg or ForesightConfig(samples=500)

    def decide(self, graph, state, rng=None):
        return ff_decide(graph, state, self.cfg, rng)

    def params(self):
        return {"theta": self.cfg.theta, "L": self.cfg.samples}


POLICIES = {
    "static": StaticPolicy,
    "greedy": GreedyPolicy,
    "nonad": NonAdaptivePolicy,
    "sof": SOFPolicy,
    "ff": FFPolicy,
}


def make_policy(name: str, selector: SelectorConfig | None = None, **params) -> Policy:
    """Build a policy from a name and flat parameters (as in the run config)."""
    name = name.lower()
    if name == "static":
        if "pattern" in params:
            return StaticPolicy(pattern=params["pattern"], selector=selector)
        return StaticPolicy(filter_size=int(params.get("k", 1)), selector=selector)
    if name == "greedy":
        return GreedyPolicy(selector)
    if name == "nonad":
        return NonAdaptivePolicy(selector)
    if name in ("sof", "ff"):
        defaults = {"sof": 50, "ff": 500}[name]
        cfg = ForesightConfig(
            samples=int(params.get("L", defaults)),
            theta=float(params.get("theta", 0.5)),
            selector=selector or SelectorConfig(),
            inner_selector=SelectorConfig.fixed(int(params.get("inner_rr", 500))),
            inner_samples=int(params.get("inner_samples", 1)),
        )
        return SOFPolicy(cfg) if name == "sof" else FFPolicy(cfg)
    raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}")

