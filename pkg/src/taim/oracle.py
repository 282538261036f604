"""Brute-force ground truth for desk-scale instances.

Nothing here touches the compiled kernels: expectations are computed by
enumerating edge outcomes and replaying plain breadth-first search, so
the results can serve as an independent check on the samplers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import Status, is_final, pending_edges
from .graph import Graph, generate_line_graph
from .policies import Policy, PolicyDecision
from . import _kernels
from .rng import as_generator, kernel_seed

# the constant quoted for the large-N gap, and the actual N -> infinity
# limit of the two closed forms below, (1 - 2/e^2) / (1 - 1/e)
LIMIT_RATIO = (math.e**2 - 2.0) / (math.e - 1.0)
CLOSED_FORM_LIMIT = (math.e**2 - 2.0) / (math.e * (math.e - 1.0))
_TIE = 1e-12


class CapacityError(RuntimeError):
    """Instance too large for exhaustive enumeration."""


# ---------------------------------------------------------------------------
# exact g

def _hop_distance(graph: Graph, status: Status, sources: set[int], cap: int) -> dict[int, int]:
    dist = {u: 0 for u in sources}
    layer = list(sources)
    for d in range(1, cap + 1):
        nxt = []
        for u in layer:
            for e in graph.out_edges(u):
                v = int(graph.dst[e])
                if v not in dist and not status.dead[e]:
                    dist[v] = d
                    nxt.append(v)
        layer = nxt
    return dist


def _bounded_reach(graph: Graph, sources: set[int], t: int, live) -> int:
    seen = set(sources)
    layer = list(sources)
    for _ in range(t):
        nxt = []
        for u in layer:
            for e in graph.out_edges(u):
                v = int(graph.dst[e])
                if v not in seen and live(e):
                    seen.add(v)
                    nxt.append(v)
        if not nxt:
            break
        layer = nxt
    return len(seen)


def exact_g(graph: Graph, status: Status, S, t: int, max_edges: int = 22) -> float:
    """E[#active after t rounds] from ``status`` with ``S`` seeded, by enumeration.

    Only unobserved edges whose source is within t-1 hops of the seeded
    active set can matter; those with p < 1 are enumerated.
    """
    sources = set(np.flatnonzero(status.active).tolist()) | {int(s) for s in S}
    if t <= 0 or not sources:
        return float(len(sources))
    dist = _hop_distance(graph, status, sources, t - 1)
    free = [e for e in range(graph.m)
            if not status.live[e] and not status.dead[e]
            and dist.get(int(graph.src[e]), t) <= t - 1]
    certain = {e for e in free if graph.prob[e] >= 1.0}
    coins = [e for e in free if e not in certain]
    if len(coins) > max_edges:
        raise CapacityError(f"{len(coins)} uncertain edges exceed the enumeration bound {max_edges}")
    terms = []
    for bits in itertools.product((False, True), repeat=len(coins)):
        weight = 1.0
        on = set(certain)
        for e, b in zip(coins, bits):
            p = float(graph.prob[e])
            if b:
                weight *= p
                on.add(e)
            else:
                weight *= 1.0 - p
        if weight == 0.0:
            continue
        reach = _bounded_reach(graph, sources, t, lambda e: status.live[e] or e in on)
        terms.append(weight * reach)
    return math.fsum(terms)


def exact_greedy(graph: Graph, status: Status, t: int, k: int) -> list[int]:
    """Greedy selection on exact g; inactive candidates, ties to the smallest id."""
    chosen: list[int] = []
    inactive = [int(v) for v in np.flatnonzero(~status.active)]
    for _ in range(min(k, len(inactive))):
        best, best_v = -math.inf, None
        for v in inactive:
            if v in chosen:
                continue
            val = exact_g(graph, status, chosen + [v], t)
            if val > best + _TIE:
                best, best_v = val, v
        chosen.append(best_v)
    return chosen


# ---------------------------------------------------------------------------
# one-round outcomes

def _canonical_key(graph: Graph, status: Status):
    """Active set plus the dead edges that still block a crossing.

    Edges out of inactive nodes are never observed, live edges end inside
    the active set, and edges between two active nodes no longer matter,
    so everything else is marginalized out.
    """
    blocking = status.dead & ~status.active[graph.dst]
    return (status.active.tobytes(), np.flatnonzero(blocking).tobytes())


def one_round_outcomes(graph: Graph, status: Status, seeds=()) -> list[tuple[float, Status]]:
    """All statuses one round after seeding ``seeds``, with probabilities."""
    active = status.active.copy()
    for s in seeds:
        active[int(s)] = True
    attempt = pending_edges(graph, active, status).tolist()
    uncertain = [e for e in attempt if graph.prob[e] < 1.0]
    sure = [e for e in attempt if graph.prob[e] >= 1.0]
    if len(uncertain) > 22:
        raise CapacityError("too many edges attempted in one round")
    out = []
    for bits in itertools.product((False, True), repeat=len(uncertain)):
        weight = 1.0
        live = status.live.copy()
        dead = status.dead.copy()
        nxt = active.copy()
        for e in sure:
            live[e] = True
            nxt[graph.dst[e]] = True
        for e, b in zip(uncertain, bits):
            p = float(graph.prob[e])
            if b:
                weight *= p
                live[e] = True
                nxt[graph.dst[e]] = True
            else:
                weight *= 1.0 - p
                dead[e] = True
        out.append((weight, Status(nxt, live, dead)))
    return out


def future_distribution(graph: Graph, status: Status, rounds: int, seeds=()) -> list[tuple[float, Status]]:
    """Distribution over statuses ``rounds`` rounds ahead (seeds placed first)."""
    dist = [(1.0, status)]
    for r in range(rounds):
        merged: dict = {}
        for w, st in dist:
            for p, nxt in one_round_outcomes(graph, st, seeds if r == 0 else ()):
                key = _canonical_key(graph, nxt)
                if key in merged:
                    merged[key] = (merged[key][0] + w * p, merged[key][1])
                else:
                    merged[key] = (w * p, nxt)
        dist = list(merged.values())
    if rounds == 0 and seeds:
        dist = [(1.0, status.with_active(seeds))]
    return dist


# ---------------------------------------------------------------------------
# foresight quantities

def exact_h(graph: Graph, status: Status, S_i, v: int, t: int, t_star: int) -> float:
    """E over U* (t rounds after seeding S_i) of g(U*, {v}, t_star) - |A(U*)|."""
    terms = []
    for w, ustar in future_distribution(graph, status, t, tuple(S_i)):
        terms.append(w * (exact_g(graph, ustar, [v], t_star) - ustar.n_active))
    return math.fsum(terms)


def exact_ma(graph: Graph, status: Status, S_i, v: int, t: int) -> float:
    S_i = list(S_i)
    num = exact_g(graph, status, S_i + [v], t) - exact_g(graph, status, S_i, t)
    den = exact_g(graph, status, [v], t) - exact_g(graph, status, [], t)
    if den <= _TIE:
        return 0.0
    return min(max(num / den, 0.0), 1.0)


def exact_mt(graph: Graph, status: Status, S_i, v: int, t: int) -> float:
    """Relative loss from seeding ``v`` one round later.

    With one round left no later seeding step exists, so the delayed
    gain is zero and the ratio is 1.
    """
    if t == 1:
        return 1.0
    now = exact_h(graph, status, S_i, v, t, t)
    if now <= _TIE:
        return 0.0
    late = exact_h(graph, status, S_i, v, t, t - 1)
    return min(max((now - late) / now, 0.0), 1.0)


# ---------------------------------------------------------------------------
# one-step foresight, exact

def _best_subset_value(graph: Graph, status: Status, size: int, t: int) -> float:
    inactive = [int(v) for v in np.flatnonzero(~status.active)]
    size = min(size, len(inactive))
    return max(exact_g(graph, status, combo, t) for combo in itertools.combinations(inactive, size))


def exact_beta(graph: Graph, status: Status, k: int, t: int, k1: int, inner: str = "max") -> float:
    """Profit of seeding ``k1`` greedy nodes now and ``k - k1`` after one round.

    ``inner="max"`` takes the best second-stage set (the OF objective);
    ``inner="greedy"`` uses exact greedy for it (the quantity SOF samples).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if not 0 <= k1 <= k:
        raise ValueError("k1 must lie in [0, k]")
    first = exact_greedy(graph, status, t, k1)
    staged = status.with_active(first)
    terms = []
    for w, ustar in one_round_outcomes(graph, staged):
        rest = k - k1
        if inner == "max":
            val = _best_subset_value(graph, ustar, rest, t - 1)
        else:
            val = exact_g(graph, ustar, exact_greedy(graph, ustar, t - 1, rest), t - 1)
        terms.append(w * val)
    return math.fsum(terms)


def exact_beta_bar(graph: Graph, status: Status, k: int, t: int, k1: int) -> float:
    return exact_beta(graph, status, k, t, k1, inner="greedy")


def of_decide(graph: Graph, status: Status, t: int, k: int, inner: str = "max"):
    """Exact one-step-foresight decision: (seeds, beta values per k1)."""
    if k == 0:
        return [], []
    if t == 1:
        return exact_greedy(graph, status, t, k), []
    betas = [exact_beta(graph, status, k, t, i, inner) for i in range(k + 1)]
    best = max(betas)
    k_star = max(i for i, b in enumerate(betas) if b >= best - _TIE)
    return exact_greedy(graph, status, t, k_star), betas


# ---------------------------------------------------------------------------
# optimal policies

@dataclass
class OracleLimits:
    max_nodes: int = 8
    max_unobserved: int = 12
    max_T: int = 4
    max_K: int = 2


def _check_capacity(graph: Graph, T: int, K: int, limits: OracleLimits):
    if graph.n > limits.max_nodes or graph.m > limits.max_unobserved or T > limits.max_T or K > limits.max_K:
        raise CapacityError(
            f"instance (n={graph.n}, m={graph.m}, T={T}, K={K}) exceeds oracle limits {limits}")


def exact_optimal_adaptive(graph: Graph, T: int, K: int, limits: OracleLimits | None = None) -> float:
    """max over all policies of the expected influence, by memoized expectimax."""
    limits = limits or OracleLimits()
    _check_capacity(graph, T, K, limits)
    memo: dict = {}

    def value(status: Status, t: int, k: int) -> float:
        if t == 0:
            return float(status.n_active)
        key = (_canonical_key(graph, status), t, k)
        if key in memo:
            return memo[key]
        inactive = [int(v) for v in np.flatnonzero(~status.active)]
        best = -math.inf
        for size in range(0, min(k, len(inactive)) + 1):
            for seeds in itertools.combinations(inactive, size):
                val = math.fsum(p * value(nxt, t - 1, k - size)
                                for p, nxt in one_round_outcomes(graph, status, seeds))
                best = max(best, val)
        memo[key] = best
        return best

    return value(Status.empty(graph), T, K)


def exact_optimal_nonadaptive(graph: Graph, T: int, K: int, limits: OracleLimits | None = None):
    """Best fixed seed set of size <= K; returns (sorted tuple, value).

    Ties resolve to the lexicographically smallest tuple.
    """
    limits = limits or OracleLimits(max_nodes=12, max_unobserved=22, max_T=64, max_K=4)
    _check_capacity(graph, T, K, limits)
    empty = Status.empty(graph)
    best_set, best_val = (), 0.0
    for size in range(1, min(K, graph.n) + 1):
        for combo in itertools.combinations(range(graph.n), size):
            val = exact_g(graph, empty, combo, T)
            if val > best_val + _TIE or (abs(val - best_val) <= _TIE and combo < best_set):
                best_set, best_val = combo, val
    return best_set, best_val


# ---------------------------------------------------------------------------
# adaptive gap on the line

@dataclass(frozen=True)
class GapInstance:
    N: int
    p: float
    delta_ad: float
    delta_nonad: float
    ratio: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ratio", self.delta_ad / self.delta_nonad)

    def S(self, t: int) -> float:
        return line_influence(self.p, t)


def line_influence(p: float, t: int) -> float:
    """Expected reach of one seed within t rounds on a long enough line."""
    if p == 1.0:
        return float(t + 1)
    return (1.0 - p**t) / (1.0 - p) + p**t


def line_influence_series(p: float, t: int) -> float:
    return math.fsum([p ** (i - 1) * (1 - p) * i for i in range(1, t + 1)] + [p**t * (t + 1)])


def gap_closed_forms(N: int) -> GapInstance:
    if N < 2:
        raise ValueError("N must be >= 2")
    q = 1.0 - 1.0 / N
    delta_ad = 2 * N * (1 - q ** (2 * N - 1)) - (2 * N - 1) * q ** (2 * N) + 2 * q ** (2 * N - 1)
    delta_nonad = 2 * N * (1 - q**N) + q**N
    return GapInstance(N, q, delta_ad, delta_nonad)


def gap_series(N: int) -> tuple[float, float]:
    """The two gap quantities as explicit sums (check on the closed forms)."""
    p = 1.0 - 1.0 / N
    ad = math.fsum([p ** (i - 1) * (1 - p) * (i + line_influence_series(p, 2 * N - i)) for i in range(1, 2 * N)]
                   + [p ** (2 * N - 1) * (2 * N + 1)])
    nonad = math.fsum([p**i for i in range(N)] + [p**i for i in range(N + 1)])
    return ad, nonad


class WaitThenReseedPolicy(Policy):
    """Seed v_1, wait for a final status (or the last round), then seed the
    inactive node closest to v_1."""

    name = "wait_reseed"

    def decide(self, graph: Graph, state, rng=None):
        if state.k == 0:
            return PolicyDecision(())
        if state.step_index == 1:
            return PolicyDecision((0,))
        if state.t == 1 or is_final(graph, state.status):
            inactive = np.flatnonzero(~state.status.active)
            if inactive.size:
                return PolicyDecision((int(inactive[0]),))
        return PolicyDecision(())


def gap_policy_samples(N: int, trials: int, rng=None, p: float | None = None) -> np.ndarray:
    if N < 2:
        raise ValueError("N must be >= 2")
    p = 1.0 - 1.0 / N if p is None else p
    return _kernels.gap_line_trials(int(N), float(p), int(trials), kernel_seed(as_generator(rng)))


def simulate_lemma2_adaptive_policy(N: int, trials: int, rng=None, p: float | None = None) -> float:
    """Monte-Carlo influence of the wait-then-reseed policy on the line, T=2N, K=2."""
    return float(gap_policy_samples(N, trials, rng, p).mean())


def gap_line(N: int) -> Graph:
    return generate_line_graph(N)
