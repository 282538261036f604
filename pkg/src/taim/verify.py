"""Oracle-equivalence checks behind ``taim verify``.

Each check compares a production estimator with its exact counterpart on
randomly drawn desk-scale instances and reports the worst deviation
against its tolerance. Instances come from fixed seeds, so a tier always
runs the same cases.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .diffusion import Status, advance_round, forward_samples, simulate
from .graph import Graph, generate_line_graph
from .policies import ForesightConfig, ForesightSampler, PolicyState, estimate_beta_bar
from .rng import stream
from .rrset import ALWAYS_COVERED, RRCollection, _greedy, covered_count, estimate_g_rr, sample_rr_collection

TIERS = {
    "quick": {"cases": 6, "rr_sets": 20_000, "mc": 20_000, "collections": 20, "gap_trials": 50_000},
    "full": {"cases": 20, "rr_sets": 100_000, "mc": 100_000, "collections": 60, "gap_trials": 200_000},
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    cases: int
    skipped: int = 0
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name}: worst deviation {self.deviation:.4g} vs tolerance {self.tolerance:.4g} "
                f"over {self.cases} cases ({self.skipped} skipped, {self.seconds:.1f}s){' ' + self.detail if self.detail else ''}")


def random_instance(rng, n_max: int = 8, m_max: int = 12, p_choices=(0.2, 0.35, 0.5, 0.65, 0.8, 1.0),
                    rounds: int | None = None):
    """A small random digraph and a reachable random status on it."""
    rng = np.random.default_rng(rng)
    n = int(rng.integers(3, n_max + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    m = int(rng.integers(n - 1, min(m_max, len(pairs)) + 1))
    chosen = rng.choice(len(pairs), size=m, replace=False)
    src = np.array([pairs[i][0] for i in chosen])
    dst = np.array([pairs[i][1] for i in chosen])
    prob = rng.choice(np.asarray(p_choices), size=m)
    graph = Graph.from_edges(n, src, dst, prob)
    seeds = rng.choice(n, size=int(rng.integers(0, 3)), replace=False)
    r = int(rng.integers(0, 3)) if rounds is None else rounds
    status = simulate(graph, Status.empty(graph), seeds, r, rng) if len(seeds) else Status.empty(graph)
    return graph, status


def _random_seed_set(rng, status, size_max=2):
    inactive = np.flatnonzero(~status.active)
    if inactive.size == 0:
        return []
    size = int(rng.integers(1, min(size_max, inactive.size) + 1))
    return sorted(rng.choice(inactive, size=size, replace=False).tolist())


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _deviation_check(name, pairs, z=3.0):
    """pairs: (estimate, exact, standard error). Fails if any |est-exact| > z*se."""
    worst_ratio, worst_dev, worst_tol, bad = 0.0, 0.0, 0.0, []
    for i, (est, exact, se) in enumerate(pairs):
        tol = max(z * se, 1e-9)
        dev = abs(est - exact)
        if dev / tol > worst_ratio:
            worst_ratio, worst_dev, worst_tol = dev / tol, dev, tol
        if dev > tol:
            bad.append(i)
    detail = f"failing cases {bad}" if bad else ""
    return CheckResult(name, not bad, worst_dev, worst_tol, len(pairs), detail=detail)


@_timed
def check_rr_unbiased(tier="quick", seed=0, depth_bias: int = 0, cases=None, rr_sets=None) -> CheckResult:
    """n * (fraction of RR-sets hit by S) against exact g, 3 standard errors."""
    cfg = TIERS[tier]
    cases = cfg["cases"] if cases is None else cases
    l = cfg["rr_sets"] if rr_sets is None else rr_sets
    rng = stream(seed, "verify", 1)
    pairs = []
    # one fixed instance where a depth error is guaranteed to show
    line = generate_line_graph(5)
    anchor = [(line, Status.empty(line), 1, [0])]
    for _ in range(cases):
        graph, status = random_instance(rng)
        S = _random_seed_set(rng, status)
        if S:
            anchor.append((graph, status, int(rng.integers(1, 4)), S))
    for graph, status, t, S in anchor:
        cap = None if depth_bias == 0 else max(t + depth_bias, 0)
        coll = sample_rr_collection(graph, status, t, l, int(rng.integers(2**62)), depth_cap=cap)
        est = estimate_g_rr(coll, S)
        frac = est / graph.n
        se = graph.n * math.sqrt(frac * (1 - frac) / l)
        pairs.append((est, oracle.exact_g(graph, status, S, t), se))
    return _deviation_check("rr_unbiased", pairs)


@_timed
def check_forward_unbiased(tier="quick", seed=0) -> CheckResult:
    """Forward Monte-Carlo g against exact g, 3 standard errors."""
    cfg = TIERS[tier]
    rng = stream(seed, "verify", 2)
    pairs = []
    for _ in range(cfg["cases"]):
        graph, status = random_instance(rng)
        S = _random_seed_set(rng, status)
        t = int(rng.integers(1, 4))
        x = forward_samples(graph, status, S, t, cfg["mc"], rng)
        pairs.append((x.mean(), oracle.exact_g(graph, status, S, t), x.std(ddof=1) / math.sqrt(x.size)))
    return _deviation_check("forward_unbiased", pairs)


def random_collection(rng, n_max=12, sets_max=40, sentinel_rate=0.1) -> RRCollection:
    n = int(rng.integers(2, n_max + 1))
    sets = []
    for _ in range(int(rng.integers(1, sets_max + 1))):
        if rng.random() < sentinel_rate:
            sets.append(ALWAYS_COVERED)
        else:
            size = int(rng.integers(1, min(n, 5) + 1))
            sets.append(rng.choice(n, size=size, replace=False).tolist())
    return RRCollection.from_sets(n, sets)


def exhaustive_max_coverage(coll: RRCollection, k: int) -> int:
    k = min(k, coll.n)
    return max(covered_count(coll, c) for c in itertools.combinations(range(coll.n), k))


@_timed
def check_greedy_bound(tier="quick", seed=0) -> CheckResult:
    """Greedy coverage >= (1 - 1/e) * optimum on every random collection."""
    rng = stream(seed, "verify", 3)
    worst, bad, count = 0.0, 0, TIERS[tier]["collections"]
    for _ in range(count):
        coll = random_collection(rng)
        k = int(rng.integers(1, 4))
        _, cov = _greedy(coll, k)
        opt = exhaustive_max_coverage(coll, k)
        short = (1 - 1 / math.e) * opt - cov[-1]
        worst = max(worst, short)
        bad += short > 1e-12
    return CheckResult("greedy_bound", bad == 0, max(worst, 0.0), 0.0, count,
                       detail=f"{bad} violations" if bad else "")


@_timed
def check_beta_bar(tier="quick", seed=0) -> CheckResult:
    """Sampled beta-bar with exact inner steps against the exact value.

    The inner greedy and g evaluations are replaced by their exact forms so
    that only the one-round sampling remains random.
    """
    rng = stream(seed, "verify", 4)
    pairs, skipped = [], 0
    L = 4000 if tier == "full" else 1500
    for _ in range(max(3, TIERS[tier]["cases"] // 2)):
        graph, status = random_instance(rng, n_max=6, m_max=8)
        k = int(rng.integers(1, 3))
        t = int(rng.integers(2, 4))
        if int((~status.active).sum()) < k:
            skipped += 1
            continue
        k1 = int(rng.integers(0, k + 1))
        state = PolicyState(status, t, k, 1)
        first = oracle.exact_greedy(graph, status, t, k)
        exact = oracle.exact_beta_bar(graph, status, k, t, k1)
        vals = _beta_samples(graph, state, k1, first, L, rng)
        pairs.append((vals.mean(), exact, vals.std(ddof=1) / math.sqrt(L)))
    res = _deviation_check("beta_bar", pairs)
    res.skipped = skipped
    return res


def _beta_samples(graph, state, k1, first, L, rng):
    staged = state.status.with_active(first[:k1]) if k1 else state.status
    out = np.empty(L)
    for j in range(L):
        ustar = advance_round(graph, staged, (), rng)
        second = oracle.exact_greedy(graph, ustar, state.t - 1, state.k - k1)
        out[j] = oracle.exact_g(graph, ustar, second, state.t - 1)
    return out


@_timed
def check_beta_bar_pipeline(tier="quick", seed=0) -> CheckResult:
    """Production estimate_beta_bar on deterministic graphs, where it must be exact."""
    rng = stream(seed, "verify", 5)
    pairs = []
    for _ in range(max(3, TIERS[tier]["cases"] // 2)):
        graph, status = random_instance(rng, n_max=6, m_max=8, p_choices=(1.0,))
        k, t = 1, int(rng.integers(2, 4))
        if int((~status.active).sum()) < 1:
            continue
        state = PolicyState(status, t, k, 1)
        first = oracle.exact_greedy(graph, status, t, k)
        for k1 in (0, 1):
            est = estimate_beta_bar(graph, state, k1, ForesightConfig(samples=3), rng, first_stage=first,
                                    select_fn=lambda g, st, tt, kk, r: oracle.exact_greedy(g, st, tt, kk))
            pairs.append((est, oracle.exact_beta_bar(graph, status, k, t, k1), 0.0))
    return _deviation_check("beta_bar_pipeline", pairs)


@_timed
def check_h(tier="quick", seed=0) -> CheckResult:
    """compute_h against exact enumeration, 3 standard errors."""
    rng = stream(seed, "verify", 6)
    pairs = []
    samples = TIERS[tier]["mc"]
    for _ in range(max(3, TIERS[tier]["cases"] // 2)):
        graph, status = random_instance(rng, n_max=6, m_max=8)
        inactive = np.flatnonzero(~status.active)
        if inactive.size < 2:
            continue
        v, s = rng.choice(inactive, size=2, replace=False).tolist()
        t = int(rng.integers(1, 3))
        t_star = int(rng.integers(0, t + 1))
        sampler = ForesightSampler(graph, status, t, samples, rng, [s])
        _, _, h, _ = sampler.stats(v, t_star, t_star)
        pairs.append((h.mean(), oracle.exact_h(graph, status, [s], v, t, t_star), h.std(ddof=1) / math.sqrt(samples)))
    return _deviation_check("h_estimate", pairs)


@_timed
def check_adaptivity(tier="quick", seed=0) -> CheckResult:
    """Optimal adaptive value >= optimal non-adaptive value."""
    rng = stream(seed, "verify", 7)
    worst, bad, count, skipped = 0.0, 0, 0, 0
    for _ in range(3 if tier == "quick" else 8):
        graph, _ = random_instance(rng, n_max=6, m_max=8, rounds=0)
        T, K = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        try:
            ad = oracle.exact_optimal_adaptive(graph, T, K)
        except oracle.CapacityError:
            skipped += 1
            continue
        _, nonad = oracle.exact_optimal_nonadaptive(graph, T, K)
        count += 1
        worst = max(worst, nonad - ad)
        bad += nonad - ad > 1e-9
    return CheckResult("adaptivity_gap_nonnegative", bad == 0, max(worst, 0.0), 1e-9, count, skipped)


@_timed
def check_gap(tier="quick", seed=0) -> CheckResult:
    """Closed forms against explicit sums and the simulated wait-then-reseed policy."""
    rng = stream(seed, "verify", 8)
    trials = TIERS[tier]["gap_trials"]
    pairs = []
    for N in (2, 3, 5):
        inst = oracle.gap_closed_forms(N)
        ad, nonad = oracle.gap_series(N)
        pairs.append((ad, inst.delta_ad, 1e-9 / 3 * inst.delta_ad))
        pairs.append((nonad, inst.delta_nonad, 1e-9 / 3 * inst.delta_nonad))
        x = oracle.gap_policy_samples(N, trials, rng)
        pairs.append((x.mean(), inst.delta_ad, x.std(ddof=1) / math.sqrt(trials)))
    return _deviation_check("adaptivity_gap", pairs)


CHECKS = [check_rr_unbiased, check_forward_unbiased, check_greedy_bound, check_beta_bar,
          check_beta_bar_pipeline, check_h, check_adaptivity, check_gap]


def run_checks(tier="quick", seed=0, depth_bias: int = 0, log=print) -> list[CheckResult]:
    if tier not in TIERS:
        raise ValueError(f"unknown tier {tier!r}; expected one of {sorted(TIERS)}")
    results = []
    for check in CHECKS:
        if check is check_rr_unbiased:
            res = check(tier, seed, depth_bias=depth_bias)
        else:
            res = check(tier, seed)
        results.append(res)
        if log:
            log(res.line())
    return results
