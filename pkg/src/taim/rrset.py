"""Time-bounded reverse-reachable sets and RR-based greedy seed selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .diffusion import Status
from .graph import Graph
from .rng import kernel_seed


class _AlwaysCovered:
    """Sentinel RR-set: the reverse traversal hit an already-active node."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ALWAYS_COVERED"

    def __reduce__(self):
        return (_AlwaysCovered, ())


ALWAYS_COVERED = _AlwaysCovered()

_FINAL_OFFSET = 1 << 40


@dataclass(frozen=True)
class SelectorConfig:
    """Parameters of the greedy node-selection rule.

    ``mode="adaptive"`` searches the sample size from ``epsilon`` and
    ``confidence`` (the exponent l in the 1 - n^-l success bound);
    ``mode="fixed"`` always draws ``count`` RR-sets.
    """

    epsilon: float = 0.5
    confidence: float = 1.0
    mode: str = "adaptive"
    count: int = 10_000
    max_rr_sets: int = 5_000_000

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.confidence < 1.0:
            raise ValueError("confidence exponent must be >= 1")
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown selector mode {self.mode!r}")
        if self.count < 1 or self.max_rr_sets < 1:
            raise ValueError("RR-set counts must be positive")

    @classmethod
    def fixed(cls, count: int) -> SelectorConfig:
        return cls(mode="fixed", count=int(count))

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "confidence": self.confidence, "mode": self.mode,
                "count": self.count, "max_rr_sets": self.max_rr_sets}


@dataclass
class RRCollection:
    """RR-sets stored flat: set i owns ``nodes[set_ptr[i]:set_ptr[i+1]]``.

    Sentinel sets have an empty range and ``sentinel[i]`` set.
    """

    n: int
    t: int
    set_ptr: np.ndarray
    nodes: np.ndarray
    sentinel: np.ndarray
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.sentinel.shape[0])

    @property
    def n_sentinel(self) -> int:
        return int(self.sentinel.sum())

    def __getitem__(self, i):
        if self.sentinel[i]:
            return ALWAYS_COVERED
        return frozenset(self.nodes[self.set_ptr[i]:self.set_ptr[i + 1]].tolist())

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def inverted_index(self) -> dict[int, list[int]]:
        """node -> ids of the non-sentinel sets containing it."""
        index: dict[int, list[int]] = {}
        for i in range(len(self)):
            for x in self.nodes[self.set_ptr[i]:self.set_ptr[i + 1]].tolist():
                index.setdefault(x, []).append(i)
        return index

    @classmethod
    def from_sets(cls, n: int, sets, t: int = 0) -> RRCollection:
        """Build from an iterable of node collections or ``ALWAYS_COVERED``."""
        ptr = [0]
        flat: list[int] = []
        sentinel = []
        for s in sets:
            if s is ALWAYS_COVERED:
                sentinel.append(True)
            else:
                sentinel.append(False)
                flat.extend(sorted(int(x) for x in s))
            ptr.append(len(flat))
        return cls(n, t, np.asarray(ptr, np.int64), np.asarray(flat, np.int32), np.asarray(sentinel, bool))

    def extend(self, other: RRCollection) -> RRCollection:
        """Concatenate two collections (associative merge of worker outputs)."""
        if other.n != self.n or other.t != self.t:
            raise ValueError("cannot merge collections over different graphs or horizons")
        ptr = np.concatenate([self.set_ptr, other.set_ptr[1:] + self.set_ptr[-1]])
        return RRCollection(
            self.n, self.t, ptr, np.concatenate([self.nodes, other.nodes]),
            np.concatenate([self.sentinel, other.sentinel]), self.seed, dict(self.meta),
        )


def sample_rr_collection(graph: Graph, status: Status, t: int, count: int, seed: int,
                         start: int = 0, depth_cap: int | None = None) -> RRCollection:
    """RR-sets ``start .. start+count-1`` of the hash stream ``seed``.

    ``depth_cap`` overrides the traversal depth; only the verification
    harness uses it, to plant a known bias.
    """
    if t < 1:
        raise ValueError("RR-sets need t >= 1")
    cap = t if depth_cap is None else depth_cap
    ptr, nodes, sentinel = _kernels.rr_sets(
        graph.in_ptr, graph.in_src, graph.in_eid, graph.prob, status.edge_state,
        status.active, int(cap), int(seed), int(start), int(count),
    )
    return RRCollection(graph.n, t, ptr, nodes, sentinel, seed)


def generate_rr_set(graph: Graph, status: Status, t: int, rng=None):
    """One RR-set: a frozenset of nodes, or ``ALWAYS_COVERED``."""
    return sample_rr_collection(graph, status, t, 1, kernel_seed(rng))[0]


def _node_mask(n, S) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(S), dtype=np.int64)
    if idx.size:
        mask[idx] = True
    return mask


def covered_count(coll: RRCollection, S) -> int:
    return int(_kernels.coverage(coll.set_ptr, coll.nodes, coll.sentinel, _node_mask(coll.n, S)))


def estimate_g_rr(coll: RRCollection, S, n: int | None = None) -> float:
    """n * (sets covered by S) / l; sentinel sets count as covered by every S."""
    if len(coll) == 0:
        raise ValueError("empty RR collection")
    n = coll.n if n is None else n
    return n * covered_count(coll, S) / len(coll)


def greedy_max_coverage(coll: RRCollection, k: int, candidates=None) -> list[int]:
    """Greedy maximum coverage; nodes in selection order, ties to the smallest id.

    ``candidates`` restricts the eligible nodes (default: all).
    """
    order, _ = _greedy(coll, k, candidates)
    return order


def _greedy(coll: RRCollection, k: int, candidates=None):
    if k < 0:
        raise ValueError("k must be non-negative")
    cand = np.ones(coll.n, dtype=bool) if candidates is None else np.asarray(candidates, dtype=bool)
    if cand.shape != (coll.n,):
        cand = _node_mask(coll.n, candidates)
    order, cov = _kernels.greedy_cover(coll.set_ptr, coll.nodes, coll.sentinel, coll.n, int(k), cand)
    return order.tolist(), cov


def _log_binom(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def imm_sample_bounds(n: int, k: int, epsilon: float, confidence: float):
    """Constants of the two-phase sample-size search.

    Returns (eps_prime, lambda_prime, lambda_star, l) with the confidence
    exponent already inflated so both phases jointly succeed w.p. 1 - n^-l.
    """
    l = confidence * (1.0 + math.log(2) / math.log(n)) if n > 1 else confidence
    logn = math.log(max(n, 2))
    lcb = _log_binom(n, k)
    eps_p = math.sqrt(2.0) * epsilon
    lam_p = (2.0 + 2.0 * eps_p / 3.0) * (lcb + l * logn + math.log(max(math.log2(max(n, 2)), 1.0))) * n / eps_p**2
    e1 = 1.0 - 1.0 / math.e
    alpha = math.sqrt(l * logn + math.log(2))
    beta = math.sqrt(e1 * (lcb + l * logn + math.log(2)))
    lam_star = 2.0 * n * (e1 * alpha + beta) ** 2 / epsilon**2
    return eps_p, lam_p, lam_star, l


def select_seeds_gr(graph: Graph, status: Status, t: int, k: int, cfg: SelectorConfig | None = None,
                    rng=None, info: dict | None = None) -> list[int]:
    """gr(U, t, k): k inactive nodes, in greedy order, approx. maximizing g(U, ., t).

    Fixed mode runs greedy on ``cfg.count`` RR-sets. Adaptive mode first
    halves a guess x of the optimum until the greedy coverage certifies
    a lower bound, then draws enough sets for the (epsilon, l) guarantee.
    If ``info`` is given, the number of RR-sets used is stored in it.
    """
    cfg = cfg or SelectorConfig()
    if t < 1:
        raise ValueError("gr needs t >= 1")
    inactive = ~status.active
    n_inactive = int(inactive.sum())
    k = min(int(k), n_inactive)
    if k <= 0:
        if info is not None:
            info["rr_sets"] = 0
        return []
    seed = kernel_seed(rng)
    n = graph.n

    if cfg.mode == "fixed":
        coll = sample_rr_collection(graph, status, t, cfg.count, seed)
        order, _ = _greedy(coll, k, inactive)
        if info is not None:
            info["rr_sets"] = len(coll)
        return order

    eps_p, lam_p, lam_star, _ = imm_sample_bounds(n, k, cfg.epsilon, cfg.confidence)
    coll = None

    def grow(target):
        nonlocal coll
        target = int(min(math.ceil(target), cfg.max_rr_sets))
        have = 0 if coll is None else len(coll)
        if target > have:
            more = sample_rr_collection(graph, status, t, target - have, seed, start=have)
            coll = more if coll is None else coll.extend(more)

    lower = 1.0
    for i in range(1, max(int(math.log2(n)), 2)):
        x = n / 2.0**i
        grow(lam_p / x)
        _, cov = _greedy(coll, k, inactive)
        est = n * cov[-1] / len(coll)
        if est >= (1.0 + eps_p) * x:
            lower = est / (1.0 + eps_p)
            break
        if len(coll) >= cfg.max_rr_sets:
            break
    # the final selection uses a fresh block of the stream so that it is
    # independent of the sets that fixed the lower bound
    target = int(min(math.ceil(lam_star / lower), cfg.max_rr_sets))
    final = sample_rr_collection(graph, status, t, max(target, 1), seed, start=_FINAL_OFFSET)
    order, _ = _greedy(final, k, inactive)
    if info is not None:
        info["rr_sets"] = len(coll) + len(final)
        info["lower_bound"] = lower
    return order
