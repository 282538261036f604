"""Round-accurate independent cascade simulation over partially observed statuses."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .graph import Graph
from .rng import as_generator, kernel_seed


class StatusError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Status:
    """Observed part of a diffusion: active nodes, live edges, dead edges.

    Arrays are boolean masks (nodes for ``active``, edge ids for ``live``
    and ``dead``). Treat instances as values: operations return new ones.
    """

    active: np.ndarray
    live: np.ndarray
    dead: np.ndarray

    @classmethod
    def empty(cls, graph: Graph) -> Status:
        return cls(
            np.zeros(graph.n, dtype=bool),
            np.zeros(graph.m, dtype=bool),
            np.zeros(graph.m, dtype=bool),
        )

    @classmethod
    def from_sets(cls, graph: Graph, active=(), live=(), dead=()) -> Status:
        """Build a status from node ids and (u, v) edge pairs."""
        st = cls.empty(graph)
        st.active[list(active)] = True
        for pairs, mask in ((live, st.live), (dead, st.dead)):
            for u, v in pairs:
                mask[graph.edge_id(u, v)] = True
        st.validate(graph)
        return st

    def validate(self, graph: Graph) -> None:
        if self.active.shape != (graph.n,) or self.live.shape != (graph.m,) or self.dead.shape != (graph.m,):
            raise StatusError("status arrays do not match the graph")
        if np.any(self.live & self.dead):
            raise StatusError("an edge cannot be both live and dead")
        observed = self.live | self.dead
        if np.any(observed & ~self.active[graph.src]):
            raise StatusError("observed edges must start at active nodes")
        if np.any(self.live & ~self.active[graph.dst]):
            raise StatusError("live edges must end at active nodes")

    @cached_property
    def edge_state(self) -> np.ndarray:
        st = np.zeros(self.live.shape[0], dtype=np.int8)
        st[self.live] = _kernels.LIVE
        st[self.dead] = _kernels.DEAD
        return st

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def active_nodes(self) -> frozenset:
        return frozenset(np.flatnonzero(self.active).tolist())

    def inactive_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.active)

    def with_active(self, nodes) -> Status:
        """Same observations with ``nodes`` added to the active set."""
        active = self.active.copy()
        active[np.asarray(list(nodes), dtype=np.int64)] = True
        return Status(active, self.live, self.dead)

    def copy(self) -> Status:
        return Status(self.active.copy(), self.live.copy(), self.dead.copy())

    def same_as(self, other: Status) -> bool:
        return (
            np.array_equal(self.active, other.active)
            and np.array_equal(self.live, other.live)
            and np.array_equal(self.dead, other.dead)
        )

    def __repr__(self):
        return (f"Status(active={sorted(self.active_nodes())}, "
                f"live={np.flatnonzero(self.live).tolist()}, dead={np.flatnonzero(self.dead).tolist()})")


@dataclass(frozen=True)
class LiveEdgeRealization:
    """A full live/dead assignment extending a status."""

    live: np.ndarray

    def agrees_with(self, status: Status) -> bool:
        return bool(np.all(self.live[status.live]) and not np.any(self.live[status.dead]))


def pending_edges(graph: Graph, active: np.ndarray, status: Status) -> np.ndarray:
    """Edge ids that would be attempted next round from ``active``.

    These are unobserved edges from an active node to an inactive one.
    """
    observed = status.live | status.dead
    mask = active[graph.src] & ~active[graph.dst] & ~observed
    return np.flatnonzero(mask)


def frontier(graph: Graph, status: Status) -> np.ndarray:
    """Active nodes that will attempt activations in the next round."""
    return np.unique(graph.src[pending_edges(graph, status.active, status)])


def is_final(graph: Graph, status: Status) -> bool:
    """True iff every edge from an active to an inactive node is dead."""
    crossing = status.active[graph.src] & ~status.active[graph.dst]
    return not bool(np.any(crossing & ~status.dead))


def _seed_mask(graph: Graph, status: Status, seeds) -> np.ndarray:
    active = status.active.copy()
    seeds = np.asarray(list(seeds) if not isinstance(seeds, np.ndarray) else seeds, dtype=np.int64)
    if seeds.size:
        if seeds.min() < 0 or seeds.max() >= graph.n:
            raise StatusError("seed node out of range")
        active[seeds] = True
    return active


def advance_round(graph: Graph, status: Status, new_seeds=(), rng=None) -> Status:
    """One diffusion round.

    New seeds join the active set first, so they attempt in this round
    alongside the frontier. Every unobserved edge from an active node to an
    inactive node is flipped once; targets of newly live edges activate.
    """
    rng = as_generator(rng)
    active = _seed_mask(graph, status, new_seeds)
    attempt = pending_edges(graph, active, status)
    live = status.live.copy()
    dead = status.dead.copy()
    if attempt.size:
        hit = rng.random(attempt.size) < graph.prob[attempt]
        live[attempt[hit]] = True
        dead[attempt[~hit]] = True
        newly = graph.dst[attempt[hit]]
        active_next = active.copy()
        active_next[newly] = True
        active = active_next
    return Status(active, live, dead)


def simulate(graph: Graph, status: Status, seeds, t: int, rng=None) -> Status:
    """Seed ``seeds`` now and run ``t`` rounds; ``t = 0`` only activates the seeds."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rng = as_generator(rng)
    if t == 0:
        return Status(_seed_mask(graph, status, seeds), status.live, status.dead)
    status = advance_round(graph, status, seeds, rng)
    for _ in range(t - 1):
        status = advance_round(graph, status, (), rng)
    return status


def sample_realization(graph: Graph, status: Status, rng=None) -> LiveEdgeRealization:
    """Flip every unobserved edge once, keeping the status' observations."""
    rng = as_generator(rng)
    live = rng.random(graph.m) < graph.prob
    live[status.live] = True
    live[status.dead] = False
    return LiveEdgeRealization(live)


def reachable_within(graph: Graph, realization: LiveEdgeRealization, sources, t: int) -> np.ndarray:
    """Node mask of everything within ``t`` live hops of ``sources``."""
    reached = np.zeros(graph.n, dtype=bool)
    layer = np.unique(np.asarray(list(sources), dtype=np.int64))
    reached[layer] = True
    for _ in range(t):
        if layer.size == 0:
            break
        nxt = []
        for u in layer.tolist():
            for e in graph.out_edges(u):
                if realization.live[e] and not reached[graph.dst[e]]:
                    reached[graph.dst[e]] = True
                    nxt.append(int(graph.dst[e]))
        layer = np.asarray(nxt, dtype=np.int64)
    return reached


def _kernel_inputs(graph: Graph, status: Status, seeds):
    zero = _seed_mask(graph, status, seeds)
    push = np.unique(graph.src[pending_edges(graph, zero, status)])
    return zero, push


def forward_samples(graph: Graph, status: Status, seeds, t: int, samples: int, rng=None) -> np.ndarray:
    """Active-node counts after ``t`` rounds for ``samples`` independent cascades.

    Each sample is a bounded BFS over one hash-generated live-edge
    realization; this has the same distribution as ``simulate``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    zero, push = _kernel_inputs(graph, status, seeds)
    if t == 0 or push.size == 0:
        return np.full(samples, int(zero.sum()), dtype=np.int64)
    return _kernels.forward_counts(
        graph.out_ptr, graph.dst, graph.prob, status.edge_state, zero, push,
        int(t), kernel_seed(rng), 0, int(samples),
    )


def estimate_g_forward(graph: Graph, status: Status, S, t: int, samples: int, rng=None) -> float:
    """Monte-Carlo estimate of g(U, S, t), the expected active count t rounds after seeding S."""
    return float(forward_samples(graph, status, S, t, samples, rng).mean())
