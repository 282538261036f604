import numpy as np
import pytest

from taim.graph import Graph


def make_graph(n, edges, p=1.0):
    """Graph from (u, v) or (u, v, p) tuples; ``p`` is the default probability."""
    src = [e[0] for e in edges]
    dst = [e[1] for e in edges]
    prob = [e[2] if len(e) > 2 else p for e in edges]
    return Graph.from_edges(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(prob, dtype=float))


def star(leaves, p=1.0, offset=0, n=None):
    edges = [(offset, offset + i, p) for i in range(1, leaves + 1)]
    return edges


@pytest.fixture
def det_star():
    """Center 0 with 9 deterministic leaves."""
    return make_graph(10, star(9))


@pytest.fixture
def two_stars():
    """Two disjoint deterministic stars on 10 nodes: centers 0 and 5."""
    return make_graph(10, star(4) + star(4, offset=5))


@pytest.fixture
def det_path():
    return make_graph(5, [(i, i + 1) for i in range(4)])


def instance_with_inactive(rng, need, **kwargs):
    """Draw random instances until one has at least ``need`` inactive nodes."""
    from taim.verify import random_instance

    rng = np.random.default_rng(rng)
    while True:
        g, st = random_instance(rng, **kwargs)
        if int((~st.active).sum()) >= need:
            return g, st
