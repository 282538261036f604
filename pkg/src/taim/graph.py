"""Immutable directed graphs with per-edge propagation probabilities.

Edges are stored sorted by (source, target); an edge's position in that
order is its id, so live/dead edge sets can be kept as boolean arrays.
Both forward and reverse adjacency are kept in CSR form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq


class GraphError(ValueError):
    """Invalid graph data or generator arguments."""


class EdgeListParseError(GraphError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ProbModelError(GraphError):
    """Bad probability-model descriptor."""


@dataclass(frozen=True)
class ProbModel:
    """How edge probabilities are assigned at load time.

    ``kind`` is one of ``"wc"`` (weighted cascade, p = 1/indeg(v)),
    ``"uniform"`` (every edge gets ``p``) or ``"explicit"`` (third column,
    divided by the largest weight).
    """

    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("wc", "uniform", "explicit"):
            raise ProbModelError(f"unknown probability model {self.kind!r}")
        if self.kind == "uniform":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise ProbModelError(f"uniform probability must lie in (0, 1], got {self.p!r}")

    @classmethod
    def parse(cls, text: str) -> ProbModel:
        """Parse ``wc``, ``explicit`` or ``uniform:<p>``."""
        text = text.strip().lower()
        if text in ("wc", "weighted-cascade", "weighted_cascade"):
            return cls("wc")
        if text in ("explicit", "explicit-weights", "weights"):
            return cls("explicit")
        if text.startswith("uniform"):
            _, _, rest = text.partition(":")
            try:
                p = float(rest)
            except ValueError:
                raise ProbModelError(f"uniform model needs a probability, e.g. uniform:0.01 (got {text!r})") from None
            return cls("uniform", p)
        raise ProbModelError(f"unknown probability model {text!r}")

    def __str__(self):
        return f"uniform:{self.p!r}" if self.kind == "uniform" else self.kind


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    out_ptr: np.ndarray
    in_ptr: np.ndarray
    in_src: np.ndarray
    in_eid: np.ndarray
    labels: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    @property
    def out_nbr(self) -> np.ndarray:
        # edges are sorted by source, so forward neighbours are just dst
        return self.dst

    @classmethod
    def from_edges(cls, n, src, dst, prob, labels=None, meta=None) -> Graph:
        """Build a graph from parallel edge arrays.

        Edges are re-sorted by (source, target). Duplicates and self-loops
        are rejected here; loaders merge/drop them before calling this.
        """
        n = int(n)
        if n < 1:
            raise GraphError("graph needs at least one node")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        prob = np.asarray(prob, dtype=np.float64)
        if not (src.shape == dst.shape == prob.shape) or src.ndim != 1:
            raise GraphError("src, dst and prob must be 1-d arrays of equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphError("edge endpoint out of range")
            if np.any(src == dst):
                raise GraphError("self-loops are not allowed")
            if np.any(~(prob > 0.0)) or np.any(prob > 1.0):
                raise GraphError("edge probabilities must lie in (0, 1]")
        order = np.lexsort((dst, src))
        src, dst, prob = src[order], dst[order], prob[order]
        if src.size > 1:
            same = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if np.any(same):
                raise GraphError("duplicate edges are not allowed")
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        rev = np.lexsort((src, dst))
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_ptr[1:])
        if labels is None:
            labels = tuple(range(n))
        elif len(labels) != n:
            raise GraphError("labels must have one entry per node")
        g = cls(
            n=n,
            src=src,
            dst=dst,
            prob=prob,
            out_ptr=out_ptr,
            in_ptr=in_ptr,
            in_src=src[rev],
            in_eid=rev.astype(np.int64),
            labels=tuple(labels),
            meta=dict(meta or {}),
        )
        for arr in (g.src, g.dst, g.prob, g.out_ptr, g.in_ptr, g.in_src, g.in_eid):
            arr.flags.writeable = False
        return g

    def out_edges(self, u: int) -> range:
        return range(int(self.out_ptr[u]), int(self.out_ptr[u + 1]))

    def in_edges(self, v: int) -> np.ndarray:
        return self.in_eid[self.in_ptr[v]:self.in_ptr[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def edge_id(self, u: int, v: int) -> int:
        lo, hi = int(self.out_ptr[u]), int(self.out_ptr[u + 1])
        i = lo + int(np.searchsorted(self.dst[lo:hi], v))
        if i >= hi or self.dst[i] != v:
            raise KeyError((u, v))
        return i

    def edges(self):
        return zip(self.src.tolist(), self.dst.tolist())

    def node_id(self, label) -> int:
        try:
            index = self.__dict__["_label_index"]
        except KeyError:
            index = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_label_index", index)
        return index[label]

    def label(self, node: int):
        return self.labels[node]

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, meta={self.meta})"


def assign_probabilities(n, src, dst, weights, model: ProbModel):
    """Return (prob, meta) for deduplicated edges under ``model``."""
    meta = {"prob_model": str(model)}
    if model.kind == "wc":
        indeg = np.bincount(dst, minlength=n)
        prob = 1.0 / indeg[dst]
    elif model.kind == "uniform":
        prob = np.full(src.shape[0], float(model.p))
    else:
        if weights is None:
            raise ProbModelError("explicit model needs a weight column")
        wmax = float(weights.max()) if weights.size else 1.0
        prob = np.clip(weights / wmax, np.finfo(float).tiny, 1.0)
        meta["normalizer"] = wmax
    return prob, meta


def load_edge_list(path, prob_model) -> Graph:
    """Read a whitespace-separated ``u v [w]`` edge list.

    Node labels are arbitrary tokens, mapped to dense ids in order of first
    appearance. ``#`` starts a comment. Self-loops are dropped and repeated
    edges merged (weights summed).
    """
    if isinstance(prob_model, str):
        prob_model = ProbModel.parse(prob_model)
    path = Path(path)
    ids: dict[str, int] = {}
    labels: list[str] = []
    merged: dict[tuple[int, int], float] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListParseError(path, lineno, f"expected 'u v [w]', got {len(parts)} fields")
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise EdgeListParseError(path, lineno, f"bad weight {parts[2]!r}") from None
                if not (w > 0.0) or math.isinf(w):
                    raise EdgeListParseError(path, lineno, f"weight must be positive and finite, got {parts[2]!r}")
            if prob_model.kind == "explicit" and len(parts) != 3:
                raise EdgeListParseError(path, lineno, "explicit-weight model needs a weight on every line")
            u_lab, v_lab = parts[0], parts[1]
            for lab in (u_lab, v_lab):
                if lab not in ids:
                    ids[lab] = len(labels)
                    labels.append(lab)
            u, v = ids[u_lab], ids[v_lab]
            if u == v:
                continue
            merged[(u, v)] = merged.get((u, v), 0.0) + w
    n = len(labels)
    if n == 0:
        raise EdgeListParseError(path, 0, "no edges found")
    keys = np.array(list(merged.keys()), dtype=np.int64).reshape(-1, 2)
    weights = np.array(list(merged.values()), dtype=np.float64)
    src, dst = keys[:, 0], keys[:, 1]
    prob, meta = assign_probabilities(n, src, dst, weights, prob_model)
    meta.update(source=str(path), n=n, m=int(src.shape[0]))
    return Graph.from_edges(n, src, dst, prob, labels=labels, meta=meta)


def generate_line_graph(N: int) -> Graph:
    """Directed path on 2N+1 nodes with every edge probability 1 - 1/N."""
    if int(N) != N or N < 2:
        raise GraphError(f"line graph needs an integer N >= 2, got {N!r}")
    N = int(N)
    nodes = 2 * N + 1
    src = np.arange(nodes - 1)
    p = 1.0 - 1.0 / N
    return Graph.from_edges(
        nodes, src, src + 1, np.full(nodes - 1, p),
        meta={"generator": "line", "N": N, "p": p, "n": nodes, "m": nodes - 1},
    )


def _shifted_power_law_mean(shift, exponent, kmax):
    k = np.arange(1, kmax + 1, dtype=np.float64)
    w = (k + shift) ** -exponent
    return float((k * w).sum() / w.sum())


def generate_power_law(n: int, exponent: float, avg_degree: float, seed, prob_model="wc") -> Graph:
    """Random digraph with a truncated power-law out-degree sequence.

    Out-degrees follow P(d) ~ (d + c)^-exponent on 1..n-1, with the shift c
    solved so the mean matches ``avg_degree``. Each node then picks its
    targets uniformly without replacement.
    """
    if n < 2:
        raise GraphError("power-law graph needs n >= 2")
    if exponent <= 1:
        raise GraphError("exponent must exceed 1")
    if avg_degree < 1:
        raise GraphError("avg_degree must be at least 1")
    rng = np.random.default_rng(seed)
    kmax = n - 1
    if kmax == 1 or avg_degree <= 1.0 + 1e-12:
        degrees = np.ones(n, dtype=np.int64)
    else:
        lo, hi = -1.0 + 1e-9, 1e9
        if avg_degree >= _shifted_power_law_mean(hi, exponent, kmax):
            raise GraphError(f"avg_degree {avg_degree} infeasible for n={n}")
        shift = brentq(lambda c: _shifted_power_law_mean(c, exponent, kmax) - avg_degree, lo, hi, xtol=1e-10)
        k = np.arange(1, kmax + 1, dtype=np.float64)
        w = (k + shift) ** -exponent
        degrees = rng.choice(np.arange(1, kmax + 1), size=n, p=w / w.sum())
    src_parts, dst_parts = [], []
    for u in range(n):
        d = int(degrees[u])
        targets = rng.choice(n - 1, size=d, replace=False)
        targets[targets >= u] += 1
        src_parts.append(np.full(d, u, dtype=np.int64))
        dst_parts.append(targets.astype(np.int64))
    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    model = ProbModel.parse(prob_model) if isinstance(prob_model, str) else prob_model
    prob, meta = assign_probabilities(n, src, dst, None, model)
    meta.update(generator="power_law", n=n, m=int(src.size), exponent=exponent,
                avg_degree=avg_degree, seed=seed)
    return Graph.from_edges(n, src, dst, prob, meta=meta)
