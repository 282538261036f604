"""Compiled inner loops.

All randomness inside the kernels comes from a counter-based hash:
``_unif(seed, a, b)`` is a fixed uniform in [0, 1) for every triple, so a
sample index ``a`` together with an edge id ``b`` names one coin of one
live-edge realization. Consequences relied on elsewhere:

* every edge is flipped at most once per sample, whatever the visit order;
* several traversals that share (seed, sample) see the same realization
  (common random numbers);
* chunked or parallel generation gives the same output as one big call.

Edge states follow ``UNSEEN``/``LIVE``/``DEAD``; observed edges are never
re-flipped.
"""

from __future__ import annotations

import numba as nb
import numpy as np

UNSEEN = 0
LIVE = 1
DEAD = 2

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_ROOT_SALT = np.uint64(0x5851F42D4C957F2D)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

_jit = nb.njit(cache=True, nogil=True)


@_jit
def _mix(x):
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


@_jit
def _unif(seed, a, b):
    x = _mix(seed + np.uint64(a) * _GOLD)
    x = _mix(x ^ (np.uint64(b) * _M2 + _GOLD))
    return (x >> _S11) * _INV53


@_jit
def uniforms(seed, a, b):
    """Vector of hash uniforms for pairs (a[i], b[i]); used in tests."""
    s = np.uint64(seed)
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        out[i] = _unif(s, a[i], b[i])
    return out


@_jit
def _is_live(estate, prob, s, sample, e):
    st = estate[e]
    if st == DEAD:
        return False
    if st == LIVE:
        return True
    return _unif(s, sample, e) < prob[e]


@_jit
def rr_sets(in_ptr, in_src, in_eid, prob, estate, active, t, seed, start, count):
    """Generate ``count`` time-bounded reverse-reachable sets.

    Set ``start + r`` gets root and coins from the hash stream. Returns
    (set_ptr, nodes, sentinel); a sentinel set reached an active node and
    has an empty node range.
    """
    n = in_ptr.shape[0] - 1
    s = np.uint64(seed)
    set_ptr = np.zeros(count + 1, np.int64)
    sentinel = np.zeros(count, np.bool_)
    cap = max(64, 4 * count)
    nodes = np.empty(cap, np.int32)
    stamp = np.zeros(n, np.int64)
    depth = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    pos = 0
    for r in range(count):
        idx = start + r
        root = int(_unif(s ^ _ROOT_SALT, idx, 0) * n)
        if root >= n:
            root = n - 1
        if active[root]:
            sentinel[r] = True
            set_ptr[r + 1] = pos
            continue
        mark = r + 1
        stamp[root] = mark
        depth[root] = 0
        queue[0] = root
        head = 0
        tail = 1
        hit = False
        while head < tail and not hit:
            w = queue[head]
            head += 1
            if depth[w] >= t:
                continue
            for j in range(in_ptr[w], in_ptr[w + 1]):
                u = in_src[j]
                if stamp[u] == mark:
                    continue
                if not _is_live(estate, prob, s, idx, in_eid[j]):
                    continue
                if active[u]:
                    hit = True
                    break
                stamp[u] = mark
                depth[u] = depth[w] + 1
                queue[tail] = u
                tail += 1
        if hit:
            sentinel[r] = True
            set_ptr[r + 1] = pos
            continue
        if pos + tail > cap:
            cap = max(2 * cap, pos + tail)
            grown = np.empty(cap, np.int32)
            grown[:pos] = nodes[:pos]
            nodes = grown
        for i in range(tail):
            nodes[pos + i] = queue[i]
        pos += tail
        set_ptr[r + 1] = pos
    return set_ptr, nodes[:pos].copy(), sentinel


@_jit
def greedy_cover(set_ptr, nodes, sentinel, n, k, candidate):
    """Plain greedy maximum coverage over an RR collection.

    Returns (order, covered) where ``covered[i]`` is the number of sets
    (sentinels included) covered after the first i+1 picks. Ties go to the
    smallest node id; zero-gain candidates are still picked to fill k.
    """
    l = sentinel.shape[0]
    deg = np.zeros(n, np.int64)
    for i in range(nodes.shape[0]):
        deg[nodes[i]] += 1
    node_ptr = np.zeros(n + 1, np.int64)
    for x in range(n):
        node_ptr[x + 1] = node_ptr[x] + deg[x]
    fill = node_ptr[:n].copy()
    node_sets = np.empty(nodes.shape[0], np.int64)
    for sidx in range(l):
        for i in range(set_ptr[sidx], set_ptr[sidx + 1]):
            x = nodes[i]
            node_sets[fill[x]] = sidx
            fill[x] += 1
    gain = deg.copy()
    for x in range(n):
        if not candidate[x]:
            gain[x] = -1
    covered = np.zeros(l, np.bool_)
    total = 0
    for sidx in range(l):
        if sentinel[sidx]:
            total += 1
    order = np.empty(k, np.int64)
    cov = np.empty(k, np.int64)
    chosen = 0
    for _ in range(k):
        best = -1
        bx = -1
        for x in range(n):
            if gain[x] > best:
                best = gain[x]
                bx = x
        if bx < 0:
            break
        gain[bx] = -1
        for i in range(node_ptr[bx], node_ptr[bx + 1]):
            sidx = node_sets[i]
            if covered[sidx]:
                continue
            covered[sidx] = True
            total += 1
            for q in range(set_ptr[sidx], set_ptr[sidx + 1]):
                y = nodes[q]
                if gain[y] > 0:
                    gain[y] -= 1
        order[chosen] = bx
        cov[chosen] = total
        chosen += 1
    return order[:chosen], cov[:chosen]


@_jit
def coverage(set_ptr, nodes, sentinel, in_set):
    """Number of sets that are sentinels or intersect the node mask."""
    l = sentinel.shape[0]
    c = 0
    for sidx in range(l):
        if sentinel[sidx]:
            c += 1
            continue
        for i in range(set_ptr[sidx], set_ptr[sidx + 1]):
            if in_set[nodes[i]]:
                c += 1
                break
    return c


@_jit
def forward_counts(out_ptr, dst, prob, estate, zero_mask, push, t, seed, start, count):
    """Active-node count after ``t`` rounds for ``count`` realizations.

    ``zero_mask`` marks nodes active at time 0 (status actives plus
    seeds); ``push`` lists those of them that still have unobserved edges
    into inactive nodes.
    """
    n = out_ptr.shape[0] - 1
    s = np.uint64(seed)
    base = 0
    for x in range(n):
        if zero_mask[x]:
            base += 1
    stamp = np.zeros(n, np.int64)
    dist = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    counts = np.empty(count, np.int64)
    for r in range(count):
        sample = start + r
        mark = r + 1
        tail = 0
        for i in range(push.shape[0]):
            u = push[i]
            queue[tail] = u
            dist[u] = 0
            tail += 1
        head = 0
        c = base
        while head < tail:
            u = queue[head]
            head += 1
            if dist[u] >= t:
                continue
            for e in range(out_ptr[u], out_ptr[u + 1]):
                v = dst[e]
                if zero_mask[v] or stamp[v] == mark:
                    continue
                if not _is_live(estate, prob, s, sample, e):
                    continue
                stamp[v] = mark
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
                c += 1
        counts[r] = c
    return counts


@_jit
def distances(out_ptr, dst, prob, estate, zero_mask, push, cap, seed, start, count):
    """Bounded BFS distances (capped at ``cap``; unreached = cap + 1)."""
    n = out_ptr.shape[0] - 1
    s = np.uint64(seed)
    far = cap + 1
    out = np.empty((count, n), np.int16)
    queue = np.empty(n, np.int64)
    for r in range(count):
        sample = start + r
        row = out[r]
        for x in range(n):
            row[x] = 0 if zero_mask[x] else far
        tail = 0
        for i in range(push.shape[0]):
            queue[tail] = push[i]
            tail += 1
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = row[u]
            if du >= cap:
                continue
            for e in range(out_ptr[u], out_ptr[u + 1]):
                v = dst[e]
                if row[v] != far:
                    continue
                if not _is_live(estate, prob, s, sample, e):
                    continue
                row[v] = du + 1
                queue[tail] = v
                tail += 1
    return out


@_jit
def distance_histogram(dist, cap):
    count, n = dist.shape
    hist = np.zeros((count, cap + 2), np.int64)
    for r in range(count):
        for x in range(n):
            hist[r, dist[r, x]] += 1
    return hist


@_jit
def candidate_stats(out_ptr, dst, prob, estate, v, d_sel, d_act, hist, t, ta, tb, seed, start, merge):
    """Per-realization quantities for one foresight candidate ``v``.

    ``d_sel``/``d_act`` hold distances from A(U) + S_i and from A(U) on the
    same realizations; ``d_sel`` is capped at ``hist.shape[1] - 2``, which
    must be at least t + max(ta, tb). Returns four int arrays:

    * gain_sel: nodes v adds within t rounds on top of A(U) + S_i
    * gain_act: nodes v adds within t rounds on top of A(U)
    * h_a: g(U*, v, ta) - |A(U*)| with U* the status t rounds after A(U) + S_i
    * h_b: the same with horizon tb

    With ``merge`` set, ``d_sel`` and ``hist`` are updated in place to
    describe A(U) + S_i + v.
    """
    count, n = d_sel.shape
    s = np.uint64(seed)
    cap = hist.shape[1] - 2
    gain_sel = np.zeros(count, np.int64)
    gain_act = np.zeros(count, np.int64)
    h_a = np.zeros(count, np.int64)
    h_b = np.zeros(count, np.int64)
    stamp = np.zeros(n, np.int64)
    dist = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    limit = cap if merge else max(t, max(ta, tb))
    for r in range(count):
        sample = start + r
        mark = r + 1
        row = d_sel[r]
        grow_a = 0
        grow_b = 0
        for d in range(t + 1, t + ta + 1):
            grow_a += hist[r, d]
        for d in range(t + 1, t + tb + 1):
            grow_b += hist[r, d]
        stamp[v] = mark
        dist[v] = 0
        queue[0] = v
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            ds = row[u]
            if du <= t:
                if ds > t:
                    gain_sel[r] += 1
                if d_act[r, u] > t:
                    gain_act[r] += 1
            if du <= ta and ds > t + ta:
                grow_a += 1
            if du <= tb and ds > t + tb:
                grow_b += 1
            if merge and du < ds:
                hist[r, ds] -= 1
                hist[r, du] += 1
                row[u] = du
            if du >= limit:
                continue
            for e in range(out_ptr[u], out_ptr[u + 1]):
                w = dst[e]
                if stamp[w] == mark:
                    continue
                if not _is_live(estate, prob, s, sample, e):
                    continue
                stamp[w] = mark
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
        h_a[r] = grow_a
        h_b[r] = grow_b
    return gain_sel, gain_act, h_a, h_b


@_jit
def gap_line_trials(N, p, trials, seed):
    """Influence of the wait-then-reseed policy on the 2N+1 line, T=2N, K=2.

    Seed v_1 first; afterwards, once the status is final or only one round
    remains, seed the inactive node closest to v_1. The active set is at
    most two runs, so only their heads are tracked. Edge i (v_i -> v_i+1)
    flips with ``_unif(seed, trial, i)``.
    """
    s = np.uint64(seed)
    last = 2 * N
    T = 2 * N
    out = np.empty(trials, np.int64)
    for r in range(trials):
        head1 = 0
        alive1 = True
        start2 = -1
        head2 = -1
        alive2 = False
        for step in range(T):
            t = T - step
            if step > 0 and start2 < 0 and (not alive1 or t == 1) and head1 < last:
                start2 = head1 + 1
                head2 = start2
                alive2 = True
                # the first run's next target is now active
                alive1 = False
            if alive1:
                if head1 >= last:
                    alive1 = False
                elif _unif(s, r, head1) < p:
                    head1 += 1
                else:
                    alive1 = False
            if alive2:
                if head2 >= last:
                    alive2 = False
                elif _unif(s, r, head2) < p:
                    head2 += 1
                else:
                    alive2 = False
            if not alive1 and not alive2 and start2 >= 0:
                break
        c = head1 + 1
        if start2 >= 0:
            c += head2 - start2 + 1
        out[r] = c
    return out
