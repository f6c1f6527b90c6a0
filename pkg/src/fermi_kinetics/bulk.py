"""Compiled bulk verification of graph invariants over whole populations.

This is a second, array-based implementation of spanning-tree resolution.
For every graph it checks the free-edge count, the degree range, the
degree/cluster lemmas, the degree-two local structure, and compares
loop-traced momenta against momenta propagated leaf-first through the
spanning tree for a random integer assignment of the free edges.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .graphs import GraphSpec, build_graph, histories, pairings, even_partitions

# failure counters, in order
CHECKS = (
    "free_count",
    "degree_range",
    "n2_minus_n0",
    "non_pairs",
    "prefix_bounds",
    "cluster_scheme",
    "degree_two_forms",
    "delta_oracle",
    "root_momentum",
)


@njit(cache=True)
def _find(p, x):
    while p[x] != x:
        p[x] = p[p[x]]
        x = p[x]
    return x


@njit(cache=True)
def _trace(f, bit, x, upper, lower, parent_edge, depth, m, pos, neg):
    """Add the fundamental circulation of free edge ``f`` with weight ``x``.

    ``pos``/``neg`` collect the sign pattern of each edge as bitmasks over
    free-edge indices (``bit`` is the mask of ``f``).
    """
    m[f] += x
    pos[f] |= bit
    a = lower[f]
    b = upper[f]
    while depth[a] > depth[b]:
        e = parent_edge[a]
        if upper[e] == a:
            m[e] += x
            pos[e] ^= bit
            a = lower[e]
        else:
            m[e] -= x
            neg[e] ^= bit
            a = upper[e]
    while depth[b] > depth[a]:
        e = parent_edge[b]
        if upper[e] == b:
            m[e] -= x
            neg[e] ^= bit
            b = lower[e]
        else:
            m[e] += x
            pos[e] ^= bit
            b = upper[e]
    while a != b:
        e = parent_edge[a]
        if upper[e] == a:
            m[e] += x
            pos[e] ^= bit
            a = lower[e]
        else:
            m[e] -= x
            neg[e] ^= bit
            a = upper[e]
        e = parent_edge[b]
        if upper[e] == b:
            m[e] -= x
            neg[e] ^= bit
            b = lower[e]
        else:
            m[e] += x
            pos[e] ^= bit
            b = upper[e]


@njit(cache=True)
def verify_assignments(N, upper0, lower0, children, top_edge, legs, assign, ncl, seed):
    """Check every cluster assignment (row of ``assign``) for one history.

    ``assign[p, i]`` is the cluster id of leg ``i``; ``ncl[p]`` the number of
    clusters.  Returns failure counts in the order of ``CHECKS``.
    """
    nl = 2 * N + 2
    E0 = upper0.shape[0]
    E = E0 + nl
    first_initial = 2 + N
    first_cluster = first_initial + nl
    maxV = first_cluster + nl
    W = max(4, nl)
    fails = np.zeros(9, dtype=np.int64)
    upper = np.empty(E, dtype=np.int64)
    lower = np.empty(E, dtype=np.int64)
    upper[:E0] = upper0
    lower[:E0] = lower0
    for i in range(nl):
        upper[E0 + i] = first_initial + i
    # adjacency of the fixed part; cluster vertices are filled per assignment
    adj = np.empty((maxV, W), dtype=np.int64)
    nadj = np.zeros(maxV, dtype=np.int64)
    for e in range(E0):
        adj[upper[e], nadj[upper[e]]] = e
        nadj[upper[e]] += 1
        adj[lower[e], nadj[lower[e]]] = e
        nadj[lower[e]] += 1
    for i in range(nl):
        v = first_initial + i
        adj[v, nadj[v]] = E0 + i
        nadj[v] += 1
    uf = np.empty(maxV, dtype=np.int64)
    free = np.zeros(E, dtype=np.bool_)
    parent_edge = np.full(maxV, -1, dtype=np.int64)
    depth = np.zeros(maxV, dtype=np.int64)
    order = np.empty(maxV, dtype=np.int64)
    seen = np.zeros(maxV, dtype=np.bool_)
    m_lt = np.zeros(E, dtype=np.int64)
    m_p = np.zeros(E, dtype=np.int64)
    pos = np.zeros(E, dtype=np.int64)
    neg = np.zeros(E, dtype=np.int64)
    fbit = np.zeros(E, dtype=np.int64)
    comp = np.empty(maxV, dtype=np.int64)
    edge_comp = np.empty(E, dtype=np.int64)
    csize = np.zeros(nl, dtype=np.int64)
    degs = np.zeros(N, dtype=np.int64)
    state = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    P = assign.shape[0]
    for p in range(P):
        k = ncl[p]
        V = first_cluster + k
        for c in range(k):
            nadj[first_cluster + c] = 0
            csize[c] = 0
        for i in range(nl):
            c = assign[p, i]
            v = first_cluster + c
            lower[E0 + i] = v
            adj[v, nadj[v]] = E0 + i
            nadj[v] += 1
            csize[c] += 1
        # spanning forest, reverse creation order
        for v in range(V):
            uf[v] = v
        nfree = 0
        for e in range(E - 1, -1, -1):
            ru = _find(uf, upper[e])
            rl = _find(uf, lower[e])
            if ru == rl:
                free[e] = True
                nfree += 1
            else:
                free[e] = False
                uf[ru] = rl
        if nfree != nl - k:
            fails[0] += 1
        # degrees and counting lemmas
        n0 = 0
        n1 = 0
        n2 = 0
        r = N + 1 - k
        bad_prefix = False
        bad_range = False
        for j in range(N):
            d = 0
            for c in range(3):
                if free[children[j, c]]:
                    d += 1
            degs[j] = d
            if d == 0:
                n0 += 1
            elif d == 1:
                n1 += 1
            elif d == 2:
                n2 += 1
            else:
                bad_range = True
            if n2 > r + n0:
                bad_prefix = True
        if bad_range:
            fails[1] += 1
        if n2 - n0 != r:
            fails[2] += 1
        nnp = 0
        for c in range(k):
            if csize[c] != 2:
                nnp += 1
        if nnp > r:
            fails[3] += 1
        c0 = 0
        for j in range(N):
            if degs[j] == 0:
                c0 += 1
            if 2 * c0 < (j + 1) - (n1 + r):
                bad_prefix = True
        if bad_prefix:
            fails[4] += 1
        # cluster scheme: components merge bottom-up
        for c in range(k):
            comp[c] = c
        for i in range(nl):
            edge_comp[legs[i]] = assign[p, i]
        bad_scheme = False
        for j in range(N):
            a0 = _find(comp, edge_comp[children[j, 0]])
            a1 = _find(comp, edge_comp[children[j, 1]])
            a2 = _find(comp, edge_comp[children[j, 2]])
            distinct = 1
            if a1 != a0:
                distinct += 1
            if a2 != a0 and a2 != a1:
                distinct += 1
            if a1 != a0:
                comp[a1] = a0
            a2 = _find(comp, a2)
            if a2 != a0:
                comp[a2] = a0
            edge_comp[top_edge[j]] = a0
            if degs[j] != 3 - distinct:
                bad_scheme = True
        if bad_scheme:
            fails[5] += 1
        # rooted spanning tree by breadth-first search over tree edges
        for v in range(V):
            seen[v] = False
        seen[0] = True
        parent_edge[0] = -1
        depth[0] = 0
        order[0] = 0
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            for q in range(nadj[v]):
                e = adj[v, q]
                if free[e]:
                    continue
                w = upper[e] if lower[e] == v else lower[e]
                if not seen[w]:
                    seen[w] = True
                    parent_edge[w] = e
                    depth[w] = depth[v] + 1
                    order[tail] = w
                    tail += 1
        # random integer momenta on free edges; loop tracing
        for e in range(E):
            m_lt[e] = 0
            pos[e] = 0
            neg[e] = 0
        nb = 0
        for e in range(E):
            if free[e]:
                state = state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
                x = np.int64((state >> np.uint64(33)) % np.uint64(2000001)) - 1000000
                m_p[e] = x
                fbit[e] = np.int64(1) << nb
                nb += 1
                _trace(e, fbit[e], x, upper, lower, parent_edge, depth, m_lt, pos, neg)
        # propagation oracle: leaves first through the tree
        for idx in range(tail - 1, 0, -1):
            v = order[idx]
            pe = parent_edge[v]
            s_in = 0
            s_out = 0
            for q in range(nadj[v]):
                e = adj[v, q]
                if e == pe:
                    continue
                if lower[e] == v:
                    s_in += m_p[e]
                else:
                    s_out += m_p[e]
            if lower[pe] == v:
                m_p[pe] = s_out - s_in
            else:
                m_p[pe] = s_in - s_out
        bad = tail != V
        for e in range(E):
            if m_p[e] != m_lt[e] or (pos[e] & neg[e]) != 0:
                bad = True
        for v in range(1, V):
            s = 0
            for q in range(nadj[v]):
                e = adj[v, q]
                if lower[e] == v:
                    s += m_lt[e]
                else:
                    s -= m_lt[e]
            if s != 0:
                bad = True
        if bad:
            fails[7] += 1
        if m_lt[0] != 0 or m_p[0] != 0 or pos[0] != 0 or neg[0] != 0:
            fails[8] += 1
        # degree-two local structure: no edge depends on k_f - k_f'
        bad2 = False
        for j in range(N):
            if degs[j] != 2:
                continue
            b1 = 0
            b2 = 0
            for c in range(3):
                e = children[j, c]
                if free[e]:
                    if b1 == 0:
                        b1 = fbit[e]
                    else:
                        b2 = fbit[e]
            for e in range(E):
                if ((pos[e] & b1) != 0 and (neg[e] & b2) != 0) or ((neg[e] & b1) != 0 and (pos[e] & b2) != 0):
                    bad2 = True
        if bad2:
            fails[6] += 1
    return fails


def _history_arrays(n, n_prime, J, ell, ellp):
    N = n + n_prime
    spec = GraphSpec(n, n_prime, ell, ellp, J, (tuple(range(2 * N + 2)),))
    g = build_graph(spec)
    E0 = 3 * N + 3
    return (g.upper[:E0].copy(), g.lower[:E0].copy(), g.children.copy(), g.top_edge.copy(),
            g.legs.copy(), np.array([g.leg_parity(i) for i in range(2 * N + 2)]))


def _assign_table(partitions, nl):
    a = np.zeros((len(partitions), nl), dtype=np.int64)
    k = np.zeros(len(partitions), dtype=np.int64)
    for p, S in enumerate(partitions):
        k[p] = len(S)
        for c, block in enumerate(S):
            for x in block:
                a[p, x] = c
    return a, k


@dataclass
class BulkReport:
    N: int
    population: str
    graphs: int = 0
    histories: int = 0
    histories_total: int = 0
    failures: dict = field(default_factory=lambda: {c: 0 for c in CHECKS})
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def to_dict(self) -> dict:
        return {"N": self.N, "population": self.population, "graphs": self.graphs,
                "histories": self.histories, "histories_total": self.histories_total,
                "exhaustive": self.histories == self.histories_total, "failures": dict(self.failures),
                "seconds": self.seconds, "pass": self.ok}


def verify_population(N: int, population: str = "all", seed: int = 12345,
                      sample_histories: int | None = None) -> BulkReport:
    """Run the bulk checks over every history with ``n + n_prime = N``.

    ``population`` is ``"all"`` (every even cluster decomposition),
    ``"pairings"`` (every pairing) or ``"parity"`` (pairings joining opposite
    parities).  ``sample_histories`` restricts the run to that many histories
    drawn uniformly without replacement; every cluster decomposition of a
    drawn history is still checked.
    """
    t0 = time.perf_counter()
    nl = 2 * N + 2
    rep = BulkReport(N, population)
    table = None
    if population == "all":
        table = _assign_table(list(even_partitions(range(nl))), nl)
    elif population == "pairings":
        table = _assign_table(list(pairings(range(nl))), nl)
    elif population == "parity":
        perms = np.array(list(itertools.permutations(range(N + 1))), dtype=np.int64)
        ncl = np.full(len(perms), N + 1, dtype=np.int64)
        rows = np.arange(len(perms))[:, None]
        ids = np.broadcast_to(np.arange(N + 1), perms.shape)
    else:
        raise ValueError(f"unknown population {population!r}")
    pool = [(n, hist) for n in range(N, -1, -1) for hist in histories(n, N - n)]
    rep.histories_total = len(pool)
    if sample_histories is not None and sample_histories < len(pool):
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(pool), size=sample_histories, replace=False))
        pool = [pool[i] for i in keep]
    h = 0
    for n, (J, ell, ellp) in pool:
        up, lo, ch, top, legs, par = _history_arrays(n, N - n, J, ell, ellp)
        if table is None:
            minus = np.flatnonzero(par < 0)
            plus = np.flatnonzero(par > 0)
            assign = np.empty((len(perms), nl), dtype=np.int64)
            assign[:, minus] = ids
            assign[rows, plus[perms]] = ids
            fails = verify_assignments(N, up, lo, ch, top, legs, assign, ncl, seed + h)
            rep.graphs += len(perms)
        else:
            fails = verify_assignments(N, up, lo, ch, top, legs, table[0], table[1], seed + h)
            rep.graphs += len(table[1])
        for name, f in zip(CHECKS, fails):
            rep.failures[name] += int(f)
        h += 1
    rep.histories = h
    rep.seconds = time.perf_counter() - t0
    return rep
