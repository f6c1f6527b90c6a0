"""Momentum graphs built from interaction histories and cluster decompositions.

Conventions
-----------
* ``N = n + n_prime`` interactions at times ``1..N``.  ``J[j-1] = +1`` puts the
  vertex of time ``j`` in the plus tree, ``-1`` in the minus tree.
* A tree with ``n`` interactions has ``2n + 1`` legs.  Legs are labelled
  ``0 .. 2N+1`` left to right, minus tree first.  For main-shape graphs
  (``n_prime = 0``) leg ``0`` is the auxiliary leg of parity ``-1``.
* ``ell[i-1]`` is the frontier position (1-based) split by the ``i``-th lowest
  interaction of the plus tree; ``ell_prime`` likewise for the minus tree.
  When a tree holds ``n`` interactions, interaction ``i`` chooses among
  ``1 + 2(n - i)`` positions.
* A split edge of parity ``s`` spawns children of parities ``(-1, s, +1)``.
* Edge creation order: root edge, minus top, plus top, then the three
  children of each interaction from time ``N`` down to ``1``, then one
  cluster edge per leg from left to right.
* Momenta flow downward along every edge.  Each non-root vertex conserves
  flow (cluster vertices have no outgoing edge, so their in-flow is zero).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np


class CapExceeded(ValueError):
    """Enumeration refused because the population is too large."""


ROOT, TOP, FUSION, INITIAL, CLUSTER = "root", "top", "fusion", "initial", "cluster"

FULL_CAP = 4
PAIRING_CAP = 6


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def history_ranges(n: int) -> list[range]:
    """Admissible values of ``ell_i`` for ``i = 1..n``."""
    return [range(1, 2 * (n - i) + 2) for i in range(1, n + 1)]


def count_histories(n: int) -> int:
    return double_factorial(2 * n - 1)


@dataclass(frozen=True)
class GraphSpec:
    n: int
    n_prime: int
    ell: tuple[int, ...]
    ell_prime: tuple[int, ...]
    J: tuple[int, ...]
    clusters: tuple[tuple[int, ...], ...]
    shape: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "ell", tuple(int(x) for x in self.ell))
        object.__setattr__(self, "ell_prime", tuple(int(x) for x in self.ell_prime))
        if self.J:
            J = tuple(int(x) for x in self.J)
        elif self.n_prime == 0:
            J = (1,) * self.n
        elif self.n == 0:
            J = (-1,) * self.n_prime
        else:
            raise ValueError("J is required when both trees interact")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "clusters", tuple(tuple(sorted(int(x) for x in c)) for c in self.clusters))
        self.validate()

    @property
    def N(self) -> int:
        return self.n + self.n_prime

    @property
    def n_legs(self) -> int:
        return 2 * self.N + 2

    def validate(self) -> None:
        if self.shape not in ("error", "main"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "main" and self.n_prime != 0:
            raise ValueError("main-shape graphs have no minus-tree interactions")
        if len(self.ell) != self.n or len(self.ell_prime) != self.n_prime:
            raise ValueError("history lengths do not match n, n_prime")
        for hist, n in ((self.ell, self.n), (self.ell_prime, self.n_prime)):
            for x, r in zip(hist, history_ranges(n)):
                if x not in r:
                    raise ValueError(f"history entry {x} outside {r}")
        if len(self.J) != self.N or any(x not in (1, -1) for x in self.J):
            raise ValueError("J must be a +-1 sequence of length n + n_prime")
        if sum(1 for x in self.J if x == 1) != self.n:
            raise ValueError("J does not interlace n plus-tree interactions")
        seen = sorted(x for c in self.clusters for x in c)
        if seen != list(range(self.n_legs)):
            raise ValueError("clusters must partition the legs exactly")
        if any(len(c) == 0 for c in self.clusters):
            raise ValueError("empty cluster")

    @property
    def is_pairing(self) -> bool:
        return all(len(c) == 2 for c in self.clusters)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_prime": self.n_prime,
            "ell": list(self.ell),
            "ell_prime": list(self.ell_prime),
            "J": list(self.J) if self.n_prime else [],
            "clusters": [list(c) for c in self.clusters],
            "shape": self.shape,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        return cls(
            d["n"], d["n_prime"], tuple(d["ell"]), tuple(d["ell_prime"]),
            tuple(d.get("J") or ()), tuple(tuple(c) for c in d["clusters"]), d.get("shape", "error"),
        )


def from_one_based(clusters: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(x - 1 for x in c) for c in clusters)


# ---------------------------------------------------------------------------
# cluster signs


def cluster_sign(clusters: Sequence[Sequence[int]]) -> int:
    """Sign of the permutation obtained by concatenating the sorted clusters."""
    perm = []
    for c in clusters:
        if len(c) % 2:
            raise ValueError("cluster sign needs even clusters")
        perm.extend(sorted(c))
    labels = sorted(perm)
    if labels != sorted(set(perm)):
        raise ValueError("clusters overlap")
    rank = {x: i for i, x in enumerate(labels)}
    p = [rank[x] for x in perm]
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


# ---------------------------------------------------------------------------
# forests: the tree shape of a spec, used for composition and attachment
#
# A node is either an int (leg label) or a tuple (time, (c1, c2, c3)).


def spec_forest(spec: GraphSpec) -> tuple[object, object]:
    """Minus and plus trees of ``spec`` with leaves carrying leg labels."""
    roots = [["leaf"], ["leaf"]]
    slots: list[list] = [[roots[0]], [roots[1]]]
    counters = [spec.n_prime, spec.n]
    hist = [spec.ell_prime, spec.ell]
    for time in range(spec.N, 0, -1):
        t = 1 if spec.J[time - 1] == 1 else 0
        i = counters[t]
        counters[t] -= 1
        pos = hist[t][i - 1] - 1
        node = slots[t][pos]
        kids = [["leaf"], ["leaf"], ["leaf"]]
        node[:] = ["vertex", time, kids]
        slots[t][pos:pos + 1] = kids
    label = 0
    for t in (0, 1):
        for leaf in slots[t]:
            leaf[:] = ["leg", label]
            label += 1

    def freeze(node):
        if node[0] == "leg":
            return node[1]
        return (node[1], tuple(freeze(c) for c in node[2]))

    return freeze(roots[0]), freeze(roots[1])


def _node_times(node) -> list[int]:
    if isinstance(node, int):
        return []
    return [node[0]] + [t for c in node[1] for t in _node_times(c)]


def forest_spec(minus, plus, clusters, shape: str = "error") -> GraphSpec:
    """Inverse of :func:`spec_forest`; leaf labels are renumbered left to right."""
    times = sorted(_node_times(minus) + _node_times(plus))
    rank = {t: i + 1 for i, t in enumerate(times)}
    N = len(times)
    J = [0] * N
    owner = {}
    for t, tree in ((-1, minus), (1, plus)):
        for x in _node_times(tree):
            J[rank[x] - 1] = t
            owner[rank[x]] = t
    frontiers = {-1: [minus], 1: [plus]}
    picks: dict[int, list[int]] = {-1: [], 1: []}
    for time in range(N, 0, -1):
        t = owner[time]
        fr = frontiers[t]
        pos = next(i for i, x in enumerate(fr) if not isinstance(x, int) and rank[x[0]] == time)
        picks[t].append(pos + 1)
        fr[pos:pos + 1] = list(fr[pos][1])
    order = frontiers[-1] + frontiers[1]
    relabel = {old: new for new, old in enumerate(order)}
    new_clusters = tuple(tuple(sorted(relabel[x] for x in c)) for c in clusters)
    n, n_prime = J.count(1), J.count(-1)
    return GraphSpec(n, n_prime, tuple(reversed(picks[1])), tuple(reversed(picks[-1])),
                     tuple(J), new_clusters, shape)


def _leaves(node) -> list[int]:
    if isinstance(node, int):
        return [node]
    return [x for c in node[1] for x in _leaves(c)]


def _shift_times(node, offset: int):
    if isinstance(node, int):
        return node
    return (node[0] + offset, tuple(_shift_times(c, offset) for c in node[1]))


def _relabel(node, mapping):
    if isinstance(node, int):
        return mapping[node]
    return (node[0], tuple(_relabel(c, mapping) for c in node[1]))


def leaf_parities(node, top: int) -> dict[int, int]:
    """Parity of every leaf under a subtree whose top edge has parity ``top``."""
    if isinstance(node, int):
        return {node: top}
    out = {}
    for c, s in zip(node[1], (-1, top, 1)):
        out.update(leaf_parities(c, s))
    return out


@dataclass(frozen=True)
class Attachment:
    """Subtrees to graft onto the legs of one host cluster.

    ``trees[i]`` replaces the ``i``-th leg of the cluster (in increasing leg
    order) and must have top parity ``tops[i]``.  Leaves are local labels
    ``0..m-1`` numbered left to right across all trees; ``clusters`` is an
    even decomposition of those local labels.
    """

    trees: tuple
    tops: tuple[int, ...]
    clusters: tuple[tuple[int, ...], ...]

    @property
    def sign(self) -> int:
        return cluster_sign(self.clusters)

    @property
    def n_vertices(self) -> int:
        return sum(len(_node_times(t)) for t in self.trees)

    @classmethod
    def from_spec(cls, spec: GraphSpec) -> "Attachment":
        minus, plus = spec_forest(spec)
        return cls((minus, plus), (-1, 1), spec.clusters)


def compose(host: GraphSpec, cluster_id: int, att: Attachment) -> GraphSpec:
    """Graft ``att`` onto cluster ``cluster_id`` of ``host``.

    The attachment's interactions are placed below every host interaction.
    """
    target = host.clusters[cluster_id]
    if len(att.trees) != len(target):
        raise ValueError(f"attachment has {len(att.trees)} trees, cluster has {len(target)} legs")
    g = build_graph(host)
    for leg, top in zip(target, att.tops):
        if g.leg_parity(leg) != top:
            raise ValueError(f"leg {leg} has parity {g.leg_parity(leg)}, attachment top has {top}")
    minus, plus = spec_forest(host)
    shift = att.n_vertices
    minus, plus = _shift_times(minus, shift), _shift_times(plus, shift)
    # host legs keep labels >= 0; attachment leaves get labels offset past them
    off = host.n_legs
    sub = {}
    local = 0
    for leg, tree in zip(target, att.trees):
        leaves = _leaves(tree)
        mapping = {x: off + local + i for i, x in enumerate(leaves)}
        sub[leg] = _relabel(tree, mapping)
        local += len(leaves)

    def graft(node):
        if isinstance(node, int):
            return sub.get(node, node)
        return (node[0], tuple(graft(c) for c in node[1]))

    minus, plus = graft(minus), graft(plus)
    clusters = [c for i, c in enumerate(host.clusters) if i != cluster_id]
    clusters += [tuple(off + x for x in c) for c in att.clusters]
    shape = host.shape if not any(_node_times(minus)) else "error"
    out = forest_spec(minus, plus, clusters, shape)
    sh, sa, sc = cluster_sign(host.clusters), att.sign, cluster_sign(out.clusters)
    if sc != sh * sa:
        raise AssertionError("cluster sign is not multiplicative under composition")
    return out


# ---------------------------------------------------------------------------
# graph construction


@dataclass
class MomentumGraph:
    spec: GraphSpec
    kinds: list[str]
    times: list[int]
    upper: np.ndarray
    lower: np.ndarray
    parity: np.ndarray
    children: np.ndarray  # (N, 3) edge ids for the vertex of time j at row j-1
    top_edge: np.ndarray  # (N,) edge id entering each interaction vertex from above
    legs: np.ndarray  # (2N+2,) leg edge ids, left to right
    cluster_edges: np.ndarray
    leg_cluster: np.ndarray
    free: np.ndarray | None = None
    D: np.ndarray | None = None
    free_edges: np.ndarray | None = None
    parent_edge: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def n_edges(self) -> int:
        return len(self.upper)

    @property
    def n_vertices(self) -> int:
        return len(self.kinds)

    def fusion_id(self, j: int) -> int:
        """Vertex id of the interaction at time ``j``."""
        return 1 + j

    def leg_parity(self, leg: int) -> int:
        return int(self.parity[self.legs[leg]])

    @cached_property
    def leg_order(self) -> np.ndarray:
        """Smallest leg label below each edge (root edge: -1)."""
        lo = np.full(self.n_edges, 10 ** 6, dtype=np.int64)
        for i, e in enumerate(self.legs):
            lo[e] = i
            lo[self.cluster_edges[i]] = i
        for j in range(1, self.N + 1):
            kids = self.children[j - 1]
            lo[self.top_edge[j - 1]] = min(lo[k] for k in kids)
        return lo

    @property
    def resolved(self) -> bool:
        return self.D is not None

    def degree(self, j: int) -> int:
        return int(sum(self.free[e] for e in self.children[j - 1]))

    def degrees(self) -> list[int]:
        return [self.degree(j) for j in range(1, self.N + 1)]

    def free_children(self, j: int) -> list[int]:
        """Column indices of the free in-edges of the vertex of time ``j``."""
        col = {int(e): i for i, e in enumerate(self.free_edges)}
        return [col[int(e)] for e in self.children[j - 1] if self.free[e]]

    def to_dict(self) -> dict:
        rel = relevance(self) if self.resolved else None
        edges = []
        for e in range(self.n_edges):
            item = {
                "id": e,
                "from": int(self.upper[e]),
                "to": int(self.lower[e]),
                "parity": int(self.parity[e]),
            }
            if self.resolved:
                item["free"] = bool(self.free[e])
                item["depvec"] = [int(x) for x in self.D[e]]
            edges.append(item)
        out = self.spec.to_dict()
        out["vertices"] = [{"id": i, "kind": k, "time": t} for i, (k, t) in enumerate(zip(self.kinds, self.times))]
        out["edges"] = edges
        out["sign"] = cluster_sign(self.spec.clusters) if all(len(c) % 2 == 0 for c in self.spec.clusters) else 0
        if rel is not None:
            out["relevant"] = rel[0]
            out["reason"] = rel[1]
        return out


def build_graph(spec: GraphSpec) -> MomentumGraph:
    N = spec.N
    nl = spec.n_legs
    kinds = [ROOT, TOP] + [FUSION] * N + [INITIAL] * nl + [CLUSTER] * len(spec.clusters)
    times = [N + 2, N + 1] + list(range(1, N + 1)) + [0] * nl + [-1] * len(spec.clusters)
    upper: list[int] = [0, 1, 1]
    lower: list[int] = [1, -1, -1]
    parity: list[int] = [1, -1, 1]
    frontier = {-1: [1], 1: [2]}
    counters = {-1: spec.n_prime, 1: spec.n}
    hist = {-1: spec.ell_prime, 1: spec.ell}
    children = np.zeros((N, 3), dtype=np.int64)
    top_edge = np.zeros(N, dtype=np.int64)
    for time in range(N, 0, -1):
        t = spec.J[time - 1]
        i = counters[t]
        counters[t] -= 1
        pos = hist[t][i - 1] - 1
        e = frontier[t][pos]
        v = 1 + time
        lower[e] = v
        top_edge[time - 1] = e
        kids = []
        for s in (-1, parity[e], 1):
            upper.append(v)
            lower.append(-1)
            parity.append(s)
            kids.append(len(upper) - 1)
        children[time - 1] = kids
        frontier[t][pos:pos + 1] = kids
    legs = frontier[-1] + frontier[1]
    first_initial = 2 + N
    first_cluster = first_initial + nl
    leg_cluster = np.zeros(nl, dtype=np.int64)
    for c, members in enumerate(spec.clusters):
        for x in members:
            leg_cluster[x] = c
    cluster_edges = []
    for i, e in enumerate(legs):
        lower[e] = first_initial + i
    for i, e in enumerate(legs):
        upper.append(first_initial + i)
        lower.append(first_cluster + int(leg_cluster[i]))
        parity.append(parity[e])
        cluster_edges.append(len(upper) - 1)
    return MomentumGraph(
        spec, kinds, times,
        np.asarray(upper, dtype=np.int64), np.asarray(lower, dtype=np.int64), np.asarray(parity, dtype=np.int64),
        children, top_edge, np.asarray(legs, dtype=np.int64), np.asarray(cluster_edges, dtype=np.int64), leg_cluster,
    )


class _UnionFind:
    def __init__(self, n: int):
        self.p = list(range(n))

    def find(self, x: int) -> int:
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[ra] = rb
        return True


def resolve_momenta(g: MomentumGraph) -> MomentumGraph:
    """Spanning tree by reverse creation order and dependency vectors by loop tracing."""
    E, V = g.n_edges, g.n_vertices
    uf = _UnionFind(V)
    free = np.zeros(E, dtype=bool)
    for e in range(E - 1, -1, -1):
        if not uf.union(int(g.upper[e]), int(g.lower[e])):
            free[e] = True
    adj: list[list[int]] = [[] for _ in range(V)]
    for e in range(E):
        if not free[e]:
            adj[g.upper[e]].append(e)
            adj[g.lower[e]].append(e)
    parent_edge = np.full(V, -1, dtype=np.int64)
    depth = np.zeros(V, dtype=np.int64)
    seen = np.zeros(V, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for e in adj[v]:
            w = int(g.upper[e] if g.lower[e] == v else g.lower[e])
            if not seen[w]:
                seen[w] = True
                parent_edge[w] = e
                depth[w] = depth[v] + 1
                queue.append(w)
    if not seen.all():
        raise AssertionError("spanning forest does not reach every vertex")
    free_edges = np.flatnonzero(free)
    D = np.zeros((E, len(free_edges)), dtype=np.int8)

    def step_up(a: int) -> tuple[int, int, int]:
        e = int(parent_edge[a])
        p = int(g.upper[e] if g.lower[e] == a else g.lower[e])
        return e, p, (1 if g.upper[e] == a else -1)

    for col, f in enumerate(free_edges):
        D[f, col] = 1
        a, b = int(g.lower[f]), int(g.upper[f])
        # circulation: along f from upper to lower, then back from lower to upper in the tree
        down: list[tuple[int, int]] = []
        while depth[a] > depth[b]:
            e, a, s = step_up(a)
            D[e, col] += s
        while depth[b] > depth[a]:
            e, b, s = step_up(b)
            down.append((e, -s))
        while a != b:
            e, a, s = step_up(a)
            D[e, col] += s
            e, b, s = step_up(b)
            down.append((e, -s))
        for e, s in down:
            D[e, col] += s
    g.free, g.D, g.free_edges, g.parent_edge = free, D, free_edges, parent_edge
    return g


def resolved(spec: GraphSpec) -> MomentumGraph:
    return resolve_momenta(build_graph(spec))


# ---------------------------------------------------------------------------
# degrees and counts


@dataclass(frozen=True)
class ClusterCounts:
    degrees: tuple[int, ...]
    n0: int
    n1: int
    n2: int
    r: int
    n_np: int
    prefix: tuple[tuple[int, int, int], ...]  # (n0(l), n1(l), n2(l)) for l = 0..N

    def lemma_checks(self) -> dict[str, bool]:
        N = len(self.degrees)
        return {
            "n2_minus_n0_is_r": self.n2 - self.n0 == self.r,
            "n0_formula": 2 * self.n0 == N - self.r - self.n1,
            "non_pairs_at_most_r": self.n_np <= self.r,
            "prefix_n2": all(p[2] <= self.r + p[0] for p in self.prefix),
            "prefix_n0": all(2 * p[0] >= l - (self.n1 + self.r) for l, p in enumerate(self.prefix)),
        }


def cluster_scheme_degrees(spec: GraphSpec, g: MomentumGraph) -> list[int]:
    """Degrees from the evolution of the cluster structure, bottom-up."""
    block = {i: frozenset(c) for c in spec.clusters for i in c}
    owner: dict[int, frozenset] = {}
    for i, e in enumerate(g.legs):
        owner[int(e)] = block[i]
    degs = []
    count = len(set(block.values()))
    for j in range(1, spec.N + 1):
        kids = [owner[int(e)] for e in g.children[j - 1]]
        distinct = set(kids)
        merged = frozenset().union(*distinct)
        for e, b in list(owner.items()):
            if b in distinct:
                owner[e] = merged
        owner[int(g.top_edge[j - 1])] = merged
        deg = 3 - len(distinct)
        new_count = count - len(distinct) + 1
        if new_count != count - 2 + deg:
            raise AssertionError("cluster scheme inconsistent")
        count = new_count
        degs.append(deg)
    return degs


def vertex_degrees(g: MomentumGraph) -> ClusterCounts:
    degs = g.degrees()
    if degs != cluster_scheme_degrees(g.spec, g):
        raise AssertionError("spanning-tree degrees disagree with the cluster scheme")
    N = g.N
    prefix = [(0, 0, 0)]
    for d in degs:
        p = list(prefix[-1])
        p[d] += 1
        prefix.append(tuple(p))
    n0, n1, n2 = prefix[-1]
    r = N + 1 - len(g.spec.clusters)
    n_np = sum(1 for c in g.spec.clusters if len(c) != 2)
    return ClusterCounts(tuple(degs), n0, n1, n2, r, n_np, tuple(prefix))


# ---------------------------------------------------------------------------
# relevance


def relevance(g: MomentumGraph) -> tuple[bool, str]:
    """``(True, "")`` or ``(False, reason)`` with reason odd_cluster, parity or phi1_zero."""
    if any(len(c) % 2 for c in g.spec.clusters):
        return False, "odd_cluster"
    for c in g.spec.clusters:
        if len(c) == 2 and g.leg_parity(c[0]) == g.leg_parity(c[1]):
            return False, "parity"
    if g.D is None:
        resolve_momenta(g)
    for j in range(1, g.N + 1):
        kids = g.children[j - 1]
        for a, b in ((0, 1), (1, 2), (0, 2)):
            if not np.any(g.D[kids[a]] + g.D[kids[b]]):
                return False, "phi1_zero"
    return True, ""


def is_fully_paired(g: MomentumGraph) -> bool:
    return g.spec.is_pairing and 1 not in g.degrees()


# ---------------------------------------------------------------------------
# enumeration


def pairings(items: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
    items = list(items)
    if not items:
        yield ()
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for p in pairings(rest):
            yield ((a, items[i]),) + p


def even_partitions(items: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Set partitions into even blocks, blocks ordered by their smallest element."""
    items = list(items)
    if not items:
        yield ()
        return
    a, rest = items[0], items[1:]
    for size in range(1, len(rest) + 1, 2):
        for combo in itertools.combinations(rest, size):
            remaining = [x for x in rest if x not in combo]
            for p in even_partitions(remaining):
                yield ((a,) + combo,) + p


def count_even_partitions(m: int) -> int:
    # a(m) = sum_{odd k} C(m-1, k) a(m-1-k)
    a = [1] + [0] * m
    for x in range(1, m + 1):
        a[x] = sum(math.comb(x - 1, k) * a[x - 1 - k] for k in range(1, x, 2))
    return a[m]


def interlacings(n: int, n_prime: int) -> Iterator[tuple[int, ...]]:
    N = n + n_prime
    for pos in itertools.combinations(range(N), n):
        J = [-1] * N
        for p in pos:
            J[p] = 1
        yield tuple(J)


def histories(n: int, n_prime: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]]:
    """All ``(J, ell, ell_prime)`` triples in lexicographic order."""
    for J in interlacings(n, n_prime):
        for ell in itertools.product(*history_ranges(n)):
            for ellp in itertools.product(*history_ranges(n_prime)):
                yield J, ell, ellp


def leg_parities(n: int, n_prime: int, J, ell, ellp) -> list[int]:
    spec = GraphSpec(n, n_prime, ell, ellp, J, (tuple(range(2 * (n + n_prime) + 2)),))
    g = build_graph(spec)
    return [g.leg_parity(i) for i in range(spec.n_legs)]


def admissible_pairings(par: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
    """Pairings joining each minus leg to a plus leg."""
    minus = [i for i, s in enumerate(par) if s < 0]
    plus = [i for i, s in enumerate(par) if s > 0]
    for perm in itertools.permutations(plus):
        yield tuple(tuple(sorted(p)) for p in zip(minus, perm))


def estimate_count(n: int, n_prime: int, pairings_only: bool) -> int:
    N = n + n_prime
    h = math.comb(N, n) * count_histories(n) * count_histories(n_prime)
    s = double_factorial(2 * N + 1) if pairings_only else count_even_partitions(2 * N + 2)
    return h * s


def enumerate_specs(n: int, n_prime: int, shape: str = "error", pairings_only: bool = False,
                    parity_admissible: bool = False, cap: int | None = None) -> Iterator[GraphSpec]:
    """Stream every admissible spec once in lexicographic order.

    ``parity_admissible`` restricts to pairings joining opposite parities,
    the only ones with a nonvanishing pair correlation.
    """
    if shape == "main" and n_prime:
        raise ValueError("main shape requires n_prime = 0")
    N = n + n_prime
    limit = cap if cap is not None else (PAIRING_CAP if (pairings_only or parity_admissible) else FULL_CAP)
    if N > limit:
        raise CapExceeded(f"n+n'={N} exceeds cap {limit}; population ~{estimate_count(n, n_prime, pairings_only)}")
    legs = list(range(2 * N + 2))
    if not parity_admissible:
        pool = list(pairings(legs)) if pairings_only else list(even_partitions(legs))
    for J, ell, ellp in histories(n, n_prime):
        if parity_admissible:
            par = leg_parities(n, n_prime, J, ell, ellp)
            source = admissible_pairings(par)
        else:
            source = pool
        for S in source:
            yield GraphSpec(n, n_prime, ell, ellp, J, S, shape)


def trivial_spec(shape: str = "main") -> GraphSpec:
    return GraphSpec(0, 0, (), (), (), ((0, 1),), shape)


def connectivity(g: MomentumGraph, removed: Sequence[int]) -> bool:
    """Whether the graph stays connected after deleting the given edges."""
    gone = set(int(e) for e in removed)
    uf = _UnionFind(g.n_vertices)
    for e in range(g.n_edges):
        if e not in gone:
            uf.union(int(g.upper[e]), int(g.lower[e]))
    return len({uf.find(v) for v in range(g.n_vertices)}) == 1
