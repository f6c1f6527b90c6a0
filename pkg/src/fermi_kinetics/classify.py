"""Phase algebra over dependency vectors and classification of fully paired graphs.

A phase is a formal sum of terms ``c * omega(v . k_free)``.  Because the band
is even, ``omega(v)`` and ``omega(-v)`` are the same term, so vectors are
stored with their first nonzero entry positive.  Two terms cancel only when
their vectors coincide up to sign (genericity of the band).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .graphs import (
    Attachment,
    CapExceeded,
    GraphSpec,
    MomentumGraph,
    _leaves,
    _shift_times,
    build_graph,
    compose,
    enumerate_specs,
    forest_spec,
    is_fully_paired,
    relevance,
    resolve_momenta,
    spec_forest,
    trivial_spec,
)

LEADING, NESTED, CROSSING = "Leading", "Nested", "Crossing"
NOT_FULLY_PAIRED, IRRELEVANT = "NotFullyPaired", "Irrelevant"
LEADING_CAP = 3


def _canon(vec) -> tuple[int, ...]:
    v = tuple(int(x) for x in vec)
    for x in v:
        if x:
            return v if x > 0 else tuple(-y for y in v)
    return v


@dataclass(frozen=True)
class PhaseExpr:
    """Reduced formal sum ``sum_v coeff_v * omega(v)``; ``terms`` is sorted by vector."""

    terms: tuple[tuple[tuple[int, ...], int], ...] = ()

    @classmethod
    def from_terms(cls, items) -> "PhaseExpr":
        acc: Counter = Counter()
        for sign, vec in items:
            acc[_canon(vec)] += int(sign)
        return cls(tuple(sorted((v, c) for v, c in acc.items() if c)))

    def __add__(self, other: "PhaseExpr") -> "PhaseExpr":
        return PhaseExpr.from_terms([(c, v) for v, c in self.terms] + [(c, v) for v, c in other.terms])

    def __neg__(self) -> "PhaseExpr":
        return PhaseExpr(tuple((v, -c) for v, c in self.terms))

    def __sub__(self, other: "PhaseExpr") -> "PhaseExpr":
        return self + (-other)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def depends_on(self, cols: Sequence[int]) -> bool:
        """Whether some term's argument involves one of the free columns ``cols``."""
        return any(v[c] for v, _ in self.terms for c in cols)

    def evaluate(self, omega, free_momenta: np.ndarray) -> float:
        """Numerical value for free momenta of shape ``(F, d)``."""
        return float(sum(c * omega(np.asarray(v) @ free_momenta) for v, c in self.terms))

    def to_list(self) -> list:
        return [{"coeff": c, "vector": list(v)} for v, c in self.terms]


def theta(g: MomentumGraph, j: int) -> PhaseExpr:
    """``omega(k3) - omega(k1) + sigma (omega(k2) - omega(k0))`` at the vertex of time ``j``."""
    if not 1 <= j <= g.N:
        raise ValueError(f"vertex index {j} outside 1..{g.N}")
    if g.D is None:
        resolve_momenta(g)
    c1, c2, c3 = (int(e) for e in g.children[j - 1])
    top = int(g.top_edge[j - 1])
    s = int(g.parity[top])
    return PhaseExpr.from_terms([(1, g.D[c3]), (-1, g.D[c1]), (s, g.D[c2]), (-s, g.D[top])])


def re_gamma(g: MomentumGraph, j: int) -> PhaseExpr:
    """``-sum_{l <= j} theta_l``."""
    out = PhaseExpr()
    for l in range(1, j + 1):
        out = out - theta(g, l)
    return out


# ---------------------------------------------------------------------------
# motive templates
#
# Loss motives (top parity +1): position of the lower vertex among the upper
# vertex's children, index of the external bottom leg among the five bottom
# legs, and the two internal pairs.  Gain motives (left top parity -1): pairs
# (a, b) of child positions of the left and right vertex, and which vertex is
# the lower one.  The other ten motives are mirror images.

LOSS_TEMPLATES = {
    "L1": (0, 2, ((0, 3), (1, 4))),
    "L2": (1, 3, ((0, 2), (1, 4))),
    "L3": (2, 4, ((1, 2), (0, 3))),
    "L4": (0, 2, ((1, 3), (0, 4))),
    "L5": (1, 2, ((0, 3), (1, 4))),
    "L6": (2, 3, ((1, 2), (0, 4))),
}
GAIN_TEMPLATES = {
    "G1": (((2, 0), (0, 1), (1, 2)), "right"),
    "G2": (((2, 0), (0, 1), (1, 2)), "left"),
    "G3": (((2, 0), (1, 1), (0, 2)), "right"),
    "G4": (((2, 0), (1, 1), (0, 2)), "left"),
}


def _norm_pairs(pairs) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(tuple(sorted(p)) for p in pairs))


def loss_template(name: str) -> tuple[int, int, tuple[tuple[int, int], ...]]:
    """``(p, ext, pairs)`` for ``L1..L6`` and mirrored ``L1-..L6-``."""
    base = name.rstrip("-")
    p, ext, pairs = LOSS_TEMPLATES[base]
    if name.endswith("-"):
        return 2 - p, 4 - ext, _norm_pairs((4 - a, 4 - b) for a, b in pairs)
    return p, ext, _norm_pairs(pairs)


def gain_template(name: str) -> tuple[tuple[tuple[int, int], ...], str]:
    """``(pairs, lower_side)`` with 0-based child positions; ``G1..G4`` reverse each vertex."""
    pairs, lower = GAIN_TEMPLATES[name.rstrip("-")]
    if not name.endswith("-"):
        pairs = tuple((2 - a, 2 - b) for a, b in pairs)
    return tuple(sorted(pairs)), lower


LOSS_NAMES = [f"L{i}" for i in range(1, 7)] + [f"L{i}-" for i in range(1, 7)]
GAIN_NAMES = [f"G{i}" for i in range(1, 5)] + [f"G{i}-" for i in range(1, 5)]
MOTIVE_NAMES = LOSS_NAMES + GAIN_NAMES


def motive_parity(name: str) -> int:
    """Top parity for loss motives, left-leg parity for gain motives."""
    return -1 if name.endswith("-") else 1


@dataclass(frozen=True)
class MotiveMatch:
    name: str
    upper: int  # time of the upper vertex
    site: tuple[int, ...]  # edge ids where the motive hangs (one for loss, two for gain)

    def to_dict(self) -> dict:
        return {"motive": self.name, "upper": self.upper, "site": list(self.site)}


def _pair_off(g: MomentumGraph, edges: Sequence[int]) -> tuple[tuple[int, int], ...] | None:
    """Positions pairing ``edges`` by ``D_a + D_b = 0``; ``None`` if impossible."""
    idx = list(range(len(edges)))
    out = []
    while idx:
        a = idx.pop(0)
        hit = next((b for b in idx if not np.any(g.D[edges[a]] + g.D[edges[b]])), None)
        if hit is None:
            return None
        idx.remove(hit)
        out.append((a, hit))
    return _norm_pairs(out)


def detect_motive(g: MomentumGraph, j: int) -> MotiveMatch | None:
    """Match vertices ``v_{j-1}, v_j`` against the twenty motive templates."""
    if j < 2 or j > g.N:
        return None
    if g.D is None:
        resolve_momenta(g)
    up, lo = j, j - 1
    kids_up = [int(e) for e in g.children[up - 1]]
    kids_lo = [int(e) for e in g.children[lo - 1]]
    top_up, top_lo = int(g.top_edge[up - 1]), int(g.top_edge[lo - 1])
    if top_lo in kids_up:
        p = kids_up.index(top_lo)
        bottom = kids_up[:p] + kids_lo + kids_up[p + 1:]
        for ext in range(5):
            if np.any(g.D[bottom[ext]] - g.D[top_up]):
                continue
            rest = [i for i in range(5) if i != ext]
            pairs = _pair_off(g, [bottom[i] for i in rest])
            if pairs is None:
                continue
            pairs = _norm_pairs((rest[a], rest[b]) for a, b in pairs)
            sigma = int(g.parity[top_up])
            for name in (LOSS_NAMES[:6] if sigma > 0 else LOSS_NAMES[6:]):
                if loss_template(name) == (p, ext, pairs):
                    return MotiveMatch(name, up, (top_up,))
        return None
    if np.any(g.D[top_up] + g.D[top_lo]):
        return None
    order = g.leg_order
    left, right = (up, lo) if order[top_up] < order[top_lo] else (lo, up)
    a = [int(e) for e in g.children[left - 1]]
    b = [int(e) for e in g.children[right - 1]]
    sigma = int(g.parity[g.top_edge[left - 1]])
    pairs = []
    for i, ea in enumerate(a):
        hit = [k for k, eb in enumerate(b) if not np.any(g.D[ea] + g.D[eb])]
        if len(hit) != 1:
            return None
        pairs.append((i, hit[0]))
    pairs = tuple(sorted(pairs))
    side = "left" if left == lo else "right"
    for name in (GAIN_NAMES[:4] if sigma > 0 else GAIN_NAMES[4:]):
        if gain_template(name) == (pairs, side):
            return MotiveMatch(name, up, tuple(sorted((int(g.top_edge[left - 1]), int(g.top_edge[right - 1])))))
    return None


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    tag: str
    i2: int | None = None
    j0: int | None = None
    i0: int | None = None
    motives: list = field(default_factory=list)
    m_prime_0: int | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "i2": self.i2,
            "j0": self.j0,
            "i0": self.i0,
            "motives": [m.to_dict() for m in self.motives],
            "m_prime_0": self.m_prime_0,
        }


def long_slices(g: MomentumGraph) -> list[int]:
    """Slices ``m < N`` whose next vertex has degree zero."""
    degs = g.degrees()
    return [m for m in range(g.N) if degs[m] == 0]


def last_trivial_long(g: MomentumGraph, gammas: Sequence[PhaseExpr]) -> int:
    out = 0
    for m in long_slices(g):
        if gammas[m]:
            break
        out = m
    return out


def _gammas(g: MomentumGraph, thetas: Sequence[PhaseExpr]) -> list[PhaseExpr]:
    out = [PhaseExpr()]
    for th in thetas[1:]:
        out.append(out[-1] - th)
    return out


def classify(g: MomentumGraph | GraphSpec) -> Classification:
    """Leading, Nested or Crossing for relevant fully paired graphs.

    Degree-two vertices are visited bottom-up.  A vertex whose double loop
    leaves every long slice untouched must be an immediate recollision and
    its motive is recorded; the first vertex for which this fails decides
    between Nested and Crossing.
    """
    if isinstance(g, GraphSpec):
        g = build_graph(g)
    if g.D is None:
        resolve_momenta(g)
    ok, why = relevance(g)
    if not ok:
        return Classification(IRRELEVANT, reason=why)
    if not is_fully_paired(g):
        return Classification(NOT_FULLY_PAIRED)
    thetas = [PhaseExpr()] + [theta(g, j) for j in range(1, g.N + 1)]
    if not all(thetas[1:]):
        raise AssertionError("a vertex phase reduced to zero in a relevant graph")
    gammas = _gammas(g, thetas)
    longs = long_slices(g)
    m0 = last_trivial_long(g, gammas)
    prefix: list[MotiveMatch] = []
    for j, deg in enumerate(g.degrees(), start=1):
        if deg != 2:
            continue
        F2 = g.free_children(j)
        dep = [m for m in longs if gammas[m].depends_on(F2)]
        if not dep:
            mot = detect_motive(g, j)
            if mot is None:
                raise AssertionError(f"vertex {j} is independent of every long slice but matches no motive")
            prefix.append(mot)
            continue
        crossing = [m for m in dep if (gammas[m] - thetas[j]).depends_on(F2)]
        if not crossing:
            return Classification(NESTED, i2=j, j0=min(dep), motives=prefix, m_prime_0=m0)
        return Classification(CROSSING, i2=j, i0=max(crossing) + 1, motives=prefix, m_prime_0=m0)
    return Classification(LEADING, motives=prefix, m_prime_0=m0)


def x_vertex(g: MomentumGraph, j: int) -> int:
    """Vertex id where the two loops of the degree-two vertex ``v_j`` meet."""
    cols = g.free_children(j)
    if len(cols) != 2:
        raise ValueError(f"vertex {j} does not have degree two")
    edges = np.flatnonzero(np.any(g.D[:, cols] != 0, axis=1))
    count: Counter = Counter()
    for e in edges:
        count[int(g.upper[e])] += 1
        count[int(g.lower[e])] += 1
    v = g.fusion_id(j)
    hits = [w for w, c in count.items() if c >= 3 and w != v]
    if len(hits) != 1:
        raise AssertionError(f"double loop of vertex {j} has {len(hits)} meeting points")
    return hits[0]


def nested_witness_check(g: MomentumGraph, c: Classification) -> dict:
    """``v_{j0}`` is the X-vertex of ``v_{i2}`` and ``theta_{j0} = -theta_{i2}``."""
    x = x_vertex(g, c.i2)
    return {
        "x_vertex_is_j0": x == g.fusion_id(c.j0),
        "theta_negated": theta(g, c.j0) == -theta(g, c.i2),
    }


def crossing_witness_check(g: MomentumGraph, c: Classification) -> dict:
    """Search ``p`` in ``{0, 1}`` so that the remainder is free of the double loops up to ``v_{i2}``."""
    loops = [col for j in range(1, c.i2 + 1) if g.degree(j) == 2 for col in g.free_children(j)]
    F2 = g.free_children(c.i2)
    lhs = re_gamma(g, c.i0 - 1)
    base = lhs - theta(g, c.i0) - re_gamma(g, c.i2)
    ps = [p for p in (0, 1) if not (base - (theta(g, c.i2) if p else PhaseExpr())).depends_on(loops)]
    return {"p": ps, "decomposition": bool(ps), "theta_i0_on_loop": theta(g, c.i0).depends_on(F2)}


def motive_sequence_phase_check(g: MomentumGraph) -> bool:
    """Momentum and phase preservation for every vertex pair ``(v_{2i-1}, v_{2i})``."""
    if g.D is None:
        resolve_momenta(g)
    if g.N % 2:
        return False
    for j in range(2, g.N + 1, 2):
        up, lo = j, j - 1
        if theta(g, lo) != -theta(g, up):
            return False
        kids_up = [int(e) for e in g.children[up - 1]]
        top_up, top_lo = int(g.top_edge[up - 1]), int(g.top_edge[lo - 1])
        if top_lo in kids_up:
            p = kids_up.index(top_lo)
            bottom = kids_up[:p] + [int(e) for e in g.children[lo - 1]] + kids_up[p + 1:]
            ok = False
            for ext in range(5):
                if np.any(g.D[bottom[ext]] - g.D[top_up]):
                    continue
                if _pair_off(g, [bottom[i] for i in range(5) if i != ext]) is not None:
                    ok = True
                    break
            if not ok:
                return False
        elif np.any(g.D[top_up] + g.D[top_lo]):
            return False
    return True


# ---------------------------------------------------------------------------
# leading graphs by attachment


def motive_attachment(name: str, cluster_parities: tuple[int, int]) -> tuple[Attachment, int | None] | None:
    """Attachment that puts motive ``name`` on a pairing with leg parities ``cluster_parities``.

    Returns ``(attachment, leg_index)`` where ``leg_index`` is the position of
    the carrying leg within the pairing (``None`` for gain motives), or
    ``None`` when the parities do not admit the motive.
    """
    sigma = motive_parity(name)
    if name.startswith("L"):
        if sigma not in cluster_parities:
            return None
        side = cluster_parities.index(sigma)
        p, ext, pairs = loss_template(name)
        kids, lab = [], 0
        for pos in range(3):
            if pos == p:
                kids.append((1, (lab, lab + 1, lab + 2)))
                lab += 3
            else:
                kids.append(lab)
                lab += 1
        tree = (2, tuple(kids))
        if side == 0:
            trees, other, shift = (tree, 5), 5, 0
        else:
            trees, other, shift = (0, _relabel_tree(tree, 1)), 0, 1
        clusters = [(a + shift, b + shift) for a, b in pairs] + [tuple(sorted((ext + shift, other)))]
        return Attachment(trees, cluster_parities, tuple(clusters)), side
    if cluster_parities[0] != sigma or cluster_parities[1] != -sigma:
        return None
    pairs, lower = gain_template(name)
    lt, rt = (1, 2) if lower == "left" else (2, 1)
    trees = ((lt, (0, 1, 2)), (rt, (3, 4, 5)))
    clusters = tuple((a, 3 + b) for a, b in pairs)
    return Attachment(trees, cluster_parities, clusters), None


def _relabel_tree(node, offset: int):
    if isinstance(node, int):
        return node + offset
    return (node[0], tuple(_relabel_tree(c, offset) for c in node[1]))


def _cluster_parities(spec: GraphSpec, cid: int) -> tuple[int, ...]:
    g = build_graph(spec)
    return tuple(g.leg_parity(x) for x in spec.clusters[cid])


def attach_motive(spec: GraphSpec, cid: int, name: str) -> GraphSpec | None:
    """Attach motive ``name`` to pairing ``cid``; ``None`` if not admissible."""
    cl = spec.clusters[cid]
    if len(cl) != 2:
        return None
    res = motive_attachment(name, _cluster_parities(spec, cid))
    if res is None:
        return None
    att, side = res
    if spec.shape == "main":
        touches_aux = (0 in cl) and (name.startswith("G") or cl[side] == 0)
        if touches_aux:
            return None
    return compose(spec, cid, att)


def enumerate_leading(m: int, shape: str = "error") -> Iterator[tuple[GraphSpec, list[tuple[str, tuple[int, int], int | None]]]]:
    """Leading graphs with ``m`` motives and their attachment records.

    Each record is ``(motive, pairing, leg)`` with the pairing given by its
    leg labels in the host graph.  Motives are listed in attachment order,
    which is top-down in the final graph.
    """
    if m > LEADING_CAP:
        raise CapExceeded(f"m={m} exceeds cap {LEADING_CAP}")
    level = [(trivial_spec(shape), [])]
    for _ in range(m):
        nxt = []
        for spec, rec in level:
            for cid, cl in enumerate(spec.clusters):
                for name in MOTIVE_NAMES:
                    out = attach_motive(spec, cid, name)
                    if out is None:
                        continue
                    res = motive_attachment(name, _cluster_parities(spec, cid))
                    side = res[1]
                    leg = None if side is None else cl[side]
                    nxt.append((out, rec + [(name, tuple(cl), leg)]))
        level = nxt
    seen = set()
    for spec, rec in level:
        if spec in seen:
            raise AssertionError("leading graph produced twice")
        seen.add(spec)
        yield spec, rec


def leading_bound(N: int) -> int:
    """``4^N (N-1)!!``."""
    out = 4 ** N
    for k in range(N - 1, 0, -2):
        out *= k
    return out


def classify_population(N: int, shape: str = "error") -> Counter:
    """Tag counts over parity-admissible pairings with ``n + n' = N``."""
    tags: Counter = Counter()
    splits = [(N, 0)] if shape == "main" else [(n, N - n) for n in range(N + 1)]
    for n, n_prime in splits:
        for spec in enumerate_specs(n, n_prime, shape, parity_admissible=True):
            tags[classify(spec).tag] += 1
    return tags


def strip_bottom_motive(spec: GraphSpec) -> GraphSpec:
    """Remove the motive formed by ``v_1, v_2``; inverse of :func:`attach_motive`."""
    g = resolve_momenta(build_graph(spec))
    mot = detect_motive(g, 2)
    if mot is None:
        raise ValueError("v1, v2 do not form a motive")
    loss = mot.name.startswith("L")
    ext = loss_template(mot.name)[1] if loss else None
    removed: set[int] = set()
    fresh = [spec.n_legs]
    new_pair: list[int] = []

    def cut(node):
        if isinstance(node, int):
            return node
        if loss and node[0] == 2:
            leaves = _leaves(node)
            removed.update(x for i, x in enumerate(leaves) if i != ext)
            return leaves[ext]
        if not loss and node[0] in (1, 2):
            removed.update(_leaves(node))
            new_pair.append(fresh[0])
            fresh[0] += 1
            return new_pair[-1]
        return (node[0], tuple(cut(c) for c in node[1]))

    minus, plus = (cut(t) for t in spec_forest(spec))
    clusters = [c for c in spec.clusters if not set(c) & removed]
    if new_pair:
        clusters.append(tuple(new_pair))
    return forest_spec(_shift_times(minus, -2), _shift_times(plus, -2), clusters, spec.shape)


def _vector(F: int, coef: dict[int, int]) -> list[int]:
    v = [0] * F
    for col, x in coef.items():
        v[col] += x
    return v


def find_fig7(N: int = 4) -> list[tuple[GraphSpec, Classification]]:
    """Crossing graphs with ``i2 = 3`` whose slice-one phase has the four-term pattern.

    With free momenta ``k1, k2`` of ``v3`` and ``k1', k2'`` of ``v4`` the
    pattern reads ``omega(k2') - omega(k2) + omega(k1 + k2 - k1') - omega(k1 - k1' - k2')``.
    """
    hits = []
    for n in range(N + 1):
        for spec in enumerate_specs(n, N - n, "error", parity_admissible=True):
            g = resolve_momenta(build_graph(spec))
            if g.degrees() != [0, 0, 2, 2] or not is_fully_paired(g) or not relevance(g)[0]:
                continue
            c = classify(g)
            if c.tag != CROSSING or c.i2 != 3:
                continue
            F = g.D.shape[1]
            k1, k2 = g.free_children(3)
            k1p, k2p = g.free_children(4)
            target = PhaseExpr.from_terms([
                (1, _vector(F, {k2p: 1})),
                (-1, _vector(F, {k2: 1})),
                (1, _vector(F, {k1: 1, k2: 1, k1p: -1})),
                (-1, _vector(F, {k1: 1, k1p: -1, k2p: -1})),
            ])
            if re_gamma(g, 1) == target and target != theta(g, 3):
                hits.append((spec, c))
    return hits
