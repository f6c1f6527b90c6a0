import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermi_kinetics.graphs import (
    Attachment,
    CapExceeded,
    GraphSpec,
    build_graph,
    cluster_sign,
    compose,
    connectivity,
    count_even_partitions,
    double_factorial,
    enumerate_specs,
    even_partitions,
    from_one_based,
    interlacings,
    is_fully_paired,
    pairings,
    relevance,
    resolved,
    trivial_spec,
    vertex_degrees,
)

from .oracles import cluster_sign_cycles, crossing_count, pair_dependence, propagate_momenta

FIG_L1 = GraphSpec(2, 0, (1, 1), (), (), ((0, 3), (1, 4), (2, 5)), "main")
FIG_4 = GraphSpec(2, 2, (1, 1), (1, 1), (1, -1, 1, -1), from_one_based([[1, 5], [2, 9], [3, 4, 7, 8], [6, 10]]))


def small_population(max_N=2):
    for N in range(max_N + 1):
        for n in range(N + 1):
            yield from enumerate_specs(n, N - n)


# enumeration


def test_single_interaction_main_shape_pairings():
    specs = list(enumerate_specs(1, 0, "main", pairings_only=True))
    assert len(specs) == 3
    assert {s.clusters for s in specs} == {((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))}


def test_two_interlacings():
    assert sorted(interlacings(1, 1)) == [(-1, 1), (1, -1)]


@pytest.mark.parametrize("n", range(5))
def test_pairing_count(n):
    assert sum(1 for _ in pairings(range(2 * n + 2))) == double_factorial(2 * n + 1)


@pytest.mark.parametrize("m", range(0, 11, 2))
def test_even_partition_count(m):
    assert sum(1 for _ in even_partitions(range(m))) == count_even_partitions(m)


def test_enumeration_is_unique_and_ordered():
    a = [s.to_dict() for s in enumerate_specs(1, 1)]
    b = [s.to_dict() for s in enumerate_specs(1, 1)]
    assert a == b
    assert len({repr(x) for x in a}) == len(a) == 2 * count_even_partitions(6)


def test_cap_refusal_reports_estimate():
    with pytest.raises(CapExceeded, match="population"):
        next(enumerate_specs(3, 2))
    with pytest.raises(CapExceeded):
        next(enumerate_specs(4, 3, pairings_only=True))


def test_main_shape_needs_single_tree():
    with pytest.raises(ValueError):
        next(enumerate_specs(1, 1, "main"))


def test_spec_validation():
    with pytest.raises(ValueError):
        GraphSpec(1, 0, (4,), (), (), ((0, 1), (2, 3)))
    with pytest.raises(ValueError):
        GraphSpec(1, 0, (1,), (), (), ((0, 1), (2,)))
    with pytest.raises(ValueError):
        GraphSpec(1, 1, (1,), (1,), (), ((0, 1), (2, 3), (4, 5)))


def test_spec_dict_roundtrip():
    assert GraphSpec.from_dict(FIG_4.to_dict()) == FIG_4


# construction


def test_trivial_graph_single_free_edge():
    g = resolved(trivial_spec())
    assert int(g.free.sum()) == 1
    assert g.N == 0


def test_fig_l1_graph():
    g = resolved(FIG_L1)
    assert int(g.free.sum()) == 3
    assert g.degrees() == [0, 2]
    # the fused edge at time one carries the sum of its three children
    assert np.array_equal(g.D[g.top_edge[0]], g.D[g.children[0]].sum(axis=0))
    assert propagate_momenta(g, np.random.default_rng(0))


def test_fig4_free_count():
    g = resolved(FIG_4)
    assert int(g.free.sum()) == 2 * 4 + 2 - 4 == 6


def test_parities_at_fusion():
    g = build_graph(FIG_4)
    for j in range(1, g.N + 1):
        top = g.parity[g.top_edge[j - 1]]
        assert list(g.parity[g.children[j - 1]]) == [-1, top, 1]


def test_root_and_free_dependency_vectors():
    for spec in small_population():
        g = resolved(spec)
        assert not g.D[0].any()
        F = len(g.free_edges)
        assert np.array_equal(g.D[g.free_edges], np.eye(F, dtype=g.D.dtype))
        assert np.all(np.abs(g.D) <= 1)


def test_free_count_degrees_and_propagation():
    rng = np.random.default_rng(1)
    for spec in small_population():
        g = resolved(spec)
        assert int(g.free.sum()) == spec.n_legs - len(spec.clusters)
        assert set(g.degrees()) <= {0, 1, 2}
        assert propagate_momenta(g, rng)


def test_propagation_sampled_three_interactions():
    rng = np.random.default_rng(2)
    specs = [s for n in range(4) for s in enumerate_specs(n, 3 - n)]
    for spec in random.Random(3).sample(specs, 300):
        assert propagate_momenta(resolved(spec), rng)


def test_cluster_counts_lemmas():
    for spec in small_population():
        c = vertex_degrees(resolved(spec))
        assert all(c.lemma_checks().values())
        assert (c.r == 0) == spec.is_pairing


def test_fully_paired_degree_sequence():
    seen = 0
    for n in range(1, 4):
        for spec in enumerate_specs(n, 0, "main", pairings_only=True):
            g = resolved(spec)
            if is_fully_paired(g):
                d = g.degrees()
                assert d[0] == 0 and d[-1] == 2
                seen += 1
    assert seen > 0


def test_pair_dependence_both_directions():
    rng = np.random.default_rng(4)
    for spec in (FIG_L1, FIG_4, *random.Random(5).sample(list(small_population()), 40)):
        g = resolved(spec)
        emp = pair_dependence(g, rng)
        for (a, b), (eq, neg) in emp.items():
            assert eq == np.array_equal(g.D[a], g.D[b])
            assert neg == np.array_equal(g.D[a], -g.D[b])


def test_degree_two_seven_forms():
    allowed = {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)}
    for spec in small_population():
        g = resolved(spec)
        for j in range(1, g.N + 1):
            if g.degree(j) == 2:
                f, fp = g.free_children(j)
                assert {(int(r[f]), int(r[fp])) for r in g.D} <= allowed


# cluster signs


def test_cluster_sign_examples():
    assert cluster_sign(((1, 2), (3, 4))) == 1
    assert cluster_sign(from_one_based([[1, 4], [2, 5, 6, 7], [3, 8]])) == -1
    assert cluster_sign(FIG_L1.clusters) == -1
    assert crossing_count(FIG_L1.clusters) == 3


def test_cluster_sign_rejects_odd():
    with pytest.raises(ValueError):
        cluster_sign(((0, 1, 2), (3,)))


@given(st.integers(1, 5), st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_pairing_sign_is_crossing_parity(k, rnd):
    legs = list(range(2 * k))
    rnd.shuffle(legs)
    S = [tuple(sorted(legs[i:i + 2])) for i in range(0, 2 * k, 2)]
    assert cluster_sign(S) == (-1) ** crossing_count(S) == cluster_sign_cycles(S)


@given(st.integers(2, 10).map(lambda m: 2 * (m // 2)), st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_sign_independent_of_cluster_order(m, rnd):
    parts = list(even_partitions(range(m)))
    S = list(rnd.choice(parts))
    ref = cluster_sign(S)
    assert ref == cluster_sign_cycles(S)
    rnd.shuffle(S)
    assert cluster_sign(S) == ref


# composition


def _pair_slots(spec):
    g = build_graph(spec)
    return [i for i, c in enumerate(spec.clusters)
            if len(c) == 2 and (g.leg_parity(c[0]), g.leg_parity(c[1])) == (-1, 1)]


def test_attach_trivial_loop():
    host = FIG_L1
    out = compose(host, 0, Attachment.from_spec(trivial_spec("error")))
    assert out.N == host.N and out.ell == host.ell
    assert cluster_sign(out.clusters) == cluster_sign(host.clusters)
    assert len(out.clusters) == len(host.clusters)


def test_compose_l1_onto_trivial():
    motive = Attachment.from_spec(GraphSpec(2, 0, (1, 1), (), (), ((0, 3), (1, 4), (2, 5)), "error"))
    out = compose(trivial_spec(), 0, motive)
    assert out.ell == FIG_L1.ell and sorted(out.clusters) == sorted(FIG_L1.clusters)
    assert cluster_sign(out.clusters) == cluster_sign_cycles(out.clusters) == -1 * 1


def test_sign_multiplicative_on_random_compositions():
    rnd = random.Random(6)
    hosts = [s for s in (x for N in range(4) for n in range(N + 1) for x in enumerate_specs(n, N - n))
             if all(len(c) % 2 == 0 for c in s.clusters) and _pair_slots(s)]
    atts = [s for s in small_population() if s.N > 0]
    done = 0
    while done < 100:
        host, att = rnd.choice(hosts), rnd.choice(atts)
        cid = rnd.choice(_pair_slots(host))
        out = compose(host, cid, Attachment.from_spec(att))
        assert out.N == host.N + att.N
        lhs = cluster_sign_cycles(out.clusters)
        assert lhs == cluster_sign_cycles(host.clusters) * cluster_sign_cycles(att.clusters)
        done += 1


def test_compose_rejects_mismatch():
    att = Attachment.from_spec(trivial_spec("error"))
    same = GraphSpec(1, 0, (1,), (), (), ((0, 1), (2, 3)), "main")
    assert _pair_slots(same) == []
    with pytest.raises(ValueError, match="parity"):
        compose(same, 0, att)
    with pytest.raises(ValueError):
        compose(FIG_4, 2, att)


# relevance


def test_relevance_reasons():
    odd = GraphSpec(1, 0, (1,), (), (), ((0,), (1, 2, 3)), "main")
    assert relevance(resolved(odd)) == (False, "odd_cluster")
    same = GraphSpec(1, 0, (1,), (), (), ((0, 1), (2, 3)), "main")
    assert relevance(resolved(same)) == (False, "parity")
    fused = GraphSpec(1, 0, (1,), (), (), ((0, 2), (1, 3)), "main")
    g = resolved(fused)
    kids = g.children[0]
    assert not (g.D[kids[0]] + g.D[kids[2]]).any()
    assert relevance(g) == (False, "phi1_zero")
    assert relevance(resolved(FIG_L1)) == (True, "")


def test_graph_json_schema():
    d = resolved(FIG_L1).to_dict()
    assert {"n", "n_prime", "ell", "ell_prime", "J", "clusters", "vertices", "edges", "sign", "relevant", "reason"} <= set(d)
    assert set(d["edges"][0]) == {"id", "from", "to", "parity", "free", "depvec"}
    assert d["sign"] == -1


def test_connectivity():
    g = resolved(FIG_L1)
    assert connectivity(g, [])
    # cutting the root edge isolates the root vertex
    assert not connectivity(g, [0])
    assert connectivity(g, [int(g.free_edges[0])])
