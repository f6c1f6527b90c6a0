import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermi_kinetics.classify import enumerate_leading
from fermi_kinetics.graphs import GraphSpec
from fermi_kinetics.kinetic import (
    V12_SQ,
    V12_V13,
    WField,
    admissible_motives,
    amplitude_main_pair,
    bump,
    collision_operator,
    collisional_frequency_mu,
    detailed_balance,
    g_factor,
    g_factor_direct,
    kernel_tables,
    leading_series,
    lorentzian,
    motive_kernel,
    motive_sum_generic,
    motive_sum_special,
    nu,
    nu_re_symmetrized,
    resolvent,
    richardson,
    series_target,
)
from fermi_kinetics.lattice import LatticeModel, ModelConfig

from .oracles import collision_loop, g_factor_loop, mu_loop, nu_loop

CFG = {"dim": 2, "L": 4, "T": 0.8, "c": 0.2, "c_tilde": 0.3, "alpha": [0.4, -0.2]}
points = st.lists(st.floats(0, 1), min_size=2, max_size=2)


def model(**kw):
    base = {k: (tuple(v) if isinstance(v, list) else v) for k, v in CFG.items()}
    base.update(kw)
    return LatticeModel(ModelConfig(**base))


def as_dict(table):
    return {idx: float(table[idx]) for idx in np.ndindex(table.shape)}


# collision operator


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_collision_saturated_fields(value):
    m = model(L=6)
    W = np.full(m.grid.shape, value)
    for k in ((0, 0), (1, 4), (3, 2)):
        assert collision_operator(m, W, k, 0.1) == 0.0


def test_collision_matches_loop():
    m = model()
    W = np.random.default_rng(0).random(m.grid.shape)
    for k in ((0, 0), (1, 3), (2, 1)):
        assert collision_operator(m, W, k, 0.3) == pytest.approx(collision_loop(CFG, as_dict(W), k, 0.3), abs=1e-14)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.0, 1.0]))
@settings(max_examples=20, deadline=None)
def test_collision_pauli_bounds(seed, edge):
    m = model(L=5)
    W = np.random.default_rng(seed).random(m.grid.shape)
    W[1, 2] = edge
    c = collision_operator(m, W, (1, 2), 0.2)
    assert c >= -1e-15 if edge == 0.0 else c <= 1e-15


def test_collision_equilibrium_shrinks_with_eta():
    m = model(L=16, alpha=(0.0, 0.0), c=0.3, c_tilde=0.2, T=1.0)
    W = WField.equilibrium(m).values
    for k in ((3, 7), (11, 2), (13, 5)):
        vals = [abs(collision_operator(m, W, k, eta)) for eta in (0.2, 0.1, 0.05)]
        assert vals[0] > vals[1] > vals[2]


def test_collision_rejects_nonpositive_eta():
    with pytest.raises(ValueError):
        collision_operator(model(), np.zeros((4, 4)), (0, 0), 0.0)


def test_wfield_clamps():
    w = WField(np.array([-0.5, 0.3, 1.7]))
    assert list(w.values) == [0.0, 0.3, 1.0]
    assert np.allclose(w.tilde, [1.0, 0.7, 0.0])


# collisional frequency


def test_nu_matches_loop():
    m = model()
    for k in ((0, 0), (1, 2), (3, 1)):
        v = nu(m, k, 0.2)
        ref = nu_loop(CFG, k, 0.2)
        assert abs(v.value - ref) < 1e-14
        assert collisional_frequency_mu(m, k, 0.2) == pytest.approx(mu_loop(CFG, k, 0.2), abs=1e-14)


def test_constant_potential_gives_zero():
    m = model(L=6, v_strength=0.0)
    for k in ((0, 0), (2, 5)):
        assert nu(m, k, 0.1).value == 0
        assert collisional_frequency_mu(m, k, 0.1) == 0.0


def test_mu_even_without_phases():
    m = model(L=8, alpha=(0.0, 0.0))
    for k in ((1, 2), (3, 7), (5, 0)):
        mk = tuple((-x) % 8 for x in k)
        assert collisional_frequency_mu(m, k, 0.1) == pytest.approx(collisional_frequency_mu(m, mk, 0.1), abs=1e-14)


def test_re_nu_is_pi_mu_and_symmetrized_form():
    m = model(L=8)
    for k in ((1, 2), (6, 3)):
        v = nu(m, k, 0.1)
        assert v.re == pytest.approx(math.pi * collisional_frequency_mu(m, k, 0.1), abs=1e-13)
        assert v.re == pytest.approx(nu_re_symmetrized(m, k, 0.1), abs=1e-13)


def test_re_nu_positive():
    m = model(L=16, alpha=(0.0, 0.0), c=0.0, c_tilde=0.0, T=1.0)
    for k in ((4, 0), (3, 7), (11, 2), (13, 5), (6, 9)):
        assert nu(m, k, 0.1).re > 0


def test_nu_refinement_metadata():
    v = nu(model(), (1, 2), 0.2, refine=True).to_dict()
    assert v["refinement"]["L"] == 4 and v["refinement"]["L2x"] == 8
    assert v["dispersion"] == "bare"
    assert nu(model(), (1, 2), 0.2, lam=0.1).dispersion == "renormalized"


@given(st.floats(-50, 50), st.floats(1e-3, 10))
def test_resolvent_identity(x, eta):
    r = resolvent(x, eta)
    assert r.real == pytest.approx(math.pi * lorentzian(x, eta), rel=1e-12)
    assert r.imag == pytest.approx(x / (x * x + eta * eta), rel=1e-12, abs=1e-300)


# motive table


def test_motive_rows():
    k = motive_kernel("L1", -1)
    assert (k.sign, k.coupling, k.factors) == (1, V12_SQ, (-1, None, -1, -1))
    for s in (1, -1):
        g = motive_kernel("G3" if s > 0 else "G3-", s)
        assert (g.sign, g.coupling, g.factors) == (-1, V12_SQ, (None, -s, s, s))
        l2, l4 = motive_kernel("L2", s), motive_kernel("L4", s)
        assert l2.sign == -l4.sign and l2.coupling == l4.coupling == V12_V13
        assert l2.factors != l4.factors


def test_motive_rows_phase_directions():
    assert [motive_kernel(f"G{j}", 1).phase_sign for j in range(1, 5)] == [1, -1, 1, -1]
    assert [motive_kernel(f"G{j}-", -1).phase_sign for j in range(1, 5)] == [-1, 1, -1, 1]
    assert motive_kernel("L3", 1).phase_sign == -motive_kernel("L3-", 1).phase_sign


def test_gain_needs_matching_parity():
    with pytest.raises(ValueError):
        motive_kernel("G1", -1)
    with pytest.raises(ValueError):
        motive_kernel("G2-", 1)
    with pytest.raises(ValueError):
        motive_kernel("X1", 1)


def test_admissible_counts():
    assert len(admissible_motives(1)) == len(admissible_motives(-1)) == 16
    assert admissible_motives(1, special=True) == [f"L{j}" for j in range(1, 7)]


@given(points, points, points, st.floats(0.2, 5), st.sampled_from([1, -1]))
@settings(max_examples=200, deadline=None)
def test_loss_sum_identity(k1, k2, k3, T, sigma):
    m = model(T=T)
    lhs, rhs = motive_sum_special(m, k1, k2, k3, sigma)
    assert abs(lhs - rhs) < 1e-12


@given(points, points, points, st.floats(0.2, 5))
@settings(max_examples=200, deadline=None)
def test_detailed_balance_factorization(k1, k2, k3, T):
    br, fac = detailed_balance(model(T=T), k1, k2, k3)
    assert abs(br - fac) < 1e-12


def test_loss_sum_constant_potential_and_high_temperature():
    k = np.random.default_rng(5).random((3, 20, 2))
    lhs, rhs = motive_sum_special(model(v_strength=0.0), *k)
    assert np.allclose(lhs, rhs, atol=1e-14)
    m = model(T=1e12)
    lhs, rhs = motive_sum_special(m, *k)
    v12 = m.vhat(k[0] + k[1])
    v13 = m.vhat(k[0] + k[2])
    assert np.allclose(rhs, -0.5 * v12 * (v12 - v13) * 0.25, atol=1e-12)
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("sigma", [1, -1])
def test_generic_sum_closed_form(sigma):
    m = model(L=7)
    for k0 in ((1, 2), (3, 5)):
        vals = []
        for eta in (0.2, 0.1, 0.05):
            out = motive_sum_generic(m, k0, sigma, eta)
            assert abs(out["table_total"] - out["closed_form"]) < 1e-14
            vals.append(abs(out["closed_form"]))
        assert vals[0] > vals[1] > vals[2]


def test_generic_sum_vanishes_at_half_filling():
    out = motive_sum_generic(model(L=6, T=1e12), (1, 2), 1, 0.1)
    assert abs(out["table_total"]) < 1e-15 and abs(out["closed_form"]) < 1e-15


# G-factor


@pytest.mark.parametrize("coupling", [V12_SQ, V12_V13])
def test_g_factor_matches_direct_and_loop(coupling):
    m = model()
    rng = np.random.default_rng(7)
    f = [rng.random((4, 4)) + 1j * rng.random((4, 4)) for _ in range(4)]
    tau = (1, -1, 1, 1)
    G = g_factor(m, 1.3, tau, f, coupling, -1)
    assert np.max(np.abs(G - g_factor_direct(m, 1.3, tau, f, coupling, -1))) < 1e-13
    fd = [{idx: complex(x[idx]) for idx in np.ndindex(x.shape)} for x in f]
    for k0 in ((0, 0), (2, 3)):
        assert abs(G[k0] - g_factor_loop(CFG, 1.3, tau, fd, coupling, -1, k0)) < 1e-13


def test_g_factor_at_zero_time_is_potential_norm():
    m = model(L=8)
    ones = [np.ones((8, 8))] * 4
    G = g_factor(m, 0.0, (1, 1, 1, 1), ones)
    norm2 = m.grid.integrate(np.abs(m.table(m.vhat)) ** 2)
    assert np.allclose(G, norm2, atol=1e-13)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 10))
@settings(max_examples=20, deadline=None)
def test_g_factor_bound(seed, s):
    m = model(L=6)
    rng = np.random.default_rng(seed)
    f = [rng.standard_normal((6, 6)) for _ in range(4)]
    G = g_factor(m, s, (1, -1, 1, 1), f)
    vmax = m.interaction.sup_norm(2)
    norms = [m.grid.integrate(np.abs(x) ** 1.5) ** (2 / 3) for x in f[1:]]
    assert np.all(np.abs(G) <= np.abs(f[0]) * vmax ** 2 * np.prod(norms) * (1 + 1e-12))


def test_kernel_tables_follow_factors():
    m = model()
    kern = motive_kernel("L3", 1)
    t = kernel_tables(kern, m)
    w = m.table(m.w0)
    assert np.allclose(t[0], 1 - w) and np.allclose(t[1], w) and np.allclose(t[2], 1 - w)
    assert np.allclose(t[3], 1)


# leading series and amplitudes


def test_series_at_time_zero():
    s = leading_series(0.3, 0.2 - 0.1j, 0.0, 5)
    assert all(x == 0.3 for x in s.partial_sums)
    assert s.closed_form == 0.3


@given(st.floats(0.01, 0.99), st.floats(0.01, 2), st.floats(-2, 2), st.floats(0, 5))
def test_series_converges_within_remainder(w0, nu1, nu2, t):
    s = leading_series(w0, complex(nu1, nu2), t, 40)
    assert abs(s.partial_sums[-1] - s.closed_form) <= s.remainder_bound + 1e-12
    assert abs(s.closed_form) <= w0 + 1e-15


def test_series_rejects_negative_time():
    with pytest.raises(ValueError):
        leading_series(0.5, 0.1, -1.0, 3)


def test_amplitude_trivial_graph_exact():
    m = model(L=8)
    f = bump(m, 0.4)
    a = amplitude_main_pair(m, GraphSpec(0, 0, (), (), (), ((0, 1),), "main"), 1.0, 0.1, 0.3, f)
    assert a.value == pytest.approx(m.grid.integrate(f * f * m.table(m.w0)), abs=1e-15)


def test_six_loss_amplitudes_at_zero_coupling_equal_series_term():
    # the change of variables behind this identity needs an even potential
    m = model(L=6, alpha=(0.0, 0.0))
    f = bump(m, 0.45, center=(0.2, 0.1))
    total = sum(amplitude_main_pair(m, s, 0.5, 0.0, 0.5, f).value for s, _ in enumerate_leading(1, "main"))
    assert abs(total - series_target(m, f, f, 0.5, 0.5)) < 1e-15


def test_amplitude_power_bound_one_motive():
    # |A| <= c0 t with c0 from |V|_inf^2 and the damped time integral 1/eta
    m = model(L=6)
    f = bump(m, 0.45)
    vmax = m.interaction.sup_norm(2)
    for spec, _ in enumerate_leading(1, "main"):
        a = amplitude_main_pair(m, spec, 0.5, 0.1, 0.5, f)
        assert abs(a.value) <= vmax ** 2 * (0.5 / 0.5) * m.grid.integrate(f * f)


def test_richardson_recovers_quadratic():
    lams = [0.1, 0.05, 0.025]
    vals = [1 + 2j + 3 * x - 4 * x * x for x in lams]
    assert richardson(lams, vals) == pytest.approx(1 + 2j, abs=1e-12)
