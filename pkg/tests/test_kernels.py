import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermi_kinetics.kernels import (
    bessel_factor,
    bessel_factor_exact,
    crossing_check,
    dispersivity_report,
    fcr,
    fcr_integral,
    fcr_integral_exact,
    interference_bound,
    interference_integral,
    interference_report,
    kernel_K,
    kernel_l3,
    lp_norm,
    osc_delta,
    osc_delta_report,
    propagator,
    propagator_l3_cubed,
    resolvent_loop,
    resolvent_report,
)
from fermi_kinetics.lattice import LatticeModel, ModelConfig, japanese

from .oracles import bessel_j


def model(dim, **kw):
    return LatticeModel(ModelConfig(dim=dim, **kw))


# propagator


def test_propagator_at_time_zero_is_delta():
    for d in (1, 2, 3):
        p = propagator(model(d), 0.0, box=3)
        ref = np.zeros((7,) * d)
        ref[(3,) * d] = 1.0
        assert np.allclose(p.values, ref, atol=1e-15)


@pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
def test_propagator_matches_bessel(t):
    p = propagator(model(1), t)
    for x in range(9):
        assert abs(abs(p.at((x,))) - abs(bessel_j(x, t))) < 1e-8
        assert abs(abs(p.at((-x,))) - abs(bessel_j(x, t))) < 1e-8


@given(st.floats(0, 30), st.sampled_from([1, 2, 3]), st.floats(0, 0.5))
@settings(max_examples=25, deadline=None)
def test_propagator_parseval(t, d, lam):
    p = propagator(model(d, L=8, lam=lam, c_tilde=0.3), t)
    assert abs(1.0 - p.mass) < 1e-6
    assert lp_norm(p, 2) == pytest.approx(1.0, abs=1e-6)
    assert p.flags["truncation"] == pytest.approx(1.0 - p.mass)


@given(st.floats(0, 8))
@settings(max_examples=15, deadline=None)
def test_propagator_factorizes(t):
    p1 = propagator(model(1), t, box=12).values
    p2 = propagator(model(2), t, box=12).values
    assert np.max(np.abs(p2 - np.multiply.outer(p1, p1))) < 1e-10


@given(st.floats(0, 6))
@settings(max_examples=10, deadline=None)
def test_separable_and_dft_paths_agree(t):
    m = model(2)
    a = propagator(m, t, box=10, method="separable").values
    b = propagator(m, t, box=10, method="dft").values
    assert np.max(np.abs(a - b)) < 1e-10


def test_bessel_factor_closed_form():
    for z in (0.3, 2.5 + 1j, -4j, 7.0):
        assert np.max(np.abs(bessel_factor(z, 256, 10) - bessel_factor_exact(z, 10))) < 1e-12


def test_lp_norms_trivial():
    assert lp_norm(propagator(model(2), 3.0), 2) == pytest.approx(1.0, abs=1e-6)
    assert lp_norm(propagator(model(2), 0.0), 3) == pytest.approx(1.0, abs=1e-15)


def test_l3_closed_form_matches_table():
    m = model(2)
    for t in (0.0, 2.0, 9.0):
        direct = lp_norm(propagator(m, t), 3) ** 3
        assert propagator_l3_cubed(m, t) == pytest.approx(direct, rel=1e-9)


# crossing kernel


def test_kernel_degenerates_to_propagator():
    m = model(2)
    for t in (0.5, 4.0):
        a = kernel_K(m, t, 0.0, 0.0, (0.3, 0.1), (0.2, 0.7), box=8).values
        b = propagator(m, t, box=8).values
        assert np.max(np.abs(a - b)) < 1e-14


def test_kernel_cancelling_times_is_delta():
    t = 3.7
    K = kernel_K(model(1), t, -t, 0.0, 0.0, 0.0, box=5)
    ref = np.zeros(11)
    ref[5] = 1.0
    assert np.max(np.abs(K.values - ref)) < 1e-14


@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(-6, 6),
       st.tuples(st.floats(0, 1), st.floats(0, 1)), st.tuples(st.floats(0, 1), st.floats(0, 1)))
@settings(max_examples=20, deadline=None)
def test_kernel_parseval_and_dft_crosscheck(t0, t1, t2, u1, u2):
    m = model(2)
    K = kernel_K(m, t0, t1, t2, u1, u2)
    assert abs(1.0 - K.mass) < 1e-6
    D = kernel_K(m, t0, t1, t2, u1, u2, box=K.box, method="dft")
    assert np.max(np.abs(K.values - D.values)) < 1e-9


@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=10, deadline=None)
def test_kernel_l3_matches_table(t0, t1, u1, u2):
    m = model(2)
    K = kernel_K(m, t0, t1, 0.5, (u1, u2), (u2, u1))
    assert kernel_l3(m, t0, t1, 0.5, (u1, u2), (u2, u1)) == pytest.approx(lp_norm(K, 3), rel=1e-3)


def test_kernel_l3_bound_on_sweep():
    m = model(2)
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(300):
        t0, t1, t2 = rng.uniform(-40, 40, 3)
        u1, u2 = rng.random(2), rng.random(2)
        r = np.abs(t0 + t1 * np.exp(2j * np.pi * u1) + t2 * np.exp(2j * np.pi * u2))
        target = np.prod([japanese(x) ** (-1 / 7) for x in r])
        ratios.append(float(kernel_l3(m, t0, t1, t2, u1, u2)) / target)
    assert max(ratios) < 2.0


# constructive interference


def test_interference_at_time_zero():
    assert interference_integral(model(2), 0.0, (0.3, 0.1), 1) == pytest.approx(1.0, abs=1e-14)


@given(st.floats(0, 50))
@settings(max_examples=20, deadline=None)
def test_interference_opposite_parity_at_origin(t):
    assert interference_integral(model(2), t, (0.0, 0.0), -1) == pytest.approx(1.0, abs=1e-12)


def test_interference_bound_quarter_point():
    rep = interference_report(model(2), [(0.25, 0.25)], 1)
    assert rep.passed
    assert math.isfinite(rep.fitted_constant)


def test_interference_singular_point_skips_bound():
    v, info = interference_bound(model(2), 5.0, (0.0, 0.3), 1)
    assert info["dist"] == 0.0 and info["ratio"] is None and not info["bound_checked"]
    assert 0 <= v <= 1


def test_interference_refinement_converges():
    _, info = interference_bound(model(2), 20.0, (0.1, 0.35), 1)
    assert info["converged"]


# F_cr


def test_fcr_values():
    assert fcr((0.25, 0.25)) == pytest.approx(1.0)
    assert fcr((0.25, 0.75, 0.25), C=2.5) == pytest.approx(2.5)
    assert fcr((0.0, 0.3)) == math.inf
    assert fcr((0.3, 0.5)) == math.inf


def test_fcr_integral_finite():
    for d in (1, 2, 3):
        exact = fcr_integral_exact(d)
        assert math.isfinite(exact)
        assert fcr_integral(d) == pytest.approx(exact, rel=1e-4)


# crossing bounds


def test_crossing_quarter_point_d3():
    rep = crossing_check(model(3), 1, (1, 1, 1), [(0.25,) * 3] * 3, 0.5)
    assert rep.passed and not rep.extra["inconclusive"]
    assert math.isfinite(rep.fitted_constant)
    # the same integral at half resolution
    assert rep.extra["body_half_resolution"] == pytest.approx(rep.extra["body"], rel=0.02)


def test_crossing_second_kind_generic():
    rep = crossing_check(model(3), 2, (1, -1, 1), [(0.1, 0.2, 0.3), (0.3, 0.15, 0.4), (0.2, 0.1, 0.1)], 1.0)
    assert rep.passed and math.isfinite(rep.fitted_constant)
    assert rep.measured[0] <= rep.fitted_constant * rep.target[0] * (1 + 1e-12)


def test_crossing_singular_shift_passes_trivially():
    rep = crossing_check(model(3), 1, (1, 1, 1), [(0.0, 0.25, 0.25)] * 3, 0.5, nodes=81)
    assert rep.target[0] == math.inf
    assert rep.passed


def test_crossing_rejects_bad_zeta():
    with pytest.raises(ValueError):
        crossing_check(model(3), 1, (1, 1, 1), [(0.25,) * 3] * 3, 1.5)


# loop integrals


def test_degree_two_loop_below_one_at_unit_beta():
    assert resolvent_loop(model(2), 2, (0.3, 0.1), 0.0, 1.0, 1, 1) <= 1.0


def test_degree_two_loop_log_growth():
    rep = resolvent_report(model(2), 2, (0.3, 0.1), [1.0, 1e-1, 1e-2, 1e-3, 1e-4])
    assert math.isfinite(rep.fitted_constant)
    assert rep.fitted_constant < 1.0


def test_degree_one_loop_two_resolutions():
    a = resolvent_loop(model(2), 1, (0.3, 0.2), 0.0, 0.1, 1, 1, M=256)
    b = resolvent_loop(model(2), 1, (0.3, 0.2), 0.0, 0.1, 1, 1, M=512)
    assert a == pytest.approx(b, rel=1e-2)


def test_loop_rejects_zero_beta():
    with pytest.raises(ValueError):
        resolvent_loop(model(2), 1, (0.3, 0.2), 0.0, 0.0, 1, 1)


# oscillatory delta


def test_osc_delta_time_zero():
    assert osc_delta(model(3), [(0, 0, 0, 1.0)], (0.1, 0.2, 0.3), 1, 1, 0.0) == pytest.approx(1.0)
    assert osc_delta(model(3), [(0, 0, 0, 1.0)], (0.0, 0.0, 0.0), -1, -1, 0.0) == pytest.approx(1.0)


def test_osc_delta_decay_d3():
    rep = osc_delta_report(model(3), (0.1, 0.2, 0.3))
    assert rep.passed and math.isfinite(rep.fitted_constant)


@given(st.floats(0, 4), st.sampled_from([1, -1]), st.sampled_from([1, -1]), st.floats(0, 1))
@settings(max_examples=15, deadline=None)
def test_osc_delta_against_direct_quadrature(s, sigma, sigma_p, k0):
    # d = 1 brute force on a midpoint grid with a modulated weight
    m = model(1)
    modes = [(1, 0, -1, 0.5), (0, 2, 0, 0.25)]
    M = 256
    k = (np.arange(M) + 0.5) / M
    K, Kp = np.meshgrid(k, k, indexing="ij")
    K3 = k0 - K - Kp
    om = lambda x: -np.cos(2 * np.pi * x)
    f = 0.5 * np.exp(2j * np.pi * (K - K3)) + 0.25 * np.exp(2j * np.pi * 2 * Kp)
    ref = np.mean(np.exp(1j * s * (om(K) + sigma_p * om(Kp) + sigma * om(K3))) * f)
    assert osc_delta(m, modes, (k0,), sigma, sigma_p, s) == pytest.approx(ref, abs=1e-10)
