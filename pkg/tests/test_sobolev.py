import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leftdef.coeffs import MeasureCoeff, Problem
from leftdef.errors import EndpointNotFinite
from leftdef.operator import realize
from leftdef.propagate import solve_ivp
from leftdef.sobolev import delta_a, delta_c, ground_solutions, h1_inner, h1_norm, solution_element
from leftdef.spectrum import phi_family

from instances import LINE, P1, R1, peakon, random_atoms

SH1, CH1 = math.sinh(1.0), math.cosh(1.0)


def test_ground_solutions_of_the_single_peakon():
    gs = ground_solutions(P1)
    xs = np.linspace(-3.0, 3.0, 7)
    wa, _, wb, _ = gs.values(xs)
    assert np.allclose(wa, np.exp(xs / 2.0), rtol=1e-13)
    assert np.allclose(wb, np.exp(-xs / 2.0), rtol=1e-13)
    assert gs.W_ba == pytest.approx(1.0, rel=1e-14)


def test_ground_solutions_scale_with_chi():
    p = Problem(LINE, P1.rho, P1.sigma, MeasureCoeff.constant(LINE, 1.0), P1.bc_a, P1.bc_b)
    gs = ground_solutions(p)
    wa, _, wb, _ = gs.values([0.7])
    assert wa[0] * wb[0] == pytest.approx(1.0, rel=1e-13)
    assert wa[0] == pytest.approx(math.exp(0.7), rel=1e-13)
    assert gs.W_ba == pytest.approx(2.0, rel=1e-13)


def test_ground_solutions_on_the_unit_interval():
    gs = ground_solutions(R1)
    xs = np.linspace(0.0, 1.0, 6)
    wa, _, wb, _ = gs.values(xs)
    assert np.allclose(wa / wa[0], np.cosh(xs), rtol=1e-13)
    assert np.allclose(wb / wb[-1], np.cosh(1.0 - xs), rtol=1e-13)


def test_ground_monotone_products():
    for p, xs in ((P1, np.linspace(-5, 5, 41)), (R1, np.linspace(0.01, 0.99, 41))):
        wa, wa1, wb, wb1 = ground_solutions(p).values(xs)
        pa, pb = wa * wa1, wb * wb1
        assert np.all(np.diff(pa) >= -1e-14) and np.all(np.diff(pb) >= -1e-14)
        assert np.all(pa >= 0.0) and np.all(pb <= 0.0)


def test_point_evaluation_norm_is_one_for_peakons():
    for c in (-2.0, 0.0, 1.3):
        d = delta_c(P1, c)
        assert h1_norm(P1, d) ** 2 == pytest.approx(1.0, rel=1e-12)
        assert ground_solutions(P1).delta_norm2(c) == pytest.approx(1.0, rel=1e-13)


def test_point_evaluation_reproduces_cosh():
    u = solution_element(solve_ivp(R1, 0.0, 0.0, 1.0, 0.0))
    assert h1_inner(R1, u, delta_c(R1, 0.5)).real == pytest.approx(math.cosh(0.5), rel=1e-10)


def test_endpoint_evaluation():
    da = delta_a(R1)
    assert np.allclose(da(np.array([0.0, 0.4, 1.0])).real, np.cosh(1.0 - np.array([0.0, 0.4, 1.0])) / SH1)
    u = solution_element(solve_ivp(R1, 0.0, 0.0, 1.0, 0.0))
    assert h1_inner(R1, u, da).real == pytest.approx(1.0, rel=1e-10)
    assert h1_norm(R1, da) ** 2 == pytest.approx(CH1 / SH1, rel=1e-12)
    with pytest.raises(EndpointNotFinite):
        delta_a(P1)


def test_eigenfunction_norms():
    # ||phi_1||^2 = 1 for the unit peakon at 0; ||cos(k pi x)||^2 = 1/2 + k^2 pi^2 / 2
    phi = phi_family(realize(P1))
    el = solution_element(phi.path(1.0))
    assert h1_norm(P1, el) ** 2 == pytest.approx(1.0, rel=1e-12)
    phi = phi_family(realize(R1))
    for k in (1, 2, 5):
        lam = 1.0 + (k * math.pi) ** 2
        el = solution_element(phi.path(lam))
        assert h1_norm(R1, el) ** 2 == pytest.approx(0.5 + (k * math.pi) ** 2 / 2.0, rel=1e-10)


@given(c=st.floats(0.05, 0.95), d=st.floats(0.05, 0.95))
@settings(max_examples=30, deadline=None)
def test_reproducing_symmetry(c, d):
    dc, dd = delta_c(R1, c), delta_c(R1, d)
    val = h1_inner(R1, dc, dd)
    assert val.real == pytest.approx(dc(d)[0].real, rel=1e-10)
    assert val.real == pytest.approx(dd(c)[0].real, rel=1e-10)


@given(seed=st.integers(0, 10_000), c=st.floats(-2.5, 2.5))
@settings(max_examples=30, deadline=None)
def test_reproducing_property_for_glued_solutions(seed, c):
    # phi_z on (-inf, c] continued by a multiple of w_b: a continuous H^1 element
    rng = np.random.default_rng(seed)
    p = peakon(random_atoms(rng, int(rng.integers(1, 4))))
    path = phi_family(realize(p)).path(float(rng.normal()))
    wb = ground_solutions(p).w_b
    left = solution_element(path, hi=c)
    right = complex(path(c)[0] / wb(c)[0]) * solution_element(wb, lo=c)
    f = left + right
    val = h1_inner(p, f, delta_c(p, c))
    assert abs(val - path(c)[0]) < 1e-9 * max(1.0, h1_norm(p, f))


def test_inner_product_is_hermitian():
    phi = phi_family(realize(R1))
    f = solution_element(phi.path(2.0 + 1.0j))
    g = solution_element(phi.path(-1.0 + 0.5j))
    assert h1_inner(R1, f, g) == pytest.approx(np.conj(h1_inner(R1, g, f)), rel=1e-12)
    assert h1_inner(R1, f, f).imag == pytest.approx(0.0, abs=1e-12 * abs(h1_inner(R1, f, f)))
