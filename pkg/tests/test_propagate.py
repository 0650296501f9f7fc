import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leftdef.errors import UnreachablePoint
from leftdef.propagate import layout_of, poly_eval, poly_transfer, solve_ivp, transfer, wronskian_V, wronskian_W
from leftdef.sobolev import ground_solutions, h1_inner, hat, integrate, solution_element
from leftdef.spectrum import phi_family
from leftdef.operator import realize

from instances import P1, R1, peakon, random_atoms, random_numeric_problem

complex_z = st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False)


def test_exponential_left_of_the_atom_for_every_z():
    e = math.exp(-2.5)
    for z in (0.0, 1.0, -3.0 + 2.0j):
        u = solve_ivp(P1, z, -5.0, e, 0.5 * e)
        xs = np.linspace(-5.0, 0.0, 7)
        assert np.allclose(u(xs), np.exp(xs / 2.0), rtol=1e-13)


def test_one_atom_jump():
    # f = e^{x/2} up to 0, f1 jumps by -z f(0) = -1, then f(1) = cosh(1/2) - sinh(1/2)
    e = math.exp(-2.5)
    u = solve_ivp(P1, 1.0, -5.0, e, 0.5 * e)
    qs = u.quasi_state(0.0)
    assert qs.f1 == pytest.approx(0.5, rel=1e-13)
    assert qs.f1_right == pytest.approx(-0.5, rel=1e-13)
    assert u(1.0)[0].real == pytest.approx(math.exp(-0.5), rel=1e-13)


def test_constant_coefficients_give_cosh():
    u = solve_ivp(R1, 0.0, 0.0, 1.0, 0.0)
    xs = np.linspace(0.0, 1.0, 9)
    assert np.allclose(u(xs).real, np.cosh(xs), rtol=1e-13)


def test_modes_agree_on_a_peakon():
    p = peakon([(-1.0, 0.7), (0.4, -1.3), (1.5, 2.0)])
    for z in (0.3, 2.0 - 1.0j):
        a = solve_ivp(p, z, -2.0, 0.8, -0.3, mode="exact")
        b = solve_ivp(p, z, -2.0, 0.8, -0.3, mode="numeric")
        xs = np.linspace(-3.0, 3.0, 13)
        assert np.allclose(a.states(xs), b.states(xs), rtol=1e-10, atol=1e-12)


def test_polynomial_degree_counts_atoms():
    rng = np.random.default_rng(5)
    atoms = random_atoms(rng, 3)
    p = peakon(atoms)
    phi = phi_family(realize(p))
    for k, (x, _) in enumerate(atoms):
        f, _ = phi.poly_state(x + 1e-3)
        assert len(f) - 1 == k + 1


def test_polynomial_transfer_matches_numeric():
    rng = np.random.default_rng(11)
    p = peakon(random_atoms(rng, 4))
    lay = layout_of(p)
    P = poly_transfer(lay, -4.0, 4.0)
    for _ in range(20):
        z = complex(*rng.normal(scale=2.0, size=2))
        T = transfer(lay, z, -4.0, 4.0, mode="numeric")
        assert np.allclose(poly_eval(P, z), T, rtol=1e-10, atol=1e-10 * np.abs(T).max())


def test_ground_wronskian_and_antisymmetry():
    gs = ground_solutions(P1)
    assert wronskian_W(gs.w_b, gs.w_a, 0.3) == pytest.approx(1.0, rel=1e-14)
    u = solve_ivp(R1, 2.0, 0.0, 1.0, 0.5)
    assert wronskian_W(u, u, 0.4) == 0.0
    assert wronskian_V(u, u, 0.4) == 0.0


def test_scaled_solution_is_dependent():
    lam = 1.0 + math.pi ** 2
    u = solve_ivp(R1, lam, 0.0, 1.0, 0.0)
    assert abs(wronskian_W(u, u.scaled(2.0), 0.7)) < 1e-13


def test_v_is_z_times_w():
    rng = np.random.default_rng(2)
    u = solve_ivp(R1, 2.0, 0.3, 1.0, -0.4)
    v = solve_ivp(R1, 2.0, 0.6, 0.2, 0.9)
    for x in rng.uniform(0.0, 1.0, 10):
        assert wronskian_V(u, v, x) == pytest.approx(2.0 * wronskian_W(u, v, x), rel=1e-12)


@given(z=complex_z, seed=st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_v_constant_along_the_interval(z, seed):
    rng = np.random.default_rng(seed)
    p = random_numeric_problem(rng)
    u = solve_ivp(p, z, p.a, *rng.normal(size=2), mode="numeric")
    v = solve_ivp(p, z, p.b, *rng.normal(size=2), mode="numeric")
    vals = [wronskian_V(u, v, x) for x in np.linspace(p.a, p.b, 9)]
    scale = max(abs(np.array(vals))) + 1e-300
    assert max(abs(np.array(vals) - vals[0])) < 1e-9 * scale


@given(seed=st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_weak_formulation_against_hats(seed):
    # for a solution f: <f, h>_energy = z int f h drho for compactly supported hats h
    rng = np.random.default_rng(seed)
    p = random_numeric_problem(rng)
    z = float(rng.normal())
    f = solve_ivp(p, z, p.a, *rng.normal(size=2), mode="numeric")
    l, m, r = np.sort(rng.uniform(p.a, p.b, 3))
    if m - l < 1e-2 or r - m < 1e-2:
        return
    h = hat(p, l, m, r)
    lhs = h1_inner(p, solution_element(f), h, conjugate=False)
    rhs = z * integrate(p, "rho", lambda x: f(x) * h(x), domain=(l, r), points=[m])
    assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(lhs))


def test_beyond_a_regular_endpoint_is_unreachable():
    with pytest.raises(UnreachablePoint):
        solve_ivp(R1, 1.0, 0.0, 1.0, 0.0).state(1.5)
