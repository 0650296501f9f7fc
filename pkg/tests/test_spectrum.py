import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leftdef.errors import AtEigenvalue, GaugeMismatch, WindowRequired, ZEqualsZero
from leftdef.operator import realize
from leftdef.propagate import wronskian_V
from leftdef.sobolev import delta_c, h1_norm, hat
from leftdef.spectrum import (
    SpectralData,
    characteristic_polynomial,
    diagonalization_residual,
    eigenvalues,
    parseval_sum,
    phi_family,
    spectral_distance,
    theta_family,
    transform,
    weyl_m,
    weyl_residue,
)

from instances import LN2, P1, P2, R1, peakon, random_atoms

PI2 = math.pi ** 2


def families(p, normalization="entire", scale=1.0):
    r = realize(p)
    phi = phi_family(r, normalization, scale)
    return r, phi, theta_family(r, phi)


def test_phi_is_the_exponential_left_of_the_atom():
    _, phi, _ = families(P1)
    for z in (0.5, -2.0 + 1.0j):
        for x in (-3.0, -0.5, 0.0):
            assert phi(z, x) == pytest.approx(math.exp(x / 2.0), rel=1e-14)


def test_phi_growth_coefficient_right_of_the_atom():
    # phi_z = A e^{x/2} + B e^{-x/2} for x > 0 with A(z) = 1 - z
    _, phi, _ = families(P1)
    for z in (0.3, 2.0, 1.0 + 1.0j):
        f, f1 = phi.state(z, 1.5)
        assert (f1 + f / 2.0) * math.exp(-0.75) == pytest.approx(1.0 - z, rel=1e-13)


def test_phi_is_a_cosine_on_the_unit_interval():
    _, phi, _ = families(R1)
    for z in (3.0, 0.2, 5.0 + 2.0j):
        k = cmath.sqrt(z - 1.0)
        for x in (0.0, 0.3, 1.0):
            assert phi(z, x) == pytest.approx(cmath.cos(k * x), rel=1e-12, abs=1e-13)


@given(zr=st.floats(-5, 5), zi=st.floats(-5, 5))
@settings(max_examples=20, deadline=None)
def test_theta_phi_modified_wronskian_is_one(zr, zi):
    z = complex(zr, zi)
    if abs(z) < 1e-3:
        return
    for p, x in ((P1, 0.7), (P2, -0.2), (R1, 0.4)):
        _, phi, theta = families(p)
        assert wronskian_V(theta.path(z), phi.path(z), x) == pytest.approx(1.0, rel=1e-10)


def test_regular_fundamental_system_at_the_left_end():
    _, phi, theta = families(R1, "weyl")
    t = math.pi / 2.0
    for z in (2.0, -1.0 + 3.0j):
        assert z * phi(z, 0.0) == pytest.approx(math.sin(t), rel=1e-14)
        assert -theta.state(z, 0.0)[1] == pytest.approx(math.sin(t), rel=1e-14)
    with pytest.raises(ZEqualsZero):
        theta.path(0.0)


@pytest.mark.parametrize("m,x0", [(1.0, 0.0), (0.5, 1.2), (-2.0, -0.7)])
def test_weyl_function_of_one_peakon(m, x0):
    r, phi, theta = families(peakon([(x0, m)]))
    for z in (-1.0, 1.0 + 2.0j, 0.25j):
        assert weyl_m(r, phi, theta, z) == pytest.approx(m * math.exp(-x0) / (1.0 - z * m), rel=1e-12)


def test_weyl_symmetry_and_herglotz():
    for p in (P1, R1):
        r, phi, theta = families(p)
        z = 1.0 + 2.0j
        assert weyl_m(r, phi, theta, z.conjugate()) == pytest.approx(np.conj(weyl_m(r, phi, theta, z)), rel=1e-13)
    r, phi, theta = families(R1, "weyl")
    assert weyl_m(r, phi, theta, 1j).imag > 0.0


def test_weyl_function_errors():
    r, phi, theta = families(P1)
    with pytest.raises(ZEqualsZero):
        weyl_m(r, phi, theta, 0.0)
    with pytest.raises(AtEigenvalue):
        weyl_m(r, phi, theta, 1.0)


@pytest.mark.parametrize("m,x0", [(1.0, 0.0), (0.4, 2.0), (-1.5, -1.0)])
def test_one_peakon_spectrum(m, x0):
    r, phi, _ = families(peakon([(x0, m)]))
    sd = eigenvalues(r, phi)
    assert sd.complete
    assert sd.eigenvalues[0] == pytest.approx(1.0 / m, rel=1e-13)
    assert sd.weights[0] == pytest.approx(math.exp(-x0), rel=1e-12)


def test_two_peakon_characteristic_polynomial():
    r, phi, _ = families(P2)
    c = characteristic_polynomial(r, phi)
    c = c / c[0]
    assert np.allclose(c, [1.0, -2.0, 0.75], rtol=1e-13)
    sd = eigenvalues(r, phi)
    assert np.allclose(sd.eigenvalues, [2.0 / 3.0, 2.0], rtol=1e-13)


def test_unit_interval_spectrum():
    r, phi, _ = families(R1)
    sd = eigenvalues(r, phi, window=(0.5, 1.0 + 5.5 ** 2 * PI2))
    lam = [1.0 + k * k * PI2 for k in range(6)]
    mu = [1.0] + [2.0 / (1.0 + k * k * PI2) for k in range(1, 6)]
    assert np.allclose(sd.eigenvalues, lam, rtol=1e-12)
    assert np.allclose(sd.weights, mu, rtol=1e-10)
    with pytest.raises(WindowRequired):
        eigenvalues(r, phi)


def test_residues():
    r, phi, theta = families(peakon([(2.0, 1.0)]))
    assert weyl_residue(r, phi, theta, 1.0) == pytest.approx(-math.exp(-2.0), rel=1e-9)
    r, phi, theta = families(P2)
    sd = eigenvalues(r, phi)
    for lam, mu in sd.pairs():
        assert weyl_residue(r, phi, theta, lam, sd.eigenvalues) == pytest.approx(-mu, rel=1e-9)


def test_transform_of_point_evaluations_and_hats():
    r, phi, _ = families(P2)
    sd = eigenvalues(r, phi)
    F = transform(r, phi, delta_c(P2, LN2))
    for lam in sd.eigenvalues:
        assert F(lam) == pytest.approx(phi(lam, LN2), rel=1e-14)
    # partial isometry: contraction off the initial subspace
    r, phi, _ = families(P1)
    sd = eigenvalues(r, phi)
    h = hat(P1, -1.0, -0.4, 0.0)
    G = transform(r, phi, h)
    lhs = sum(abs(G(lam)) ** 2 * mu for lam, mu in sd.pairs())
    assert lhs <= h1_norm(P1, h) ** 2 * (1.0 + 1e-12)


def test_gauge_rescaling_divides_weights():
    r = realize(P2)
    sd1 = eigenvalues(r, phi_family(r))
    sd2 = eigenvalues(r, phi_family(r, scale=2.0))
    assert np.allclose(sd2.eigenvalues, sd1.eigenvalues, rtol=1e-13)
    assert np.allclose(np.array(sd2.weights) * 4.0, sd1.weights, rtol=1e-12)
    with pytest.raises(GaugeMismatch):
        spectral_distance(sd1, sd2)


def test_unit_interval_partial_parseval_matches_cosine_series():
    # the first n modes against sum_{k<n} cos^2(k pi c) mu_k in closed form
    r, phi, _ = families(R1)
    sd = eigenvalues(r, phi, window=(0.5, 1.0 + 39.5 ** 2 * PI2))
    assert len(sd) == 40
    for c in (0.25, 0.5, 0.8):
        closed = 1.0 + sum(2.0 * math.cos(k * math.pi * c) ** 2 / (1.0 + k * k * PI2) for k in range(1, 40))
        assert parseval_sum(phi, sd, c) == pytest.approx(closed, rel=1e-10)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_diagonalization_of_random_peakons(seed):
    rng = np.random.default_rng(seed)
    p = peakon(random_atoms(rng, int(rng.integers(1, 5))))
    r, phi, _ = families(p)
    sd = eigenvalues(r, phi)
    assert diagonalization_residual(r, phi, sd) < 1e-9


@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_positive_peakons_have_simple_positive_spectrum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    r, phi, _ = families(peakon(random_atoms(rng, n, signed=False)))
    lams = np.array(eigenvalues(r, phi).eigenvalues)
    assert len(lams) == n and np.all(lams > 0.0)
    assert np.all(np.diff(lams) > 1e-8 * np.abs(lams[1:]))


def test_spectral_data_record_roundtrip():
    r, phi, _ = families(P2)
    sd = eigenvalues(r, phi)
    again = SpectralData.from_dict(sd.to_dict())
    assert again == sd
    assert spectral_distance(sd, again) == 0.0


def test_neumann_right_end_leaves_no_spurious_degree():
    # one rho atom and a z-linear left anchor: degree two, both roots real
    from leftdef.coeffs import BoundaryCondition, Interval, MeasureCoeff
    from instances import neumann_problem

    iv = Interval(0.0, 2.0)
    p = neumann_problem(MeasureCoeff.atomic(iv, [(1.0, 1.0)]), interval=iv, bc_a=BoundaryCondition.regular(1.0))
    r, phi, _ = families(p)
    assert len(characteristic_polynomial(r, phi)) == 3
    assert len(eigenvalues(r, phi).eigenvalues) == 2
