import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leftdef.coeffs import BoundaryCondition, EndpointClass, MeasureCoeff, Segment
from leftdef.errors import AtEigenvalue, Unsupported, ZeroEigenvalue, ZExcluded
from leftdef.operator import assert_zero_not_eigenvalue, green_eval, green_function, realize
from leftdef.propagate import wronskian_V
from leftdef.sobolev import ground_solutions

from instances import P1, R1, neumann_problem

PI2 = math.pi ** 2


def r1_expansion(z, x, y, modes=200):
    # lambda_k = 1 + k^2 pi^2, mu_0 = 1, mu_k = 2 / (1 + k^2 pi^2), phi_k = cos(k pi x)
    total = 1.0 / (1.0 - z)
    for k in range(1, modes):
        lam = 1.0 + k * k * PI2
        total += math.cos(k * math.pi * x) * math.cos(k * math.pi * y) * (2.0 / lam) / (lam - z)
    return total


def test_realizations():
    r = realize(P1)
    assert (r.left, r.right) == (EndpointClass.LIMIT_POINT, EndpointClass.LIMIT_POINT)
    assert r.deficiency_index == 0
    assert assert_zero_not_eigenvalue(r)
    r = realize(R1)
    assert r.deficiency_index == 2 and assert_zero_not_eigenvalue(r)


def test_dirichlet_at_a_regular_end_makes_zero_an_eigenvalue():
    with pytest.raises(ZeroEigenvalue):
        realize(R1.with_bcs(bc_a=BoundaryCondition.regular(0.0)))


def test_limit_circle_non_regular_end_is_unsupported():
    # rho ~ x^-1.2 near 0: infinite there but its primitive is square integrable
    rho = MeasureCoeff((Segment(0.0, 1.0, 1.0, -1.2),))
    p = neumann_problem(rho, bc_a=BoundaryCondition.limit_point())
    with pytest.raises(Unsupported):
        realize(p)


def test_green_single_peakon():
    # eigen-expansion with the single pair (1, 1): 1 / (1 - z)
    r = realize(P1)
    assert green_function(r, -1.0, 0.0, 0.0) == pytest.approx(0.5, rel=1e-13)
    assert green_function(r, 2.0 + 1.0j, 0.0, 0.0) == pytest.approx(1.0 / (1.0 - (2.0 + 1.0j)), rel=1e-13)


def test_green_unit_interval_against_cosine_series():
    r = realize(R1)
    for x, y in ((0.2, 0.7), (0.5, 0.5), (0.9, 0.1)):
        assert green_function(r, -1.0, x, y) == pytest.approx(r1_expansion(-1.0, x, y), rel=1e-6)


def test_green_errors():
    r = realize(P1)
    with pytest.raises(ZExcluded):
        green_function(r, 0.0, 0.0, 0.0)
    with pytest.raises(AtEigenvalue):
        green_function(r, 1.0, 0.0, 0.0)


@given(x=st.floats(-3, 3), y=st.floats(-3, 3), zr=st.floats(-4, 4), zi=st.floats(0.1, 4))
@settings(max_examples=40, deadline=None)
def test_green_symmetric(x, y, zr, zi):
    r = realize(P1)
    z = complex(zr, zi)
    assert green_function(r, z, x, y) == pytest.approx(green_function(r, z, y, x), rel=1e-12, abs=1e-14)


def test_limit_point_wronskian_vanishes_far_out():
    # decaying solutions for two different z: V(f, g) is O(e^{-|x|}), not identically zero
    r = realize(P1)
    g1, g2 = green_eval(r, -1.0 + 0.5j), green_eval(r, 2.0 - 1.5j)
    assert abs(wronskian_V(g1.u_a, g2.u_a, 0.0)) > 1e-3
    assert abs(wronskian_V(g1.u_a, g2.u_a, -40.0)) < 1e-12
    assert abs(wronskian_V(g1.u_b, g2.u_b, 40.0)) < 1e-12


def test_green_eval_independent_pair():
    ge = green_eval(realize(R1), 3.0 + 0.5j)
    assert abs(ge.V_ba) > 0.0
    assert np.isfinite(ge.kernel(0.3, 0.6))
