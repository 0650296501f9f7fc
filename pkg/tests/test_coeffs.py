import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leftdef.coeffs import (
    BoundaryCondition,
    EndpointClass,
    Interval,
    MeasureCoeff,
    Problem,
    Segment,
    classify_endpoint,
    compute_sigma_set,
    deficiency_index,
    kernel_dimension,
    require_valid,
    total_variation,
    validate,
)
from leftdef.errors import InvalidProblem
from leftdef.problemfile import dumps_problem, loads_problem

from instances import LINE, LN2, P1, P2, R1, UNIT, neumann_problem, peakon


def failed_names(p):
    return [c.name for c in validate(p).failed()]


def test_reference_problems_validate():
    for p in (P1, P2, R1):
        assert validate(p).ok


def test_sigma_atom_rejected_with_clause_four():
    bad = Problem(P1.interval, P1.rho, MeasureCoeff.constant(LINE, 1.0, [(0.5, 1.0)]), P1.chi)
    names = failed_names(bad)
    assert names and names[0].startswith("(4)")
    with pytest.raises(InvalidProblem):
        require_valid(bad)


def test_vanishing_chi_rejected_with_clause_three():
    bad = Problem(P1.interval, P1.rho, P1.sigma, MeasureCoeff.constant(LINE, 0.0))
    assert any(n.startswith("(3)") for n in failed_names(bad))


def test_zero_rho_rejected():
    bad = Problem(P1.interval, MeasureCoeff.constant(LINE, 0.0), P1.sigma, P1.chi)
    assert any(n.startswith("(1)") for n in failed_names(bad))


def test_validate_is_pure():
    assert validate(P2).to_dict() == validate(P2).to_dict()


def test_endpoint_classes():
    assert classify_endpoint(P1, "right") is EndpointClass.LIMIT_POINT
    assert classify_endpoint(R1, "left") is EndpointClass.REGULAR
    # sigma density x^-3 near 0 is infinite there
    sing = neumann_problem(MeasureCoeff.constant(UNIT, 1.0),
                           sigma=MeasureCoeff((Segment(0.0, 1.0, 1.0, -3.0),)),
                           bc_a=BoundaryCondition.limit_point())
    assert classify_endpoint(sing, "left") is EndpointClass.LIMIT_POINT


def test_deficiency_index_counts_limit_circle_ends():
    assert deficiency_index(P1) == 0
    assert deficiency_index(R1) == 2


def test_kernel_dimension_cases():
    # sigma + chi infinite near both ends of the line, finite near both ends of (0, 1)
    assert kernel_dimension(P1) == 0
    assert kernel_dimension(R1) == 2


def test_sigma_sets():
    assert compute_sigma_set(P1).points == (0.0,)
    assert compute_sigma_set(P2).points == (-LN2, LN2)
    s = compute_sigma_set(R1)
    assert s.points == () and s.intervals == ((0.0, 1.0, False, False),)
    assert not s.contains(0.0) and s.contains(0.5)


def test_sigma_adds_regular_non_neumann_end_without_nearby_mass():
    rho = MeasureCoeff((Segment(0.0, 0.5, 0.0), Segment(0.5, 1.0, 1.0)))
    p = neumann_problem(rho, bc_a=BoundaryCondition.regular(1.0))
    assert compute_sigma_set(p).contains(0.0)


def test_total_variation_of_signed_atoms():
    p = peakon([(-1.0, -2.0), (1.0, 0.5)])
    assert total_variation(p.rho, -3.0, 3.0, p.interval) == 2.5


@given(
    coeff=st.floats(0.1, 10.0),
    alpha=st.floats(-3.0, 2.0),
    extra=st.floats(0.0, 5.0),
)
@settings(max_examples=60, deadline=None)
def test_more_sigma_mass_never_moves_toward_regular(coeff, alpha, extra):
    order = {EndpointClass.REGULAR: 0, EndpointClass.LIMIT_CIRCLE: 1, EndpointClass.LIMIT_POINT: 2}
    rho = MeasureCoeff((Segment(0.0, 1.0, 1.0, -1.5),))
    base = neumann_problem(rho, sigma=MeasureCoeff((Segment(0.0, 1.0, coeff, alpha),)),
                           bc_a=BoundaryCondition.limit_point())
    more = neumann_problem(rho, sigma=MeasureCoeff((Segment(0.0, 1.0, coeff, alpha - extra),)),
                           bc_a=BoundaryCondition.limit_point())
    assert order[classify_endpoint(more, "left")] >= order[classify_endpoint(base, "left")]


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 3.0)), min_size=1, max_size=5,
                unique_by=lambda t: round(t[0], 3)))
@settings(max_examples=40, deadline=None)
def test_sigma_set_lies_in_support_plus_endpoints(atoms):
    atoms = sorted(atoms)
    if any(b[0] - a[0] < 1e-3 for a, b in zip(atoms, atoms[1:])):
        return
    p = peakon(atoms)
    assert set(compute_sigma_set(p).points) <= {x for x, _ in atoms}


def test_problem_file_roundtrip_is_exact():
    for p in (P1, P2, R1):
        text = dumps_problem(p)
        q = loads_problem(text)
        assert q == p
        assert dumps_problem(q) == text


def test_problem_file_rejects_unknown_keys():
    text = dumps_problem(P1) + "\n[extra]\nfoo = 1\n"
    with pytest.raises(Exception) as info:
        loads_problem(text)
    assert getattr(info.value, "code", None) == "config"


def test_infinite_interval_serializes():
    assert "inf" in dumps_problem(P1)
    assert math.isinf(loads_problem(dumps_problem(P1)).interval.b)
    assert Interval(0.0, 1.0).contains(0.5)
