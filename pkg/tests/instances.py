"""Shared problem instances and random generators for the test suite."""

import math

import numpy as np

from leftdef.coeffs import BoundaryCondition, Interval, MeasureCoeff, Problem, Segment
from leftdef.inverse import ch_problem

LN2 = math.log(2.0)
LINE = Interval(-math.inf, math.inf)
UNIT = Interval(0.0, 1.0)


def peakon(atoms):
    return ch_problem(atoms)


P1 = peakon([(0.0, 1.0)])
P2 = peakon([(-LN2, 1.0), (LN2, 1.0)])


def neumann_problem(rho, sigma=None, chi=None, interval=UNIT, bc_a=None, bc_b=None):
    return Problem(
        interval,
        rho,
        sigma if sigma is not None else MeasureCoeff.constant(interval, 1.0),
        chi if chi is not None else MeasureCoeff.constant(interval, 1.0),
        bc_a or BoundaryCondition.neumann(),
        bc_b or BoundaryCondition.neumann(),
    )


R1 = neumann_problem(MeasureCoeff.constant(UNIT, 1.0))


def random_atoms(rng, n, lo=-3.0, hi=3.0, min_gap=0.3, signed=True, mass=(0.3, 2.0)):
    while True:
        xs = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(xs)) > min_gap:
            break
    ms = rng.uniform(*mass, n)
    if signed:
        ms = ms * rng.choice([-1.0, 1.0], n)
    return [(float(x), float(m)) for x, m in zip(xs, ms)]


def random_numeric_problem(rng):
    """Bounded interval, piecewise densities with one power-law weight segment and atoms."""
    L = float(rng.uniform(1.0, 2.5))
    iv = Interval(0.0, L)
    cut = float(rng.uniform(0.3, 0.7)) * L
    rho = MeasureCoeff(
        (
            Segment(0.0, cut, float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.0, 1.5))),
            Segment(cut, L, float(rng.uniform(0.5, 2.0))),
        ),
        [(float(rng.uniform(0.1, 0.9)) * L, float(rng.uniform(-1.0, 1.0)))],
    )
    sigma = MeasureCoeff(
        (Segment(0.0, cut, float(rng.uniform(0.5, 2.0))), Segment(cut, L, float(rng.uniform(0.5, 2.0)))),
    )
    chi = MeasureCoeff((Segment(0.0, L, float(rng.uniform(0.2, 1.5))),),
                       [(float(rng.uniform(0.1, 0.9)) * L, float(rng.uniform(0.1, 1.0)))])
    return neumann_problem(rho, sigma, chi, interval=iv)
