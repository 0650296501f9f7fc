"""Self-adjoint realizations with separated boundary conditions and their resolvent."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coeffs import EndpointClass, Problem, classify_endpoint, require_valid
from .errors import AtEigenvalue, InvalidProblem, Unsupported, ZeroEigenvalue, ZExcluded
from .propagate import SolutionPath, layout_of
from .sobolev import ground_solutions, tail_data

__all__ = [
    "SelfAdjointRealization",
    "GreenEval",
    "realize",
    "assert_zero_not_eigenvalue",
    "zero_eigenvalue_status",
    "endpoint_anchor",
    "boundary_functional",
    "green_eval",
    "green_function",
]

AT_EIGENVALUE_RTOL = 1e-10


@dataclass(frozen=True)
class SelfAdjointRealization:
    problem: Problem
    left: EndpointClass
    right: EndpointClass
    zero_eig_checked: bool = False

    @property
    def deficiency_index(self) -> int:
        return sum(c is not EndpointClass.LIMIT_POINT for c in (self.left, self.right))


def _check_bcs(p: Problem):
    left = classify_endpoint(p, "left")
    right = classify_endpoint(p, "right")
    for side, cls, bc in (("left", left, p.bc_a), ("right", right, p.bc_b)):
        if cls is EndpointClass.LIMIT_CIRCLE:
            raise Unsupported(f"limit circle, non-regular {side} endpoint")
        if bc.is_angle and cls is not EndpointClass.REGULAR:
            raise InvalidProblem(f"angle condition at the non-regular {side} endpoint")
        if not bc.is_angle and cls is not EndpointClass.LIMIT_POINT:
            raise InvalidProblem(f"the regular {side} endpoint needs an angle condition")
        if bc.is_angle and not 0.0 <= bc.angle < math.pi:
            raise InvalidProblem("angles must lie in [0, pi)")
    return left, right


def _kernel_spaces(p: Problem):
    """Bases (as states at a common point) of solutions of tau u = 0 lying in S near a and near b."""
    gs = ground_solutions(p)
    x = layout_of(p).reach_nodes[0]
    ya = gs.w_a.state(x).real
    yb = gs.w_b.state(x).real
    na = [ya]
    nb = [yb]
    # with z = 0 the angle functional reduces to -u^[1](e) sin(phi); Dirichlet leaves it void
    if p.bc_a.is_angle and p.bc_a.angle == 0.0:
        na = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    if p.bc_b.is_angle and p.bc_b.angle == 0.0:
        nb = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    return na, nb


def zero_eigenvalue_status(p: Problem) -> tuple[bool, str]:
    """``(True, '')`` when zero is not an eigenvalue; a message otherwise."""
    try:
        _check_bcs(p)
        na, nb = _kernel_spaces(p)
    except Unsupported as exc:
        return True, f"not checked: {exc}"
    M = np.column_stack(na + nb)
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > 1e-12 * sv[0]))
    common = len(na) + len(nb) - rank
    if common > 0:
        return False, "a solution of tau u = 0 satisfies both endpoint requirements"
    return True, ""


def realize(p: Problem, check_zero: bool = True) -> SelfAdjointRealization:
    require_valid(p)
    left, right = _check_bcs(p)
    r = SelfAdjointRealization(p, left, right, False)
    if check_zero:
        ok, msg = zero_eigenvalue_status(p)
        if not ok:
            raise ZeroEigenvalue(msg)
        r = SelfAdjointRealization(p, left, right, True)
    return r


def assert_zero_not_eigenvalue(r: SelfAdjointRealization) -> bool:
    return zero_eigenvalue_status(r.problem)[0]


def endpoint_anchor(r: SelfAdjointRealization, side: str, z):
    """Anchor and initial state of the solution lying in S near ``side``.

    Regular endpoint with angle ``phi``: ``(sin phi, z cos phi)``.
    Limit point unbounded endpoint: the decaying tail exponential.
    """
    p = r.problem
    bc = p.bc_a if side == "left" else p.bc_b
    if bc.is_angle:
        end = p.a if side == "left" else p.b
        cs, sn = bc.cos_sin
        return end, np.array([sn, z * cs], dtype=complex)
    end = p.a if side == "left" else p.b
    if not math.isinf(end):
        raise Unsupported("limit point condition at a finite endpoint")
    td = tail_data(p, side)
    u, u1 = td.decaying(td.start)
    return td.start, np.array([u, u1], dtype=complex)


def boundary_functional(r: SelfAdjointRealization, path: SolutionPath, side: str = "right",
                        with_scale: bool = False):
    """Vanishes exactly when ``path`` lies in S near the endpoint ``side``.

    Angle condition: ``z u(e) cos(phi) - u^[1](e) sin(phi)``.
    Unbounded limit point end: ``W(u, w)`` on the tail with ``w`` the decaying
    tail solution, i.e. a multiple of the growing coefficient.

    With ``with_scale`` the sum of the absolute values of the two products is
    returned as well, as a yardstick for cancellation.
    """
    p = r.problem
    bc = p.bc_a if side == "left" else p.bc_b
    if bc.is_angle:
        end = p.a if side == "left" else p.b
        y = path.state(end)
        cs, sn = bc.cos_sin
        t1 = path.z * y[0] * cs
        t2 = y[1] * sn
    else:
        td = tail_data(r.problem, side)
        y = path.state_right(td.start) if side == "right" else path.state(td.start)
        w, w1 = td.decaying(td.start)
        t1, t2 = y[0] * w1, y[1] * w
    val = complex(t1 - t2)
    if with_scale:
        return val, float(abs(t1) + abs(t2))
    return val


@dataclass(frozen=True)
class GreenEval:
    z: complex
    u_a: SolutionPath
    u_b: SolutionPath
    V_ba: complex

    def kernel(self, x: float, y: float) -> complex:
        p = self.u_a.problem
        lo, hi = min(x, y), max(x, y)
        ua = self.u_a.state(lo)[0]
        ub = self.u_b.state(hi)[0]
        gs = ground_solutions(p)
        dxy = gs.delta_value(x, [y])[0]
        return complex(ua * ub / self.V_ba - dxy / self.z)


@lru_cache(maxsize=256)
def _green_eval(r: SelfAdjointRealization, z: complex, mode: str) -> GreenEval:
    xa, ya = endpoint_anchor(r, "left", z)
    xb, yb = endpoint_anchor(r, "right", z)
    u_a = SolutionPath(r.problem, z, xa, ya, mode=mode)
    u_b = SolutionPath(r.problem, z, xb, yb, mode=mode, right_limit=not r.problem.bc_b.is_angle)
    x = layout_of(r.problem).reach_nodes[0]
    sa, sb = u_a.state(x), u_b.state(x)
    V = z * (sb[0] * sa[1] - sb[1] * sa[0])
    scale = abs(z) * (abs(sb[0] * sa[1]) + abs(sb[1] * sa[0]))
    if abs(V) <= AT_EIGENVALUE_RTOL * scale:
        raise AtEigenvalue(f"z = {z} is (numerically) an eigenvalue")
    return GreenEval(z, u_a, u_b, complex(V))


def green_eval(r: SelfAdjointRealization, z, mode: str = "closed") -> GreenEval:
    z = complex(z)
    if z == 0:
        raise ZExcluded("the resolvent kernel needs z != 0")
    return _green_eval(r, z, mode)


def green_function(r: SelfAdjointRealization, z, x: float, y: float) -> complex:
    """Resolvent kernel: ``<R_z delta_y, delta_x>`` equals ``G_z(x, y)``."""
    return green_eval(r, z).kernel(x, y)
