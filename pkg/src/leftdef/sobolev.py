"""The energy space H^1(a, b).

Inner product::

    <f, g> = int f g* dchi + int f^[1] g^[1]* dsigma

Elements are symbolic sums of a few kinds of parts (restricted solutions,
point-evaluation elements, hat functions).  Integrals are computed piece by
piece: composite Gauss-Legendre on bounded pieces, closed forms on the
unbounded constant tails where every part is a decaying exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coeffs import EndpointClass, Problem, classify_endpoint, require_valid
from .errors import EndpointNotFinite, InvalidProblem, NotIntegrable, NoGroundSolution, Unsupported
from .propagate import SolutionPath, layout_of

__all__ = [
    "TailData",
    "tail_data",
    "GroundSolutions",
    "ground_solutions",
    "H1Element",
    "SolutionPart",
    "DeltaPart",
    "EndpointDeltaPart",
    "HatPart",
    "solution_element",
    "delta_c",
    "delta_a",
    "hat",
    "h1_inner",
    "h1_norm",
    "integrate",
]

GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
TAIL_RTOL = 1e-7
GRADING_LEVELS = 40


@dataclass(frozen=True)
class TailData:
    """Constant coefficients on an unbounded end: ``u'' = k**2 u`` there."""

    side: str
    start: float  # the finite end of the tail
    s: float
    q: float

    @property
    def k(self) -> float:
        return math.sqrt(self.s * self.q)

    def decaying(self, x):
        """The solution of the homogeneous equation that lies in H^1 near the infinite end.

        Left tail: ``exp(k x)``; right tail: ``exp(-k x)``; constant 1 when ``k == 0``.
        Returns ``(u, u1)``.
        """
        x = np.asarray(x, dtype=float)
        sign = 1.0 if self.side == "left" else -1.0
        u = np.exp(sign * self.k * x)
        return u, sign * self.k / self.s * u

    def growing(self, x):
        """A second solution, ``exp(-k x)`` on the left tail (``x`` when ``k == 0``)."""
        x = np.asarray(x, dtype=float)
        sign = 1.0 if self.side == "left" else -1.0
        if self.k == 0.0:
            return x.copy(), np.full_like(x, 1.0 / self.s)
        u = np.exp(-sign * self.k * x)
        return u, -sign * self.k / self.s * u


def tail_data(p: Problem, side: str) -> TailData:
    lay = layout_of(p)
    piece = lay.pieces[0] if side == "left" else lay.pieces[-1]
    start = piece.hi if side == "left" else piece.lo
    if piece.bounded:
        raise InvalidProblem(f"the {side} endpoint is finite")
    if piece.rho.coeff != 0.0:
        raise Unsupported("rho must vanish on unbounded tails")
    return TailData(side, start, piece.sigma.coeff, piece.chi.coeff)


# ---------------------------------------------------------------------------
# ground solutions


@dataclass(frozen=True)
class GroundSolutions:
    w_a: SolutionPath
    w_b: SolutionPath
    W_ba: float
    gauge: dict = field(hash=False, compare=False)

    def values(self, xs, right: bool = False):
        """``(w_a, w_a^[1], w_b, w_b^[1])`` at ``xs`` (left limits unless ``right``)."""
        if right:
            ya = np.array([self.w_a.state_right(float(x)) for x in np.atleast_1d(xs)]).real
            yb = np.array([self.w_b.state_right(float(x)) for x in np.atleast_1d(xs)]).real
        else:
            ya = self.w_a.states(xs).real
            yb = self.w_b.states(xs).real
        return ya[:, 0], ya[:, 1], yb[:, 0], yb[:, 1]

    def delta_value(self, c: float, x):
        """``delta_c(x)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        wa, _, wb, _ = self.values(np.concatenate([[c], x]))
        return np.where(x <= c, wa[1:] * wb[0], wa[0] * wb[1:]) / self.W_ba

    def delta_norm2(self, c: float) -> float:
        wa, _, wb, _ = self.values([c])
        return float(wa[0] * wb[0] / self.W_ba)


def _ground_anchor(p: Problem, side: str):
    """Anchor point and state of w_a (side='left') or w_b (side='right')."""
    end = p.a if side == "left" else p.b
    cls = classify_endpoint(p, side)
    if math.isinf(end):
        td = tail_data(p, side)
        u, u1 = td.decaying(td.start)
        return td.start, (float(u), float(u1)), {"kind": "tail-exp", "rate": td.k, "origin": 0.0}
    if cls is EndpointClass.REGULAR:
        # the boundary functional lim g w^[1] vanishes for all g in H^1 only if w^[1](end) = 0
        return end, (1.0, 0.0), {"kind": "regular-neumann", "at": end}
    raise Unsupported(f"ground solution at the singular finite {side} endpoint is outside the supported class")


@lru_cache(maxsize=64)
def ground_solutions(p: Problem) -> GroundSolutions:
    require_valid(p)
    xa, ya, ga = _ground_anchor(p, "left")
    xb, yb, gb = _ground_anchor(p, "right")
    w_a = SolutionPath(p, 0.0, xa, ya)
    w_b = SolutionPath(p, 0.0, xb, yb, right_limit=math.isinf(p.b))
    # any point works, the Wronskian is constant
    x = layout_of(p).reach_nodes[0] if math.isinf(p.a) else xa
    sa, sb = w_a.state(x).real, w_b.state(x).real
    W = float(sb[0] * sa[1] - sb[1] * sa[0])
    scale = abs(sb[0] * sa[1]) + abs(sb[1] * sa[0])
    if abs(W) <= 1e-13 * scale:
        raise NoGroundSolution("w_a and w_b are linearly dependent")
    return GroundSolutions(w_a, w_b, W, {"left": ga, "right": gb})


# ---------------------------------------------------------------------------
# element parts


class _Part:
    lo = -math.inf
    hi = math.inf
    kind = "part"

    def breakpoints(self) -> list[float]:
        return [x for x in (self.lo, self.hi) if math.isfinite(x)]

    def values(self, xs, right: bool = False):  # pragma: no cover - interface
        raise NotImplementedError

    def rate(self) -> float:
        return 0.0


class SolutionPart(_Part):
    """A solution path restricted to ``[lo, hi]`` (zero outside)."""

    kind = "solution"

    def __init__(self, path: SolutionPath, lo: float = -math.inf, hi: float = math.inf):
        self.path = path
        self.lo = max(lo, path.problem.a)
        self.hi = min(hi, path.problem.b)

    def values(self, xs, right: bool = False):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros((len(xs), 2), dtype=complex)
        inside = (xs >= self.lo) & (xs <= self.hi)
        if right:
            inside &= xs < self.hi
        else:
            inside &= (xs > self.lo) | (self.lo == self.path.problem.a)
        if np.any(inside):
            if right:
                out[inside] = np.array([self.path.state_right(x) for x in xs[inside]])
            else:
                out[inside] = self.path.states(xs[inside])
        return out

    def rate(self) -> float:
        return abs(self.path.z)


class DeltaPart(_Part):
    """Point evaluation element at an interior point ``c``."""

    kind = "delta"

    def __init__(self, gs: GroundSolutions, c: float):
        self.gs = gs
        self.c = float(c)
        self.lo, self.hi = gs.w_a.problem.a, gs.w_a.problem.b

    def breakpoints(self):
        return [self.c]

    def values(self, xs, right: bool = False):
        xs = np.asarray(xs, dtype=float)
        wac, _, wbc, _ = self.gs.values([self.c])
        wa, wa1, wb, wb1 = self.gs.values(xs, right)
        left = xs <= self.c if not right else xs < self.c
        f = np.where(left, wa * wbc[0], wac[0] * wb) / self.gs.W_ba
        f1 = np.where(left, wa1 * wbc[0], wac[0] * wb1) / self.gs.W_ba
        return np.stack([f, f1], axis=1).astype(complex)


class EndpointDeltaPart(_Part):
    """Point evaluation at the left endpoint: ``-w_b / w_b^[1](a)``."""

    kind = "delta_a"

    def __init__(self, gs: GroundSolutions):
        self.gs = gs
        p = gs.w_b.problem
        self.c = p.a
        self.lo, self.hi = p.a, p.b
        self.scale = -1.0 / gs.w_b.state(p.a).real[1]

    def breakpoints(self):
        return []

    def values(self, xs, right: bool = False):
        xs = np.asarray(xs, dtype=float)
        _, _, wb, wb1 = self.gs.values(xs, right)
        return (self.scale * np.stack([wb, wb1], axis=1)).astype(complex)


class HatPart(_Part):
    """Piecewise-linear tent on ``[l, r]`` with peak 1 at ``m``."""

    kind = "hat"

    def __init__(self, p: Problem, l: float, m: float, r: float):
        if not (p.a <= l < m < r <= p.b) or math.isinf(l) or math.isinf(r):
            raise InvalidProblem("hat needs a <= l < m < r <= b with finite l, r")
        self.problem = p
        self.lo, self.m, self.hi = float(l), float(m), float(r)

    def breakpoints(self):
        return [self.lo, self.m, self.hi]

    def values(self, xs, right: bool = False):
        xs = np.asarray(xs, dtype=float)
        l, m, r = self.lo, self.m, self.hi
        f = np.clip(np.minimum((xs - l) / (m - l), (r - xs) / (r - m)), 0.0, None)
        if right:
            up = (xs >= l) & (xs < m)
            down = (xs >= m) & (xs < r)
        else:
            up = (xs > l) & (xs <= m)
            down = (xs > m) & (xs <= r)
        slope = np.where(up, 1.0 / (m - l), np.where(down, -1.0 / (r - m), 0.0))
        s = self.problem.sigma.density(xs, self.problem.interval)
        with np.errstate(divide="ignore", invalid="ignore"):
            f1 = np.where(slope != 0.0, slope / np.where(s > 0, s, 1.0), 0.0)
        return np.stack([f, f1], axis=1).astype(complex)


# ---------------------------------------------------------------------------
# elements


class H1Element:
    """Finite linear combination of parts."""

    def __init__(self, problem: Problem, terms):
        self.problem = problem
        self.terms = tuple((complex(c), part) for c, part in terms)

    def __add__(self, other: "H1Element") -> "H1Element":
        if other.problem != self.problem:
            raise ValueError("elements of different problems")
        return H1Element(self.problem, self.terms + other.terms)

    def __sub__(self, other: "H1Element") -> "H1Element":
        return self + (-1.0) * other

    def __rmul__(self, c) -> "H1Element":
        return H1Element(self.problem, [(c * k, part) for k, part in self.terms])

    __mul__ = __rmul__

    def __neg__(self):
        return (-1.0) * self

    def conj(self) -> "H1Element":
        """Complex conjugate.  Only valid when every part is real-valued."""
        return _Conj(self)

    def breakpoints(self) -> list[float]:
        pts = set()
        for _, part in self.terms:
            pts.update(part.breakpoints())
        return sorted(pts)

    def support(self) -> tuple[float, float]:
        return min(p.lo for _, p in self.terms), max(p.hi for _, p in self.terms)

    def rate(self) -> float:
        return max((p.rate() for _, p in self.terms), default=0.0)

    def values(self, xs, right: bool = False) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros((len(xs), 2), dtype=complex)
        for c, part in self.terms:
            out += c * part.values(xs, right)
        return out

    def __call__(self, xs):
        return self.values(xs)[:, 0]


class _Conj(H1Element):
    def __init__(self, base: H1Element):
        super().__init__(base.problem, base.terms)
        self.base = base

    def values(self, xs, right: bool = False):
        return np.conj(self.base.values(xs, right))

    def conj(self):
        return self.base


def solution_element(path: SolutionPath, lo: float = -math.inf, hi: float = math.inf) -> H1Element:
    return H1Element(path.problem, [(1.0, SolutionPart(path, lo, hi))])


def delta_c(p: Problem, c: float) -> H1Element:
    require_valid(p)
    if not p.a < c < p.b:
        raise InvalidProblem(f"c = {c} must lie inside the interval")
    return H1Element(p, [(1.0, DeltaPart(ground_solutions(p), c))])


def delta_a(p: Problem) -> H1Element:
    require_valid(p)
    lay = layout_of(p)
    piece = lay.pieces[0]
    if math.isinf(p.a) or any(
        seg.coeff != 0.0 and seg.exponent <= -1.0 for seg in (piece.sigma, piece.chi)
    ):
        raise EndpointNotFinite("sigma or chi is infinite near the left endpoint")
    if classify_endpoint(p, "left") is not EndpointClass.REGULAR:
        raise Unsupported("point evaluation at a non-regular endpoint")
    return H1Element(p, [(1.0, EndpointDeltaPart(ground_solutions(p)))])


def hat(p: Problem, l: float, m: float, r: float) -> H1Element:
    return H1Element(p, [(1.0, HatPart(p, l, m, r))])


# ---------------------------------------------------------------------------
# integration


def _grid(p: Problem, extra_pts, lo: float, hi: float, rate: float):
    """Gauss-Legendre nodes and weights on ``[lo, hi]`` (both finite), split at all breakpoints."""
    lay = layout_of(p)
    cuts = sorted({lo, hi} | {x for x in list(lay.nodes) + list(extra_pts) if lo < x < hi})
    cuts = _graded(p, lay, cuts)
    xs, ws = [], []
    for u, v in zip(cuts, cuts[1:]):
        piece = lay.piece_at(0.5 * (u + v))
        s, q, r = (float(np.abs(d).max()) for d in lay.densities(piece, np.array([u, v])))
        w = math.sqrt(s * (q + rate * r))
        m = 1 + int(math.ceil((v - u) * w / 2.0))
        edges = np.linspace(u, v, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xs.append((mid[:, None] + half[:, None] * _GL_X[None, :]).ravel())
        ws.append((half[:, None] * _GL_W[None, :]).ravel())
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _graded(p: Problem, lay, cuts: list) -> list:
    """Refine geometrically towards a finite endpoint where a power-law density is singular."""
    out = set(cuts)
    for u, v in ((cuts[0], cuts[1]), (cuts[-1], cuts[-2])) if len(cuts) > 1 else ():
        if u not in (p.a, p.b):
            continue
        piece = lay.piece_at(0.5 * (u + v))
        if all(seg.is_constant for seg in (piece.sigma, piece.chi, piece.rho)):
            continue
        out.update(u + (v - u) * 2.0 ** -k for k in range(1, GRADING_LEVELS))
    return sorted(out)


def _tail_integral(p: Problem, fv, gv, td: TailData, scales=(0.0, 0.0)) -> complex:
    """Closed-form tail integral from the states at the tail's finite end.

    ``scales`` are global magnitudes of the two elements; a growing component
    is tolerated when it is small against them (cancellation noise).
    """
    sign = 1.0 if td.side == "left" else -1.0
    for st, scale in zip((fv, gv), scales):
        f, f1 = st
        mismatch = abs(f1 - sign * td.k / td.s * f)
        if mismatch > TAIL_RTOL * max(abs(f1) + td.k / td.s * abs(f), scale) and mismatch > 0.0:
            raise NotIntegrable(f"element grows on the {td.side} tail")
    if td.k == 0.0:
        return 0.0
    return td.q / td.k * fv[0] * gv[0]


def _domain(p: Problem, domain):
    lo, hi = (p.a, p.b) if domain is None else domain
    if not (p.a <= lo < hi <= p.b):
        raise InvalidProblem("integration domain must be a sub-interval")
    return lo, hi


def h1_inner(p: Problem, f: H1Element, g: H1Element, domain=None, conjugate: bool = True) -> complex:
    """``<f, g>`` over ``domain`` (default the whole interval).

    Atoms of chi count on ``[lo, hi)``, matching the left-continuous
    convention.  ``conjugate=False`` gives the bilinear pairing.
    """
    lo, hi = _domain(p, domain)
    lay = layout_of(p)
    pts = [x for x in f.breakpoints() + g.breakpoints() + list(lay.nodes) if lo <= x <= hi]
    # finite ends of the quadrature range; an unbounded side starts at the outermost breakpoint
    finite = pts + [v for v in (lo, hi) if math.isfinite(v)]
    inner_lo = lo if math.isfinite(lo) else min(finite)
    inner_hi = hi if math.isfinite(hi) else max(finite)
    rate = max(f.rate(), g.rate())
    xs, ws = _grid(p, pts, inner_lo, inner_hi, rate)
    total = 0j
    cj = np.conj if conjugate else (lambda v: v)
    scales = (0.0, 0.0)
    if xs.size:
        fv, gv = f.values(xs), g.values(xs)
        scales = (float(np.max(np.abs(fv))), float(np.max(np.abs(gv))))
        iv = p.interval
        s = p.sigma.density(xs, iv)
        q = p.chi.density(xs, iv)
        total += np.sum(ws * (q * fv[:, 0] * cj(gv[:, 0]) + s * fv[:, 1] * cj(gv[:, 1])))
    atoms = [at for at in p.chi.atoms if lo <= at.pos < hi]
    if atoms:
        xa = np.array([at.pos for at in atoms])
        fa, ga = f.values(xa)[:, 0], g.values(xa)[:, 0]
        total += np.sum(np.array([at.mass for at in atoms]) * fa * cj(ga))
    if math.isinf(lo):
        td = tail_data(p, "left")
        st = (f.values([inner_lo])[0], g.values([inner_lo])[0])
        total += _tail_integral(p, st[0], cj(st[1]), _shift(td, inner_lo), scales)
    if math.isinf(hi):
        td = tail_data(p, "right")
        st = (f.values([inner_hi], right=True)[0], g.values([inner_hi], right=True)[0])
        total += _tail_integral(p, st[0], cj(st[1]), _shift(td, inner_hi), scales)
    return complex(total)


def _shift(td: TailData, start: float) -> TailData:
    return TailData(td.side, start, td.s, td.q)


def h1_norm(p: Problem, f: H1Element, domain=None) -> float:
    return math.sqrt(max(h1_inner(p, f, f, domain).real, 0.0))


def integrate(p: Problem, measure: str, func, domain=None, rate: float = 0.0, points=()) -> complex:
    """``int func d(measure)`` over a bounded ``domain``.

    ``func`` maps an array of points to values; atoms count on ``[lo, hi)``.
    ``points`` are extra quadrature breakpoints, e.g. kinks of ``func``.
    """
    lo, hi = _domain(p, domain)
    if math.isinf(lo) or math.isinf(hi):
        raise InvalidProblem("integrate needs a bounded domain")
    m = getattr(p, measure)
    xs, ws = _grid(p, points, lo, hi, rate)
    total = np.sum(ws * m.density(xs, p.interval) * func(xs)) if xs.size else 0.0
    atoms = [at for at in m.atoms if lo <= at.pos < hi]
    if atoms:
        total += np.sum(np.array([at.mass for at in atoms]) * func(np.array([at.pos for at in atoms])))
    return complex(total)
