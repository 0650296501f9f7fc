"""Initial value problems for ``(tau - z) f = g`` and Wronskians.

States are pairs ``(f, f1)`` with ``f1`` the quasi-derivative.  Both are
left-continuous: at a node carrying point masses the stored ``f1`` is the
left limit and the right limit follows from the jump

    f1(x+) = f1(x) + (chi({x}) - z rho({x})) f(x).

Between nodes the first-order system

    f'  = s(x) f1,      f1' = (q(x) - z r(x)) f

is solved with ``s, q, r`` the Lebesgue densities of sigma, chi, rho.  Three
backends exist:

``closed``
    constant densities use the exact hyperbolic transfer matrix, power-law
    pieces fall back to Runge-Kutta.  This is the default.
``numeric``
    Runge-Kutta (DOP853) on every bounded piece.
``exact``
    requires atomic rho and piecewise-constant sigma, chi.  Transfer
    matrices are then polynomial in ``z`` and are assembled symbolically as
    coefficient arrays; numeric values come from evaluating the polynomials.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp as _rk_solve

from .coeffs import Problem, Segment, require_valid, classify_endpoint, EndpointClass
from .errors import InvalidProblem, UnreachablePoint, Unsupported

__all__ = [
    "Piece",
    "Layout",
    "layout_of",
    "QuasiState",
    "SolutionPath",
    "solve_ivp",
    "wronskian_W",
    "wronskian_V",
    "transfer",
    "poly_transfer",
    "poly_eval",
    "log_propagate",
    "RK_RTOL",
]

RK_RTOL = 1e-12
RK_ATOL = 1e-14
MODES = ("closed", "numeric", "exact")


@dataclass(frozen=True)
class Piece:
    """Open stretch between consecutive nodes; all three densities are smooth on it."""

    lo: float
    hi: float
    sigma: Segment
    chi: Segment
    rho: Segment

    @property
    def constant(self) -> bool:
        return self.sigma.is_constant and self.chi.is_constant and self.rho.is_constant

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)


class Layout:
    """Node and piece structure of a problem, shared by all solutions."""

    def __init__(self, p: Problem):
        require_valid(p)
        self.problem = p
        self.interval = p.interval
        pts = set()
        for m in (p.rho, p.sigma, p.chi):
            pts.update(m.breakpoints())
        if self.interval.finite_a and self.interval.finite_b:
            if any(not s.is_constant for m in (p.rho, p.sigma, p.chi) for s in m.segments):
                pts.add(0.5 * (p.a + p.b))
        self.nodes = sorted(pts)
        edges = list(self.nodes)
        if not self.interval.finite_a:
            edges.insert(0, -math.inf)
        if not self.interval.finite_b:
            edges.append(math.inf)
        self.pieces = []
        for lo, hi in zip(edges, edges[1:]):
            self.pieces.append(Piece(lo, hi, p.sigma.segment_on(lo, hi), p.chi.segment_on(lo, hi),
                                     p.rho.segment_on(lo, hi)))
        self._edges = edges
        self.chi_mass = {at.pos: at.mass for at in p.chi.atoms}
        self.rho_mass = {at.pos: at.mass for at in p.rho.atoms}
        self.atom_nodes = sorted(set(self.chi_mass) | set(self.rho_mass))
        singular = set()
        if self.interval.finite_a and classify_endpoint(p, "left", _checked=True) is not EndpointClass.REGULAR:
            singular.add(p.a)
        if self.interval.finite_b and classify_endpoint(p, "right", _checked=True) is not EndpointClass.REGULAR:
            singular.add(p.b)
        self.reach_nodes = [n for n in self.nodes if n not in singular]

    # -- geometry -----------------------------------------------------------
    @property
    def first_node(self) -> float:
        return self.nodes[0]

    @property
    def last_node(self) -> float:
        return self.nodes[-1]

    def piece_index(self, x: float) -> int:
        """Index of the piece whose half-open span ``(lo, hi]`` holds ``x``."""
        i = bisect.bisect_left(self._edges, x) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def piece_at(self, x: float) -> Piece:
        return self.pieces[self.piece_index(x)]

    def jump(self, x: float, z) -> complex:
        return self.chi_mass.get(x, 0.0) - z * self.rho_mass.get(x, 0.0)

    def check_reachable(self, x: float) -> None:
        a, b = self.interval.a, self.interval.b
        if not (a <= x <= b) or math.isinf(x):
            raise UnreachablePoint(f"x = {x} lies outside the interval")
        if x == a and classify_endpoint(self.problem, "left") is not EndpointClass.REGULAR:
            raise UnreachablePoint("the left endpoint is not regular")
        if x == b and classify_endpoint(self.problem, "right") is not EndpointClass.REGULAR:
            raise UnreachablePoint("the right endpoint is not regular")

    @cached_property
    def exact_available(self) -> bool:
        p = self.problem
        return p.rho.is_atomic and p.sigma.is_piecewise_constant and p.chi.is_piecewise_constant

    # -- densities ----------------------------------------------------------
    def densities(self, piece: Piece, x):
        x = np.asarray(x, dtype=float)
        iv = self.interval

        def dens(seg):
            if seg.is_constant:
                return np.full_like(x, seg.coeff)
            return seg.coeff * np.abs(x - iv.anchor(x)) ** seg.exponent

        return dens(piece.sigma), dens(piece.chi), dens(piece.rho)


@lru_cache(maxsize=64)
def layout_of(p: Problem) -> Layout:
    return Layout(p)


# ---------------------------------------------------------------------------
# transfer on a single piece


def _closed_matrix(s: float, q: float, r: float, z, h):
    """Transfer matrix of the constant-coefficient system over signed lengths ``h``.

    Returns an array of shape ``h.shape + (2, 2)``.
    """
    h = np.asarray(h, dtype=float)
    k2 = complex(q - z * r)
    w2 = s * k2
    w = np.sqrt(w2 + 0j)
    wh = w * h
    small = np.abs(wh) < 1e-3
    # cosh and sinh(wh)/w are entire in w**2, so the branch of the root is irrelevant
    with np.errstate(over="ignore", invalid="ignore"):
        C = np.where(small, 1 + (wh**2) / 2 * (1 + wh**2 / 12 * (1 + wh**2 / 30)), np.cosh(wh))
        Sw = np.where(
            small,
            h * (1 + (wh**2) / 6 * (1 + wh**2 / 20 * (1 + wh**2 / 42))),
            np.sinh(wh) / np.where(w == 0, 1, w),
        )
    M = np.empty(h.shape + (2, 2), dtype=complex)
    M[..., 0, 0] = C
    M[..., 0, 1] = s * Sw
    M[..., 1, 0] = k2 * Sw
    M[..., 1, 1] = C
    return M


def _rk_rhs(layout: Layout, piece: Piece, z, g=None):
    def rhs(x, y):
        s, q, r = layout.densities(piece, x)
        s, q, r = float(s), float(q), float(r)
        f, f1 = y[0], y[1]
        out = [s * f1, (q - z * r) * f]
        if g is not None:
            out[1] = out[1] - r * g(np.array([x]))[0]
        if len(y) > 2:  # two extra columns for the fundamental matrix
            out += [s * y[3], (q - z * r) * y[2]]
        return np.array(out, dtype=complex)

    return rhs


def _rk(layout: Layout, piece: Piece, z, x0: float, y0, xs, g=None):
    """Runge-Kutta states at points ``xs`` lying on one side of ``x0``."""
    xs = np.asarray(xs, dtype=float)
    y0 = np.asarray(y0, dtype=complex)
    out = np.empty((len(xs), len(y0)), dtype=complex)
    same = xs == x0
    out[same] = y0
    rest = np.nonzero(~same)[0]
    if rest.size == 0:
        return out
    forward = xs[rest[0]] > x0
    order = rest[np.argsort(xs[rest])]
    if not forward:
        order = order[::-1]
    t_eval = xs[order]
    sol = _rk_solve(
        _rk_rhs(layout, piece, z, g), (x0, t_eval[-1]), y0,
        method="DOP853", rtol=RK_RTOL, atol=RK_ATOL * max(1.0, float(np.abs(y0).max())),
        t_eval=t_eval,
    )
    if sol.status != 0:
        raise InvalidProblem(f"Runge-Kutta integration failed: {sol.message}")
    out[order] = sol.y.T
    return out


def _piece_step(layout: Layout, piece: Piece, z, x0: float, y0, xs, mode: str, g=None):
    """States at ``xs`` obtained from state ``y0`` at ``x0`` without crossing any node."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    y0 = np.asarray(y0, dtype=complex)
    use_closed = g is None and piece.constant and (mode != "numeric" or not piece.bounded)
    if use_closed:
        M = _closed_matrix(piece.sigma.coeff, piece.chi.coeff, piece.rho.coeff, z, xs - x0)
        return M @ y0
    if not piece.bounded:
        raise Unsupported("non-constant coefficients on an unbounded piece")
    return _rk(layout, piece, z, x0, y0, xs, g)


def _jump_matrix(layout: Layout, x: float, z):
    return np.array([[1.0, 0.0], [layout.jump(x, z), 1.0]], dtype=complex)


def transfer(layout: Layout, z, x0: float, x1: float, mode: str = "closed") -> np.ndarray:
    """2x2 matrix mapping the left-limit state at ``x0`` to the left-limit state at ``x1``."""
    if mode == "exact":
        return poly_eval(poly_transfer(layout, x0, x1), z)
    Y = np.eye(2, dtype=complex)
    cols = [_propagate(layout, z, x0, Y[:, j], x1, mode) for j in range(2)]
    return np.stack(cols, axis=1)


def _propagate(layout: Layout, z, x0: float, y0, x1: float, mode: str, g=None):
    y = np.asarray(y0, dtype=complex)
    if x1 == x0:
        return y.copy()
    nodes = layout.nodes
    if x1 > x0:
        if x0 in layout.chi_mass or x0 in layout.rho_mass:
            y = y.copy()
            y[1] = y[1] + _jump_value(layout, x0, z, y, g)
        x = x0
        i = bisect.bisect_right(nodes, x0)
        while i < len(nodes) and nodes[i] < x1:
            n = nodes[i]
            y = _piece_step(layout, layout.piece_at(n), z, x, y, [n], mode, g)[0]
            y[1] = y[1] + _jump_value(layout, n, z, y, g)
            x = n
            i += 1
        return _piece_step(layout, layout.piece_at(x1), z, x, y, [x1], mode, g)[0]
    x = x0
    i = bisect.bisect_left(nodes, x0) - 1
    while i >= 0 and nodes[i] >= x1:
        n = nodes[i]
        y = _piece_step(layout, layout.piece_at(x), z, x, y, [n], mode, g)[0]
        y[1] = y[1] - _jump_value(layout, n, z, y, g)
        x = n
        i -= 1
    if x == x1:
        return y
    return _piece_step(layout, layout.piece_at(x), z, x, y, [x1], mode, g)[0]


def _jump_value(layout: Layout, x: float, z, y, g=None):
    val = layout.jump(x, z) * y[0]
    if g is not None:
        val = val - layout.rho_mass.get(x, 0.0) * g(np.array([x]))[0]
    return val


# ---------------------------------------------------------------------------
# exact polynomial mode


def _pmat_mul(A, B):
    """Product of 2x2 matrices of coefficient arrays (lists of lists)."""
    return [
        [npoly.polyadd(npoly.polymul(A[i][0], B[0][j]), npoly.polymul(A[i][1], B[1][j])) for j in range(2)]
        for i in range(2)
    ]


def _pmat_const(M):
    return [[np.array([complex(M[i, j]).real]) for j in range(2)] for i in range(2)]


@lru_cache(maxsize=4096)
def _poly_transfer_cached(layout: Layout, x0: float, x1: float):
    if not layout.exact_available:
        raise Unsupported("exact mode needs atomic rho and piecewise-constant sigma, chi")
    nodes = layout.nodes
    one = [[np.array([1.0]), np.array([0.0])], [np.array([0.0]), np.array([1.0])]]

    def jump(x, sign):
        return [[np.array([1.0]), np.array([0.0])],
                [sign * np.array([layout.chi_mass.get(x, 0.0), -layout.rho_mass.get(x, 0.0)]), np.array([1.0])]]

    def piece(x, y):
        pc = layout.piece_at(0.5 * (x + y))
        M = _closed_matrix(pc.sigma.coeff, pc.chi.coeff, 0.0, 0.0, y - x)
        return _pmat_const(M)

    T = one
    if x1 == x0:
        return T
    if x1 > x0:
        if x0 in layout.chi_mass or x0 in layout.rho_mass:
            T = jump(x0, 1.0)
        x = x0
        for n in nodes[bisect.bisect_right(nodes, x0):]:
            if n >= x1:
                break
            T = _pmat_mul(jump(n, 1.0), _pmat_mul(piece(x, n), T))
            x = n
        return _pmat_mul(piece(x, x1), T)
    x = x0
    for n in reversed(nodes[: bisect.bisect_left(nodes, x0)]):
        if n < x1:
            break
        T = _pmat_mul(jump(n, -1.0), _pmat_mul(piece(x, n), T))
        x = n
    if x != x1:
        T = _pmat_mul(piece(x, x1), T)
    return T


def poly_transfer(layout: Layout, x0: float, x1: float):
    """Transfer matrix from ``x0`` to ``x1`` as a 2x2 list of coefficient arrays in ``z``.

    ``poly[i][j][k]`` is the coefficient of ``z**k``; coefficients are real.
    """
    T = _poly_transfer_cached(layout, float(x0), float(x1))
    return [[npoly.polytrim(c.real if np.iscomplexobj(c) else c, 0.0) for c in row] for row in T]


def poly_eval(P, z) -> np.ndarray:
    return np.array([[npoly.polyval(z, P[i][j]) for j in range(2)] for i in range(2)], dtype=complex)


# ---------------------------------------------------------------------------
# solution paths


@dataclass(frozen=True)
class QuasiState:
    x: float
    f: complex
    f1: complex
    f1_right: complex


class SolutionPath:
    """A solution of ``(tau - z) f = g`` fixed by its state at an anchor point.

    States at every node are computed once; evaluation elsewhere propagates
    from the nearest node to the left (or, on an unbounded left tail, from
    the first node backwards).
    """

    def __init__(self, problem: Problem, z, anchor: float, state, mode: str = "closed", g=None,
                 right_limit: bool = False):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if g is not None and mode != "numeric":
            mode = "numeric"
        self.problem = problem
        self.layout = layout_of(problem)
        self.layout.check_reachable(anchor)
        self.z = complex(z)
        self.anchor = float(anchor)
        self.anchor_state = np.array(state, dtype=complex)
        if right_limit:
            # the given quasi-derivative is f1(anchor+); store the left limit
            self.anchor_state[1] -= _jump_value(self.layout, self.anchor, self.z, self.anchor_state, g)
        self.mode = mode
        self.g = g
        self._node_left = {}
        nodes = self.layout.reach_nodes
        if mode == "exact":
            for n in nodes:
                T = poly_eval(poly_transfer(self.layout, self.anchor, n), self.z)
                self._node_left[n] = T @ self.anchor_state
        else:
            # sweep outwards from the anchor so every node state costs one step
            i = bisect.bisect_left(nodes, self.anchor)
            x, y = self.anchor, self.anchor_state
            for n in nodes[i:]:
                y = _propagate(self.layout, self.z, x, y, n, mode, g)
                self._node_left[n] = y
                x = n
            x, y = self.anchor, self.anchor_state
            for n in reversed(nodes[:i]):
                y = _propagate(self.layout, self.z, x, y, n, mode, g)
                self._node_left[n] = y
                x = n

    # -- states -------------------------------------------------------------
    def node_state(self, n: float, right: bool = False) -> np.ndarray:
        y = self._node_left[n].copy()
        if right:
            y[1] = y[1] + _jump_value(self.layout, n, self.z, y, self.g)
        return y

    def states(self, xs) -> np.ndarray:
        """Left-limit states ``(f, f1)`` at the points ``xs``; shape ``(len(xs), 2)``."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty((len(xs), 2), dtype=complex)
        lay = self.layout
        pending = []
        for i, x in enumerate(xs):
            if x in self._node_left:
                out[i] = self._node_left[x]
            else:
                if not lay.interval.a < x < lay.interval.b:
                    lay.check_reachable(float(x))
                pending.append(i)
        if not pending:
            return out
        pending = np.array(pending)
        pidx = np.array([lay.piece_index(float(x)) for x in xs[pending]])
        for k in np.unique(pidx):
            sel = pending[pidx == k]
            piece = lay.pieces[k]
            if piece.lo in self._node_left:
                start, y0 = piece.lo, self.node_state(piece.lo, right=True)
            else:
                start, y0 = piece.hi, self._node_left[piece.hi]
            mode = "closed" if self.mode == "exact" else self.mode
            out[sel] = _piece_step(lay, piece, self.z, start, y0, xs[sel], mode, self.g)
        return out

    def state(self, x: float) -> np.ndarray:
        if x in self._node_left:
            return self._node_left[x].copy()
        return self.states([x])[0]

    def state_right(self, x: float) -> np.ndarray:
        if x in self._node_left:
            return self.node_state(x, right=True)
        return self.state(x)

    def quasi_state(self, x: float) -> QuasiState:
        y = self.state(x)
        return QuasiState(x, y[0], y[1], self.state_right(x)[1])

    def __call__(self, x):
        return self.states(x)[:, 0]

    def f1(self, x):
        return self.states(x)[:, 1]

    def tau_state(self, x: float) -> np.ndarray:
        """``(f_tau(x), f^[1](x))`` where ``f_tau = z f + g``."""
        y = self.state(x)
        ft = self.z * y[0]
        if self.g is not None:
            ft = ft + self.g(np.array([x]))[0]
        return np.array([ft, y[1]])

    def scaled(self, c) -> "SolutionPath":
        return SolutionPath(self.problem, self.z, self.anchor, c * self.anchor_state, self.mode, self.g)


def solve_ivp(p: Problem, z, c: float, d1, d2, g=None, mode: str = "closed") -> SolutionPath:
    """Solution with ``f(c) = d1`` and ``f^[1](c) = d2`` (left limit when ``c`` is an atom)."""
    require_valid(p)
    return SolutionPath(p, z, c, [d1, d2], mode=mode, g=g)


def _same_problem(u: SolutionPath, v: SolutionPath):
    if u.problem != v.problem:
        raise ValueError("solutions belong to different problems")


def wronskian_W(u: SolutionPath, v: SolutionPath, x: float) -> complex:
    """``u v^[1] - u^[1] v`` at ``x``; both must solve the same equation."""
    _same_problem(u, v)
    if u.z != v.z:
        raise ValueError("W is only meaningful for solutions of the same equation")
    yu, yv = u.state(x), v.state(x)
    return complex(yu[0] * yv[1] - yu[1] * yv[0])


def wronskian_V(f, g, x: float) -> complex:
    """Modified Wronskian ``f_tau g^[1] - f^[1] g_tau`` at ``x`` (no conjugation).

    ``f`` and ``g`` are solution paths or precomputed 4-tuples
    ``(f, f1, f_tau, f_tau1)``.
    """
    if isinstance(f, SolutionPath) and isinstance(g, SolutionPath):
        _same_problem(f, g)
    tf = f.tau_state(x) if isinstance(f, SolutionPath) else np.array([f[2], f[1]])
    tg = g.tau_state(x) if isinstance(g, SolutionPath) else np.array([g[2], g[1]])
    return complex(tf[0] * tg[1] - tf[1] * tg[0])


# ---------------------------------------------------------------------------
# log-scaled propagation for large |z|


def log_propagate(layout: Layout, z, x0: float, y0, x1: float, growth_cap: float = 30.0):
    """Propagate ``y0`` from ``x0`` to ``x1 > x0`` keeping the state normalized.

    Returns ``(y, log_scale)`` with the true state equal to ``exp(log_scale) * y``.
    """
    if x1 < x0:
        raise ValueError("log_propagate runs left to right")
    y = np.asarray(y0, dtype=complex)
    n0 = np.linalg.norm(y)
    y = y / n0
    log_scale = math.log(n0)
    nodes = layout.nodes
    cuts = [x0] + [n for n in nodes if x0 < n < x1] + [x1]
    for k, (u, v) in enumerate(zip(cuts, cuts[1:])):
        if k > 0 or u in layout.chi_mass or u in layout.rho_mass:
            y = y.copy()
            y[1] = y[1] + layout.jump(u, z) * y[0]
        piece = layout.piece_at(0.5 * (u + v))
        s, q, r = (np.abs(d).max() for d in layout.densities(piece, np.array([u, v])))
        rate = math.sqrt(abs(s * (q + abs(z) * r))) + 1.0
        m = max(1, int(math.ceil((v - u) * rate / growth_cap)))
        grid = np.linspace(u, v, m + 1)
        for a_, b_ in zip(grid, grid[1:]):
            y = _piece_step(layout, piece, z, a_, y, [b_], "closed")[0]
            nrm = np.linalg.norm(y)
            y = y / nrm
            log_scale += math.log(nrm)
    return y, log_scale
