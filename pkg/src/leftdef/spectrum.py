"""Entire solution families, the singular Weyl function and the spectral measure.

Normalizations of the solution ``phi_z`` that lies in S near ``a``:

``entire`` (default)
    regular ``a`` with angle ``t``: ``(phi, phi^[1])(a) = (sin t, z cos t)``;
    unbounded limit point ``a``: ``phi_z = scale * exp(k x)`` on the left tail,
    the same function as the ground solution ``w_a`` there.
``weyl``
    regular ``a`` only: ``(sin t / z, cos t)``.  Under this choice the Weyl
    function is a Herglotz-Nevanlinna function.

The companion ``theta_z`` satisfies ``V(theta_z, phi_z) = 1``.  Every piece of
spectral data carries the gauge record of the family that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .coeffs import sigma_points
from .errors import (
    AtEigenvalue,
    GaugeMismatch,
    IncompleteSpectralData,
    NotCompactlySupported,
    Unsupported,
    WindowRequired,
    ZEqualsZero,
)
from .operator import SelfAdjointRealization, boundary_functional, green_function
from .propagate import SolutionPath, layout_of, poly_transfer
from .sobolev import DeltaPart, H1Element, ground_solutions, h1_inner, solution_element, tail_data

__all__ = [
    "EntireFamily",
    "ThetaFamily",
    "SpectralData",
    "phi_family",
    "theta_family",
    "weyl_m",
    "characteristic_value",
    "characteristic_polynomial",
    "eigenvalues",
    "eigen_weight",
    "weyl_residue",
    "weyl_residue_check",
    "transform",
    "parseval_sum",
    "diagonalization_residual",
    "spectral_distance",
]

AT_EIGENVALUE_RTOL = 1e-12
ROOT_IMAG_TOL = 1e-7


class _Family:
    """Solutions of ``(tau - z) u = 0`` fixed by a ``z``-dependent anchor state."""

    def __init__(self, r: SelfAdjointRealization, mode: str | None):
        self.realization = r
        self.problem = r.problem
        self.layout = layout_of(r.problem)
        if mode is None:
            mode = "exact" if self.layout.exact_available else "closed"
        self.mode = mode
        self._paths: dict = {}

    def anchor_state(self, z) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def path(self, z) -> SolutionPath:
        z = complex(z)
        if z not in self._paths:
            if len(self._paths) > 512:
                self._paths.clear()
            self._paths[z] = SolutionPath(self.problem, z, self.anchor, self.anchor_state(z), mode=self.mode)
        return self._paths[z]

    def state(self, z, x: float) -> np.ndarray:
        """``(u_z(x), u_z^[1](x))`` with the left-limit quasi-derivative."""
        return self.path(z).state(float(x))

    def state_right(self, z, x: float) -> np.ndarray:
        return self.path(z).state_right(float(x))

    def states(self, z, xs) -> np.ndarray:
        return self.path(z).states(xs)

    def __call__(self, z, x: float) -> complex:
        return complex(self.state(z, x)[0])


class EntireFamily(_Family):
    """``z -> phi_z``: the solutions lying in S near the left endpoint."""

    def __init__(self, r: SelfAdjointRealization, normalization: str = "entire", scale: float = 1.0,
                 mode: str | None = None):
        super().__init__(r, mode)
        if normalization not in ("entire", "weyl"):
            raise ValueError("normalization must be 'entire' or 'weyl'")
        p = self.problem
        self.normalization = normalization
        self.scale = float(scale)
        if p.bc_a.is_angle:
            self.anchor = p.a
            left = {"kind": "angle", "angle": p.bc_a.angle}
        elif math.isinf(p.a):
            td = tail_data(p, "left")
            if normalization == "weyl":
                raise Unsupported("the weyl normalization needs a regular left endpoint")
            self.anchor = td.start
            self._tail = td
            left = {"kind": "tail-exp", "rate": td.k, "origin": 0.0}
        else:
            raise Unsupported("limit point condition at a finite left endpoint")
        self.gauge = {"normalization": normalization, "left": left, "scale": self.scale}
        if normalization == "weyl" and self.mode == "exact":
            self.mode = "closed"

    def anchor_state(self, z) -> np.ndarray:
        p = self.problem
        if p.bc_a.is_angle:
            cs, sn = p.bc_a.cos_sin
            if self.normalization == "weyl":
                if z == 0:
                    raise ZEqualsZero("the weyl normalization is singular at z = 0")
                y = [sn / z, cs]
            else:
                y = [sn, z * cs]
        else:
            u, u1 = self._tail.decaying(self.anchor)
            y = [float(u), float(u1)]
        return self.scale * np.array(y, dtype=complex)

    def anchor_poly(self):
        """Anchor state as coefficient arrays in ``z`` (entire normalization only)."""
        if self.normalization != "entire":
            raise Unsupported("polynomial states need the entire normalization")
        p = self.problem
        if p.bc_a.is_angle:
            cs, sn = p.bc_a.cos_sin
            return [np.array([self.scale * sn]), np.array([0.0, self.scale * cs])]
        u, u1 = self._tail.decaying(self.anchor)
        return [np.array([self.scale * float(u)]), np.array([self.scale * float(u1)])]

    def poly_state(self, x: float, right: bool = False):
        """``(phi_z(x), phi_z^[1](x))`` as real coefficient arrays in ``z``."""
        T = poly_transfer(self.layout, self.anchor, float(x))
        y0 = self.anchor_poly()
        f = npoly.polyadd(npoly.polymul(T[0][0], y0[0]), npoly.polymul(T[0][1], y0[1]))
        f1 = npoly.polyadd(npoly.polymul(T[1][0], y0[0]), npoly.polymul(T[1][1], y0[1]))
        if right:
            lay = self.layout
            jump = np.array([lay.chi_mass.get(float(x), 0.0), -lay.rho_mass.get(float(x), 0.0)])
            f1 = npoly.polyadd(f1, npoly.polymul(jump, f))
        return npoly.polytrim(f, 0.0), npoly.polytrim(f1, 0.0)

    @property
    def exact(self) -> bool:
        return self.mode == "exact" and self.normalization == "entire"


class ThetaFamily(_Family):
    """``z -> theta_z`` with ``V(theta_z, phi_z) = 1``; not defined at ``z = 0``."""

    def __init__(self, r: SelfAdjointRealization, phi: EntireFamily):
        super().__init__(r, "closed" if phi.mode == "exact" else phi.mode)
        self.phi = phi
        self.anchor = phi.anchor
        self.gauge = dict(phi.gauge)
        p = self.problem
        if not p.bc_a.is_angle:
            td = tail_data(p, "left")
            g, g1 = td.growing(self.anchor)
            w, w1 = td.decaying(self.anchor)
            # W(u, phi) = 1 with phi = scale * w on the tail
            self._u = np.array([g, g1], dtype=float) / (phi.scale * float(g * w1 - g1 * w))

    def anchor_state(self, z) -> np.ndarray:
        if z == 0:
            raise ZEqualsZero("theta_z is not defined at z = 0")
        p = self.problem
        if p.bc_a.is_angle:
            cs, sn = p.bc_a.cos_sin
            s = self.phi.scale
            if self.phi.normalization == "weyl":
                return np.array([cs / z, -sn], dtype=complex) / s
            return np.array([cs / z ** 2, -sn / z], dtype=complex) / s
        return self._u.astype(complex) / z

    def path(self, z) -> SolutionPath:
        if complex(z) == 0:
            raise ZEqualsZero("theta_z is not defined at z = 0")
        return super().path(z)


def phi_family(r: SelfAdjointRealization, normalization: str = "entire", scale: float = 1.0,
               mode: str | None = None) -> EntireFamily:
    return EntireFamily(r, normalization, scale, mode)


def theta_family(r: SelfAdjointRealization, phi: EntireFamily) -> ThetaFamily:
    return ThetaFamily(r, phi)


# ---------------------------------------------------------------------------
# Weyl function


def characteristic_value(r: SelfAdjointRealization, phi: EntireFamily, z, with_scale: bool = False):
    """Right boundary functional of ``phi_z``; its zeros are the eigenvalues."""
    return boundary_functional(r, phi.path(z), "right", with_scale=with_scale)


def weyl_m(r: SelfAdjointRealization, phi: EntireFamily, theta: ThetaFamily, z) -> complex:
    """``M(z)`` with ``theta_z + M(z) phi_z`` lying in S near the right endpoint."""
    z = complex(z)
    if z == 0:
        raise ZEqualsZero("M is not evaluated at z = 0")
    bp, scale = characteristic_value(r, phi, z, with_scale=True)
    if abs(bp) <= AT_EIGENVALUE_RTOL * scale:
        raise AtEigenvalue(f"z = {z} is (numerically) an eigenvalue")
    bt = boundary_functional(r, theta.path(z), "right")
    return -bt / bp


# ---------------------------------------------------------------------------
# eigenvalues and weights


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: tuple[float, ...]
    weights: tuple[float, ...]
    gauge: dict = field(compare=False)
    complete: bool = True
    window: tuple[float, float] | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def pairs(self):
        return list(zip(self.eigenvalues, self.weights))

    def to_dict(self) -> dict:
        return {
            "gauge": self.gauge,
            "eigenvalues": [{"lambda": lam, "mu": mu} for lam, mu in self.pairs()],
            "complete": self.complete,
            "window": None if self.window is None else list(self.window),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralData":
        ev = sorted(d["eigenvalues"], key=lambda e: e["lambda"])
        window = d.get("window")
        return cls(
            tuple(float(e["lambda"]) for e in ev),
            tuple(float(e["mu"]) for e in ev),
            d.get("gauge", {}),
            bool(d.get("complete", True)),
            None if window is None else (float(window[0]), float(window[1])),
        )


def characteristic_polynomial(r: SelfAdjointRealization, phi: EntireFamily) -> np.ndarray:
    """Coefficients (ascending) of the right boundary functional of ``phi_z`` in ``z``."""
    if not phi.exact:
        raise Unsupported("the characteristic polynomial needs exact mode")
    p = r.problem
    if p.bc_b.is_angle:
        f, f1 = phi.poly_state(p.b)
        cs, sn = p.bc_b.cos_sin
        out = npoly.polysub(cs * npoly.polymulx(f), sn * f1)
    else:
        td = tail_data(p, "right")
        f, f1 = phi.poly_state(td.start, right=True)
        w, w1 = (float(v) for v in td.decaying(td.start))
        out = npoly.polysub(w1 * f, w * f1)
    return npoly.polytrim(np.asarray(out, dtype=float), 0.0)


def _polish(coeffs: np.ndarray, root: float) -> float:
    d = npoly.polyder(coeffs)
    x = root
    for _ in range(50):
        fx, dx = npoly.polyval(x, coeffs), npoly.polyval(x, d)
        if dx == 0.0:
            break
        step = fx / dx
        x -= step
        if abs(step) <= 4e-16 * abs(x):
            break
    return float(x)


def _exact_roots(r: SelfAdjointRealization, phi: EntireFamily) -> list[float]:
    c = characteristic_polynomial(r, phi)
    if len(c) <= 1:
        return []
    roots = npoly.polyroots(c)
    big = max(1.0, float(np.max(np.abs(roots))))
    out = []
    for z in roots:
        if abs(z) <= 1e-12 * big:
            continue
        if abs(z.imag) > ROOT_IMAG_TOL * max(1.0, abs(z)):
            continue
        out.append(_polish(c, float(z.real)))
    return sorted(out)


def _spectral_length(r: SelfAdjointRealization) -> float:
    """``int sqrt(|r| s)`` over the bounded part of the layout."""
    lay = layout_of(r.problem)
    total = 0.0
    x, w = np.polynomial.legendre.leggauss(40)
    for piece in lay.pieces:
        if not piece.bounded or piece.rho.coeff == 0.0:
            continue
        xs = piece.lo + 0.5 * (x + 1.0) * (piece.hi - piece.lo)
        s, _, rr = lay.densities(piece, xs)
        total += 0.5 * (piece.hi - piece.lo) * float(np.sum(w * np.sqrt(np.abs(rr) * s)))
    return total


def _scan_roots(r: SelfAdjointRealization, phi: EntireFamily, lo: float, hi: float,
                n_scan: int | None) -> list[float]:
    def f(lam):
        return characteristic_value(r, phi, lam).real

    roots = []
    atoms = max(1, len(r.problem.rho.atoms))
    for u, v in ((lo, min(hi, 0.0)), (max(lo, 0.0), hi)):
        if u >= v:
            continue
        # uniform in sign(l) sqrt|l|, where the eigenvalues spread out evenly
        tu, tv = math.copysign(math.sqrt(abs(u)), u), math.copysign(math.sqrt(abs(v)), v)
        n = n_scan or int(max(400, 16 * (_spectral_length(r) * abs(tv - tu) / math.pi + atoms)))
        ts = np.linspace(tu, tv, n + 1)
        grid = np.sign(ts) * ts ** 2
        grid = grid[grid != 0.0]
        vals = np.array([f(x) for x in grid])
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                roots.append(float(grid[i]))
            elif vals[i] * vals[i + 1] < 0.0:
                roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15, maxiter=200))
        if len(vals) and vals[-1] == 0.0:
            roots.append(float(grid[-1]))
    return sorted(set(roots))


def eigen_weight(r: SelfAdjointRealization, phi: EntireFamily, lam: float) -> float:
    """``mu({lam}) = 1 / ||phi_lam||^2``."""
    el = solution_element(phi.path(lam))
    return 1.0 / h1_inner(r.problem, el, el).real


def eigenvalues(r: SelfAdjointRealization, phi: EntireFamily, window=None, n_scan: int | None = None) -> SpectralData:
    """Eigenvalues and weights.

    Exact mode finds every eigenvalue as a root of the characteristic
    polynomial.  Otherwise ``window = (lo, hi)`` is required and the roots in
    it are bracketed on a grid and refined.
    """
    if phi.exact and window is None:
        lams = _exact_roots(r, phi)
        complete = True
    else:
        if window is None:
            raise WindowRequired("an eigenvalue window is required unless rho is atomic")
        lo, hi = (float(v) for v in window)
        if not lo < hi:
            raise ValueError("window needs lo < hi")
        lams = _scan_roots(r, phi, lo, hi, n_scan)
        if phi.exact:
            lams = [lam for lam in _exact_roots(r, phi) if lo <= lam <= hi]
        complete = False
    weights = tuple(eigen_weight(r, phi, lam) for lam in lams)
    win = None if window is None else (float(window[0]), float(window[1]))
    return SpectralData(tuple(lams), weights, dict(phi.gauge), complete, win)


def spectral_distance(sd1: SpectralData, sd2: SpectralData) -> float:
    """Max-metric distance between two spectral data records with equal gauges."""
    if sd1.gauge != sd2.gauge:
        raise GaugeMismatch("spectral data with different gauge records are not comparable")
    if len(sd1) != len(sd2):
        return math.inf
    if not len(sd1):
        return 0.0
    a = np.array(sd1.pairs())
    b = np.array(sd2.pairs())
    return float(np.max(np.abs(a - b)))


# ---------------------------------------------------------------------------
# residues


def weyl_residue(r: SelfAdjointRealization, phi: EntireFamily, theta: ThetaFamily, lam: float,
                 others=()) -> complex:
    """``Res_{z = lam} M`` by symmetric difference quotients and Richardson extrapolation."""
    poles = [0.0] + [x for x in others if x != lam]
    d = min(abs(lam - x) for x in poles)

    def sym(h):
        return 0.5 * (weyl_m(r, phi, theta, lam + h) * h - weyl_m(r, phi, theta, lam - h) * h)

    a2, a3, a4 = (sym(d * 10.0 ** -k) for k in (2, 3, 4))
    # errors are even in h: eliminate h^2, then h^4
    b3 = (100.0 * a3 - a2) / 99.0
    b4 = (100.0 * a4 - a3) / 99.0
    return (1e4 * b4 - b3) / (1e4 - 1.0)


def weyl_residue_check(r: SelfAdjointRealization, phi: EntireFamily, theta: ThetaFamily, lam: float,
                       sd: SpectralData | None = None) -> float:
    """``|Res_{z = lam} M + mu({lam})|``."""
    others = sd.eigenvalues if sd is not None else ()
    if sd is not None and lam in sd.eigenvalues:
        mu = sd.weights[sd.eigenvalues.index(lam)]
    else:
        mu = eigen_weight(r, phi, lam)
    return abs(weyl_residue(r, phi, theta, lam, others) + mu)


# ---------------------------------------------------------------------------
# the spectral transform


def transform(r: SelfAdjointRealization, phi: EntireFamily, f):
    """``lam -> (F f)(lam)``.

    Point evaluation elements map to ``lam -> phi_lam(c)``; every other part
    must vanish near the right endpoint and is paired with ``phi_lam`` in
    the energy inner product (without conjugation).
    """
    p = r.problem
    deltas = [(c, part) for c, part in f.terms if isinstance(part, DeltaPart)]
    rest = [(c, part) for c, part in f.terms if not isinstance(part, DeltaPart)]
    hi = max((part.hi for _, part in rest), default=p.a)
    if rest and not hi < p.b:
        raise NotCompactlySupported("the element does not vanish near the right endpoint")
    rest_el = H1Element(p, rest) if rest else None
    lo = min((part.lo for _, part in rest), default=p.a)

    def F(lam) -> complex:
        out = sum(c * phi(lam, part.c) for c, part in deltas)
        if rest_el is not None:
            el = solution_element(phi.path(lam), hi=hi)
            out += h1_inner(p, rest_el, el, domain=(min(lo, p.a), hi), conjugate=False)
        return complex(out)

    return F


def parseval_sum(phi: EntireFamily, sd: SpectralData, c: float) -> float:
    """``sum_lam phi_lam(c)^2 mu_lam``."""
    return float(sum((phi(lam, c).real ** 2) * mu for lam, mu in sd.pairs()))


def diagonalization_residual(r: SelfAdjointRealization, phi: EntireFamily, sd: SpectralData,
                             z0: complex | None = None) -> float:
    """Largest off-diagonal entry of ``Phi A Phi^-1`` relative to the spectral radius.

    ``A`` is the operator part in the basis of point evaluations at the
    modified support, read off from the resolvent at ``z0``;
    ``Phi[lam, c] = phi_lam(c)``.
    """
    if not sd.complete:
        raise IncompleteSpectralData("diagonalization needs the full spectrum")
    pts = sigma_points(r.problem)
    if len(pts) != len(sd):
        raise IncompleteSpectralData(
            f"{len(pts)} support points but {len(sd)} eigenvalues"
        )
    lams = np.array(sd.eigenvalues)
    if z0 is None:
        z0 = 1j * max(1.0, float(np.max(np.abs(lams))))
    gs = ground_solutions(r.problem)
    gram = np.array([[gs.delta_value(d, [b])[0] for d in pts] for b in pts])
    gmat = np.array([[green_function(r, z0, b, a) for a in pts] for b in pts])
    Y = np.linalg.solve(gram, gmat)
    A = z0 * np.eye(len(pts)) + np.linalg.inv(Y)
    Phi = np.array([[phi(lam, c) for c in pts] for lam in lams])
    D = Phi @ A @ np.linalg.inv(Phi)
    off = D - np.diag(np.diag(D))
    diag_err = np.abs(np.diag(D) - lams)
    return float(max(np.max(np.abs(off)), np.max(diag_err)) / np.max(np.abs(lams)))
