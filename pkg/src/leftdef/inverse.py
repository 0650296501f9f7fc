"""Liouville transforms, high-energy asymptotics and the peakon inverse problem.

A Liouville map ``(eta, kappa)`` sends solutions of the second problem to
solutions of the first via ``u1(x) = kappa u2(eta(x))``.  The coefficient
relations it imposes are

    sigma2(eta(I)) = sigma1(I) / kappa^2,   chi2(eta(I)) = kappa^2 chi1(I),
    rho2(eta(I)) = kappa^2 rho1(I)

for constant ``kappa``; quasi-derivatives transform as
``u1^[1](x) = u2^[1](eta(x)) / kappa``.

The peakon problem is ``-y'' + y/4 = z omega y`` on the line with
``omega = sum m_i delta_{x_i}``.  Its spectral data are computed exactly;
reconstruction inverts the forward map numerically.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .coeffs import (
    Atom,
    BoundaryCondition,
    Interval,
    MeasureCoeff,
    Problem,
    Segment,
    compute_sigma_set,
    require_valid,
)
from .debranges import kernel_eval, space_dimension
from .errors import InvalidProblem, NoConvergence, UnrepresentableTransform
from .operator import realize
from .propagate import SolutionPath, layout_of, log_propagate
from .sobolev import ground_solutions
from .spectrum import SpectralData, eigenvalues, phi_family, spectral_distance

__all__ = [
    "LiouvilleMap",
    "LiouvilleReport",
    "apply_liouville",
    "verify_liouville",
    "AsymptoticsReport",
    "asymptotics_check",
    "asymptotic_limit",
    "ch_problem",
    "ch_forward",
    "ch_inverse",
    "ch_point_norms",
    "spectral_separation",
    "atoms_distance",
]


# ---------------------------------------------------------------------------
# Liouville maps


@dataclass(frozen=True)
class LiouvilleMap:
    """Piecewise-affine increasing ``eta`` through the knots, constant ``kappa``.

    Outside the knot range ``eta`` continues with the outermost slopes.  A
    single knot pair gives an affine map.  ``kappa_kind`` other than
    ``"constant"`` is recorded but cannot be applied.
    """

    knots: tuple[tuple[float, float], ...]
    kappa: float = 1.0
    kappa_kind: str = "constant"

    def __post_init__(self):
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise InvalidProblem("eta needs at least two knots")
        xs = [k[0] for k in knots]
        ys = [k[1] for k in knots]
        if any(b <= a for a, b in zip(xs, xs[1:])) or any(b <= a for a, b in zip(ys, ys[1:])):
            raise InvalidProblem("eta must be strictly increasing")
        if self.kappa == 0.0 or not math.isfinite(self.kappa):
            raise InvalidProblem("kappa must be finite and non-zero")

    @classmethod
    def affine(cls, slope: float, shift: float = 0.0, kappa: float = 1.0) -> "LiouvilleMap":
        if slope <= 0:
            raise InvalidProblem("eta must be increasing")
        return cls(((0.0, shift), (1.0, slope + shift)), kappa)

    @property
    def xs(self):
        return [k[0] for k in self.knots]

    @property
    def slopes(self) -> list[float]:
        return [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(self.knots, self.knots[1:])]

    @property
    def is_affine(self) -> bool:
        s = self.slopes
        return all(abs(v - s[0]) <= 1e-15 * abs(s[0]) for v in s)

    def _piece(self, x: float) -> int:
        i = bisect.bisect_right(self.xs, x) - 1
        return min(max(i, 0), len(self.knots) - 2)

    def eta(self, x: float) -> float:
        if math.isinf(x):
            return x
        i = self._piece(x)
        x0, y0 = self.knots[i]
        return y0 + self.slopes[i] * (x - x0)

    def eta_inv(self, y: float) -> float:
        if math.isinf(y):
            return y
        ys = [k[1] for k in self.knots]
        i = min(max(bisect.bisect_right(ys, y) - 1, 0), len(ys) - 2)
        x0, y0 = self.knots[i]
        return x0 + (y - y0) / self.slopes[i]

    def slope_at(self, x: float) -> float:
        return self.slopes[self._piece(x)]

    def to_dict(self) -> dict:
        return {"knots": [list(k) for k in self.knots], "kappa": self.kappa, "kappa_kind": self.kappa_kind}


def _map_measure(m: MeasureCoeff, lm: LiouvilleMap, iv1: Interval, iv2: Interval, power: float) -> MeasureCoeff:
    """Push ``m`` forward with density factor ``kappa**power / eta'``."""
    k2 = lm.kappa ** power
    cuts = sorted({x for x in lm.xs[1:-1]})
    segs = []
    for s in m.segments:
        pieces = [s.lo] + [c for c in cuts if s.lo < c < s.hi] + [s.hi]
        for lo, hi in zip(pieces, pieces[1:]):
            mid = 0.5 * (lo + hi) if math.isfinite(lo + hi) else (hi - 1.0 if math.isfinite(hi) else lo + 1.0)
            if not math.isfinite(lo) and not math.isfinite(hi):
                mid = 0.0
            slope = lm.slope_at(mid)
            if s.is_constant:
                segs.append(Segment(lm.eta(lo), lm.eta(hi), k2 * s.coeff / slope, 0.0))
            else:
                if len(pieces) > 2 or not lm.is_affine:
                    raise UnrepresentableTransform("power-law densities need an affine eta")
                # |x - e|^alpha = slope^-alpha |eta(x) - eta(e)|^alpha
                segs.append(Segment(lm.eta(lo), lm.eta(hi), k2 * s.coeff * slope ** (-s.exponent) / slope,
                                    s.exponent))
    merged = []
    for sg in segs:
        if merged and merged[-1].exponent == sg.exponent == 0.0 and merged[-1].coeff == sg.coeff:
            merged[-1] = Segment(merged[-1].lo, sg.hi, sg.coeff, 0.0)
        else:
            merged.append(sg)
    atoms = tuple(Atom(lm.eta(at.pos), k2 * at.mass) for at in m.atoms)
    return MeasureCoeff(tuple(merged), atoms)


def _map_bc(bc: BoundaryCondition, kappa: float) -> BoundaryCondition:
    if not bc.is_angle:
        return bc
    t = bc.angle
    if t == 0.0:
        return bc
    # cot(t2) = kappa^2 cot(t1)
    t2 = math.atan2(1.0, kappa ** 2 * math.cos(t) / math.sin(t))
    return BoundaryCondition.regular(0.0 if t2 >= math.pi else t2)


def apply_liouville(p1: Problem, lm: LiouvilleMap) -> Problem:
    """The problem ``p2`` intertwined with ``p1`` by ``lm``."""
    require_valid(p1)
    if lm.kappa_kind != "constant":
        raise UnrepresentableTransform("only constant kappa keeps chi a nonnegative measure of the supported class")
    iv1 = p1.interval
    iv2 = Interval(lm.eta(iv1.a), lm.eta(iv1.b))
    return Problem(
        iv2,
        _map_measure(p1.rho, lm, iv1, iv2, 2.0),
        _map_measure(p1.sigma, lm, iv1, iv2, -2.0),
        _map_measure(p1.chi, lm, iv1, iv2, 2.0),
        _map_bc(p1.bc_a, lm.kappa),
        _map_bc(p1.bc_b, lm.kappa),
    )


@dataclass
class LiouvilleReport:
    solution_residual: float
    spectra_residual: float
    spectrum_1: tuple
    spectrum_2: tuple
    dims_1: list = field(default_factory=list)
    dims_2: list = field(default_factory=list)
    weight_ratios: list = field(default_factory=list)
    tol_solution: float = 1e-8
    tol_spectrum: float = 1e-9

    @property
    def dims_match(self) -> bool:
        return self.dims_1 == self.dims_2

    @property
    def ok(self) -> bool:
        return (
            self.solution_residual < self.tol_solution
            and self.spectra_residual < self.tol_spectrum
            and self.dims_match
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "solution_residual": self.solution_residual,
            "spectra_residual": self.spectra_residual,
            "spectrum_1": list(self.spectrum_1),
            "spectrum_2": list(self.spectrum_2),
            "dims_1": self.dims_1,
            "dims_2": self.dims_2,
            "weight_ratios": self.weight_ratios,
        }


def _sample_points(p: Problem, n: int, rng) -> np.ndarray:
    lay = layout_of(p)
    lo = p.a if math.isfinite(p.a) else lay.nodes[0] - 2.0
    hi = p.b if math.isfinite(p.b) else lay.nodes[-1] + 2.0
    return np.sort(rng.uniform(lo, hi, n))


def verify_liouville(p1: Problem, p2: Problem, lm: LiouvilleMap, window=None, n_z: int = 3,
                     seed: int = 0) -> LiouvilleReport:
    """Check that ``lm`` intertwines ``p1`` and ``p2``: solutions, spectra and space dimensions."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_z):
        z = complex(rng.normal(scale=2.0), rng.normal(scale=2.0))
        xs = _sample_points(p1, 8, rng)
        x0 = float(xs[0])
        y0 = float(lm.eta(x0))
        u2 = SolutionPath(p2, z, y0, rng.normal(size=2) + 1j * rng.normal(size=2))
        s2 = u2.state(y0)
        u1 = SolutionPath(p1, z, x0, [lm.kappa * s2[0], s2[1] / lm.kappa])
        a = u1.states(xs)
        b = u2.states([lm.eta(float(x)) for x in xs])
        b = np.stack([lm.kappa * b[:, 0], b[:, 1] / lm.kappa], axis=1)
        worst = max(worst, float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)))

    r1, r2 = realize(p1), realize(p2)
    ph1, ph2 = phi_family(r1), phi_family(r2)
    sd1 = eigenvalues(r1, ph1, window=window)
    sd2 = eigenvalues(r2, ph2, window=window)
    if len(sd1) != len(sd2):
        spec_res = math.inf
    elif len(sd1) == 0:
        spec_res = 0.0
    else:
        l1, l2 = np.array(sd1.eigenvalues), np.array(sd2.eigenvalues)
        spec_res = float(np.max(np.abs(l1 - l2) / np.abs(l1)))
    dims_1, dims_2 = [], []
    if p1.rho.is_atomic and ph1.exact and ph2.exact:
        ke1, ke2 = kernel_eval(r1, ph1, sd1), kernel_eval(r2, ph2, sd2)
        for c in compute_sigma_set(p1).points:
            dims_1.append(space_dimension(ke1, c))
            dims_2.append(space_dimension(ke2, lm.eta(c)))
    ratios = [w2_ / w1_ for w1_, w2_ in zip(sd1.weights, sd2.weights)] if len(sd1) == len(sd2) else []
    return LiouvilleReport(worst, spec_res, sd1.eigenvalues, sd2.eigenvalues, dims_1, dims_2, ratios)


# ---------------------------------------------------------------------------
# high-energy asymptotics


@dataclass
class AsymptoticsReport:
    x_lo: float
    x_hi: float
    y_grid: list
    values: list
    limit: float
    rtol: float = 0.05
    atol: float = 1e-3

    @property
    def deviation(self) -> float:
        return abs(self.values[-1] - self.limit)

    @property
    def ok(self) -> bool:
        return self.deviation < self.rtol * abs(self.limit) + self.atol

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "x_lo": self.x_lo,
            "x_hi": self.x_hi,
            "limit": self.limit,
            "deviation": self.deviation,
            "table": [{"y": y, "value": v} for y, v in zip(self.y_grid, self.values)],
        }


def asymptotic_limit(p: Problem, x_lo: float, x_hi: float) -> float:
    """``int_{x_lo}^{x_hi} sqrt(|r| / p)`` with ``1 / p`` the sigma density."""
    lay = layout_of(p)
    gx, gw = np.polynomial.legendre.leggauss(60)
    cuts = [x_lo] + [n for n in lay.nodes if x_lo < n < x_hi] + [x_hi]
    total = 0.0
    for u, v in zip(cuts, cuts[1:]):
        piece = lay.piece_at(0.5 * (u + v))
        xs = u + 0.5 * (gx + 1.0) * (v - u)
        s, _, r = lay.densities(piece, xs)
        total += 0.5 * (v - u) * float(np.sum(gw * np.sqrt(np.abs(r) * s)))
    return total


def _log_abs_phi(p: Problem, phi, z, points) -> list[float]:
    lay = layout_of(p)
    x = phi.anchor
    y = phi.anchor_state(z)
    out = []
    log_scale = 0.0
    for pt in points:
        if pt < phi.anchor:
            # left of the anchor phi sits on a tail where rho vanishes: no growth in z
            out.append(math.log(abs(phi.state(z, pt)[0])))
            continue
        if pt != x:
            y, ls = log_propagate(lay, z, x, y, pt)
            log_scale += ls
            x = pt
        out.append(log_scale + math.log(abs(y[0])))
    return out


def asymptotics_check(p: Problem, x: float, x_tilde: float, y_grid) -> AsymptoticsReport:
    """``sqrt(2 / y) ln(|phi_{iy}(x)| / |phi_{iy}(x~)|)`` along ``y_grid``."""
    lo, hi = sorted((float(x_tilde), float(x)))
    r = realize(p)
    phi = phi_family(r, mode="closed")
    values = []
    for y in y_grid:
        la, lb = _log_abs_phi(p, phi, 1j * float(y), [lo, hi])
        values.append(math.sqrt(2.0 / float(y)) * (lb - la))
    sign = 1.0 if x >= x_tilde else -1.0
    values = [sign * v for v in values]
    return AsymptoticsReport(float(x_tilde), float(x), [float(y) for y in y_grid], values,
                             sign * asymptotic_limit(p, lo, hi))


# ---------------------------------------------------------------------------
# peakons


_LINE = Interval(-math.inf, math.inf)


def _atoms(omega) -> list[tuple[float, float]]:
    out = [(float(x), float(m)) for x, m in omega]
    if not out:
        raise InvalidProblem("at least one atom is required")
    xs = [x for x, _ in out]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise InvalidProblem("atom positions must be strictly increasing")
    if any(m == 0.0 or not math.isfinite(m) for _, m in out) or any(not math.isfinite(x) for x in xs):
        raise InvalidProblem("atoms need finite positions and finite non-zero masses")
    return out


def ch_problem(omega) -> Problem:
    """``-y'' + y / 4 = z omega y`` on the line, limit point at both ends."""
    atoms = _atoms(omega)
    return Problem(
        _LINE,
        MeasureCoeff.atomic(_LINE, atoms),
        MeasureCoeff.constant(_LINE, 1.0),
        MeasureCoeff.constant(_LINE, 0.25),
        BoundaryCondition.limit_point(),
        BoundaryCondition.limit_point(),
    )


def ch_forward(omega) -> SpectralData:
    r = realize(ch_problem(omega))
    return eigenvalues(r, phi_family(r))


def ch_point_norms(omega, points) -> list[float]:
    """``||delta_c||^2 = delta_c(c)`` at the given points (all equal to one for peakons)."""
    gs = ground_solutions(ch_problem(omega))
    return [gs.delta_norm2(float(c)) for c in points]


def spectral_separation(omega1, omega2) -> float:
    return spectral_distance(ch_forward(omega1), ch_forward(omega2))


def atoms_distance(omega1, omega2) -> float:
    a, b = _atoms(omega1), _atoms(omega2)
    if len(a) != len(b):
        return math.inf
    return float(np.max(np.abs(np.array(a) - np.array(b))))


def _unpack(params: np.ndarray, signs) -> list[tuple[float, float]]:
    n = len(signs)
    x = [params[0]]
    for d in params[1:n]:
        x.append(x[-1] + math.exp(min(d, 50.0)))
    m = [s * math.exp(min(l, 50.0)) for s, l in zip(signs, params[n:])]
    return list(zip(x, m))


def _pack(omega) -> np.ndarray:
    x = [a[0] for a in omega]
    d = [math.log(b - a) for a, b in zip(x, x[1:])]
    return np.array([x[0]] + d + [math.log(abs(a[1])) for a in omega])


def _weyl_samples(lams, mus) -> np.ndarray:
    scale = max(abs(l) for l in lams)
    return scale * np.exp(1j * np.linspace(0.15, math.pi - 0.15, 2 * len(lams) + 2))


def _peakon_weyl(omega, zs) -> np.ndarray:
    """Weyl function of a peakon configuration at the points ``zs``.

    Same gauge as ``weyl_m`` on ``ch_problem(omega)``: ``phi_z = exp(x/2)``
    and ``theta_z = exp(-x/2)/z`` left of the first atom.  ``M`` is minus the
    ratio of the coefficients of ``exp(x/2)`` right of the last atom, so the
    columns may share any common rescaling along the way.
    """
    zs = np.asarray(zs, dtype=complex)
    x0 = omega[0][0]
    # rows: z; columns (phi, theta) of the state (f, f1), normalized at x0
    Y = np.empty((len(zs), 2, 2), dtype=complex)
    Y[:, 0, 0], Y[:, 1, 0] = 1.0, 0.5
    Y[:, 0, 1], Y[:, 1, 1] = math.exp(-x0) / zs, -0.5 * math.exp(-x0) / zs
    prev = x0
    for x, m in omega:
        h = 0.5 * (x - prev)
        c, s = math.cosh(h), math.sinh(h)
        T = np.array([[c, 2.0 * s], [0.5 * s, c]])
        Y = T @ Y
        Y[:, 1, :] -= (zs * m)[:, None] * Y[:, 0, :]
        Y /= np.max(np.abs(Y), axis=(1, 2))[:, None, None]
        prev = x
    grow = Y[:, 1, :] + 0.5 * Y[:, 0, :]
    return -grow[:, 1] / grow[:, 0]


def _m_residual(params, signs, zs, target):
    omega = _unpack(params, signs)
    with np.errstate(all="ignore"):
        try:
            vals = _peakon_weyl(omega, zs)
        except (OverflowError, ZeroDivisionError):
            vals = np.full(len(zs), np.nan)
    d = (vals - target) / np.abs(target)
    out = np.concatenate([d.real, d.imag])
    return np.where(np.isfinite(out), out, 1e3)


def _data_residual(omega, sd: SpectralData) -> float:
    try:
        # candidates from a failed start may be wild; overflow there just means rejection
        with np.errstate(all="ignore"):
            sd2 = ch_forward(omega)
    except Exception:
        return math.inf
    if len(sd2) != len(sd):
        return math.inf
    a = np.array(sd2.eigenvalues), np.array(sd2.weights)
    b = np.array(sd.eigenvalues), np.array(sd.weights)
    return float(max(np.max(np.abs(a[0] - b[0]) / np.abs(b[0])), np.max(np.abs(a[1] - b[1]) / b[1])))


def _sign_patterns(n: int, n_neg: int):
    pats = [tuple(-1.0 if i in neg else 1.0 for i in range(n)) for neg in itertools.combinations(range(n), n_neg)]
    others = [p for p in itertools.product((1.0, -1.0), repeat=n) if p not in pats]
    return pats + others


def ch_inverse(sd: SpectralData, n_atoms: int, tol: float = 1e-8, starts: int = 12, seed: int = 0,
               sign_search: bool = True):
    """Atoms ``[(x_i, m_i)]`` whose peakon spectral data match ``sd``.

    The forward map is inverted by least squares on samples of the Weyl
    function ``M(z) = sum mu_k / (lam_k - z)`` in the upper half-plane,
    multi-started over sign patterns of the masses and initial positions.
    Success means the recomputed data match to ``tol`` relative.
    """
    if n_atoms < 1 or len(sd) != n_atoms:
        raise InvalidProblem(f"{n_atoms} atoms need exactly {n_atoms} eigenvalue/weight pairs, got {len(sd)}")
    lams = np.array(sd.eigenvalues, dtype=float)
    mus = np.array(sd.weights, dtype=float)
    if np.any(lams == 0.0) or np.any(mus <= 0.0):
        raise InvalidProblem("eigenvalues must be non-zero and weights positive")
    zs = _weyl_samples(lams, mus)
    target = np.array([np.sum(mus / (lams - z)) for z in zs])
    rng = np.random.default_rng(seed)
    n_neg = int(np.sum(lams < 0))
    patterns = _sign_patterns(n_atoms, n_neg) if sign_search else [tuple(np.where(np.arange(n_atoms) < n_neg, -1.0, 1.0))]
    best = (math.inf, None)
    # centre of mass guess: mu ~ exp(-x) for a single atom
    x_mid = float(-np.log(np.sum(mus)))
    m_typ = float(np.mean(1.0 / np.abs(lams)))
    for signs in patterns:
        for k in range(starts):
            spread = 0.5 + 1.5 * rng.random()
            x0 = np.sort(x_mid + spread * rng.uniform(-1.5, 1.5, n_atoms))
            x0 = x0 + 1e-3 * np.arange(n_atoms)
            m0 = m_typ * np.exp(rng.normal(scale=0.5, size=n_atoms))
            p0 = _pack([(x, s * m) for x, s, m in zip(x0, signs, m0)])
            try:
                sol = least_squares(_m_residual, p0, args=(signs, zs, target), xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=400 * (n_atoms + 1))
            except Exception:
                continue
            omega = _unpack(sol.x, signs)
            res = _data_residual(omega, sd)
            if res < best[0]:
                best = (res, omega)
            if res < tol:
                return [(float(x), float(m)) for x, m in omega]
    raise NoConvergence("no atom configuration reproduces the spectral data", best_residual=best[0])
