"""Coefficient measures, problem definition, validation and endpoint data.

A problem is a triple of measures ``(rho, sigma, chi)`` on an interval
``(a, b)`` together with boundary data at both ends.  Each measure is drawn
from a computable class: a piecewise power-law density plus finitely many
point masses.  On a segment the density is ``coeff * |x - e|**exponent``
where ``e`` is the finite interval endpoint nearest to ``x``.  With
``exponent == 0`` the density is piecewise constant, which is the common case.

The differential expression acts on ``f`` through its quasi-derivative
``f1 = df/dsigma``; between atoms ``f' = f1 * sigma_density`` and
``f1' = (chi_density - z rho_density) f``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidProblem

__all__ = [
    "Interval",
    "Segment",
    "Atom",
    "MeasureCoeff",
    "BoundaryCondition",
    "Problem",
    "EndpointClass",
    "ClauseResult",
    "ValidationReport",
    "SigmaSet",
    "validate",
    "require_valid",
    "classify_endpoint",
    "deficiency_index",
    "kernel_dimension",
    "support_of_rho",
    "compute_sigma_set",
]

INF = math.inf
NEUMANN = math.pi / 2


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidProblem(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def finite_a(self) -> bool:
        return math.isfinite(self.a)

    @property
    def finite_b(self) -> bool:
        return math.isfinite(self.b)

    def contains(self, x: float) -> bool:
        return self.a < x < self.b

    def anchor(self, x):
        """Nearest finite endpoint for each ``x`` (used by power-law densities)."""
        x = np.asarray(x, dtype=float)
        if self.finite_a and self.finite_b:
            return np.where(x - self.a <= self.b - x, self.a, self.b)
        if self.finite_a:
            return np.full_like(x, self.a)
        if self.finite_b:
            return np.full_like(x, self.b)
        return np.full_like(x, np.nan)


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    coeff: float
    exponent: float = 0.0

    @property
    def is_constant(self) -> bool:
        return self.exponent == 0.0 or self.coeff == 0.0


@dataclass(frozen=True)
class Atom:
    pos: float
    mass: float


@dataclass(frozen=True)
class MeasureCoeff:
    """Piecewise power-law density plus a finite list of point masses."""

    segments: tuple[Segment, ...]
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "atoms", _atoms(self.atoms))

    @classmethod
    def constant(cls, interval: Interval, coeff: float, atoms: Iterable = ()) -> "MeasureCoeff":
        return cls((Segment(interval.a, interval.b, float(coeff)),), _atoms(atoms))

    @classmethod
    def atomic(cls, interval: Interval, atoms: Iterable) -> "MeasureCoeff":
        return cls.constant(interval, 0.0, atoms)

    @property
    def is_atomic(self) -> bool:
        return all(s.coeff == 0.0 for s in self.segments)

    @property
    def is_piecewise_constant(self) -> bool:
        return all(s.is_constant for s in self.segments)

    def segment_index(self, x: float) -> int:
        """Index of the segment whose closure contains ``x`` (left segment on ties)."""
        for i, s in enumerate(self.segments):
            if x <= s.hi:
                return i
        return len(self.segments) - 1

    def segment_on(self, lo: float, hi: float) -> Segment:
        """The segment containing the open piece ``(lo, hi)``."""
        for s in self.segments:
            if s.lo <= lo and hi <= s.hi:
                return s
        raise InvalidProblem(f"piece ({lo}, {hi}) straddles a segment boundary")

    def density(self, x, interval: Interval):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        e = interval.anchor(x)
        for s in self.segments:
            mask = (x >= s.lo) & (x <= s.hi)
            if not np.any(mask):
                continue
            if s.is_constant:
                out[mask] = s.coeff
            else:
                out[mask] = s.coeff * np.abs(x[mask] - e[mask]) ** s.exponent
        return out

    def atom_mass(self, x: float) -> float:
        for at in self.atoms:
            if at.pos == x:
                return at.mass
        return 0.0

    def breakpoints(self) -> list[float]:
        pts = {s.lo for s in self.segments} | {s.hi for s in self.segments}
        pts |= {at.pos for at in self.atoms}
        return sorted(p for p in pts if math.isfinite(p))

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"from": _enc(s.lo), "to": _enc(s.hi), "coeff": s.coeff, "exponent": s.exponent}
                for s in self.segments
            ],
            "atoms": [{"pos": at.pos, "mass": at.mass} for at in self.atoms],
        }


def _atoms(atoms) -> tuple[Atom, ...]:
    out = []
    for at in atoms:
        out.append(at if isinstance(at, Atom) else Atom(float(at[0]), float(at[1])))
    return tuple(out)


def _enc(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class BoundaryCondition:
    """Either an angle ``phi`` in ``[0, pi)`` at a regular endpoint or limit point."""

    kind: str
    angle: float | None = None

    @classmethod
    def regular(cls, angle: float) -> "BoundaryCondition":
        return cls("angle", float(angle))

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls("angle", NEUMANN)

    @classmethod
    def limit_point(cls) -> "BoundaryCondition":
        return cls("limit_point", None)

    @property
    def is_angle(self) -> bool:
        return self.kind == "angle"

    @property
    def is_neumann(self) -> bool:
        return self.is_angle and self.angle == NEUMANN

    @property
    def cos_sin(self) -> tuple[float, float]:
        """``(cos, sin)`` of the angle, exact at Neumann so no spurious z-power survives."""
        if self.is_neumann:
            return 0.0, 1.0
        return math.cos(self.angle), math.sin(self.angle)

    def to_obj(self):
        return {"angle": self.angle} if self.is_angle else "limit_point"


@dataclass(frozen=True)
class Problem:
    interval: Interval
    rho: MeasureCoeff
    sigma: MeasureCoeff
    chi: MeasureCoeff
    bc_a: BoundaryCondition = field(default_factory=BoundaryCondition.limit_point)
    bc_b: BoundaryCondition = field(default_factory=BoundaryCondition.limit_point)

    @property
    def a(self) -> float:
        return self.interval.a

    @property
    def b(self) -> float:
        return self.interval.b

    def measures(self):
        return {"rho": self.rho, "sigma": self.sigma, "chi": self.chi}

    def to_dict(self) -> dict:
        return {
            "interval": {"a": _enc(self.a), "b": _enc(self.b)},
            "rho": self.rho.to_dict(),
            "sigma": self.sigma.to_dict(),
            "chi": self.chi.to_dict(),
            "bc_a": self.bc_a.to_obj(),
            "bc_b": self.bc_b.to_obj(),
        }

    def with_bcs(self, bc_a: BoundaryCondition | None = None, bc_b: BoundaryCondition | None = None):
        return Problem(
            self.interval, self.rho, self.sigma, self.chi,
            bc_a if bc_a is not None else self.bc_a,
            bc_b if bc_b is not None else self.bc_b,
        )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ClauseResult:
    name: str
    passed: bool
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple[ClauseResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.clauses)

    def failed(self) -> list[ClauseResult]:
        return [c for c in self.clauses if not c.passed]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "clauses": [{"name": c.name, "passed": c.passed, "message": c.message} for c in self.clauses],
        }


def _check_structure(p: Problem) -> list[str]:
    msgs = []
    a, b = p.a, p.b
    for name, m in p.measures().items():
        segs = m.segments
        if not segs:
            msgs.append(f"{name}: no segments")
            continue
        if segs[0].lo != a or segs[-1].hi != b:
            msgs.append(f"{name}: segments must start at a and end at b")
        for s, t in zip(segs, segs[1:]):
            if s.hi != t.lo:
                msgs.append(f"{name}: segments do not partition (a,b) at {s.hi}")
        for s in segs:
            if not s.lo < s.hi:
                msgs.append(f"{name}: empty segment [{s.lo}, {s.hi}]")
            if not (math.isfinite(s.coeff) and math.isfinite(s.exponent)):
                msgs.append(f"{name}: non-finite segment data")
        pos = [at.pos for at in m.atoms]
        if any(not (a < x < b) for x in pos):
            msgs.append(f"{name}: atom outside (a,b)")
        if any(x >= y for x, y in zip(pos, pos[1:])):
            msgs.append(f"{name}: atom positions must be strictly increasing")
        if any(at.mass == 0.0 or not math.isfinite(at.mass) for at in m.atoms):
            msgs.append(f"{name}: atom masses must be finite and nonzero")
    return msgs


def _check_support_class(p: Problem) -> list[str]:
    msgs = []
    both_infinite = not p.interval.finite_a and not p.interval.finite_b
    for name, m in p.measures().items():
        for s in m.segments:
            if s.is_constant:
                continue
            if math.isinf(s.lo) or math.isinf(s.hi) or both_infinite:
                msgs.append(f"{name}: power-law segment [{s.lo}, {s.hi}] must be bounded")
    for side, end in (("a", p.a), ("b", p.b)):
        if math.isinf(end):
            seg = p.rho.segments[0] if side == "a" else p.rho.segments[-1]
            if seg.coeff != 0.0:
                msgs.append(f"rho must vanish on the unbounded segment at {side}")
    return msgs


def _hypothesis_clauses(p: Problem) -> list[ClauseResult]:
    out = []
    structure = _check_structure(p)
    out.append(ClauseResult("structure", not structure, "; ".join(structure)))

    rho_ok = not p.rho.is_atomic or bool(p.rho.atoms)
    out.append(ClauseResult(
        "(1) rho real, not identically zero", rho_ok,
        "" if rho_ok else "rho is identically zero",
    ))

    bad_sigma = [s for s in p.sigma.segments if not s.coeff > 0.0]
    out.append(ClauseResult(
        "(2) sigma positive with full support", not bad_sigma,
        "" if not bad_sigma else f"sigma density must be positive on every segment ({len(bad_sigma)} bad)",
    ))

    neg_chi = [s for s in p.chi.segments if s.coeff < 0.0] + [at for at in p.chi.atoms if at.mass < 0.0]
    zero_chi = p.chi.is_atomic and not p.chi.atoms
    msg = ""
    if neg_chi:
        msg = "chi must be nonnegative"
    elif zero_chi:
        msg = "chi must not vanish identically"
    out.append(ClauseResult("(3) chi nonnegative, not identically zero", not msg, msg))

    no_sigma_atoms = not p.sigma.atoms
    out.append(ClauseResult(
        "(4) sigma has no atoms", no_sigma_atoms,
        "" if no_sigma_atoms else "sigma must be atom-free (clause (2)/(4): sigma carries point masses)",
    ))

    support = _check_support_class(p)
    out.append(ClauseResult("supported coefficient class", not support, "; ".join(support)))
    return out


def _bc_clause(p: Problem) -> ClauseResult:
    msgs = []
    for side, bc in (("left", p.bc_a), ("right", p.bc_b)):
        cls = classify_endpoint(p, side, _checked=True)
        if bc.is_angle:
            if cls is not EndpointClass.REGULAR:
                msgs.append(f"angle boundary condition at {side} endpoint needs Regular, got {cls.value}")
            elif not (0.0 <= bc.angle < math.pi):
                msgs.append(f"angle at {side} endpoint must lie in [0, pi)")
        elif cls is not EndpointClass.LIMIT_POINT:
            msgs.append(f"limit_point boundary condition at {side} endpoint, but it is {cls.value}")
    return ClauseResult("boundary conditions admissible", not msgs, "; ".join(msgs))


@lru_cache(maxsize=256)
def _hypotheses_ok(p: Problem) -> tuple[bool, str]:
    clauses = _hypothesis_clauses(p)
    bad = [c for c in clauses if not c.passed]
    return (not bad, "; ".join(f"{c.name}: {c.message}" for c in bad))


def validate(p: Problem) -> ValidationReport:
    """Check the standing hypotheses clause by clause.

    The zero-eigenvalue exclusion is appended at the end and only evaluated
    when everything before it passed.
    """
    clauses = _hypothesis_clauses(p)
    if all(c.passed for c in clauses):
        clauses.append(_bc_clause(p))
    if all(c.passed for c in clauses):
        from .operator import zero_eigenvalue_status

        status, msg = zero_eigenvalue_status(p)
        clauses.append(ClauseResult("zero is not an eigenvalue", status, msg))
    return ValidationReport(tuple(clauses))


def require_valid(p: Problem) -> None:
    ok, msg = _hypotheses_ok(p)
    if not ok:
        raise InvalidProblem(msg)


# ---------------------------------------------------------------------------
# endpoint classification


class EndpointClass(enum.Enum):
    REGULAR = "Regular"
    LIMIT_CIRCLE = "LimitCircle"
    LIMIT_POINT = "LimitPoint"


def _edge(p: Problem, side: str):
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    left = side == "left"
    end = p.a if left else p.b
    pick = (lambda m: m.segments[0]) if left else (lambda m: m.segments[-1])
    return end, pick(p.rho), pick(p.sigma), pick(p.chi)


def _finite_near(end: float, seg: Segment) -> bool:
    if seg.coeff == 0.0:
        return True
    if math.isinf(end):
        return False
    return seg.exponent > -1.0


def classify_endpoint(p: Problem, side: str, _checked: bool = False) -> EndpointClass:
    """Regular / limit circle / limit point, from the segment touching ``side``.

    Only finitely many atoms exist, so they never affect finiteness near an
    endpoint; everything reduces to power-law integrability exponents.
    """
    if not _checked:
        require_valid(p)
    end, rho, sigma, chi = _edge(p, side)
    fin_rho, fin_sigma, fin_chi = (_finite_near(end, s) for s in (rho, sigma, chi))
    if fin_rho and fin_sigma and fin_chi:
        return EndpointClass.REGULAR
    if not (fin_sigma and fin_chi):
        return EndpointClass.LIMIT_POINT
    # rho is infinite near a finite endpoint with density ~ |x-e|**beta, beta <= -1.
    # Its primitive behaves like |x-e|**(beta+1) (or a logarithm when beta == -1);
    # square integrability against |x-e|**alpha decides.
    beta = rho.exponent
    alpha = sigma.exponent
    if beta == -1.0 or 2.0 * beta + 3.0 + alpha > 0.0:
        return EndpointClass.LIMIT_CIRCLE
    return EndpointClass.LIMIT_POINT


def deficiency_index(p: Problem) -> int:
    """Number of limit circle endpoints; a regular endpoint counts as limit circle."""
    lc = (EndpointClass.REGULAR, EndpointClass.LIMIT_CIRCLE)
    return sum(classify_endpoint(p, s) in lc for s in ("left", "right"))


def kernel_dimension(p: Problem) -> int:
    """Dimension of the solution space of the homogeneous equation inside H^1.

    One for each endpoint near which ``sigma + chi`` is finite.
    """
    require_valid(p)
    n = 0
    for side in ("left", "right"):
        end, _, sigma, chi = _edge(p, side)
        n += _finite_near(end, sigma) and _finite_near(end, chi)
    return n


# ---------------------------------------------------------------------------
# supports and the modified support


@dataclass(frozen=True)
class SigmaSet:
    """Finite union of points and intervals; interval flags mark closed ends."""

    points: tuple[float, ...]
    intervals: tuple[tuple[float, float, bool, bool], ...] = ()

    def contains(self, x: float) -> bool:
        if any(x == pt for pt in self.points):
            return True
        for lo, hi, lc, hc in self.intervals:
            if lo < x < hi or (lc and x == lo) or (hc and x == hi):
                return True
        return False

    @property
    def is_finite(self) -> bool:
        return not self.intervals

    def sample(self, n_per_interval: int = 5) -> list[float]:
        """Points of the set, plus interior samples of each interval."""
        out = list(self.points)
        for lo, hi, lc, hc in self.intervals:
            ts = (np.arange(n_per_interval) + 0.5) / n_per_interval
            out.extend(float(lo + t * (hi - lo)) for t in ts)
            if lc:
                out.append(lo)
            if hc:
                out.append(hi)
        return sorted(set(out))

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "intervals": [
                {"from": _enc(lo), "to": _enc(hi), "closed_from": lc, "closed_to": hc}
                for lo, hi, lc, hc in self.intervals
            ],
        }


def support_of_rho(p: Problem) -> SigmaSet:
    """supp(rho) as a subset of (a, b): closed intervals relative to (a, b) plus isolated atoms."""
    ivs: list[list] = []
    for s in p.rho.segments:
        if s.coeff == 0.0:
            continue
        if ivs and ivs[-1][1] == s.lo:
            ivs[-1][1] = s.hi
        else:
            ivs.append([s.lo, s.hi])
    intervals = tuple((lo, hi, lo != p.a, hi != p.b) for lo, hi in ivs)
    pts = tuple(
        at.pos for at in p.rho.atoms if not any(lo <= at.pos <= hi for lo, hi in ivs)
    )
    return SigmaSet(pts, intervals)


def _mass_right_of(supp: SigmaSet, x: float) -> bool:
    """Whether |rho| charges every right neighbourhood (x, x + eps)."""
    return any(lo <= x < hi for lo, hi, _, _ in supp.intervals)


def _mass_left_of(supp: SigmaSet, x: float) -> bool:
    return any(lo < x <= hi for lo, hi, _, _ in supp.intervals)


def compute_sigma_set(p: Problem) -> SigmaSet:
    """The modified support used for point evaluations and de Branges spaces.

    Start from supp(rho).  A regular endpoint whose boundary condition is not
    Neumann and near which |rho| has no mass is added.  Otherwise the extreme
    point of supp(rho) on that side is removed, unless |rho| vanishes on a
    one-sided neighbourhood of it (the reading under which isolated atoms
    survive).
    """
    require_valid(p)
    supp = support_of_rho(p)
    points = set(supp.points)
    intervals = [list(iv) for iv in supp.intervals]

    def extremes():
        lows = list(points) + [iv[0] for iv in intervals]
        highs = list(points) + [iv[1] for iv in intervals]
        return min(lows), max(highs)

    a_rho, b_rho = extremes()

    for side in ("left", "right"):
        end = p.a if side == "left" else p.b
        bc = p.bc_a if side == "left" else p.bc_b
        extreme = a_rho if side == "left" else b_rho
        near_mass = extreme == end
        add = (
            classify_endpoint(p, side) is EndpointClass.REGULAR
            and bc.is_angle
            and not bc.is_neumann
            and not near_mass
        )
        if add:
            points.add(end)
            continue
        charged = _mass_right_of(supp, extreme) if side == "left" else _mass_left_of(supp, extreme)
        if not charged:
            continue
        points.discard(extreme)
        for iv in intervals:
            if side == "left" and iv[0] == extreme:
                iv[2] = False
            if side == "right" and iv[1] == extreme:
                iv[3] = False
    return SigmaSet(tuple(sorted(points)), tuple(tuple(iv) for iv in intervals))


def sigma_points(p: Problem) -> list[float]:
    s = compute_sigma_set(p)
    if not s.is_finite:
        raise InvalidProblem("the modified support is not a finite set")
    return list(s.points)


def total_variation(m: MeasureCoeff, lo: float, hi: float, interval: Interval) -> float:
    """|m|((lo, hi)) for the open interval; power-law segments integrated in closed form."""
    total = sum(abs(at.mass) for at in m.atoms if lo < at.pos < hi)
    for s in m.segments:
        l, h = max(lo, s.lo), min(hi, s.hi)
        if l >= h or s.coeff == 0.0:
            continue
        if s.is_constant:
            total += abs(s.coeff) * (h - l)
        else:
            total += abs(s.coeff) * _power_integral(l, h, s.exponent, interval)
    return total


def _power_integral(l: float, h: float, alpha: float, interval: Interval) -> float:
    # split at the midpoint where the anchor switches
    cuts = [l, h]
    if interval.finite_a and interval.finite_b:
        mid = 0.5 * (interval.a + interval.b)
        if l < mid < h:
            cuts = [l, mid, h]
    out = 0.0
    for u, v in zip(cuts, cuts[1:]):
        e = float(interval.anchor(0.5 * (u + v)))
        du, dv = sorted((abs(u - e), abs(v - e)))
        if alpha == -1.0:
            out += math.log(dv / du) if du > 0 else math.inf
        elif du == 0.0 and alpha < -1.0:
            out += math.inf
        else:
            out += (dv ** (alpha + 1) - du ** (alpha + 1)) / (alpha + 1)
    return out


def sorted_atoms(atoms: Sequence) -> tuple[Atom, ...]:
    return tuple(sorted(_atoms(atoms), key=lambda at: at.pos))
