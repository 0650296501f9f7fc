"""TOML problem files.

Layout::

    bc_a = "limit_point"
    bc_b = { angle = 1.5707963267948966 }

    [interval]
    a = "-inf"
    b = "inf"

    [rho]
    segments = [ { from = "-inf", to = "inf", coeff = 0.0, exponent = 0.0 } ]
    atoms = [ { pos = 0.0, mass = 1.0 } ]

``sigma`` and ``chi`` follow the ``rho`` layout.  Unknown keys are rejected.
Serialization is canonical: floats are written with ``repr`` so that
``loads(dumps(p)) == p`` holds bit for bit.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .coeffs import Atom, BoundaryCondition, Interval, MeasureCoeff, Problem, Segment
from .errors import ConfigError, InvalidProblem

__all__ = ["loads_problem", "load_problem", "dumps_problem", "dump_problem", "problem_from_dict"]

_TOP = {"interval", "rho", "sigma", "chi", "bc_a", "bc_b"}


def _num(v, where: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
    raise ConfigError(f"{where}: expected a number or '+-inf', got {v!r}")


def _strict(d: dict, allowed: set, where: str, required: set | None = None):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a table")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    missing = (required or set()) - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _measure(d, name: str) -> MeasureCoeff:
    _strict(d, {"segments", "atoms"}, name, {"segments"})
    segs = []
    for i, s in enumerate(d["segments"]):
        where = f"{name}.segments[{i}]"
        _strict(s, {"from", "to", "coeff", "exponent"}, where, {"from", "to", "coeff"})
        segs.append(Segment(
            _num(s["from"], where), _num(s["to"], where),
            _num(s["coeff"], where), _num(s.get("exponent", 0.0), where),
        ))
    atoms = []
    for i, at in enumerate(d.get("atoms", [])):
        where = f"{name}.atoms[{i}]"
        _strict(at, {"pos", "mass"}, where, {"pos", "mass"})
        atoms.append(Atom(_num(at["pos"], where), _num(at["mass"], where)))
    return MeasureCoeff(tuple(segs), tuple(atoms))


def _bc(v, name: str) -> BoundaryCondition:
    if v == "limit_point":
        return BoundaryCondition.limit_point()
    if isinstance(v, dict):
        _strict(v, {"angle"}, name, {"angle"})
        return BoundaryCondition.regular(_num(v["angle"], name))
    raise ConfigError(f"{name}: expected 'limit_point' or {{angle = ...}}")


def problem_from_dict(d: dict) -> Problem:
    _strict(d, _TOP, "problem", _TOP)
    iv = d["interval"]
    _strict(iv, {"a", "b"}, "interval", {"a", "b"})
    try:
        interval = Interval(_num(iv["a"], "interval.a"), _num(iv["b"], "interval.b"))
    except InvalidProblem as exc:
        raise ConfigError(str(exc)) from None
    return Problem(
        interval,
        _measure(d["rho"], "rho"),
        _measure(d["sigma"], "sigma"),
        _measure(d["chi"], "chi"),
        _bc(d["bc_a"], "bc_a"),
        _bc(d["bc_b"], "bc_b"),
    )


def loads_problem(text: str) -> Problem:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse problem file: {exc}") from None
    return problem_from_dict(data)


def load_problem(path) -> Problem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads_problem(text)


def dumps_problem(p: Problem) -> str:
    d = p.to_dict()
    ordered = {"bc_a": d["bc_a"], "bc_b": d["bc_b"]}
    for key in ("interval", "rho", "sigma", "chi"):
        ordered[key] = d[key]
    return tomli_w.dumps(ordered)


def dump_problem(p: Problem, path) -> None:
    Path(path).write_text(dumps_problem(p))
