"""Command line front end.

Exit codes: 0 when every asserted contract holds, 1 on a contract violation
or numerical failure, 2 on configuration errors (unreadable or invalid
input).  Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .coeffs import (
    classify_endpoint,
    compute_sigma_set,
    deficiency_index,
    validate,
)
from .debranges import embedding_check, kernel_eval
from .errors import ConfigError, InvalidProblem, LeftDefError
from .inverse import (
    LiouvilleMap,
    apply_liouville,
    asymptotics_check,
    atoms_distance,
    ch_forward,
    ch_inverse,
    ch_problem,
    verify_liouville,
)
from .operator import green_function, realize
from .problemfile import dumps_problem, load_problem
from .spectrum import SpectralData, eigenvalues, phi_family, theta_family, weyl_m

__all__ = ["main", "run", "build_parser", "parse_zgrid"]

EPS_FLOOR = 4.0 * np.finfo(float).eps

TOLERANCES = {
    "kernel": 1e-9,
    "embed": 1e-9,
    "roundtrip": 1e-8,
    "liouville-solution": 1e-8,
    "liouville-spectrum": 1e-9,
}


class _ContractFailure(Exception):
    def __init__(self, payload):
        super().__init__("contract violated")
        self.payload = payload


# ---------------------------------------------------------------------------
# parsing helpers


def parse_zgrid(text: str) -> list[complex]:
    """``start:stop:count[:imag]`` or a comma separated list of complex literals."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            imag = float(parts[3]) if len(parts) == 4 else 0.0
            if count < 1:
                raise ValueError
            return [complex(x, imag) for x in np.linspace(start, stop, count)]
        return [complex(tok.replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}") from None


def _tolerances(args) -> dict:
    tol = dict(TOLERANCES)
    for key in TOLERANCES:
        val = getattr(args, "tol_" + key.replace("-", "_"), None)
        if val is None:
            continue
        if not val >= EPS_FLOOR:
            raise ConfigError(f"--tol-{key} must be at least {EPS_FLOOR!r}")
        tol[key] = val
    return tol


def _window(args):
    lo, hi = args.lambda_min, args.lambda_max
    if lo is None and hi is None:
        return None
    if lo is None or hi is None or not lo < hi:
        raise ConfigError("--lambda-min and --lambda-max must be given together with min < max")
    return (lo, hi)


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# output


def _emit(args, payload: dict, rows: list[dict] | None = None) -> None:
    """Write ``payload`` as JSON, or ``rows`` as CSV with the gauge in a comment header."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        gauge = payload.get("gauge")
        if gauge is not None:
            buf.write("# gauge: " + json.dumps(gauge, sort_keys=True) + "\n")
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=False, default=_json_default) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"not serializable: {type(v)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    p = load_problem(args.problem)
    report = validate(p)
    _emit(args, report.to_dict())
    if not report.ok:
        failed = report.failed()
        first = failed[0]
        raise InvalidProblem(f"{first.name}: {first.message}", clauses=[c.name for c in failed])
    return 0


def cmd_classify(args) -> int:
    p = load_problem(args.problem)
    realize(p, check_zero=False)
    payload = {
        "left": classify_endpoint(p, "left").value,
        "right": classify_endpoint(p, "right").value,
        "deficiency_index": deficiency_index(p),
        "sigma_set": compute_sigma_set(p).to_dict(),
    }
    _emit(args, payload)
    return 0


def _spectral(args, p):
    r = realize(p)
    phi = phi_family(r)
    sd = eigenvalues(r, phi, window=_window(args))
    return r, phi, sd


def cmd_spectrum(args) -> int:
    p = load_problem(args.problem)
    _, _, sd = _spectral(args, p)
    payload = sd.to_dict()
    rows = [{"lambda": lam, "mu": mu} for lam, mu in sd.pairs()]
    _emit(args, payload, rows)
    return 0


def cmd_weyl(args) -> int:
    p = load_problem(args.problem)
    r = realize(p)
    phi = phi_family(r)
    th = theta_family(r, phi)
    zs = parse_zgrid(args.zgrid)
    vals = _pmap(lambda z: weyl_m(r, phi, th, z), zs, args.threads)
    rows = [{"z_re": z.real, "z_im": z.imag, "M_re": m.real, "M_im": m.imag} for z, m in zip(zs, vals)]
    _emit(args, {"gauge": phi.gauge, "rows": rows}, rows)
    return 0


def cmd_green(args) -> int:
    p = load_problem(args.problem)
    r = realize(p)
    pts = _floats(args.points, "points")
    zs = parse_zgrid(args.zgrid)
    jobs = [(z, x, y) for z in zs for x in pts for y in pts]
    vals = _pmap(lambda j: green_function(r, j[0], j[1], j[2]), jobs, args.threads)
    rows = [{"z_re": z.real, "z_im": z.imag, "x": x, "y": y, "G_re": g.real, "G_im": g.imag}
            for (z, x, y), g in zip(jobs, vals)]
    _emit(args, {"rows": rows}, rows)
    return 0


def cmd_kernel(args) -> int:
    p = load_problem(args.problem)
    r = realize(p)
    phi = phi_family(r)
    ke = kernel_eval(r, phi, rtol=_tolerances(args)["kernel"])
    c = args.c
    lo = -10.0 if args.lambda_min is None else args.lambda_min
    hi = 10.0 if args.lambda_max is None else args.lambda_max
    lams = np.linspace(lo, hi, args.samples)

    def row(lam):
        e = ke.E(lam, c)
        k = ke.kernel(lam, lam, c)
        return {"lambda": float(lam), "E_re": e.real, "E_im": e.imag, "E_abs2": abs(e) ** 2, "K_diag": k.real}

    rows = _pmap(row, list(lams), args.threads)
    _emit(args, {"gauge": phi.gauge, "c": c, "rows": rows}, rows)
    return 0


def cmd_embed(args) -> int:
    p = load_problem(args.problem)
    r = realize(p)
    phi = phi_family(r)
    ke = kernel_eval(r, phi)
    tol = _tolerances(args)["embed"]
    rng = np.random.default_rng(args.seed)
    pairs = [(0j, 0j)] + [
        (complex(*rng.normal(size=2)), complex(*rng.normal(size=2))) for _ in range(args.samples)
    ]
    rows = []
    for c in compute_sigma_set(p).points:
        for zeta, xi in pairs:
            res = embedding_check(ke, c, zeta, xi)
            rows.append({"c": c, "zeta_re": zeta.real, "zeta_im": zeta.imag,
                         "xi_re": xi.real, "xi_im": xi.imag, "residual": res})
    worst = max((row["residual"] for row in rows), default=0.0)
    payload = {"gauge": phi.gauge, "max_residual": worst, "tolerance": tol, "rows": rows}
    _emit(args, payload, rows)
    if not worst < tol:
        raise _ContractFailure({"error": "contract", "message": "embedding residual above tolerance",
                                "max_residual": worst})
    return 0


def cmd_liouville(args) -> int:
    p = load_problem(args.problem)
    tol = _tolerances(args)
    lm = LiouvilleMap.affine(args.slope, args.shift, args.kappa)
    p2 = apply_liouville(p, lm)
    rep = verify_liouville(p, p2, lm, window=_window(args))
    rep.tol_solution = tol["liouville-solution"]
    rep.tol_spectrum = tol["liouville-spectrum"]
    payload = {"map": lm.to_dict(), "report": rep.to_dict(), "problem": dumps_problem(p2)}
    _emit(args, payload)
    if not rep.ok:
        raise _ContractFailure({"error": "contract", "message": "Liouville verification failed",
                                "report": rep.to_dict()})
    return 0


def _load_spectral(path) -> SpectralData:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read spectral data {path}: {exc}") from None
    try:
        return SpectralData.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed spectral data: {exc}") from None


def cmd_invert(args) -> int:
    sd = _load_spectral(args.spectral)
    n = args.atoms if args.atoms is not None else len(sd)
    omega = ch_inverse(sd, n)
    _emit(args, {"atoms": [{"pos": x, "mass": m} for x, m in omega]},
          [{"pos": x, "mass": m} for x, m in omega])
    return 0


def _peakon_atoms(p) -> list[tuple[float, float]]:
    """Atoms of a problem file that is a peakon problem (rejects anything else)."""
    omega = sorted((at.pos, at.mass) for at in p.rho.atoms)
    try:
        ref = ch_problem(omega)
    except InvalidProblem as exc:
        raise ConfigError(f"not a peakon problem: {exc}") from None
    if ref != p:
        raise ConfigError("roundtrip needs a peakon problem: line, sigma = 1, chi = 1/4, atomic rho")
    return omega


def cmd_roundtrip(args) -> int:
    p = load_problem(args.problem)
    omega = _peakon_atoms(p)
    tol = _tolerances(args)["roundtrip"]
    sd = ch_forward(omega)
    rec = ch_inverse(sd, len(omega))
    sd2 = ch_forward(rec)
    atom_res = atoms_distance(omega, rec)
    lam_res = max(abs(a - b) / abs(a) for a, b in zip(sd.eigenvalues, sd2.eigenvalues))
    mu_res = max(abs(a - b) / abs(a) for a, b in zip(sd.weights, sd2.weights))
    payload = {
        "gauge": sd.gauge,
        "atoms": [{"pos": x, "mass": m} for x, m in omega],
        "recovered": [{"pos": x, "mass": m} for x, m in rec],
        "max_atom_residual": atom_res,
        "max_data_residual": max(lam_res, mu_res),
        "tolerance": tol,
    }
    _emit(args, payload)
    if not (atom_res < tol and max(lam_res, mu_res) < tol):
        raise _ContractFailure({"error": "contract", "message": "roundtrip residual above tolerance",
                                "max_atom_residual": atom_res})
    return 0


def cmd_asymptotics(args) -> int:
    p = load_problem(args.problem)
    ys = _floats(args.ygrid, "y grid")
    if not ys or any(y <= 0 for y in ys) or any(b <= a for a, b in zip(ys, ys[1:])):
        raise ConfigError("the y grid must be positive and increasing")
    rep = asymptotics_check(p, args.x, args.x_tilde, ys)
    payload = rep.to_dict()
    _emit(args, payload, payload["table"])
    if not rep.ok:
        raise _ContractFailure({"error": "contract", "message": "asymptotic value off the limit",
                                "deviation": rep.deviation})
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--output", "-o", help="write the result here instead of stdout")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--lambda-min", type=float)
    sp.add_argument("--lambda-max", type=float)
    sp.add_argument("--zgrid", default="-5:5:11:1", help="start:stop:count[:imag] or z1,z2,...")
    sp.add_argument("--threads", type=int, default=1)
    for key, val in TOLERANCES.items():
        sp.add_argument(f"--tol-{key}", type=float, help=f"default {val!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leftdef", description="Left-definite Sturm-Liouville problems")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext, problem=True):
        sp = sub.add_parser(name, help=helptext)
        if problem:
            sp.add_argument("problem", help="problem file (TOML)")
        _common(sp)
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check the standing hypotheses")
    add("classify", cmd_classify, "endpoint classification and modified support")
    add("spectrum", cmd_spectrum, "eigenvalues and weights")
    add("weyl", cmd_weyl, "Weyl function over a z grid")
    sp = add("green", cmd_green, "resolvent kernel samples")
    sp.add_argument("--points", required=True, help="comma separated x values")
    sp = add("kernel", cmd_kernel, "E and K traces over a lambda grid")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--samples", type=int, default=41)
    sp = add("embed", cmd_embed, "embedding identity residuals")
    sp.add_argument("--samples", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("liouville", cmd_liouville, "apply and verify an affine Liouville map")
    sp.add_argument("--slope", type=float, default=1.0)
    sp.add_argument("--shift", type=float, default=0.0)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp = add("invert", cmd_invert, "reconstruct peakon atoms from spectral data JSON", problem=False)
    sp.add_argument("spectral", help="spectral data JSON as written by 'spectrum'")
    sp.add_argument("--atoms", type=int)
    add("roundtrip", cmd_roundtrip, "forward then inverse peakon map")
    sp = add("asymptotics", cmd_asymptotics, "high-energy growth of phi")
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--x-tilde", type=float, required=True)
    sp.add_argument("--ygrid", default="1e3,1e4,1e5,1e6,1e7")
    return ap


def _fail(payload: dict, code: int) -> int:
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=_json_default) + "\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        _tolerances(args)
        return args.func(args)
    except _ContractFailure as exc:
        return _fail(exc.payload, 1)
    except (ConfigError, InvalidProblem) as exc:
        return _fail(exc.to_dict(), 2)
    except LeftDefError as exc:
        return _fail(exc.to_dict(), 1)
    except ValueError as exc:
        return _fail({"error": "value", "message": str(exc)}, 1)


run = main


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
