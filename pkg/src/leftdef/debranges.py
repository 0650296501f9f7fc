"""de Branges functions, reproducing kernels and the finite-dimensional spaces B(c).

``E(z, c) = z phi_z(c) + i phi_z^[1](c)`` and the kernel of B(c) is

    K(zeta, z, c) = int_[a, c) phi_zeta* phi_z dchi + int_a^c phi_zeta^[1]* phi_z^[1] dsigma.

It is evaluated two ways, from values of E and as the integral above, and
the two must agree.  For atomic rho the spaces are finite-dimensional and
are handled through sample vectors of kernel functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .coeffs import compute_sigma_set, total_variation
from .errors import IncompleteSpectralData, InvalidPoint, KernelMismatch, NotAtomic
from .operator import SelfAdjointRealization
from .sobolev import delta_a, ground_solutions, h1_inner, h1_norm, solution_element
from .spectrum import EntireFamily, SpectralData, eigenvalues

__all__ = [
    "KernelEval",
    "Ordering",
    "OrderingResult",
    "kernel_eval",
    "embedding_check",
    "space_dimension",
    "ordering_check",
    "de_branges_margin",
    "triviality_check",
    "domain_closure_rank",
    "continuity_check",
]

KERNEL_RTOL = 1e-9
RANK_TOL = 1e-8
NEAR_DIAGONAL = 1e-3
CIRCLE_POINTS = 64


class KernelEval:
    """Evaluators of ``E(., c)`` and ``K(., ., c)`` for one entire family."""

    def __init__(self, r: SelfAdjointRealization, phi: EntireFamily, sd: SpectralData | None = None,
                 rtol: float = KERNEL_RTOL):
        self.rtol = rtol
        self.realization = r
        self.problem = r.problem
        self.phi = phi
        self.gauge = phi.gauge
        self._sd = sd

    # -- points ---------------------------------------------------------------
    def check_point(self, c: float) -> None:
        p = self.problem
        if c == p.a and p.bc_a.is_angle:
            return
        if not p.a < c < p.b:
            raise InvalidPoint(f"c = {c} is not a point of [a, b)")

    def in_sigma(self, c: float) -> bool:
        return compute_sigma_set(self.problem).contains(c)

    def require_sigma(self, c: float) -> None:
        if not self.in_sigma(c):
            raise InvalidPoint(f"c = {c} is not in the modified support of rho")

    @property
    def spectral_data(self) -> SpectralData:
        if self._sd is None:
            self._sd = eigenvalues(self.realization, self.phi)
        return self._sd

    # -- E --------------------------------------------------------------------
    def E(self, z, c: float) -> complex:
        self.check_point(c)
        y = self.phi.state(complex(z), c)
        return complex(z * y[0] + 1j * y[1])

    def E_sharp(self, z, c: float) -> complex:
        return self.E(np.conj(complex(z)), c).conjugate()

    # -- K --------------------------------------------------------------------
    def _ab(self, w, c):
        y = self.phi.state(complex(w), c)
        return w * y[0], y[1]

    def kernel_quotient(self, zeta, z, c: float) -> complex:
        """``(E(z) E#(zeta*) - E(zeta*) E#(z)) / (2i (zeta* - z))``."""
        self.check_point(c)
        zeta, z = complex(zeta), complex(z)
        w0 = zeta.conjugate()
        az, bz = self._ab(z, c)

        def g(w):
            aw, bw = self._ab(w, c)
            return (bz * aw - az * bw) / (w - z)

        if abs(w0 - z) > NEAR_DIAGONAL * (1.0 + abs(z)):
            return complex(g(w0))
        # g is entire in w: mean value over a circle around w0
        rad = 0.25 * (1.0 + abs(z))
        ts = 2.0 * np.pi * (np.arange(CIRCLE_POINTS) + 0.5) / CIRCLE_POINTS
        return complex(np.mean([g(w0 + rad * np.exp(1j * t)) for t in ts]))

    def kernel_integral(self, zeta, z, c: float) -> complex:
        """The energy inner product of ``phi_z`` and ``phi_zeta`` over ``(a, c)``."""
        self.check_point(c)
        p = self.problem
        fz = solution_element(self.phi.path(complex(z)))
        fzeta = solution_element(self.phi.path(complex(zeta)))
        return h1_inner(p, fz, fzeta, domain=(p.a, c))

    def _endpoint_kernel(self, zeta, z) -> complex:
        p = self.problem
        nrm2 = h1_norm(p, delta_a(p)) ** 2
        return complex(np.conj(self.phi(complex(zeta), p.a)) * self.phi(complex(z), p.a) / nrm2)

    def kernel(self, zeta, z, c: float, check: bool = True) -> complex:
        """``K(zeta, z, c)``; both evaluations are compared unless ``check`` is off."""
        self.check_point(c)
        if c == self.problem.a:
            return self._endpoint_kernel(zeta, z)
        kq = self.kernel_quotient(zeta, z, c)
        if check:
            ki = self.kernel_integral(zeta, z, c)
            scale = max(abs(kq), abs(ki), self._diag_scale(zeta, z, c))
            if abs(kq - ki) > self.rtol * scale:
                raise KernelMismatch(
                    f"kernel evaluations disagree at c = {c}: {kq} vs {ki}", quotient=str(kq), integral=str(ki)
                )
        return kq

    def _diag_scale(self, zeta, z, c) -> float:
        # Cauchy-Schwarz bound |K(zeta, z)| <= sqrt(K(zeta, zeta) K(z, z))
        kzz = abs(self.kernel_quotient(z, z, c))
        kss = abs(self.kernel_quotient(zeta, zeta, c))
        return math.sqrt(kzz * kss)

    # -- finite-dimensional machinery ------------------------------------------
    def require_atomic(self) -> None:
        if not self.problem.rho.is_atomic or not self.phi.exact:
            raise NotAtomic("finite-dimensional B(c) needs atomic rho and exact mode")

    def spanning_nodes(self, extra: int = 2) -> np.ndarray:
        """The eigenvalues plus ``extra`` Chebyshev nodes over the eigenvalue range.

        Kernels at the eigenvalues are nearly orthogonal once ``c`` passes the
        support of rho, which keeps the Gram matrices well conditioned even
        when the spectrum spreads over several decades.
        """
        lams = np.array(self.spectral_data.eigenvalues)
        if len(lams) == 0:
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(lams.min()), float(lams.max())
            pad = 0.5 * max(hi - lo, abs(hi), abs(lo))
            lo, hi = lo - pad, hi + pad
        t = np.cos(np.pi * (np.arange(extra) + 0.5) / extra) if extra else np.zeros(0)
        return np.concatenate([lams, 0.5 * (lo + hi) + 0.5 * (hi - lo) * t])

    def gram(self, zetas, c: float) -> np.ndarray:
        """``G[j, k] = K(zeta_k, zeta_j, c) = <K_{zeta_j}, K_{zeta_k}>_B(c)``."""
        n = len(zetas)
        G = np.empty((n, n), dtype=complex)
        for j in range(n):
            for k in range(n):
                G[j, k] = self.kernel(zetas[k], zetas[j], c, check=False)
        return G

    def sample_matrix(self, zetas, c: float) -> np.ndarray:
        """Columns are kernel functions ``K(zeta_j, ., c)`` as vectors of L^2(mu).

        Every function in B(c) is a polynomial of degree below the number of
        eigenvalues, so its values there determine it.
        """
        sd = self.spectral_data
        w = np.sqrt(np.array(sd.weights))
        return np.array([[self.kernel(zt, lam, c, check=False) for zt in zetas] for lam in sd.eigenvalues]) \
            * w[:, None]


def kernel_eval(r: SelfAdjointRealization, phi: EntireFamily, sd: SpectralData | None = None,
                rtol: float = KERNEL_RTOL) -> KernelEval:
    return KernelEval(r, phi, sd, rtol)


# ---------------------------------------------------------------------------
# rank helpers


def _rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def _normalized_gram_rank(G: np.ndarray, tol: float = RANK_TOL) -> int:
    d = np.sqrt(np.abs(np.diag(G)))
    keep = d > 0
    if not np.any(keep):
        return 0
    Gn = G[np.ix_(keep, keep)] / np.outer(d[keep], d[keep])
    ev = np.linalg.eigvalsh(0.5 * (Gn + Gn.conj().T))
    return int(np.sum(ev > tol * max(1.0, ev.max())))


def _orth(M: np.ndarray, tol: float = RANK_TOL, ref: float | None = None) -> np.ndarray:
    """Orthonormal basis of the column span; singular values below ``tol * ref`` count as zero."""
    if M.size == 0:
        return M.reshape(M.shape[0], 0)
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    ref = sv[0] if ref is None else ref
    if sv.size == 0 or ref == 0.0:
        return U[:, :0]
    return U[:, sv > tol * ref]


def _intersect(U: np.ndarray, V: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Orthonormal basis of the intersection of two column spans (orthonormal inputs)."""
    if U.shape[1] == 0 or V.shape[1] == 0:
        return U[:, :0]
    # principal angles: singular values of U^H V equal to one mark common directions
    W, s, _ = np.linalg.svd(U.conj().T @ V)
    common = s > 1.0 - tol
    return U @ W[:, : int(np.sum(common))]


# ---------------------------------------------------------------------------
# operations


def space_dimension(ke: KernelEval, c: float) -> int:
    """Dimension of B(c): numerical rank of the normalized kernel Gram matrix."""
    ke.require_atomic()
    ke.check_point(c)
    zetas = ke.spanning_nodes()
    return _normalized_gram_rank(ke.gram(zetas, c))


def embedding_check(ke: KernelEval, c: float, zeta, xi) -> float:
    """``|<F, G>_mu - (<P F, P G>_B(c) + F(0) G(0)* ||delta_c||^2 / phi_0(c)^2)|``.

    ``F = K(zeta, ., c)``, ``G = K(xi, ., c)`` and ``P`` projects onto the
    functions vanishing at zero.
    """
    sd = ke.spectral_data
    if not sd.complete:
        raise IncompleteSpectralData("the embedding identity needs the full spectrum")
    ke.require_sigma(c)
    p = ke.problem
    zeta, xi = complex(zeta), complex(xi)
    lhs = sum(ke.kernel(zeta, lam, c) * np.conj(ke.kernel(xi, lam, c)) * mu for lam, mu in sd.pairs())
    k00 = ke.kernel(0.0, 0.0, c).real
    f0 = ke.kernel(zeta, 0.0, c)
    g0 = ke.kernel(xi, 0.0, c)
    if c == p.a:
        nrm2 = h1_norm(p, delta_a(p)) ** 2
    else:
        nrm2 = ground_solutions(p).delta_norm2(c)
    phi0 = ke.phi(0.0, c).real
    rhs = ke.kernel(zeta, xi, c) - f0 * np.conj(g0) / k00 + f0 * np.conj(g0) * nrm2 / phi0 ** 2
    return float(abs(lhs - rhs))


class Ordering(enum.Enum):
    STRICT_INCLUSION = "StrictInclusion"
    CODIM_ONE = "CodimOne"
    VIOLATION = "Violation"


@dataclass(frozen=True)
class OrderingResult:
    verdict: Ordering
    dim_lower: int
    dim_upper: int
    codim_one: bool
    residual: float

    @property
    def gap(self) -> int:
        return self.dim_upper - self.dim_lower

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "dim_lower": self.dim_lower,
            "dim_upper": self.dim_upper,
            "gap": self.gap,
            "codim_one": self.codim_one,
            "residual": self.residual,
        }


def ordering_check(ke: KernelEval, c1: float, c2: float) -> OrderingResult:
    """Check that B(c1) is a proper subspace of B(c2) for ``c1 < c2`` in the modified support."""
    ke.require_atomic()
    if not c1 < c2:
        raise InvalidPoint("ordering_check needs c1 < c2")
    ke.require_sigma(c1)
    ke.require_sigma(c2)
    zetas = ke.spanning_nodes()
    d1 = space_dimension(ke, c1)
    d2 = space_dimension(ke, c2)
    S1 = ke.sample_matrix(zetas, c1)
    U, _, _ = np.linalg.svd(ke.sample_matrix(zetas, c2), full_matrices=False)
    S2 = U[:, :d2]
    resid = S1 - S2 @ (S2.conj().T @ S1)
    norms = np.linalg.norm(S1, axis=0)
    rel = float(np.max(np.linalg.norm(resid, axis=0) / np.where(norms > 0, norms, 1.0)))
    contained = rel < KERNEL_RTOL
    verdict = Ordering.STRICT_INCLUSION if contained and d2 > d1 else Ordering.VIOLATION
    p = ke.problem
    no_mass = total_variation(p.rho, c1, c2, p.interval) == 0.0
    return OrderingResult(verdict, d1, d2, bool(contained and no_mass and d2 - d1 == 1), rel)


def de_branges_margin(ke: KernelEval, c: float, zs) -> float:
    """``min (|E(z, c)| - |E(z*, c)|)`` over points ``zs`` of the upper half-plane."""
    vals = []
    for z in zs:
        z = complex(z)
        if z.imag <= 0:
            raise ValueError("sample points must lie in the upper half-plane")
        vals.append(abs(ke.E(z, c)) - abs(ke.E(z.conjugate(), c)))
    return float(min(vals))


def _b0_basis(ke: KernelEval, c: float, zetas) -> np.ndarray:
    """Orthonormal basis (in L^2(mu) coordinates) of B°(c): kernels minus their value at 0."""
    sd = ke.spectral_data
    w = np.sqrt(np.array(sd.weights))
    k0 = np.array([ke.kernel(0.0, lam, c, check=False) for lam in sd.eigenvalues]) * w
    k00 = ke.kernel(0.0, 0.0, c, check=False).real
    S = ke.sample_matrix(zetas, c)
    f0 = np.array([ke.kernel(zt, 0.0, c, check=False) for zt in zetas])
    B = S - np.outer(k0, f0) / k00
    return _orth(B, ref=float(np.max(np.linalg.norm(S, axis=0))))


def triviality_check(ke: KernelEval) -> dict:
    """Rank of the intersection of all B°(c) and of the union of all B(c) inside L^2(mu)."""
    ke.require_atomic()
    sd = ke.spectral_data
    pts = list(compute_sigma_set(ke.problem).points)
    zetas = ke.spanning_nodes()
    inter = None
    for c in pts:
        B = _b0_basis(ke, c, zetas)
        inter = B if inter is None else _intersect(inter, B)
    cols = [ke.sample_matrix(zetas, c) for c in pts]
    union_rank = _rank(np.hstack(cols)) if cols else 0
    return {
        "intersection_rank": 0 if inter is None else int(inter.shape[1]),
        "union_rank": union_rank,
        "eigenvalue_count": len(sd),
    }


def domain_closure_rank(ke: KernelEval) -> int:
    """Rank of ``Phi[lam, c] = phi_lam(c)`` over the modified support (point evaluations)."""
    ke.require_atomic()
    sd = ke.spectral_data
    pts = list(compute_sigma_set(ke.problem).points)
    Phi = np.array([[ke.phi(lam, c).real for c in pts] for lam in sd.eigenvalues])
    return _rank(Phi)


def continuity_check(ke: KernelEval, c: float, zetas, offsets) -> dict:
    """Gram ranks and kernel drift at ``c +- h`` for the offsets ``h``."""
    G0 = ke.gram(zetas, c)
    out = {"c": c, "rank": _normalized_gram_rank(G0), "samples": []}
    for h in offsets:
        for side in (-1.0, 1.0):
            x = c + side * h
            G = ke.gram(zetas, x)
            out["samples"].append({
                "x": x,
                "rank": _normalized_gram_rank(G),
                "drift": float(np.max(np.abs(G - G0)) / np.max(np.abs(G0))),
            })
    return out
