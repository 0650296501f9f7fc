"""Exception hierarchy.

Every failure mode that a caller may want to distinguish has its own class.
All of them derive from :class:`LeftDefError` so that the command line front
end can map library failures to exit codes in one place.
"""

from __future__ import annotations


class LeftDefError(Exception):
    """Base class for all library errors."""

    #: short machine readable tag used in CLI error JSON
    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in sorted(self.details.items())}
        return out


def _jsonable(v):
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    if isinstance(v, float):
        return v if v == v and abs(v) != float("inf") else repr(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return str(v)


class ConfigError(LeftDefError):
    """Problem file cannot be parsed or has the wrong shape."""

    code = "config"


class InvalidProblem(LeftDefError):
    """The coefficient data violate the standing hypotheses."""

    code = "invalid_problem"


class Unsupported(LeftDefError):
    """Input is valid mathematically but outside the implemented class."""

    code = "unsupported"


class UnreachablePoint(LeftDefError):
    code = "unreachable_point"


class NoGroundSolution(LeftDefError):
    code = "no_ground_solution"


class EndpointNotFinite(LeftDefError):
    code = "endpoint_not_finite"


class NotIntegrable(LeftDefError):
    code = "not_integrable"


class ZeroEigenvalue(LeftDefError):
    code = "zero_eigenvalue"


class AtEigenvalue(LeftDefError):
    code = "at_eigenvalue"


class ZExcluded(LeftDefError):
    """The spectral parameter is zero where a nonzero value is required."""

    code = "z_excluded"


class ZEqualsZero(ZExcluded):
    code = "z_equals_zero"


class WindowRequired(LeftDefError):
    code = "window_required"


class NotCompactlySupported(LeftDefError):
    code = "not_compactly_supported"


class InvalidPoint(LeftDefError):
    code = "invalid_point"


class IncompleteSpectralData(LeftDefError):
    code = "incomplete_spectral_data"


class NotAtomic(LeftDefError):
    code = "not_atomic"


class UnrepresentableTransform(LeftDefError):
    code = "unrepresentable_transform"


class GaugeMismatch(LeftDefError):
    code = "gauge_mismatch"


class KernelMismatch(LeftDefError):
    """The two independent kernel evaluations disagree."""

    code = "kernel_mismatch"


class NoConvergence(LeftDefError):
    code = "no_convergence"

    def __init__(self, message: str = "", best_residual: float = float("nan"), **details):
        super().__init__(message, best_residual=best_residual, **details)
        self.best_residual = best_residual
