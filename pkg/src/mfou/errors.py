"""Exception taxonomy.

Two families matter to callers: `ConfigError` (bad user input, CLI exit
code 2) and `NumericalError` (a computation that could not be completed to
contract, CLI exit code 3). Everything numerical carries enough context to
diagnose the failure without re-running.
"""

from __future__ import annotations


class MfouError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MfouError, ValueError):
    """Invalid configuration input (file, key, value, or combination)."""


class NumericalError(MfouError):
    """A numerical routine failed to meet its contract."""


class GridTooCoarse(NumericalError, ValueError):
    """Grid has too few cells for the requested operation."""


class GridMismatch(NumericalError, ValueError):
    """Two objects were built on different grids."""


class LengthMismatch(NumericalError, ValueError):
    """Array arguments have incompatible lengths."""


class NotSymmetric(NumericalError, ValueError):
    """Matrix expected to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(NumericalError):
    """Cholesky failed; `pivot` is the 1-based index of the failing minor."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = int(pivot)
        super().__init__(message or f"matrix not positive definite at pivot {pivot}")


class SingularMatrix(NumericalError):
    """Dense solve encountered a (numerically) singular matrix."""


class EmbeddingFailed(NumericalError):
    """Neither circulant embedding nor the Cholesky fallback produced a factor."""


class ResidualTooLarge(NumericalError):
    """Kernel solve residual exceeded the contract bound."""

    def __init__(self, residual: float, bound: float, context: str = ""):
        self.residual = float(residual)
        self.bound = float(bound)
        msg = f"residual {residual:.3e} exceeds bound {bound:.3e}"
        super().__init__(msg + (f" ({context})" if context else ""))


class NonMonotoneBracket(NumericalError):
    """Quadratic-variation bracket failed to be strictly increasing."""


class NodeOutOfRange(NumericalError, ValueError):
    """Requested time does not lie on the table's grid."""


class NodeSetTooLarge(NumericalError, ValueError):
    """Oracle node set exceeds the supported size."""


class DegeneratePath(NumericalError):
    """Estimator denominator numerically zero; no estimate possible."""


class PsiNotPositive(NumericalError):
    """Bracket derivative reciprocal psi must be positive to build the ODE matrices."""


class BlowUp(NumericalError):
    """ODE state exceeded the magnitude guard; `time` is the blow-up time."""

    def __init__(self, time: float, magnitude: float):
        self.time = float(time)
        self.magnitude = float(magnitude)
        super().__init__(f"solution magnitude {magnitude:.3e} at t={time:.6g}")


class NonPositiveDet(NumericalError):
    """det(Psi1) <= 0 where the log-determinant route needs it positive."""


class ComplexEigenvalues(NumericalError):
    """Eigenvalue split undefined: theta^2/4 + mu/2 < 0."""


class ExperimentInvalid(NumericalError):
    """An experiment cell failed a validity gate (e.g. attrition too high)."""
