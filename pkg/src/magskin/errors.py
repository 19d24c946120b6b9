"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: input problems (``InvalidSpecError``,
``RegimeError``, ``ConfigError``, ``SizeError``) exit with 2, numerical
failures with 3 and failed verification with 4.
"""

from __future__ import annotations


class MagskinError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(MagskinError, ValueError):
    """A parameter set violates a model invariant (Hermiticity, PSD, ...)."""


class RegimeError(MagskinError, ValueError):
    """The requested operation is not defined in this parameter regime.

    Raised e.g. when the quadratic magnon reduction is requested with a
    non-zero pump matrix.
    """


class ConfigError(MagskinError, ValueError):
    """Malformed configuration file or command line."""


class SizeError(MagskinError, ValueError):
    """Problem size exceeds the dense-matrix budget."""


class NumericalError(MagskinError, RuntimeError):
    """A numerical routine failed; ``partial`` carries whatever was computed."""

    def __init__(self, message: str, partial=None, report: dict | None = None):
        super().__init__(message)
        self.partial = partial
        self.report = report or {}


class SingularMatrixError(NumericalError):
    """LU factorisation hit a pivot below tolerance."""

    def __init__(self, message: str, pivot: float):
        super().__init__(message, report={"pivot": pivot})
        self.pivot = pivot


class ConditioningError(NumericalError):
    """Eigenvectors are too ill-conditioned to be trusted."""


class DegenerateReferenceError(NumericalError):
    """The winding reference energy lies on the spectral loop."""


class NoPointGapError(NumericalError):
    """The spectral loop encloses no area, so it has no point gap."""


class StepSizeError(NumericalError):
    """An integrator step exceeded its local error bound."""


class VerificationError(MagskinError):
    """A verification check did not pass."""
