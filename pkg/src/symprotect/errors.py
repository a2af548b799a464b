"""Exception types raised by symprotect."""

from typing import List, Optional


class SymprotectError(Exception):
    """Base class for all symprotect errors."""

    kind = "error"


class ConfigError(SymprotectError):
    """Invalid run configuration.

    Collects every offending key so a single report can list them all.
    """

    kind = "config"

    def __init__(self, message: str, keys: Optional[List[str]] = None):
        super().__init__(message)
        self.keys = list(keys or [])


class SpecError(SymprotectError):
    """Physically invalid model parameters (odd spin count, negative E_C, ...)."""

    kind = "spec"


class BundleError(SymprotectError):
    """Missing or malformed verification bundle."""

    kind = "bundle"


class NumericalError(SymprotectError):
    """Base class for failures of a numerical procedure."""

    kind = "numerical"


class NonHermitianError(NumericalError):
    """Operator expected to be Hermitian is not."""

    kind = "non_hermitian"


class ConvergenceError(NumericalError):
    """Iterative solver did not reach the requested tolerance."""

    kind = "convergence"

    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class SymmetryError(NumericalError):
    """State is not an eigenvector of a requested symmetry operator."""

    kind = "symmetry"

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class AmbiguousStateError(NumericalError):
    """Degenerate group could not be resolved into well-defined |0>, |1>."""

    kind = "ambiguous_state"


class TruncationError(NumericalError):
    """Basis truncation too small for the requested accuracy."""

    kind = "truncation"
