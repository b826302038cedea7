"""Exception types shared across the package."""


class ErgopropError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(ErgopropError):
    """Operands have incompatible matrix dimensions."""


class NonHermitianInput(ErgopropError):
    """A Hermitian matrix was required but the symmetry tolerance was violated."""


class MatrixExpOverflow(ErgopropError):
    """Intermediate magnitudes of a matrix exponential left the floating range."""


class NotAState(ErgopropError):
    """Input failed the density-matrix checks (Hermiticity, positivity, unit trace)."""


class KernelHit(ErgopropError):
    """A projective application met a state annihilated by the map."""


class UnsupportedDim(ErgopropError):
    """The requested algorithm is only available at a specific dimension."""


class OrderViolation(ErgopropError):
    """A time window was requested with start >= end."""


class InvalidModel(ErgopropError):
    """Environment model failed validation."""


class InvalidChain(ErgopropError):
    """Rate matrix is not a valid continuous-time Markov generator."""


class NonContracting(ErgopropError):
    """An estimator found no contraction where the procedure requires one."""


class NotFoundUpTo(ErgopropError):
    """A searched quantity was not found within the given horizon."""

    def __init__(self, horizon, message=None):
        self.horizon = horizon
        super().__init__(message or f"not found up to horizon {horizon}")


class TooLarge(ErgopropError):
    """Input exceeds the exact-enumeration bound."""


class DegenerateVariance(ErgopropError):
    """A sampled functional is almost surely constant."""


class ConfigError(ErgopropError):
    """Run configuration failed schema validation."""


class ExperimentError(ErgopropError):
    """An experiment failed while executing; carries context."""
