"""Exception hierarchy for compound-mimo-capacity."""


class CompoundMimoError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(CompoundMimoError, ValueError):
    """A scalar parameter is outside its admissible range."""


class NonFiniteError(CompoundMimoError, ValueError):
    """A matrix contains NaN or Inf entries."""


class ConvergenceFailure(CompoundMimoError, ArithmeticError):
    """The LAPACK SVD kernel failed on every driver."""


class NotPSDError(CompoundMimoError, ValueError):
    """A covariance is not Hermitian positive semidefinite within tolerance."""


class DimensionMismatch(CompoundMimoError, ValueError):
    """Operand shapes are inconsistent."""


class ShapeError(CompoundMimoError, ValueError):
    """A matrix does not have the required structure (e.g. diagonal)."""


class UnsupportedNorm(CompoundMimoError, ValueError):
    """The requested uncertainty norm is not handled by this operation."""


class DimensionTooLarge(CompoundMimoError, ValueError):
    """A brute-force oracle was asked for more modes than it can enumerate."""


class ParseError(CompoundMimoError, ValueError):
    """An input document or command-line flag value is malformed."""


class CertificateError(CompoundMimoError, ArithmeticError):
    """A solver result contradicts its own optimality certificate."""
