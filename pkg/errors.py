"""
Exceptions raised by the manifold toolkit.

Each class also derives from the builtin it refines, so callers may catch
either the specific error or the plain ValueError/RuntimeError.
"""


class ManifoldError(Exception):
    """Base class for all toolkit errors."""


class NonHermitianError(ManifoldError, ValueError):
    """Input matrix is too far from self-adjoint to be symmetrized."""


class DimensionMismatchError(ManifoldError, ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class SpectralDomainError(ManifoldError, ValueError):
    """An eigenvalue lies outside the domain of a matrix function."""


class NotStrictlyPositiveError(ManifoldError, ValueError):
    """Operator fails the faithfulness gate of a finite weight."""


class EigenDecompositionError(ManifoldError, RuntimeError):
    """The Hermitian eigensolver did not converge."""


class InvalidCertificateError(ManifoldError, ValueError):
    """A nearby certificate violates C > 1 or 0 <= p < 1."""


class PreconditionError(ManifoldError, ValueError):
    """An operation was called outside its documented preconditions."""


class SeriesOrderError(ManifoldError, ValueError):
    """Requested truncation order is outside the stable range."""


class MatrixFormatError(ManifoldError, ValueError):
    """A matrix interchange document could not be parsed."""


class TraceNormalizationError(ManifoldError, ValueError):
    """A density state does not have unit trace."""
