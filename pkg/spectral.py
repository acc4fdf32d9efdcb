"""
Hermitian spectral calculus.

Operator carrier types, eigendecomposition with reproducible eigenvectors,
matrix functions, Loewner-order predicates and the nearby relations between
finite weights.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from config import (
    DEGENERACY_TOL,
    HERMITIAN_TOL,
    LOEWNER_TOL,
    POSITIVITY_FACTOR,
    TOL_EIG,
    TOL_TRACE,
)
from errors import (
    DimensionMismatchError,
    EigenDecompositionError,
    InvalidCertificateError,
    NonHermitianError,
    NotStrictlyPositiveError,
    SpectralDomainError,
    TraceNormalizationError,
)


# Configure logger
logger = logging.getLogger(__name__)


class HermitianOperator:
    """Dense self-adjoint n x n matrix, immutable after construction."""

    def __init__(self, entries, tol: float = HERMITIAN_TOL):
        """
        Symmetrize and validate a square matrix.

        Args:
            entries: Square array-like, or another HermitianOperator
            tol: Largest accepted symmetrization residual, relative to
                max(||A||_F, 1)

        Raises:
            DimensionMismatchError: If the input is not a non-empty square matrix
            SpectralDomainError: If an entry is not finite
            NonHermitianError: If the input is too far from self-adjoint
        """
        if isinstance(entries, HermitianOperator):
            matrix = entries.matrix
        else:
            matrix = np.array(entries, dtype=complex)

        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise DimensionMismatchError(f"Expected a non-empty square matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise SpectralDomainError("Matrix has non-finite entries")

        # Halve before adding so entries near the float maximum stay finite
        half, half_adjoint = 0.5 * matrix, 0.5 * matrix.conj().T
        hermitian = half + half_adjoint
        residual = float(np.linalg.norm(half - half_adjoint))
        scale = max(float(np.linalg.norm(hermitian)), 1.0)
        if residual > tol * scale:
            raise NonHermitianError(
                f"Symmetrization residual {residual:.3e} exceeds {tol:.1e} * {scale:.3e} "
                f"for a {matrix.shape[0]}x{matrix.shape[0]} matrix"
            )

        if not np.all(np.isfinite(hermitian)):
            raise SpectralDomainError(f"Symmetrized {matrix.shape[0]}x{matrix.shape[0]} matrix is not finite")
        hermitian.setflags(write=False)

        self._matrix = hermitian
        self.symmetrization_residual: float = residual

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diagonal(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @cached_property
    def decomposition(self) -> "SpectralDecomposition":
        return eig(self)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.decomposition.eigenvalues

    @cached_property
    def norm(self) -> float:
        """Operator norm, the largest eigenvalue magnitude."""
        values = self.eigenvalues
        return float(max(abs(values[0]), abs(values[-1])))

    def trace(self) -> float:
        return float(np.trace(self._matrix).real)

    def allclose(self, other, rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self._matrix, as_matrix(other), rtol=rtol, atol=atol))

    def _binary(self, other, op: Callable) -> "HermitianOperator":
        other_matrix = as_matrix(other)
        check_same_dim(self._matrix, other_matrix)
        return HermitianOperator(op(self._matrix, other_matrix))

    def __add__(self, other) -> "HermitianOperator":
        return self._binary(other, np.add)

    def __sub__(self, other) -> "HermitianOperator":
        return self._binary(other, np.subtract)

    def __neg__(self) -> "HermitianOperator":
        return HermitianOperator(-self._matrix)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        if isinstance(scalar, complex) or not np.isreal(scalar):
            raise TypeError("Only real scalars preserve self-adjointness")
        return HermitianOperator(float(scalar) * self._matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "HermitianOperator":
        return self * (1.0 / float(scalar))

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim}, norm={self.norm:.6g})"


class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    def __init__(self, eigenvalues: np.ndarray, eigenvectors: np.ndarray):
        self.eigenvalues: np.ndarray = np.array(eigenvalues, dtype=float)
        self.eigenvectors: np.ndarray = np.array(eigenvectors, dtype=complex)
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Return V diag(values) V^dagger."""
        vectors = self.eigenvectors
        return (vectors * np.asarray(values)) @ vectors.conj().T

    def reconstruct(self) -> np.ndarray:
        return self.apply(self.eigenvalues)

    def to_eigenbasis(self, matrix) -> np.ndarray:
        vectors = self.eigenvectors
        return vectors.conj().T @ as_matrix(matrix) @ vectors

    def from_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        vectors = self.eigenvectors
        return vectors @ matrix @ vectors.conj().T

    def reconstruction_residual(self, matrix, ord=2) -> float:
        return float(np.linalg.norm(self.reconstruct() - as_matrix(matrix), ord))

    def orthonormality_residual(self, ord=2) -> float:
        vectors = self.eigenvectors
        return float(np.linalg.norm(vectors.conj().T @ vectors - np.eye(self.dim), ord))


def as_matrix(value) -> np.ndarray:
    """Return the dense matrix behind an operator, weight or array."""
    if isinstance(value, FiniteWeight):
        return value.operator.matrix
    if isinstance(value, HermitianOperator):
        return value.matrix
    return np.asarray(value, dtype=complex)


def as_operator(value) -> HermitianOperator:
    if isinstance(value, FiniteWeight):
        return value.operator
    if isinstance(value, HermitianOperator):
        return value
    return HermitianOperator(value)


def check_same_dim(*matrices) -> None:
    shapes = {np.shape(m) for m in matrices}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"Operands have mismatched shapes {sorted(shapes)}")


def trace_product(a, b) -> float:
    """Tr(AB) for Hermitian A, B (always real)."""
    a_matrix, b_matrix = as_matrix(a), as_matrix(b)
    check_same_dim(a_matrix, b_matrix)
    return float(np.sum(a_matrix * b_matrix.T).real)


def _canonicalize_clusters(eigenvalues: np.ndarray, eigenvectors: np.ndarray, gap: float) -> np.ndarray:
    """
    Fix the eigenvector basis inside degenerate clusters and the column phases.

    Within a cluster the basis is replaced by the pivoted QR basis of the
    cluster projector, which depends only on the eigenspace. Each column is
    then rotated so its largest-magnitude entry is real and positive.
    """
    vectors = np.array(eigenvectors, dtype=complex)
    n = len(eigenvalues)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and eigenvalues[stop] - eigenvalues[stop - 1] <= gap:
            stop += 1
        size = stop - start
        if size > 1:
            block = vectors[:, start:stop]
            projector = block @ block.conj().T
            q, _, _ = scipy.linalg.qr(projector, pivoting=True)
            vectors[:, start:stop] = q[:, :size]
            logger.debug(f"Canonicalized degenerate cluster of size {size} at eigenvalue {eigenvalues[start]:.6g}")
        start = stop

    pivots = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[pivots, np.arange(n)]
    return vectors * (phases.conj() / np.abs(phases))


def eig(A) -> SpectralDecomposition:
    """
    Eigendecomposition of a Hermitian operator.

    Args:
        A: HermitianOperator or array-like Hermitian matrix

    Returns:
        SpectralDecomposition with ascending eigenvalues

    Raises:
        EigenDecompositionError: If the solver fails or the result does not
            reconstruct A to n * TOL_EIG * max(||A||, 1)
    """
    matrix = as_operator(A).matrix
    n = matrix.shape[0]

    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise EigenDecompositionError(
            f"Hermitian eigensolver did not converge (n={n}, ||A||_F={np.linalg.norm(matrix):.6e}): {e}"
        ) from e

    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    eigenvectors = _canonicalize_clusters(eigenvalues, eigenvectors, DEGENERACY_TOL * scale)
    decomposition = SpectralDecomposition(eigenvalues, eigenvectors)

    # Frobenius residuals bound the operator-norm residuals from above
    residual = decomposition.reconstruction_residual(matrix, ord="fro")
    if residual > TOL_EIG * n * scale or decomposition.orthonormality_residual(ord="fro") > TOL_EIG * n:
        raise EigenDecompositionError(
            f"Eigendecomposition failed its reconstruction check (n={n}, ||A||={scale:.6e}, residual={residual:.3e})"
        )
    return decomposition


def _positive(values: np.ndarray) -> np.ndarray:
    return values > 0


def _nonnegative(values: np.ndarray) -> np.ndarray:
    return values >= 0


# Domains of the scalar functions used throughout
_DOMAINS = {
    np.log: _positive,
    np.log2: _positive,
    np.log10: _positive,
    np.sqrt: _nonnegative,
}


def matfun(
    A,
    f: Callable[[np.ndarray], np.ndarray],
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> HermitianOperator:
    """
    Apply a real scalar function through the spectral decomposition.

    Args:
        A: HermitianOperator (or weight, or array)
        f: Vectorized real function of the eigenvalues
        domain: Optional predicate marking admissible eigenvalues; known
            functions such as numpy.log carry their own

    Returns:
        V f(Lambda) V^dagger

    Raises:
        SpectralDomainError: If an eigenvalue is outside the domain of f
    """
    decomposition = as_operator(A).decomposition
    values = decomposition.eigenvalues
    name = getattr(f, "__name__", repr(f))

    check = domain if domain is not None else _DOMAINS.get(f)
    if check is not None:
        admissible = np.asarray(check(values), dtype=bool)
        if not np.all(admissible):
            offending = values[~admissible][0]
            raise SpectralDomainError(f"Eigenvalue {offending!r} lies outside the domain of {name}")

    with np.errstate(all="ignore"):
        mapped = np.asarray(f(values))
    if np.iscomplexobj(mapped):
        raise SpectralDomainError(f"{name} returned complex values on a real spectrum")
    finite = np.isfinite(mapped)
    if not np.all(finite):
        offending = values[~finite][0]
        raise SpectralDomainError(f"{name} is not finite at eigenvalue {offending!r}")

    return HermitianOperator(decomposition.apply(mapped.astype(float)))


def matrix_log(A) -> HermitianOperator:
    return matfun(A, np.log)


def matrix_exp(A) -> HermitianOperator:
    return matfun(A, np.exp)


def loewner_margin(A, B) -> float:
    """Smallest eigenvalue of B - A; non-negative iff A <= B."""
    a, b = as_matrix(A), as_matrix(B)
    check_same_dim(a, b)
    difference = b - a
    return float(np.linalg.eigvalsh(0.5 * (difference + difference.conj().T))[0])


def _hermitian_norm(matrix: np.ndarray) -> float:
    values = np.linalg.eigvalsh(matrix)
    return float(max(abs(values[0]), abs(values[-1])))


def loewner_leq(A, B, tol: float = LOEWNER_TOL) -> bool:
    """
    Loewner order test A <= B.

    The tolerance is relative to max(||A||, ||B||, 1).

    Raises:
        DimensionMismatchError: If A and B have different dimensions
    """
    a, b = as_matrix(A), as_matrix(B)
    check_same_dim(a, b)
    scale = max(_hermitian_norm(a), _hermitian_norm(b), 1.0)
    return loewner_margin(a, b) >= -tol * scale


class FiniteWeight:
    """Strictly positive Hermitian operator (a faithful finite weight)."""

    def __init__(self, operator):
        """
        Args:
            operator: HermitianOperator, FiniteWeight or array-like

        Raises:
            NotStrictlyPositiveError: If the smallest eigenvalue does not
                exceed n * POSITIVITY_FACTOR * ||rho||
        """
        op = as_operator(operator)
        values = op.eigenvalues
        threshold = op.dim * POSITIVITY_FACTOR * op.norm
        if not values[0] > threshold:
            raise NotStrictlyPositiveError(
                f"Minimum eigenvalue {values[0]:.6e} does not exceed the faithfulness "
                f"threshold {threshold:.3e} (n={op.dim})"
            )
        self.operator: HermitianOperator = op
        self.strictly_positive: bool = True

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def decomposition(self) -> SpectralDecomposition:
        return self.operator.decomposition

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.operator.eigenvalues

    @cached_property
    def log_eigenvalues(self) -> np.ndarray:
        return np.log(self.eigenvalues)

    def power_matrix(self, t: float) -> np.ndarray:
        return self.decomposition.apply(np.exp(t * self.log_eigenvalues))

    def power(self, t: float) -> HermitianOperator:
        """rho^t for any real t."""
        return HermitianOperator(self.power_matrix(t))

    def log(self) -> HermitianOperator:
        return HermitianOperator(self.decomposition.apply(self.log_eigenvalues))

    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    def scaled(self, factor: float) -> "FiniteWeight":
        return FiniteWeight(self.operator * factor)

    def normalized(self) -> "DensityState":
        return DensityState(self.operator / self.trace())

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, trace={self.trace():.6g})"


class DensityState(FiniteWeight):
    """Faithful density operator: a finite weight with unit trace."""

    def __init__(self, operator, tol: float = TOL_TRACE):
        super().__init__(operator)
        trace = self.trace()
        if abs(trace - 1.0) > tol:
            raise TraceNormalizationError(f"Density state has trace {trace!r}, expected 1 within {tol:.1e}")

    @property
    def weight(self) -> FiniteWeight:
        return self


@dataclass(frozen=True)
class NearbyCertificate:
    """A pair (C, p) witnessing C^-1 rho^(1+p) <= sigma <= C rho^(1-p)."""

    C: float
    p: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.C) and self.C > 1):
            raise InvalidCertificateError(f"Certificate constant must satisfy C > 1, got {self.C!r}")
        if not 0 <= self.p < 1:
            raise InvalidCertificateError(f"Certificate exponent must lie in [0, 1), got {self.p!r}")


def _max_eigenvalue(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[-1])


def p_nearby_constant(rho: FiniteWeight, sigma: FiniteWeight, p: float = 0.0) -> float:
    """
    Smallest C with C^-1 rho^(1+p) <= sigma <= C rho^(1-p).

    Args:
        rho: Reference weight
        sigma: Compared weight
        p: Exponent in [0, 1)

    Returns:
        max(lambda_max(rho^-(1-p)/2 sigma rho^-(1-p)/2),
            lambda_max(sigma^-1/2 rho^(1+p) sigma^-1/2))
    """
    check_same_dim(rho.matrix, sigma.matrix)
    if not 0 <= p < 1:
        raise InvalidCertificateError(f"Exponent p must lie in [0, 1), got {p!r}")

    rho_half = rho.power_matrix(-(1 - p) / 2)
    upper = _max_eigenvalue(rho_half @ sigma.matrix @ rho_half)

    sigma_half = sigma.power_matrix(-0.5)
    lower = _max_eigenvalue(sigma_half @ rho.power_matrix(1 + p) @ sigma_half)
    return max(upper, lower)


def nearby_constant(rho: FiniteWeight, sigma: FiniteWeight) -> float:
    """Minimal C with C^-1 rho <= sigma <= C rho; equals 1 iff rho == sigma."""
    return p_nearby_constant(rho, sigma, 0.0)


def p_nearby_check(
    rho: FiniteWeight,
    sigma: FiniteWeight,
    cert: NearbyCertificate,
    tol: float = LOEWNER_TOL,
) -> bool:
    """True iff C^-1 rho^(1+p) <= sigma and sigma <= C rho^(1-p)."""
    check_same_dim(rho.matrix, sigma.matrix)
    lower = rho.power_matrix(1 + cert.p) / cert.C
    upper = rho.power_matrix(1 - cert.p) * cert.C
    return loewner_leq(lower, sigma, tol) and loewner_leq(sigma, upper, tol)


def as_weight(value) -> FiniteWeight:
    """Coerce to a FiniteWeight, enforcing the faithfulness gate."""
    if isinstance(value, FiniteWeight):
        return value
    return FiniteWeight(value)
