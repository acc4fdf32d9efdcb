"""
Perturbation calculus around a finite weight rho0 = exp(-H0).

The sign convention is fixed globally: the perturbed weight is
rho_X = exp(log rho0 - X), so the Dyson series carries alternating signs.
"""
import logging
from typing import List, Tuple

import numpy as np
import scipy.linalg
import scipy.special

from config import LOEWNER_TOL, MAX_SERIES_ORDER
from errors import PreconditionError, SeriesOrderError
from models import ExpansionResult, FreeEnergy, Perturbation, SandwichBounds
from norms import araki_norm
from spectral import (
    DensityState,
    FiniteWeight,
    HermitianOperator,
    NearbyCertificate,
    as_operator,
    as_weight,
    check_same_dim,
    loewner_leq,
    p_nearby_check,
)


# Configure logger
logger = logging.getLogger(__name__)


def _exponent(pert: Perturbation) -> HermitianOperator:
    """log rho0 - X."""
    return HermitianOperator(pert.base.log().matrix - pert.X.matrix)


def perturbed_weight(pert: Perturbation) -> FiniteWeight:
    """
    Unnormalized perturbed weight rho_X = exp(log rho0 - X).

    Args:
        pert: Base weight and perturbation

    Returns:
        FiniteWeight rho_X
    """
    decomposition = _exponent(pert).decomposition
    return FiniteWeight(decomposition.apply(np.exp(decomposition.eigenvalues)))


def perturbed_state(pert: Perturbation) -> Tuple[DensityState, FreeEnergy]:
    """
    Normalized perturbed state exp(log rho0 - X - Psi_X) and its free energy.

    Psi_X is a log-sum-exp over the spectrum of log rho0 - X, so the state is
    formed from exponents <= 0 and cannot overflow for finite inputs.

    Returns:
        Tuple of (state, FreeEnergy)
    """
    decomposition = _exponent(pert).decomposition
    values = decomposition.eigenvalues
    psi = float(scipy.special.logsumexp(values))
    logger.debug(f"Free energy {psi:.12g} (spectral maximum {values[-1]:.6g})")

    state = DensityState(decomposition.apply(np.exp(values - psi)))
    return state, FreeEnergy(psi=psi, z=float(np.exp(psi)))


def center(pert: Perturbation) -> Perturbation:
    """Subtract the state expectation: X' = X - Tr(rho0_hat X) I."""
    shifted = pert.X.matrix - pert.expectation() * np.eye(pert.X.dim)
    return Perturbation(pert.base, shifted, centered=True)


def _check_order(N: int) -> None:
    if not 0 <= N <= MAX_SERIES_ORDER:
        raise SeriesOrderError(
            f"Truncation order {N} outside [0, {MAX_SERIES_ORDER}]; "
            f"evaluate exp(log rho - X) through matfun instead"
        )


def series_tail_bound(M: float, N: int) -> float:
    """sum_{n>N} M^n/n! = e^M P(N+1, M), P the regularized lower incomplete gamma."""
    if M == 0.0:
        return 0.0
    return float(np.exp(M) * scipy.special.gammainc(N + 1, M))


def _block_terms(diagonal: np.ndarray, coupling: np.ndarray, N: int) -> np.ndarray:
    """
    Orders 0..N of the Dyson expansion of exp(diag(d) + P).

    The exponential of the block upper-bidiagonal matrix with N+1 diagonal
    blocks diag(d) and off-diagonal blocks P holds, in block (0, k), the
    k-fold simplex integral of e^{a_1 d} P e^{a_2 d} ... P e^{a_{k+1} d}.
    This is the divided-difference table of the exponential in closed form.

    Returns:
        Array of shape (N+1, n, n)
    """
    n = diagonal.shape[0]
    size = (N + 1) * n
    block = np.zeros((size, size), dtype=complex)
    for k in range(N + 1):
        rows = slice(k * n, (k + 1) * n)
        block[rows, rows] = np.diag(diagonal)
        if k < N:
            block[rows, (k + 1) * n:(k + 2) * n] = coupling
    first_row = scipy.linalg.expm(block)[:n, :]
    return first_row.reshape(n, N + 1, n).transpose(1, 0, 2)


def dyson_partial_sums(rho: FiniteWeight, X, N: int) -> List[ExpansionResult]:
    """
    Every truncation 0..N of the Dyson expansion, from one block exponential.

    Returns:
        List whose k-th entry is the ExpansionResult of order k
    """
    _check_order(N)
    rho = as_weight(rho)
    X = as_operator(X)
    check_same_dim(rho.matrix, X.matrix)

    M = araki_norm(X, rho)
    scale = rho.operator.norm

    if N == 0 or not np.any(X.matrix):
        term_norms = (scale,) + (0.0,) * N
        return [
            ExpansionResult(
                truncation_order=k,
                partial_sum=rho.operator,
                remainder_bound=scale * series_tail_bound(M, k),
                araki_M=M,
                term_norms=term_norms[:k + 1],
            )
            for k in range(N + 1)
        ]

    decomposition = rho.decomposition
    logs = rho.log_eigenvalues
    shift = float(logs[-1])
    terms = _block_terms(logs - shift, -decomposition.to_eigenbasis(X), N) * np.exp(shift)
    term_norms = tuple(float(v) for v in np.linalg.norm(terms, ord=2, axis=(1, 2)))
    logger.debug(f"Dyson series to order {N}: M={M:.6g}, last term norm {term_norms[-1]:.3e}")

    partial = np.cumsum(terms, axis=0)
    return [
        ExpansionResult(
            truncation_order=k,
            partial_sum=HermitianOperator(decomposition.from_eigenbasis(partial[k])),
            remainder_bound=scale * series_tail_bound(M, k),
            araki_M=M,
            term_norms=term_norms[:k + 1],
        )
        for k in range(N + 1)
    ]


def dyson_series(rho: FiniteWeight, X, N: int) -> ExpansionResult:
    """
    Truncated Dyson (Matsubara) expansion of exp(log rho - X).

    The order-n term is (-1)^n times the simplex integral of
    rho^{a_1} X rho^{a_2} ... X rho^{a_{n+1}}, evaluated in the eigenbasis
    of rho. Each term is bounded by ||rho|| M^n/n! with M the Araki norm.

    Args:
        rho: Base weight
        X: Hermitian perturbation
        N: Truncation order, 0 <= N <= MAX_SERIES_ORDER

    Returns:
        ExpansionResult with the partial sum through order N

    Raises:
        SeriesOrderError: If N is out of range
    """
    return dyson_partial_sums(rho, X, N)[-1]


def inverse_sandwich_series(rho: FiniteWeight, X, N: int) -> ExpansionResult:
    """
    Truncated expansion of rho^{1/2} rho_X^{-1} rho^{1/2}.

    rho_X^{-1} = exp(-log rho + X) is expanded in X; sandwiching each term by
    rho^{1/2} turns it into a simplex integral of products of
    rho^s X rho^-s with |s| <= 1/2, so each term has norm <= M^n/n!.

    Raises:
        SeriesOrderError: If N is out of range
    """
    _check_order(N)
    rho = as_weight(rho)
    X = as_operator(X)
    check_same_dim(rho.matrix, X.matrix)

    M = araki_norm(X, rho)
    remainder = series_tail_bound(M, N)
    identity = HermitianOperator.identity(rho.dim)

    if N == 0 or not np.any(X.matrix):
        return ExpansionResult(
            truncation_order=N,
            partial_sum=identity,
            remainder_bound=remainder,
            araki_M=M,
            term_norms=(1.0,) + (0.0,) * N,
        )

    decomposition = rho.decomposition
    hamiltonian = -rho.log_eigenvalues
    shift = float(hamiltonian.max())
    terms = _block_terms(hamiltonian - shift, decomposition.to_eigenbasis(X), N)
    # Undo the shift and apply the rho^{1/2} sandwich in one weight
    half_gap = 0.5 * (shift - hamiltonian)
    terms = terms * np.exp(half_gap[:, None] + half_gap[None, :])
    term_norms = tuple(float(v) for v in np.linalg.norm(terms, ord=2, axis=(1, 2)))

    return ExpansionResult(
        truncation_order=N,
        partial_sum=HermitianOperator(decomposition.from_eigenbasis(terms.sum(axis=0))),
        remainder_bound=remainder,
        araki_M=M,
        term_norms=term_norms,
    )


def sandwich_bounds(rho: FiniteWeight, X, tol: float = LOEWNER_TOL) -> SandwichBounds:
    """
    Check e^{-M} rho <= rho_X <= e^{M} rho with M the Araki norm of X.

    Returns:
        SandwichBounds with lower = e^{-M}, upper = e^{M}
    """
    rho = as_weight(rho)
    M = araki_norm(X, rho)
    rho_X = perturbed_weight(Perturbation(rho, X))
    lower, upper = float(np.exp(-M)), float(np.exp(M))

    holds = loewner_leq(lower * rho.matrix, rho_X.matrix, tol) and loewner_leq(rho_X.matrix, upper * rho.matrix, tol)
    if not holds:
        logger.warning(f"Sandwich bounds violated for M={M:.6g} (n={rho.dim})")
    return SandwichBounds(lower=lower, upper=upper, araki_M=M, holds=holds)


def relative_hamiltonian(rho: FiniteWeight, sigma: FiniteWeight) -> HermitianOperator:
    """X = log rho - log sigma, so that sigma = exp(log rho - X)."""
    rho, sigma = as_weight(rho), as_weight(sigma)
    check_same_dim(rho.matrix, sigma.matrix)
    return HermitianOperator(rho.log().matrix - sigma.log().matrix)


def form_bound_check(
    rho: FiniteWeight,
    sigma: FiniteWeight,
    cert: NearbyCertificate,
    tol: float = LOEWNER_TOL,
) -> bool:
    """
    Verify that the relative Hamiltonian is H0-form-bounded with bound <= p.

    With H0 = -log rho and X = log rho - log sigma, checks
    +-X <= (log C) I + p H0. The constant absorbs the shift that makes H0
    non-negative, so no separate normalization enters.

    Args:
        rho: Reference weight
        sigma: Weight that is p-nearby rho
        cert: Certificate (C, p) witnessing the relation
        tol: Loewner tolerance

    Returns:
        True iff both operator inequalities hold

    Raises:
        PreconditionError: If the certificate does not witness p-nearby
    """
    rho, sigma = as_weight(rho), as_weight(sigma)
    if not p_nearby_check(rho, sigma, cert, tol):
        raise PreconditionError(f"Certificate (C={cert.C:.6g}, p={cert.p:.3g}) does not witness p-nearby")

    X = relative_hamiltonian(rho, sigma).matrix
    bound = np.log(cert.C) * np.eye(rho.dim) - cert.p * rho.log().matrix
    return loewner_leq(X, bound, tol) and loewner_leq(-X, bound, tol)
