"""
Norms and quasinorms on perturbations: Schatten-p, trace, operator, epsilon,
Araki and Bogoliubov-Kubo-Mori (BKM).
"""
import logging
import math
import threading
from typing import Tuple

import numpy as np
import scipy.integrate

from config import ARAKI_SCAN_POINTS, SINCH_TAYLOR_CUTOFF
from errors import PreconditionError
from models import EpsilonNormParams, NormReport
from spectral import DensityState, FiniteWeight, HermitianOperator, as_matrix, as_operator, as_weight, check_same_dim


# Configure logger
logger = logging.getLogger(__name__)

# Grid points per batched SVD call in araki_profile
_PROFILE_CHUNK = 2048

# QUADPACK callbacks are not guaranteed re-entrant across threads
_QUAD_LOCK = threading.Lock()


def operator_norm(A) -> float:
    """Largest singular value (largest eigenvalue magnitude for Hermitian A)."""
    if isinstance(A, (HermitianOperator, FiniteWeight)):
        return as_operator(A).norm
    return float(np.linalg.norm(as_matrix(A), 2))


def schatten_p_norm(A, p: float) -> float:
    """
    Schatten norm (sum |lambda_i|^p)^(1/p) of a Hermitian operator.

    For 0 < p < 1 this is the quasinorm of C_p; p = inf gives the operator norm.

    Raises:
        PreconditionError: If p <= 0
    """
    if p == math.inf:
        return operator_norm(A)
    if not p > 0:
        raise PreconditionError(f"Schatten exponent must be positive, got {p!r}")

    values = np.abs(as_operator(A).eigenvalues)
    top = float(values.max())
    if top == 0.0:
        return 0.0
    # Factor out the largest magnitude so large p cannot overflow
    return top * float(np.sum((values / top) ** p)) ** (1.0 / p)


def trace_norm(A) -> float:
    return schatten_p_norm(A, 1.0)


def shifted_hamiltonian(base: FiniteWeight) -> Tuple[HermitianOperator, float]:
    """
    Write base = exp(-H0 - Psi0) with H0 >= 0 and min spectrum of H0 equal to 0.

    Returns:
        Tuple of (H0, Psi0)
    """
    base = as_weight(base)
    logs = base.log_eigenvalues
    top = float(logs[-1])
    H0 = HermitianOperator(base.decomposition.apply(top - logs))
    return H0, -top


def epsilon_norm(X, params: EpsilonNormParams) -> float:
    """
    ||(H0 + I)^(-1+eps) X (H0 + I)^(-eps)|| with H0 the shifted Hamiltonian of the base.

    Args:
        X: Hermitian perturbation
        params: epsilon in [0, 1/2] and the base weight

    Returns:
        The epsilon norm of X
    """
    base = params.base
    check_same_dim(base.matrix, as_matrix(X))
    logs = base.log_eigenvalues
    shifted = 1.0 + (logs[-1] - logs)
    left = shifted ** (-1.0 + params.epsilon)
    right = shifted ** (-params.epsilon)
    weighted = left[:, None] * base.decomposition.to_eigenbasis(X) * right[None, :]
    return float(np.linalg.norm(weighted, 2))


def araki_profile(X, rho: FiniteWeight, ts) -> np.ndarray:
    """
    Evaluate t -> ||rho^t X rho^-t|| on real points t.

    In the eigenbasis of rho the conjugated operator has entries
    X_ij * exp(t (log l_i - log l_j)), so the grid is evaluated as stacked
    batched SVDs.
    """
    rho = as_weight(rho)
    check_same_dim(rho.matrix, as_matrix(X))
    rotated = rho.decomposition.to_eigenbasis(X)
    logs = rho.log_eigenvalues
    gaps = logs[:, None] - logs[None, :]

    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    values = np.empty(ts.shape[0])
    for start in range(0, ts.shape[0], _PROFILE_CHUNK):
        chunk = ts[start:start + _PROFILE_CHUNK]
        stack = np.exp(chunk[:, None, None] * gaps[None, :, :]) * rotated[None, :, :]
        values[start:start + chunk.shape[0]] = np.linalg.norm(stack, ord=2, axis=(1, 2))
    return values


def araki_norm(X, rho: FiniteWeight) -> float:
    """
    Araki norm sup_{|t|<1/2} ||rho^t X rho^-t||.

    rho^{iu} is unitary and commutes with rho^s, so the supremum over the disc
    equals the supremum over the real interval; the profile is convex in t,
    so the supremum is the larger endpoint value.
    """
    return float(np.max(araki_profile(X, rho, (-0.5, 0.5))))


def araki_norm_scan(X, rho: FiniteWeight, grid_points: int = ARAKI_SCAN_POINTS) -> float:
    """
    Maximum of ||rho^t X rho^-t|| over an evenly spaced grid on [-1/2, 1/2].

    The products rho^t X rho^-t are formed in the original basis, so this is
    an evaluation path independent of araki_profile.

    Raises:
        PreconditionError: If fewer than three grid points are requested
    """
    if grid_points < 3:
        raise PreconditionError(f"Araki scan needs at least 3 grid points, got {grid_points}")
    rho = as_weight(rho)
    x = as_matrix(X)
    check_same_dim(rho.matrix, x)
    vectors = rho.decomposition.eigenvectors
    adjoint = vectors.conj().T
    logs = rho.log_eigenvalues

    best = 0.0
    ts = np.linspace(-0.5, 0.5, grid_points)
    for start in range(0, grid_points, _PROFILE_CHUNK):
        chunk = ts[start:start + _PROFILE_CHUNK, None, None]
        left = (vectors[None] * np.exp(chunk * logs[None, None, :])) @ adjoint
        right = (vectors[None] * np.exp(-chunk * logs[None, None, :])) @ adjoint
        best = max(best, float(np.linalg.norm(left @ x @ right, ord=2, axis=(1, 2)).max()))
    return best


def _sinch(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x with a sixth order Taylor polynomial near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINCH_TAYLOR_CUTOFF
    x2 = x * x
    taylor = 1.0 + (x2 / 6.0) * (1.0 + (x2 / 20.0) * (1.0 + x2 / 42.0))
    direct = np.sinh(x) / np.where(small, 1.0, x)
    return np.where(small, taylor, direct)


def logarithmic_mean_from_logs(log_a, log_b) -> np.ndarray:
    """L(a, b) = (a - b)/(log a - log b) = exp(m) sinh(d)/d, m and d the half sum and half gap of the logs."""
    log_a = np.asarray(log_a, dtype=float)
    log_b = np.asarray(log_b, dtype=float)
    return np.exp(0.5 * (log_a + log_b)) * _sinch(0.5 * (log_a - log_b))


def logarithmic_mean(a, b) -> np.ndarray:
    """Logarithmic mean of positive numbers, L(a, a) = a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise PreconditionError("Logarithmic mean needs strictly positive arguments")
    return logarithmic_mean_from_logs(np.log(a), np.log(b))


def bkm_kernel(rho: FiniteWeight) -> np.ndarray:
    """Matrix L(l_i, l_j) over the eigenvalues of rho."""
    logs = as_weight(rho).log_eigenvalues
    return logarithmic_mean_from_logs(logs[:, None], logs[None, :])


def bkm_inner(X, Y, rho: FiniteWeight) -> float:
    """
    BKM inner product int_0^1 Tr(rho^t X rho^(1-t) Y) dt in closed form.

    Args:
        X: Hermitian operator
        Y: Hermitian operator
        rho: Strictly positive base (a density state for the metric proper)

    Returns:
        sum_ij conj(X_ij) Y_ij L(l_i, l_j) in the eigenbasis of rho
    """
    rho = as_weight(rho)
    check_same_dim(rho.matrix, as_matrix(X), as_matrix(Y))
    decomposition = rho.decomposition
    x = decomposition.to_eigenbasis(X)
    y = decomposition.to_eigenbasis(Y)
    return float(np.sum(np.conj(x) * y * bkm_kernel(rho)).real)


def bkm_norm(X, rho: FiniteWeight) -> float:
    return math.sqrt(max(bkm_inner(X, X, rho), 0.0))


def bkm_inner_quadrature(X, Y, rho: FiniteWeight, tol: float = 1e-10) -> float:
    """
    Adaptive quadrature of int_0^1 Tr(rho^t X rho^(1-t) Y) dt.

    Powers of rho are formed in the original basis; used as an independent
    check of bkm_inner.
    """
    rho = as_weight(rho)
    x, y = as_matrix(X), as_matrix(Y)
    check_same_dim(rho.matrix, x, y)

    def integrand(t: float) -> float:
        product = rho.power_matrix(t) @ x @ rho.power_matrix(1.0 - t) @ y
        return float(np.trace(product).real)

    with _QUAD_LOCK:
        value, error = scipy.integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=tol, limit=200)
    logger.debug(f"BKM quadrature {value:.12e} (estimated error {error:.1e})")
    return float(value)


def norm_report(X, base: FiniteWeight, epsilon: float = 0.5, p: float = 2.0) -> NormReport:
    """
    Compute every norm of X relative to a base weight.

    Args:
        X: Hermitian perturbation
        base: Base weight (a DensityState for the BKM <= Araki comparison)
        epsilon: Epsilon-norm exponent in [0, 1/2]
        p: Schatten exponent

    Returns:
        NormReport
    """
    base = as_weight(base)
    X = as_operator(X)
    check_same_dim(base.matrix, X.matrix)
    return NormReport(
        operator_norm=operator_norm(X),
        trace_norm=trace_norm(X),
        schatten_p=float(p),
        schatten_p_norm=schatten_p_norm(X, p),
        epsilon=float(epsilon),
        epsilon_norm=epsilon_norm(X, EpsilonNormParams(epsilon, base)),
        araki_norm=araki_norm(X, base),
        bkm_norm=bkm_norm(X, base),
        base_is_state=isinstance(base, DensityState),
    )
