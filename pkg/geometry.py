"""
Information geometry of faithful states: relative entropy, the BKM metric as
an entropy Hessian, the two flat connections and their duality, Araki hoods.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.special

from config import FD_STEP, HOOD_GRID_POINTS, MIN_FD_STEP, TOL_TRACE
from errors import PreconditionError
from expansional import perturbed_state, relative_hamiltonian
from models import (
    CheckResult,
    GeodesicSpec,
    HessianCheck,
    HoodEquivalence,
    Perturbation,
    SeparationRow,
    TangentPair,
)
from norms import araki_norm, bkm_inner, bkm_kernel, bkm_norm, operator_norm, trace_norm
from spectral import DensityState, FiniteWeight, HermitianOperator, as_operator, as_weight, check_same_dim, trace_product


# Configure logger
logger = logging.getLogger(__name__)

# Relative tolerance of the Richardson-checked Hessian
HESSIAN_TOL = 1e-4

# Step of the finite-difference displacements along geodesics
_DISPLACEMENT_STEP = 1e-3


def relative_entropy(rho: FiniteWeight, sigma: FiniteWeight) -> float:
    """
    Umegaki relative entropy S(rho|sigma) = Tr rho (log rho - log sigma).

    Raises:
        NotStrictlyPositiveError: If either argument is not faithful
    """
    rho, sigma = as_weight(rho), as_weight(sigma)
    check_same_dim(rho.matrix, sigma.matrix)
    entropy_term = float(np.sum(rho.eigenvalues * rho.log_eigenvalues))
    return entropy_term - trace_product(rho.matrix, sigma.log().matrix)


def _require_base(rho0: FiniteWeight, pert: Perturbation) -> None:
    base = pert.base.matrix / pert.base.trace()
    if not np.allclose(base, rho0.matrix, rtol=0.0, atol=TOL_TRACE * 100):
        raise PreconditionError("Perturbation is not anchored at the given state")


def symmetrized_entropy_identity(rho0: DensityState, pert: Perturbation, tol: float = 1e-10) -> CheckResult:
    """
    S(rho0|sigma) + S(sigma|rho0) against Tr((rho0 - sigma) X), sigma the perturbed state.

    Scalar shifts of X drop out of the right-hand side because both states
    have unit trace.
    """
    _require_base(rho0, pert)
    sigma, _ = perturbed_state(pert)
    lhs = relative_entropy(rho0, sigma) + relative_entropy(sigma, rho0)
    rhs = trace_product(rho0.matrix - sigma.matrix, pert.X.matrix)
    return CheckResult(lhs=lhs, rhs=rhs, holds=abs(lhs - rhs) <= tol * max(1.0, abs(lhs)))


def lower_index(X, rho: FiniteWeight) -> HermitianOperator:
    """
    Mixed representation int_0^1 rho^t X rho^(1-t) dt of a tangent vector.

    Entries in the eigenbasis of rho are X_ij L(l_i, l_j).
    """
    rho = as_weight(rho)
    check_same_dim(rho.matrix, as_operator(X).matrix)
    decomposition = rho.decomposition
    return HermitianOperator(decomposition.from_eigenbasis(decomposition.to_eigenbasis(X) * bkm_kernel(rho)))


def bkm_hessian_check(rho0: DensityState, X, h: float = FD_STEP, tol: float = HESSIAN_TOL) -> HessianCheck:
    """
    Second derivative of s -> S(rho0 | rho_{sX}) at s = 0 against the BKM form.

    The central difference at h is refined with a second one at h/2; their
    Richardson combination gives the extrapolated value and an estimate of
    the discretization error. The symmetrized sum S(rho0|.) + S(.|rho0) is
    differenced as well, and the factor relating it to the closed form is
    reported.

    Args:
        rho0: Base state
        X: Centered Hermitian perturbation
        h: Finite-difference step, at least MIN_FD_STEP
        tol: Relative agreement required of the step-h value

    Raises:
        PreconditionError: If X is not centered or h is too small
    """
    rho0 = as_weight(rho0)
    X = as_operator(X)
    if h < MIN_FD_STEP:
        raise PreconditionError(f"Step {h:.1e} is below {MIN_FD_STEP:.0e}; cancellation would dominate")
    Perturbation(rho0, X, centered=True)

    def entropies(s: float) -> Tuple[float, float]:
        state, _ = perturbed_state(Perturbation(rho0, s * X.matrix))
        return relative_entropy(rho0, state), relative_entropy(state, rho0)

    def second_difference(step: float) -> Tuple[float, float]:
        plus, minus = entropies(step), entropies(-step)
        centre = entropies(0.0)
        single = (plus[0] - 2.0 * centre[0] + minus[0]) / step**2
        summed = (sum(plus) - 2.0 * sum(centre) + sum(minus)) / step**2
        return single, summed

    fd_value, symmetrized_fd = second_difference(h)
    refined, _ = second_difference(h / 2.0)
    extrapolated = (4.0 * refined - fd_value) / 3.0
    error_estimate = abs(refined - fd_value) / 3.0

    closed_form = bkm_inner(X, X, rho0)
    # Cancellation noise of a second difference at the finer step h/2
    log_scale = max(1.0, float(np.max(np.abs(rho0.log_eigenvalues))))
    roundoff = 64.0 * rho0.dim * log_scale * np.finfo(float).eps / h**2
    holds = (
        abs(fd_value - closed_form) <= tol * abs(closed_form) + roundoff
        and abs(extrapolated - closed_form) <= error_estimate + roundoff
    )

    if closed_form > 0.0:
        matched_factor = min((0.5, 1.0, 2.0), key=lambda c: abs(symmetrized_fd - c * closed_form))
    else:
        matched_factor = math.nan

    return HessianCheck(
        fd_value=fd_value,
        closed_form=closed_form,
        symmetrized_fd=symmetrized_fd,
        extrapolated=extrapolated,
        error_estimate=error_estimate,
        matched_factor=matched_factor,
        holds=holds,
    )


def _plus_point(rho0: DensityState, X1: HermitianOperator, lam: float) -> DensityState:
    state, _ = perturbed_state(Perturbation(rho0, lam * X1.matrix))
    return state


def _minus_point(rho0: DensityState, rho1: DensityState, lam: float) -> DensityState:
    return DensityState(lam * rho1.matrix + (1.0 - lam) * rho0.matrix)


def geodesic(spec: GeodesicSpec) -> DensityState:
    """
    Point at parameter lam on the plus (exponential) or minus (mixture) geodesic.

    The plus geodesic runs through exp(log rho0 - lam X1 - Psi) with
    X1 = log rho0 - log rho1; the minus geodesic is the convex combination.
    """
    if spec.connection == "minus":
        return _minus_point(spec.start, spec.end, spec.lam)
    X1 = relative_hamiltonian(spec.start, spec.end)
    return _plus_point(spec.start, X1, spec.lam)


def tangent_pair(rho0: DensityState, rho1: DensityState) -> TangentPair:
    """Displacements from rho0 to rho1 in exponential and in mixture coordinates."""
    check_same_dim(rho0.matrix, rho1.matrix)
    return TangentPair(
        exp_component=relative_hamiltonian(rho0, rho1),
        mix_component=HermitianOperator(rho1.matrix - rho0.matrix),
    )


def dual_flatness_pairings(
    rho0: DensityState,
    rho1: DensityState,
    lambdas: Sequence[float],
    step: float = _DISPLACEMENT_STEP,
) -> List[float]:
    """
    Trace pairing of the two geodesics' local displacements at each lambda.

    The exponential coordinate of the plus geodesic and the density of the
    minus geodesic are both affine in lambda, so the pairing of their
    finite-difference velocities does not depend on lambda.
    """
    X1 = relative_hamiltonian(rho0, rho1)
    pairings = []
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise PreconditionError(f"Geodesic parameter must lie in [0, 1], got {lam!r}")
        other = lam + step if lam + step <= 1.0 else lam - step
        width = other - lam

        exp_velocity = (
            relative_hamiltonian(rho0, _plus_point(rho0, X1, other)).matrix
            - relative_hamiltonian(rho0, _plus_point(rho0, X1, lam)).matrix
        ) / width
        mix_velocity = (_minus_point(rho0, rho1, other).matrix - _minus_point(rho0, rho1, lam).matrix) / width
        pairings.append(trace_product(exp_velocity, mix_velocity))
    return pairings


def duality_pairing_check(rho: DensityState, X, Y, tol: float = 1e-12) -> CheckResult:
    """
    BKM inner product against the trace pairing with the lowered vector.

    Returns:
        CheckResult with lhs = g(X, Y) and rhs = Tr(X lower_index(Y))
    """
    direct = bkm_inner(X, Y, rho)
    mixed = trace_product(as_operator(X).matrix, lower_index(Y, rho).matrix)
    scale = max(abs(direct), abs(mixed), bkm_norm(X, rho) * bkm_norm(Y, rho))
    return CheckResult(lhs=direct, rhs=mixed, holds=abs(direct - mixed) <= tol * scale)


def trace_norm_bound_check(rho: DensityState, pert: Perturbation, tol: float = 1e-10) -> CheckResult:
    """||rho - sigma||_1 <= ||X|| for sigma the state perturbed by X."""
    _require_base(rho, pert)
    sigma, _ = perturbed_state(pert)
    lhs = trace_norm(rho.matrix - sigma.matrix)
    rhs = operator_norm(pert.X)
    return CheckResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)


def kullback_inequality_check(rho: DensityState, sigma: DensityState, tol: float = 1e-10) -> CheckResult:
    """||rho - sigma||_1^2 <= S(rho|sigma) + S(sigma|rho)."""
    lhs = trace_norm(rho.matrix - sigma.matrix) ** 2
    rhs = relative_entropy(rho, sigma) + relative_entropy(sigma, rho)
    return CheckResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)


def connes_cocycle(rho0: FiniteWeight, rho1: FiniteWeight, t: float) -> np.ndarray:
    """
    The cocycle rho0^t rho1^-t, generally not Hermitian.

    Raises:
        PreconditionError: If |t| > 1/2
    """
    if abs(t) > 0.5:
        raise PreconditionError(f"Cocycle parameter must satisfy |t| <= 1/2, got {t!r}")
    rho0, rho1 = as_weight(rho0), as_weight(rho1)
    check_same_dim(rho0.matrix, rho1.matrix)
    return rho0.power_matrix(t) @ rho1.power_matrix(-t)


def hood_constant(rho0: FiniteWeight, rho1: FiniteWeight, grid_points: int = HOOD_GRID_POINTS) -> float:
    """
    max_t ||rho1^t rho0^-t|| ||rho0^t rho1^-t|| over a grid on [-1/2, 1/2].

    Both cocycle norms are evaluated in the two eigenbases at once, batched
    over the grid.
    """
    rho0, rho1 = as_weight(rho0), as_weight(rho1)
    check_same_dim(rho0.matrix, rho1.matrix)
    overlap = rho1.decomposition.eigenvectors.conj().T @ rho0.decomposition.eigenvectors
    logs0, logs1 = rho0.log_eigenvalues, rho1.log_eigenvalues

    ts = np.linspace(-0.5, 0.5, grid_points)[:, None, None]
    forward = np.exp(ts * logs1[None, :, None]) * overlap[None] * np.exp(-ts * logs0[None, None, :])
    backward = np.exp(ts * logs0[None, :, None]) * overlap.conj().T[None] * np.exp(-ts * logs1[None, None, :])
    products = np.linalg.norm(forward, ord=2, axis=(1, 2)) * np.linalg.norm(backward, ord=2, axis=(1, 2))
    return float(products.max())


def hood_norm_equivalence(
    rho0: FiniteWeight,
    rho1: FiniteWeight,
    X,
    grid_points: int = HOOD_GRID_POINTS,
    tol: float = 1e-10,
) -> HoodEquivalence:
    """
    Compare the Araki norms of X in two overlapping hoods.

    Conjugating by the cocycle moves rho0^t X rho0^-t to rho1^t X rho1^-t,
    so K^-1 <= ||X||_A(rho1) / ||X||_A(rho0) <= K.

    Returns:
        HoodEquivalence; for X = 0 the ratio is nan and the check holds
    """
    K = hood_constant(rho0, rho1, grid_points)
    X = as_operator(X)
    if not np.any(X.matrix):
        return HoodEquivalence(ratio=math.nan, K=K, holds=True)

    ratio = araki_norm(X, rho1) / araki_norm(X, rho0)
    holds = (1.0 - tol) / K <= ratio <= K * (1.0 + tol)
    return HoodEquivalence(ratio=ratio, K=K, holds=holds)


def hood_entropy_envelope_check(rho: DensityState, X, M0: float) -> CheckResult:
    """
    S(rho|sigma) for sigma in the Araki hood of radius M0 around rho.

    S(rho|sigma) = Tr(rho X) + Psi_X <= 2 ||X||_A, checked against the
    envelope 2 M0 + 1.

    Raises:
        PreconditionError: If X lies outside the hood
    """
    M = araki_norm(X, rho)
    if M > M0 * (1.0 + 1e-12):
        raise PreconditionError(f"Araki norm {M:.6g} exceeds the hood radius {M0:.6g}")
    sigma, _ = perturbed_state(Perturbation(rho, X))
    lhs = relative_entropy(rho, sigma)
    rhs = 2.0 * M0 + 1.0
    return CheckResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs)


def separation_point(n: int, delta: Optional[float] = None) -> SeparationRow:
    """
    Trace distance and relative entropy between a geometric state and a small mixture.

    rho has spectrum proportional to 2^-i, i = 1..n, and
    sigma = (1 - delta) rho + delta |e_n><e_n| with delta = n^-1/2 by default.
    Both are diagonal, and the weight of e_n underflows the faithfulness gate
    for large n, so the evaluation is done on log-spectra.

    Returns:
        SeparationRow with trace_dist = ||sigma - rho||_1 and rel_entropy = S(sigma|rho)
    """
    if n < 1:
        raise PreconditionError(f"Dimension must be positive, got {n}")
    if delta is None:
        delta = n ** -0.5
    if not 0.0 <= delta <= 1.0:
        raise PreconditionError(f"Mixing weight must lie in [0, 1], got {delta!r}")
    if delta == 0.0:
        return SeparationRow(n=n, delta=0.0, trace_dist=0.0, rel_entropy=0.0)

    log_normalizer = math.log1p(-(2.0 ** -n))
    log_last = -n * math.log(2.0) - log_normalizer
    last = math.exp(log_last)

    log_sigma_last = np.logaddexp(math.log1p(-delta) + log_last if delta < 1.0 else -math.inf, math.log(delta))
    sigma_last = math.exp(log_sigma_last)

    # All but the last coordinate are scaled by (1 - delta)
    bulk = (1.0 - last) * float(scipy.special.xlogy(1.0 - delta, 1.0 - delta))
    rel_entropy = bulk + sigma_last * (log_sigma_last - log_last)
    trace_dist = 2.0 * delta * (1.0 - last)
    return SeparationRow(n=n, delta=float(delta), trace_dist=trace_dist, rel_entropy=float(rel_entropy))


def separation_demo(nmax: int) -> List[SeparationRow]:
    """Separation rows for n = 4, 8, 16, ... up to nmax."""
    if nmax < 4:
        raise PreconditionError(f"nmax must be at least 4, got {nmax}")
    rows = []
    n = 4
    while n <= nmax:
        rows.append(separation_point(n))
        n *= 2
    logger.info(f"Separation demo evaluated {len(rows)} sizes up to n={rows[-1].n}")
    return rows


def separation_monotone(rows: Sequence[SeparationRow], n0: int = 16) -> bool:
    """Trace distance strictly decreasing, relative entropy strictly increasing from n0 on."""
    distances = [row.trace_dist for row in rows]
    entropies = [row.rel_entropy for row in rows if row.n >= n0]
    shrinking = all(a > b for a, b in zip(distances, distances[1:]))
    growing = all(a < b for a, b in zip(entropies, entropies[1:]))
    return shrinking and growing
