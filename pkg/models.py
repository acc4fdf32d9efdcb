"""
Record types shared by the norm, expansional, geometry and CLI layers.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, Literal, Optional, Tuple

from config import DEFAULT_DIMS, DEFAULT_FORMAT, MAX_SERIES_ORDER, OUTPUT_FORMATS, TOL_TRACE
from errors import PreconditionError
from spectral import DensityState, FiniteWeight, HermitianOperator, as_operator, check_same_dim, trace_product


@dataclass(frozen=True)
class EpsilonNormParams:
    """Exponent and base weight of an epsilon norm (H0 is derived from the base)."""

    epsilon: float
    base: FiniteWeight

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise PreconditionError(f"epsilon must lie in [0, 1/2], got {self.epsilon!r}")


@dataclass(frozen=True)
class NormReport:
    """All norms of one perturbation relative to one base weight."""

    operator_norm: float
    trace_norm: float
    schatten_p: float
    schatten_p_norm: float
    epsilon: float
    epsilon_norm: float
    araki_norm: float
    bkm_norm: float
    base_is_state: bool

    def as_text_map(self) -> Dict[str, float]:
        """Flat key -> number map, in a fixed key order."""
        return {
            "operator_norm": self.operator_norm,
            "trace_norm": self.trace_norm,
            "schatten_p": self.schatten_p,
            "schatten_p_norm": self.schatten_p_norm,
            "epsilon": self.epsilon,
            "epsilon_norm": self.epsilon_norm,
            "araki_norm": self.araki_norm,
            "bkm_norm": self.bkm_norm,
        }


class Perturbation:
    """A Hermitian X anchored to a base weight rho0 = exp(-H0)."""

    def __init__(self, base: FiniteWeight, X, centered: bool = False, tol: float = TOL_TRACE):
        """
        Args:
            base: Base weight rho0
            X: Hermitian perturbation
            centered: Assert that the state expectation Tr(rho0_hat X) vanishes
            tol: Tolerance of that assertion, relative to max(||X||, 1)

        Raises:
            PreconditionError: If centered is requested but X is not centered
        """
        self.base: FiniteWeight = base
        self.X: HermitianOperator = as_operator(X)
        check_same_dim(base.matrix, self.X.matrix)
        if centered:
            mean = self.expectation()
            if abs(mean) > tol * max(self.X.norm, 1.0):
                raise PreconditionError(f"Perturbation marked centered has expectation {mean:.3e}")
        self.centered: bool = centered

    def expectation(self) -> float:
        """Tr(rho0_hat X) with rho0_hat the unit-trace normalization of the base."""
        return trace_product(self.base.matrix, self.X.matrix) / self.base.trace()

    def __repr__(self) -> str:
        return f"Perturbation(dim={self.base.dim}, centered={self.centered})"


@dataclass(frozen=True)
class FreeEnergy:
    """Free energy Psi_X and partition function Z_X = exp(Psi_X)."""

    psi: float
    z: float


@dataclass(frozen=True)
class ExpansionResult:
    """A truncated expansional series and its tail bound."""

    truncation_order: int
    partial_sum: HermitianOperator
    remainder_bound: float
    araki_M: float
    term_norms: Tuple[float, ...] = ()


@dataclass(frozen=True)
class SandwichBounds:
    """exp(-M) rho <= rho_X <= exp(M) rho with M the Araki norm."""

    lower: float
    upper: float
    araki_M: float
    holds: bool


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class HessianCheck:
    """Finite-difference entropy Hessian against the closed-form BKM value."""

    fd_value: float
    closed_form: float
    symmetrized_fd: float
    extrapolated: float
    error_estimate: float
    matched_factor: float
    holds: bool


@dataclass(frozen=True)
class HoodEquivalence:
    ratio: float
    K: float
    holds: bool


@dataclass(frozen=True)
class TangentPair:
    """Displacement in exponential coordinates and in mixture coordinates."""

    exp_component: HermitianOperator
    mix_component: HermitianOperator


Connection = Literal["plus", "minus"]


@dataclass(frozen=True)
class GeodesicSpec:
    start: DensityState
    end: DensityState
    connection: Connection
    lam: float

    def __post_init__(self):
        if self.connection not in ("plus", "minus"):
            raise PreconditionError(f"Unknown connection {self.connection!r}, expected 'plus' or 'minus'")
        if not (math.isfinite(self.lam) and 0.0 <= self.lam <= 1.0):
            raise PreconditionError(f"Geodesic parameter must lie in [0, 1], got {self.lam!r}")
        check_same_dim(self.start.matrix, self.end.matrix)


@dataclass(frozen=True)
class SeparationRow:
    n: int
    delta: float
    trace_dist: float
    rel_entropy: float


@dataclass(frozen=True)
class RunConfig:
    """Options of an ensemble audit run."""

    seed: int
    tol: Optional[float] = None
    dims: Tuple[int, ...] = DEFAULT_DIMS
    instances: int = 500
    order: int = 20
    format: str = DEFAULT_FORMAT

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise PreconditionError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.tol is not None and not self.tol > 0:
            raise PreconditionError(f"Tolerance must be positive, got {self.tol!r}")
        if not self.dims or any(d < 2 for d in self.dims):
            raise PreconditionError(f"Dimensions must all be >= 2, got {self.dims}")
        if self.instances < 1:
            raise PreconditionError(f"Need at least one instance, got {self.instances}")
        if not 0 <= self.order <= MAX_SERIES_ORDER:
            raise PreconditionError(f"Series order must lie in [0, {MAX_SERIES_ORDER}], got {self.order}")
        if self.format not in OUTPUT_FORMATS:
            raise PreconditionError(f"Unknown format {self.format!r}, expected one of {OUTPUT_FORMATS}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["dims"] = list(self.dims)
        return data
