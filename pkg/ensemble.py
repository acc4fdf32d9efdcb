"""
Seeded random instances for the theorem audits.

Every instance draws from its own generator, derived from the run seed and
the instance index, so results do not depend on scheduling.
"""
import numpy as np
import scipy.special

from config import MAX_ARAKI_TARGET
from errors import PreconditionError
from expansional import center, perturbed_state
from models import Perturbation
from norms import araki_norm
from spectral import DensityState, FiniteWeight, HermitianOperator


def instance_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one (instance, stream) pair of a seeded run."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index, stream)))


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> HermitianOperator:
    """Hermitian matrix with complex Gaussian entries of the given scale."""
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianOperator(scale * 0.5 * (raw + raw.conj().T))


def random_state(rng: np.random.Generator, n: int, spread: float = 1.0) -> DensityState:
    """
    Faithful state exp(-G)/Tr exp(-G) for a random Hermitian G.

    Normalized on the log-spectrum, so the eigenvalue ratio is at most
    exp(spread * (max G - min G)).
    """
    decomposition = random_hermitian(rng, n, spread).decomposition
    exponents = -decomposition.eigenvalues
    return DensityState(decomposition.apply(np.exp(exponents - scipy.special.logsumexp(exponents))))


def random_perturbation(rng: np.random.Generator, rho: FiniteWeight, target: float) -> HermitianOperator:
    """Random Hermitian X rescaled so that its Araki norm relative to rho equals target."""
    if not 0.0 < target <= MAX_ARAKI_TARGET:
        raise PreconditionError(f"Araki target must lie in (0, {MAX_ARAKI_TARGET}], got {target!r}")
    X = random_hermitian(rng, rho.dim)
    return X * (target / araki_norm(X, rho))


def random_araki_target(rng: np.random.Generator, low: float = 0.05) -> float:
    return float(rng.uniform(low, MAX_ARAKI_TARGET))


def random_centered_perturbation(rng: np.random.Generator, rho: FiniteWeight, target: float) -> Perturbation:
    """Centered perturbation whose uncentered draw has the given Araki norm."""
    return center(Perturbation(rho, random_perturbation(rng, rho, target)))


def random_nearby_state(rng: np.random.Generator, rho: DensityState, target: float) -> DensityState:
    """State exp(log rho - X - Psi) at Araki distance target from rho."""
    state, _ = perturbed_state(Perturbation(rho, random_perturbation(rng, rho, target)))
    return state
