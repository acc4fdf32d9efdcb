"""
Unit tests for expansional.py
"""
import math

import numpy as np
import pytest

from ensemble import instance_rng, random_hermitian, random_perturbation, random_state
from errors import PreconditionError, SeriesOrderError
from expansional import (
    center,
    dyson_partial_sums,
    dyson_series,
    form_bound_check,
    inverse_sandwich_series,
    perturbed_state,
    perturbed_weight,
    relative_hamiltonian,
    sandwich_bounds,
    series_tail_bound,
)
from geometry import lower_index
from models import Perturbation
from norms import araki_norm, operator_norm
from spectral import (
    DensityState,
    FiniteWeight,
    NearbyCertificate,
    loewner_leq,
    nearby_constant,
    p_nearby_constant,
)
from tests.fixtures.constants import PAULI_X, RHO_DIAG, SIGMA_DIAG, TEST_SEED
from tests.fixtures.oracles import perturbed_weight_oracle, random_real_state, simplex_term


@pytest.fixture
def scaled_pair():
    """Fixture for a random 4x4 state and a perturbation of Araki norm 1.5."""
    rng = instance_rng(TEST_SEED, 100)
    rho = random_state(rng, 4)
    return rho, random_perturbation(rng, rho, 1.5)


def test_perturbed_weight_of_zero():
    """Test that X = 0 leaves the weight unchanged."""
    rho = random_state(instance_rng(TEST_SEED, 0), 3)

    assert perturbed_weight(Perturbation(rho, np.zeros((3, 3)))).operator.allclose(rho, rtol=0.0, atol=1e-14)


def test_perturbed_weight_of_scalar():
    """Test that X = cI rescales the weight by exp(-c)."""
    rho = random_state(instance_rng(TEST_SEED, 1), 3)
    weight = perturbed_weight(Perturbation(rho, 0.7 * np.eye(3)))

    np.testing.assert_allclose(weight.matrix, math.exp(-0.7) * rho.matrix, atol=1e-14)


def test_perturbed_weight_commuting():
    """Test the Gibbs reweighting of a diagonal state by a diagonal X."""
    rho = DensityState(np.diag(RHO_DIAG))
    X = np.diag([0.3, -1.1])
    weight = perturbed_weight(Perturbation(rho, X))

    np.testing.assert_allclose(weight.matrix, np.diag(np.array(RHO_DIAG) * np.exp([-0.3, 1.1])), atol=1e-14)


def test_perturbed_weight_matches_scipy(scaled_pair):
    """Test exp(log rho - X) against scipy.linalg.expm / logm."""
    rho, X = scaled_pair
    weight = perturbed_weight(Perturbation(rho, X))

    np.testing.assert_allclose(weight.matrix, perturbed_weight_oracle(rho.matrix, X.matrix), atol=1e-11)


def test_perturbed_state_of_zero():
    """Test that X = 0 gives back the state with zero free energy."""
    rho = random_state(instance_rng(TEST_SEED, 2), 4)
    state, free_energy = perturbed_state(Perturbation(rho, np.zeros((4, 4))))

    assert state.operator.allclose(rho, rtol=0.0, atol=1e-14)
    assert free_energy.psi == pytest.approx(0.0, abs=1e-14)
    assert free_energy.z == pytest.approx(1.0)


def test_perturbed_state_of_scalar():
    """Test that X = cI leaves the state unchanged and shifts the free energy by -c."""
    rho = random_state(instance_rng(TEST_SEED, 3), 4)
    state, free_energy = perturbed_state(Perturbation(rho, -2.0 * np.eye(4)))

    assert state.operator.allclose(rho, rtol=0.0, atol=1e-13)
    assert free_energy.psi == pytest.approx(2.0, rel=1e-13)
    assert free_energy.z == pytest.approx(math.exp(2.0), rel=1e-13)


def test_perturbed_state_does_not_overflow():
    """Test a perturbation with huge negative spectrum."""
    rho = DensityState(np.diag(RHO_DIAG))
    state, free_energy = perturbed_state(Perturbation(rho, np.diag([-800.0, -790.0])))

    assert state.trace() == pytest.approx(1.0)
    assert free_energy.psi == pytest.approx(800.0 + math.log(0.8 + 0.2 * math.exp(-10.0)), rel=1e-12)


def test_center_removes_expectation():
    """Test that centering leaves Tr(rho X') = 0."""
    rng = instance_rng(TEST_SEED, 4)
    rho = random_state(rng, 5)
    X = random_hermitian(rng, 5)
    centered = center(Perturbation(rho, X))

    assert centered.centered
    assert abs(centered.expectation()) <= 1e-13 * operator_norm(X)


def test_center_of_scalar_is_zero():
    """Test that a scalar perturbation centers to zero."""
    rho = random_state(instance_rng(TEST_SEED, 5), 3)

    np.testing.assert_allclose(center(Perturbation(rho, 4.0 * np.eye(3))).X.matrix, 0.0, atol=1e-14)


def test_centering_does_not_change_the_state(scaled_pair):
    """Test that X and its centered version give the same normalized state."""
    rho, X = scaled_pair
    direct, _ = perturbed_state(Perturbation(rho, X))
    centered, _ = perturbed_state(center(Perturbation(rho, X)))

    np.testing.assert_allclose(direct.matrix, centered.matrix, atol=1e-12)


def test_centered_flag_is_validated():
    """Test that marking an uncentered perturbation as centered fails."""
    rho = DensityState(np.diag(RHO_DIAG))

    with pytest.raises(PreconditionError):
        Perturbation(rho, np.eye(2), centered=True)


def test_free_energy_convex(scaled_pair):
    """Test Psi along a chord between two perturbations."""
    rho, X = scaled_pair
    Y = random_perturbation(instance_rng(TEST_SEED, 6), rho, 2.0)

    def psi(A):
        return perturbed_state(Perturbation(rho, A))[1].psi

    for lam in (0.25, 0.5, 0.75):
        assert psi(lam * X.matrix + (1 - lam) * Y.matrix) <= lam * psi(X) + (1 - lam) * psi(Y) + 1e-12


def test_series_tail_bound():
    """Test the incomplete-gamma tail against a direct sum."""
    M = 1.5
    direct = sum(M**k / math.factorial(k) for k in range(6, 60))

    assert series_tail_bound(M, 5) == pytest.approx(direct, rel=1e-12)
    assert series_tail_bound(0.0, 3) == 0.0


def test_dyson_of_zero_is_exact():
    """Test that X = 0 gives rho at every order with zero remainder."""
    rho = random_state(instance_rng(TEST_SEED, 7), 3)
    result = dyson_series(rho, np.zeros((3, 3)), 10)

    assert np.array_equal(result.partial_sum.matrix, rho.matrix)
    assert result.remainder_bound == 0.0


def test_dyson_of_scalar():
    """Test X = cI against rho times the exponential Taylor polynomial."""
    rho = random_state(instance_rng(TEST_SEED, 8), 3)
    c = 0.8
    for result in dyson_partial_sums(rho, c * np.eye(3), 8):
        taylor = sum((-c) ** k / math.factorial(k) for k in range(result.truncation_order + 1))
        np.testing.assert_allclose(result.partial_sum.matrix, taylor * rho.matrix, atol=1e-14)


def test_dyson_converges_within_remainder(scaled_pair):
    """Test every partial sum against the exact weight and its tail bound."""
    rho, X = scaled_pair
    exact = perturbed_weight(Perturbation(rho, X)).matrix
    results = dyson_partial_sums(rho, X, 20)

    assert len(results) == 21
    for result in results:
        error = operator_norm(result.partial_sum.matrix - exact)
        assert error <= result.remainder_bound + 1e-12
    assert operator_norm(results[-1].partial_sum.matrix - exact) <= 1e-12


def test_dyson_term_norms_bounded(scaled_pair):
    """Test ||term_n|| <= ||rho|| M^n / n!."""
    rho, X = scaled_pair
    result = dyson_series(rho, X, 15)
    M, scale = result.araki_M, rho.operator.norm

    assert M == pytest.approx(1.5)
    for k, norm in enumerate(result.term_norms):
        assert norm <= scale * M**k / math.factorial(k) * (1.0 + 1e-10) + 1e-15


def test_dyson_first_order_term_is_lowered_perturbation(scaled_pair):
    """Test that the order-one term is -int_0^1 rho^t X rho^(1-t) dt."""
    rho, X = scaled_pair
    results = dyson_partial_sums(rho, X, 1)
    term = results[1].partial_sum.matrix - results[0].partial_sum.matrix

    np.testing.assert_allclose(term, -lower_index(X, rho).matrix, atol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_dyson_terms_match_simplex_quadrature(order):
    """Test low-order terms against nested quadrature over the simplex."""
    rng = instance_rng(TEST_SEED, 9)
    rho = random_real_state(rng, 2)
    raw = rng.standard_normal((2, 2))
    X = 0.5 * (raw + raw.T)

    results = dyson_partial_sums(FiniteWeight(rho), X, order)
    term = results[order].partial_sum.matrix - results[order - 1].partial_sum.matrix
    expected = (-1) ** order * simplex_term(rho, X, order)

    np.testing.assert_allclose(term, expected, atol=1e-8)


def test_remainder_decays_super_exponentially(scaled_pair):
    """Test that successive tail ratios shrink towards zero."""
    rho, X = scaled_pair
    remainders = [r.remainder_bound for r in dyson_partial_sums(rho, X, 30)]
    ratios = [b / a for a, b in zip(remainders[5:], remainders[6:])]

    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert remainders[-1] < 1e-20


@pytest.mark.parametrize("order", [-1, 31])
def test_dyson_rejects_unstable_orders(order):
    """Test that orders outside [0, 30] are refused."""
    rho = DensityState(np.diag(RHO_DIAG))

    with pytest.raises(SeriesOrderError):
        dyson_series(rho, PAULI_X, order)


def test_inverse_sandwich_of_zero_is_identity():
    """Test that X = 0 gives the identity exactly."""
    rho = random_state(instance_rng(TEST_SEED, 10), 3)
    result = inverse_sandwich_series(rho, np.zeros((3, 3)), 5)

    assert np.array_equal(result.partial_sum.matrix, np.eye(3))
    assert result.remainder_bound == 0.0


def test_inverse_sandwich_of_scalar():
    """Test X = cI against the exponential Taylor polynomial of +c."""
    rho = random_state(instance_rng(TEST_SEED, 11), 3)
    result = inverse_sandwich_series(rho, 0.5 * np.eye(3), 6)
    taylor = sum(0.5**k / math.factorial(k) for k in range(7))

    np.testing.assert_allclose(result.partial_sum.matrix, taylor * np.eye(3), atol=1e-14)


def test_inverse_sandwich_converges(scaled_pair):
    """Test rho^(1/2) rho_X^(-1) rho^(1/2) against the truncated series."""
    rho, X = scaled_pair
    weight = perturbed_weight(Perturbation(rho, X))
    half = rho.power_matrix(0.5)
    exact = half @ weight.power_matrix(-1.0) @ half

    result = inverse_sandwich_series(rho, X, 20)
    assert operator_norm(result.partial_sum.matrix - exact) <= result.remainder_bound + 1e-11
    assert operator_norm(result.partial_sum.matrix - exact) <= 1e-11


def test_inverse_sandwich_bounded_by_exponential(scaled_pair):
    """Test that the partial sum is dominated by (e^M + remainder) I with terms below M^n/n!."""
    rho, X = scaled_pair
    result = inverse_sandwich_series(rho, X, 12)
    M = result.araki_M
    ceiling = (math.exp(M) + result.remainder_bound) * np.eye(4)

    assert loewner_leq(result.partial_sum.matrix, ceiling)
    for k, norm in enumerate(result.term_norms):
        assert norm <= M**k / math.factorial(k) * (1.0 + 1e-10) + 1e-15


def test_sandwich_bounds_of_zero():
    """Test that X = 0 gives M = 0 and equality."""
    bounds = sandwich_bounds(DensityState(np.diag(RHO_DIAG)), np.zeros((2, 2)))

    assert bounds.araki_M == 0.0
    assert bounds.lower == 1.0 and bounds.upper == 1.0
    assert bounds.holds


def test_sandwich_bounds_of_scalar():
    """Test that cI has M = |c| and the bounds are attained."""
    bounds = sandwich_bounds(DensityState(np.diag(RHO_DIAG)), -0.4 * np.eye(2))

    assert bounds.araki_M == pytest.approx(0.4)
    assert bounds.holds


@pytest.mark.parametrize("index", range(10))
def test_sandwich_bounds_random(index):
    """Test e^-M rho <= rho_X <= e^M rho on random 6x6 instances."""
    rng = instance_rng(TEST_SEED, 200 + index)
    rho = random_state(rng, 6)
    X = random_perturbation(rng, rho, float(rng.uniform(0.05, 3.0)))

    assert sandwich_bounds(rho, X).holds


def test_relative_hamiltonian_of_equal_weights():
    """Test that a weight has zero relative Hamiltonian to itself."""
    rho = random_state(instance_rng(TEST_SEED, 12), 3)

    np.testing.assert_allclose(relative_hamiltonian(rho, rho).matrix, 0.0, atol=1e-14)


def test_relative_hamiltonian_of_rescaled_weight():
    """Test sigma = e^-c rho gives X = cI."""
    rho = random_state(instance_rng(TEST_SEED, 13), 3)
    sigma = rho.scaled(math.exp(-1.3))

    np.testing.assert_allclose(relative_hamiltonian(rho, sigma).matrix, 1.3 * np.eye(3), atol=1e-13)


def test_relative_hamiltonian_round_trip():
    """Test exp(log rho - X) = sigma for X the relative Hamiltonian."""
    rng = instance_rng(TEST_SEED, 14)
    rho, sigma = random_state(rng, 4), random_state(rng, 4)
    X = relative_hamiltonian(rho, sigma)

    np.testing.assert_allclose(perturbed_weight(Perturbation(rho, X)).matrix, sigma.matrix, atol=1e-10)


@pytest.mark.parametrize("index", range(5))
def test_relative_hamiltonian_bounded_by_nearby_constant(index):
    """Test ||log rho - log sigma|| <= log C for C the nearby constant."""
    rng = instance_rng(TEST_SEED, 300 + index)
    rho, sigma = random_state(rng, 4), random_state(rng, 4)

    assert operator_norm(relative_hamiltonian(rho, sigma)) <= math.log(nearby_constant(rho, sigma)) + 1e-9


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5])
def test_form_bound_random(p):
    """Test +-X <= log C I + p H0 with a certificate at the minimal constant."""
    rng = instance_rng(TEST_SEED, 15)
    rho, sigma = random_state(rng, 4), random_state(rng, 4)
    cert = NearbyCertificate(p_nearby_constant(rho, sigma, p) * (1.0 + 1e-9), p)

    assert form_bound_check(rho, sigma, cert)


def test_form_bound_commuting():
    """Test the worked diagonal pair."""
    rho, sigma = DensityState(np.diag(RHO_DIAG)), DensityState(np.diag(SIGMA_DIAG))

    assert form_bound_check(rho, sigma, NearbyCertificate(2.5 * (1.0 + 1e-9)))


def test_form_bound_requires_certificate():
    """Test that a certificate not witnessing nearby is refused."""
    rho, sigma = DensityState(np.diag(RHO_DIAG)), DensityState(np.diag(SIGMA_DIAG))

    with pytest.raises(PreconditionError):
        form_bound_check(rho, sigma, NearbyCertificate(1.0001))


def test_araki_target_of_random_perturbation(scaled_pair):
    """Test that the fixture hits its Araki norm target."""
    rho, X = scaled_pair

    assert araki_norm(X, rho) == pytest.approx(1.5, rel=1e-12)
