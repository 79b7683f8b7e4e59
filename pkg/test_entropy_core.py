"""
Test von Neumann entropy and the non-smooth min/max entropies
"""

import math
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from entropy_core import (
    TRIVIAL_SIGMA,
    EntropyValue,
    conditional_von_neumann_entropy,
    h_max,
    h_max_unconditional,
    h_min,
    h_min_unconditional,
    min_feasible_lambda,
    trivially_conditioned,
    von_neumann_entropy,
)
from errors import DimensionMismatch, NotNormalized
from operator_core import BipartiteState, HermitianOperator, QuantumState
from state_factory import (
    bell_state,
    maximally_mixed,
    qubit_state,
    random_density,
    random_unitary,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def pure(dim: int, index: int = 0) -> QuantumState:
    vector = np.zeros(dim)
    vector[index] = 1.0
    return QuantumState(HermitianOperator.from_vector(vector))


def product(rho_a: QuantumState, sigma_b: QuantumState) -> BipartiteState:
    return BipartiteState.from_matrix(np.kron(rho_a.matrix, sigma_b.matrix), rho_a.dim, sigma_b.dim)


def test_entropy_value():
    assert EntropyValue(1.5).is_finite
    assert not EntropyValue(-math.inf).is_finite
    assert float(EntropyValue(0.25)) == 0.25


# von Neumann

def test_von_neumann_examples():
    assert von_neumann_entropy(pure(3)).bits == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(maximally_mixed(4)).bits == pytest.approx(2.0)
    assert von_neumann_entropy(qubit_state(0.75)).bits == pytest.approx(0.811278, abs=1e-6)


def test_von_neumann_needs_normalized_state():
    with pytest.raises(NotNormalized):
        von_neumann_entropy(QuantumState(HermitianOperator.diag([0.5, 0.25]), normalized=False))


def test_conditional_von_neumann_of_bell_pair():
    assert conditional_von_neumann_entropy(bell_state()).bits == pytest.approx(-1.0)


# Conditional min/max

def test_h_min_of_product_is_unconditional():
    rho_a = qubit_state(0.75)
    sigma_b = random_density(np.random.default_rng(11), 3)
    assert h_min(product(rho_a, sigma_b), sigma_b).bits == pytest.approx(-math.log2(0.75), abs=1e-9)


def test_bell_state_entropies():
    sigma_b = maximally_mixed(2)
    assert min_feasible_lambda(bell_state(), sigma_b) == pytest.approx(2.0)
    assert h_min(bell_state(), sigma_b).bits == pytest.approx(-1.0)
    assert h_max(bell_state(), sigma_b).bits == pytest.approx(-1.0)


def test_h_min_is_minus_infinity_off_support():
    sigma_b = pure(2, 0)
    assert h_min(bell_state(), sigma_b).bits == -math.inf


def test_h_max_is_minus_infinity_for_disjoint_supports():
    rho_ab = product(pure(2, 0), pure(2, 1))
    assert h_max(rho_ab, pure(2, 0)).bits == -math.inf


def test_h_max_examples():
    flat_pair = QuantumState(HermitianOperator.diag([0.5, 0.5, 0.0]))
    assert h_max(trivially_conditioned(flat_pair), TRIVIAL_SIGMA).bits == pytest.approx(1.0)

    sigma_b = random_density(np.random.default_rng(2), 2)
    rho_a = QuantumState(HermitianOperator.diag([0.5, 0.3, 0.2]))
    assert h_max(product(rho_a, sigma_b), sigma_b).bits == pytest.approx(math.log2(3), abs=1e-9)


def test_conditioning_dimension_checks():
    with pytest.raises(DimensionMismatch):
        h_min(bell_state(), maximally_mixed(3))
    with pytest.raises(DimensionMismatch):
        h_max(bell_state(), maximally_mixed(3))


# Unconditional

def test_unconditional_examples():
    flat = maximally_mixed(4)
    assert h_min_unconditional(flat).bits == pytest.approx(2.0)
    assert h_max_unconditional(flat).bits == pytest.approx(2.0)

    assert h_min_unconditional(pure(2)).bits == pytest.approx(0.0)
    assert h_max_unconditional(pure(2)).bits == pytest.approx(0.0)

    qubit = qubit_state(0.75)
    assert h_min_unconditional(qubit).bits == pytest.approx(0.415037, abs=1e-6)
    assert h_max_unconditional(qubit).bits == pytest.approx(1.0)


@seed(1)
@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=16))
def test_entropy_order_chain(rng_seed, dim):
    rho = random_density(np.random.default_rng(rng_seed), dim)
    low = h_min_unconditional(rho).bits
    middle = von_neumann_entropy(rho).bits
    high = h_max_unconditional(rho).bits
    assert 0 <= low + 1e-9
    assert low <= middle + 1e-9
    assert middle <= high + 1e-9


@seed(1)
@settings(max_examples=50, deadline=None)
@given(seeds)
def test_trivial_b_matches_unconditional(rng_seed):
    rho = random_density(np.random.default_rng(rng_seed), 4)
    conditioned = trivially_conditioned(rho)
    assert h_min(conditioned, TRIVIAL_SIGMA).bits == pytest.approx(h_min_unconditional(rho).bits, abs=1e-9)
    assert h_max(conditioned, TRIVIAL_SIGMA).bits == pytest.approx(h_max_unconditional(rho).bits, abs=1e-9)


@seed(1)
@settings(max_examples=50, deadline=None)
@given(seeds)
def test_unitary_invariance(rng_seed):
    rng = np.random.default_rng(rng_seed)
    rho_ab = BipartiteState(random_density(rng, 6), 3, 2)
    sigma_b = random_density(rng, 2)

    U_a = random_unitary(rng_seed, 3)
    U_b = random_unitary(rng_seed + 1, 2)
    U = np.kron(U_a, U_b)
    rotated = BipartiteState.from_matrix(U @ rho_ab.matrix @ U.conj().T, 3, 2)
    rotated_sigma = QuantumState.from_matrix(U_b @ sigma_b.matrix @ U_b.conj().T)

    assert von_neumann_entropy(rotated.state).bits == pytest.approx(
        von_neumann_entropy(rho_ab.state).bits, abs=1e-8)
    assert h_min(rotated, rotated_sigma).bits == pytest.approx(h_min(rho_ab, sigma_b).bits, abs=1e-8)
    assert h_max(rotated, rotated_sigma).bits == pytest.approx(h_max(rho_ab, sigma_b).bits, abs=1e-8)
