"""
Test dense operator algebra, spectral projections and the operator lemmas
"""

import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from errors import (
    BadSpec,
    ConstructionFailure,
    DimensionMismatch,
    LambdaOutOfRange,
    NotHermitian,
    NotNormalized,
    NotPositive,
    POutOfRange,
)
from operator_core import (
    BipartiteState,
    HermitianOperator,
    Projector,
    QuantumState,
    bipartite_tensor_power,
    check_corollary1,
    check_fidelity_chain,
    check_lemma1,
    check_lemma2,
    fidelity,
    gentle_measurement_delta,
    gentle_project,
    operator_from_json,
    operator_to_json,
    partial_trace,
    positive_part,
    psd_power,
    purify,
    reduce_purification,
    spectral_decompose,
    spectral_projector,
    support_projector,
    tensor_power,
    trace_distance,
)
from state_factory import bell_state, random_density, random_effect, random_hermitian

QUBIT = QuantumState(HermitianOperator.diag([0.75, 0.25]))
HALF = QuantumState(HermitianOperator.diag([0.5, 0.5]))

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def diag(*values):
    return HermitianOperator.diag(values)


# Types

def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        HermitianOperator([[1.0, 1.0], [0.0, 1.0]])


def test_hermitian_operator_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        HermitianOperator(np.zeros((2, 3)))


def test_hermitian_operator_is_read_only():
    op = diag(1.0, 2.0)
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5.0


def test_quantum_state_validation():
    with pytest.raises(NotPositive):
        QuantumState(diag(1.2, -0.2))
    with pytest.raises(NotNormalized):
        QuantumState(diag(0.5, 0.4), normalized=True)
    with pytest.raises(NotNormalized):
        QuantumState(diag(0.8, 0.4), normalized=False)

    subnormalized = QuantumState.from_matrix(np.diag([0.5, 0.4]))
    assert not subnormalized.normalized
    assert QuantumState.from_matrix(np.diag([0.5, 0.5])).normalized


def test_bipartite_dims_must_match():
    with pytest.raises(DimensionMismatch):
        BipartiteState(HALF, 2, 2)


def test_projector_rejects_non_idempotent():
    with pytest.raises(ConstructionFailure):
        Projector(diag(0.5, 1.0))


# Spectral decomposition

def test_spectral_decompose_examples():
    pairs = spectral_decompose(diag(1.0, -1.0))
    assert [value for value, _ in pairs] == pytest.approx([1.0, -1.0])
    assert np.allclose(np.abs(pairs[0][1]), [1, 0])

    values = [value for value, _ in spectral_decompose(HermitianOperator.identity(3))]
    assert values == pytest.approx([1.0, 1.0, 1.0])

    values = [value for value, _ in spectral_decompose(HermitianOperator([[0.5, 0.5], [0.5, 0.5]]))]
    assert values == pytest.approx([1.0, 0.0], abs=1e-12)


@seed(1)
@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=6))
def test_spectral_decompose_reconstructs(rng_seed, dim):
    A = random_hermitian(np.random.default_rng(rng_seed), dim)
    pairs = spectral_decompose(A)
    values = [value for value, _ in pairs]
    vectors = np.column_stack([vector for _, vector in pairs])

    assert values == sorted(values, reverse=True)
    assert np.allclose(vectors.conj().T @ vectors, np.eye(dim), atol=1e-9)
    assert np.allclose((vectors * values) @ vectors.conj().T, A.entries, atol=1e-9)


# Spectral projectors

def test_spectral_projector_examples():
    P = spectral_projector(diag(1.0, -1.0), HermitianOperator.zeros(2), ">=")
    assert np.allclose(P.matrix, np.diag([1, 0]))

    A = random_hermitian(np.random.default_rng(3), 3)
    assert np.allclose(spectral_projector(A, A, ">=").matrix, np.eye(3))
    assert np.allclose(spectral_projector(A, A, ">").matrix, np.zeros((3, 3)))

    P = spectral_projector(diag(0.75, 0.25), 0.5 * HermitianOperator.identity(2), ">=")
    assert np.allclose(P.matrix, np.diag([1, 0]))


def test_spectral_projector_errors():
    with pytest.raises(DimensionMismatch):
        spectral_projector(diag(1.0, 0.0), HermitianOperator.identity(3), ">=")
    with pytest.raises(BadSpec):
        spectral_projector(diag(1.0, 0.0), diag(0.0, 1.0), "==")


@seed(1)
@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=6))
def test_projector_complements_sum_to_identity(rng_seed, dim):
    rng = np.random.default_rng(rng_seed)
    A, B = random_hermitian(rng, dim), random_hermitian(rng, dim)
    geq = spectral_projector(A, B, ">=").matrix
    less = spectral_projector(A, B, "<").matrix
    assert np.allclose(geq + less, np.eye(dim), atol=1e-9)
    assert np.allclose(geq @ geq, geq, atol=1e-9)


def test_positive_part_and_support():
    X = diag(0.5, -0.25, 0.0)
    assert np.allclose(positive_part(X).entries, np.diag([0.5, 0, 0]))
    assert support_projector(diag(0.7, 0.3, 0.0)).rank == 2


def test_psd_power_pseudo_inverse():
    inverse_root = psd_power(diag(0.25, 0.0), -0.5)
    assert np.allclose(inverse_root, np.diag([2.0, 0.0]))


# Distances

def test_trace_distance_examples():
    assert trace_distance(diag(1.0, 0.0), diag(0.0, 1.0)) == pytest.approx(2.0)
    assert trace_distance(QUBIT, QUBIT) == pytest.approx(0.0)
    assert trace_distance(QUBIT, HALF) == pytest.approx(0.5)


@seed(1)
@settings(max_examples=50, deadline=None)
@given(seeds)
def test_trace_distance_is_a_metric(rng_seed):
    rng = np.random.default_rng(rng_seed)
    A, B, C = (random_hermitian(rng, 4) for _ in range(3))
    assert trace_distance(A, B) == pytest.approx(trace_distance(B, A), abs=1e-12)
    assert trace_distance(A, C) <= trace_distance(A, B) + trace_distance(B, C) + 1e-9


def test_fidelity_examples():
    assert fidelity(QUBIT, QUBIT) == pytest.approx(1.0)
    pure0 = QuantumState(diag(1.0, 0.0))
    pure1 = QuantumState(diag(0.0, 1.0))
    assert fidelity(pure0, pure1) == pytest.approx(0.0, abs=1e-9)
    assert fidelity(QUBIT, HALF) == pytest.approx(np.sqrt(0.375) + np.sqrt(0.125))
    assert fidelity(QUBIT, HALF) == pytest.approx(0.9659, abs=1e-4)


@seed(1)
@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=6))
def test_fidelity_chain(rng_seed, dim):
    rng = np.random.default_rng(rng_seed)
    half, sine, root = check_fidelity_chain(random_density(rng, dim), random_density(rng, dim))
    assert half <= sine + 1e-8
    assert sine <= root + 1e-8


# Purification and partial trace

def test_purify_examples():
    psi = purify(QUBIT)
    assert np.allclose(psi, [np.sqrt(0.75), 0, 0, np.sqrt(0.25)])
    assert np.allclose(reduce_purification(psi, 2), QUBIT.matrix)

    psi = purify(HALF)
    assert np.allclose(np.abs(psi), np.sqrt(0.5) * np.array([1, 0, 0, 1]))

    psi = purify(QuantumState(diag(1.0, 0.0)))
    assert np.allclose(np.abs(psi), [1, 0, 0, 0])


def test_purify_subnormalized_norm_is_trace():
    state = QuantumState(diag(0.5, 0.2), normalized=False)
    psi = purify(state)
    assert np.vdot(psi, psi).real == pytest.approx(0.7)


def test_partial_trace_examples():
    rho_b = random_density(np.random.default_rng(5), 2).matrix
    product = BipartiteState.from_matrix(np.kron(QUBIT.matrix, rho_b), 2, 2)
    assert np.allclose(partial_trace(product, "A").entries, QUBIT.matrix, atol=1e-10)
    assert np.allclose(partial_trace(product, "B").entries, rho_b, atol=1e-10)

    assert np.allclose(partial_trace(bell_state(), "B").entries, np.eye(2) / 2)

    with pytest.raises(DimensionMismatch):
        partial_trace(HermitianOperator.identity(4), "A")


# Gentle measurement

def test_gentle_project_examples():
    smoothed, distance = gentle_project(QUBIT, HermitianOperator.identity(2))
    assert np.allclose(smoothed.matrix, QUBIT.matrix)
    assert distance == pytest.approx(0.0, abs=1e-12)

    pure0 = QuantumState(diag(1.0, 0.0))
    smoothed, distance = gentle_project(pure0, diag(0.96, 1.0))
    assert np.allclose(smoothed.matrix, np.diag([0.96, 0.0]))
    assert distance == pytest.approx(0.04)
    assert gentle_measurement_delta(pure0, diag(0.96, 1.0)) == pytest.approx(0.04)


def test_gentle_project_rejects_bad_effect():
    with pytest.raises(LambdaOutOfRange):
        gentle_project(QUBIT, diag(1.5, 0.5))


@seed(1)
@settings(max_examples=100, deadline=None)
@given(seeds, st.booleans())
def test_gentle_measurement_bound(rng_seed, subnormalized):
    rng = np.random.default_rng(rng_seed)
    rho = random_density(rng, 4)
    if subnormalized:
        rho = QuantumState(rho.op * 0.9, normalized=False)
    Lambda = random_effect(rng, 4)
    _, distance = gentle_project(rho, Lambda)
    assert distance <= 2 * np.sqrt(gentle_measurement_delta(rho, Lambda)) + 1e-8


# Lemmas

def test_lemma1_saturates_on_its_own_projector():
    A, B = diag(0.75, 0.25), 0.5 * HermitianOperator.identity(2)
    P = spectral_projector(A, B, ">=").op
    lhs, upper, _ = check_lemma1(A, B, P)
    assert lhs == pytest.approx(upper)

    lhs, upper, lower = check_lemma1(A, A, random_effect(np.random.default_rng(0), 2))
    assert (lhs, upper, lower) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_lemma1_rejects_bad_effect():
    with pytest.raises(POutOfRange):
        check_lemma1(diag(1.0, 0.0), diag(0.0, 1.0), diag(2.0, 0.0))


@seed(1)
@settings(max_examples=100, deadline=None)
@given(seeds, st.booleans())
def test_lemma1_and_corollary1(rng_seed, strict):
    rng = np.random.default_rng(rng_seed)
    A, B, P = random_hermitian(rng, 5), random_hermitian(rng, 5), random_effect(rng, 5)
    lhs, upper, lower = check_lemma1(A, B, P, strict=strict)
    assert lower - 1e-9 <= lhs <= upper + 1e-9

    value, distance = check_corollary1(A, B, P)
    assert value <= distance + 1e-9


def test_lemma2_examples():
    value, bound = check_lemma2(QUBIT, QUBIT.op, 0.0, 1)
    assert (value, bound) == pytest.approx((1.0, 1.0))

    # only the 0.75 eigenvalue clears 2^-1
    value, bound = check_lemma2(QUBIT, HermitianOperator.identity(2), 1.0, 1)
    assert (value, bound) == pytest.approx((1.0, 2.0))

    value, bound = check_lemma2(QUBIT, HermitianOperator.identity(2), 2.0, 1)
    assert (value, bound) == pytest.approx((2.0, 4.0))

    with pytest.raises(NotPositive):
        check_lemma2(QUBIT, diag(1.0, -1.0), 0.0, 1)


@seed(1)
@settings(max_examples=100, deadline=None)
@given(seeds, st.floats(min_value=-2, max_value=2), st.integers(min_value=1, max_value=3))
def test_lemma2_bound(rng_seed, gamma, n):
    rng = np.random.default_rng(rng_seed)
    dim = int(rng.integers(2, 9))
    omega = random_density(rng, dim).op * 2.5
    value, bound = check_lemma2(random_density(rng, dim), omega, gamma, n)
    assert value <= bound + 1e-9


# Tensor powers and JSON

def test_bipartite_tensor_power_regroups_factors():
    rho_ab = bell_state()
    doubled = bipartite_tensor_power(rho_ab, 2)
    assert (doubled.dim_a, doubled.dim_b) == (4, 4)
    # Tr_B of two Bell pairs is maximally mixed on A1 A2
    assert np.allclose(partial_trace(doubled, "A").entries, np.eye(4) / 4)
    assert tensor_power(QUBIT, 3).trace == pytest.approx(1.0)


def test_operator_json_layout():
    noisy = QuantumState.from_matrix([[0.5, 0.25j], [-0.25j, 0.5]])
    data = operator_to_json(noisy)
    assert data["dim"] == 2
    assert data["im"][0][1] == pytest.approx(0.25)

    op, dims = operator_from_json(operator_to_json(bell_state()))
    assert dims == (2, 2)
    assert np.allclose(op.entries, bell_state().matrix)

    with pytest.raises(BadSpec):
        operator_from_json({"dim": 2, "re": [[1.0]]})
