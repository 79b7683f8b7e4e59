"""
Entropy Core - von Neumann entropy and the non-smooth min/max entropies
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from config_manager import Tolerances, DEFAULT_TOLERANCES
from errors import DimensionMismatch, NotNormalized
from operator_core import (
    BipartiteState,
    HermitianOperator,
    QuantumState,
    numerical_rank,
    partial_trace,
    psd_power,
    support_projector,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyValue:
    """Entropy in bits; may be +inf or -inf under the documented support conditions."""
    bits: float
    units: str = "bits"

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.bits)

    def __float__(self) -> float:
        return self.bits


def _shannon_bits(values: np.ndarray, cutoff: float) -> float:
    values = values[values > cutoff]
    return float(max(0.0, -np.sum(values * np.log2(values))))


def von_neumann_entropy(rho: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES) -> EntropyValue:
    """S(rho) = -Tr rho log2 rho."""
    if not rho.normalized:
        raise NotNormalized("von Neumann entropy needs a normalized state")
    bits = _shannon_bits(rho.eigenvalues(), tol.entropy_cutoff)
    return EntropyValue(min(bits, math.log2(rho.dim)))


def conditional_von_neumann_entropy(rho_ab: BipartiteState,
                                    tol: Tolerances = DEFAULT_TOLERANCES) -> EntropyValue:
    """S(A|B) = S(AB) - S(B)."""
    joint = von_neumann_entropy(rho_ab.state, tol)
    marginal = von_neumann_entropy(rho_ab.marginal("B"), tol)
    return EntropyValue(joint.bits - marginal.bits)


def conditioning_operator(rho_ab: BipartiteState, sigma_b: QuantumState) -> np.ndarray:
    """I_A (x) sigma_B after checking dimensions."""
    if sigma_b.dim != rho_ab.dim_b:
        raise DimensionMismatch(f"sigma_B has dimension {sigma_b.dim}, expected {rho_ab.dim_b}")
    if not sigma_b.normalized:
        raise NotNormalized("sigma_B must be normalized")
    return np.kron(np.eye(rho_ab.dim_a), sigma_b.matrix)


def min_feasible_lambda(rho_ab: BipartiteState, sigma_b: QuantumState,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Smallest lambda with rho_AB <= lambda I (x) sigma_B; +inf when no lambda exists.

    Computed as the largest eigenvalue of (I (x) sigma)^(-1/2) rho (I (x) sigma)^(-1/2)
    with the pseudo-inverse taken on the support of sigma_B.
    """
    conditioning = conditioning_operator(rho_ab, sigma_b)

    # the B marginal must live inside supp(sigma_B)
    rho_b = partial_trace(rho_ab, "B").entries
    outside = np.eye(sigma_b.dim) - support_projector(sigma_b, tol).matrix
    leaked = float(np.trace(outside @ rho_b).real)
    if leaked > tol.assertion:
        logger.debug(f"rho_B has weight {leaked:.3e} outside supp(sigma_B)")
        return math.inf

    inverse_root = psd_power(HermitianOperator(conditioning), -0.5, tol)
    conjugated = inverse_root @ rho_ab.matrix @ inverse_root
    conjugated = (conjugated + conjugated.conj().T) / 2
    return float(HermitianOperator(conjugated).eigenvalues()[0])


def h_min(rho_ab: BipartiteState, sigma_b: QuantumState,
          tol: Tolerances = DEFAULT_TOLERANCES) -> EntropyValue:
    """H_min(rho_AB|sigma_B) = -log2 min{lambda : rho_AB <= lambda I_A (x) sigma_B}."""
    lam = min_feasible_lambda(rho_ab, sigma_b, tol)
    if math.isinf(lam):
        return EntropyValue(-math.inf)
    if lam <= 0:
        return EntropyValue(math.inf)
    return EntropyValue(-math.log2(lam))


def h_max(rho_ab: BipartiteState, sigma_b: QuantumState,
          tol: Tolerances = DEFAULT_TOLERANCES) -> EntropyValue:
    """H_max(rho_AB|sigma_B) = log2 Tr(pi_AB (I_A (x) sigma_B)), pi_AB the support of rho_AB."""
    conditioning = conditioning_operator(rho_ab, sigma_b)
    support = support_projector(rho_ab, tol).matrix
    weight = float(np.trace(support @ conditioning).real)
    if weight <= tol.entropy_cutoff:
        return EntropyValue(-math.inf)
    return EntropyValue(math.log2(weight))


def h_min_unconditional(rho: QuantumState) -> EntropyValue:
    """H_inf(rho) = -log2 ||rho||_inf."""
    top = float(rho.eigenvalues()[0])
    if top <= 0:
        return EntropyValue(math.inf)
    return EntropyValue(-math.log2(top))


def h_max_unconditional(rho: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES) -> EntropyValue:
    """H_0(rho) = log2 rank(rho)."""
    rank = numerical_rank(rho, tol)
    if rank == 0:
        return EntropyValue(-math.inf)
    return EntropyValue(math.log2(rank))


def trivially_conditioned(rho: QuantumState) -> BipartiteState:
    """View rho as a bipartite state with a one-dimensional B factor."""
    return BipartiteState(rho, rho.dim, 1)


TRIVIAL_SIGMA = QuantumState.from_matrix([[1.0]])
