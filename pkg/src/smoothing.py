"""
Smoothing - The trace-distance ball, exact classical smooth entropies and the explicit smoothing constructions
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from config_manager import Tolerances, DEFAULT_TOLERANCES
from entropy_core import (
    EntropyValue,
    conditioning_operator,
    h_max,
    h_max_unconditional,
    h_min,
    h_min_unconditional,
)
from errors import (
    BadSpec,
    ConstructionFailure,
    DimensionTooLarge,
    EpsilonTooLarge,
    NoFeasibleGamma,
    NonConvergence,
    NotNormalized,
    PreconditionViolated,
)
from iid_spectrum import WeightedSpectrum
from operator_core import (
    BipartiteState,
    HermitianOperator,
    OperatorLike,
    QuantumState,
    _require_same_dim,
    as_operator,
    eigensystem,
    positive_part,
    psd_power,
    purify,
    reduce_purification,
    spectral_projector,
    support_projector,
    trace_distance,
)

logger = logging.getLogger(__name__)

METHODS = ("exactClassical", "projection", "additiveLemma", "projectorLemma", "oracle")

BALL_SLACK = 1e-9
ORACLE_MAX_DIM = 9
BISECTION_RESOLUTION_BITS = 1e-4
HMAX_SWEEP_STEP_BITS = 0.01


@dataclass
class SmoothingResult:
    """A smooth-entropy value together with the smoothed operator that attains it."""
    value: EntropyValue
    epsilon: float
    method: str
    witness: Optional[QuantumState] = None
    distance: float = 0.0
    witness_spectrum: Optional[WeightedSpectrum] = None
    notes: Dict[str, Any] = field(default_factory=dict)


def ball_contains(rho_bar: OperatorLike, rho: OperatorLike, epsilon: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Membership in B^eps(rho) = {rho_bar >= 0 : ||rho_bar - rho||_1 <= eps, Tr rho_bar <= Tr rho}."""
    rho_bar, rho = as_operator(rho_bar), as_operator(rho)
    _require_same_dim(rho_bar, rho)
    if float(rho_bar.eigenvalues()[-1]) < -tol.positivity:
        return False
    if trace_distance(rho_bar, rho) > epsilon + BALL_SLACK:
        return False
    return rho_bar.trace <= rho.trace + BALL_SLACK


def _smoothing_budget(spectrum: WeightedSpectrum, epsilon: float, tol: Tolerances) -> float:
    """Validate epsilon against the spectrum and return its total mass."""
    if epsilon < 0 or not math.isfinite(epsilon):
        raise BadSpec(f"epsilon must be a finite nonnegative number, got {epsilon}")
    total = spectrum.total_mass()
    if total > 1 + tol.assertion:
        raise NotNormalized(f"Spectrum has total mass {total:.12f} above 1")
    if epsilon >= total:
        raise EpsilonTooLarge(f"epsilon={epsilon} removes the whole mass {total:.6f}")
    return total


def smooth_hmin_classical(spectrum: WeightedSpectrum, epsilon: float,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Exact smooth min-entropy of a diagonal state: cut epsilon of mass from above a common cap."""
    _smoothing_budget(spectrum, epsilon, tol)

    log_values = spectrum.log2_values()
    log_counts = spectrum.log2_multiplicities()
    cumulative_mass = np.cumsum(spectrum.masses())
    log_cumulative_count = np.logaddexp2.accumulate(log_counts)

    # mass removed when the top k+1 atoms are capped at the next atom's value
    next_log_values = np.append(log_values[1:], -np.inf)
    excess = cumulative_mass - np.exp2(next_log_values + log_cumulative_count)
    k = int(np.argmax(excess > epsilon))

    log_cap = math.log2(cumulative_mass[k] - epsilon) - float(log_cumulative_count[k])
    removed = float(cumulative_mass[k] - 2.0 ** (log_cap + log_cumulative_count[k]))

    witness_spectrum = WeightedSpectrum.from_log_atoms(
        np.concatenate([[log_cap], log_values[k + 1:]]),
        np.concatenate([[log_cumulative_count[k]], log_counts[k + 1:]]),
        spectrum.log_domain,
        tol,
    )
    return SmoothingResult(
        value=EntropyValue(-log_cap),
        epsilon=float(epsilon),
        method="exactClassical",
        distance=max(0.0, removed),
        witness_spectrum=witness_spectrum,
        notes={"cap": 2.0 ** log_cap, "capped_atoms": k + 1},
    )


def smooth_hmax_classical(spectrum: WeightedSpectrum, epsilon: float,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Exact smooth max-entropy of a diagonal state: delete the smallest eigenvalues while the deleted mass fits in epsilon."""
    _smoothing_budget(spectrum, epsilon, tol)

    # ascending order, ties keep atom order
    log_values = spectrum.log2_values()[::-1]
    log_counts = spectrum.log2_multiplicities()[::-1]
    masses = spectrum.masses()[::-1]
    budget = epsilon + tol.merge_relative

    deleted = 0.0
    for i in range(len(masses)):
        if masses[i] <= budget - deleted:
            deleted += masses[i]
            continue

        fraction = (budget - deleted) / masses[i]
        count = 2.0 ** log_counts[i] if log_counts[i] < 53 else math.inf
        if math.isfinite(count):
            kept_fraction = (count - math.floor(fraction * count)) / count
        else:
            kept_fraction = 1.0 - fraction
        deleted += masses[i] * (1.0 - kept_fraction)
        log_kept = np.concatenate([[log_counts[i] + math.log2(kept_fraction)], log_counts[i + 1:]])
        kept_values = log_values[i:]
        break
    else:
        raise EpsilonTooLarge(f"epsilon={epsilon} deletes the entire support")

    witness_spectrum = WeightedSpectrum.from_log_atoms(kept_values, log_kept, spectrum.log_domain, tol)
    log_support = float(np.logaddexp2.reduce(log_kept))
    return SmoothingResult(
        value=EntropyValue(log_support),
        epsilon=float(epsilon),
        method="exactClassical",
        distance=deleted,
        witness_spectrum=witness_spectrum,
        notes={"deleted_mass": deleted},
    )


def _state_spectrum(rho: QuantumState, tol: Tolerances) -> Tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues with numerical zeros set to zero, and eigenvectors."""
    values, vectors = eigensystem(rho.matrix)
    values = np.clip(values, 0.0, None)
    if values[0] > 0:
        values[values <= tol.rank_cutoff * values[0]] = 0.0
    return values, vectors


def _rebuild(values: np.ndarray, vectors: np.ndarray) -> QuantumState:
    return QuantumState.from_matrix((vectors * values) @ vectors.conj().T)


def smooth_hmin_unconditional(rho: QuantumState, epsilon: float,
                              tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """H_min^eps(rho) through the classical rule on the spectrum, rotated back to rho's eigenbasis."""
    values, vectors = _state_spectrum(rho, tol)
    classical = smooth_hmin_classical(WeightedSpectrum.from_probabilities(values, tol), epsilon, tol)

    witness = _rebuild(np.minimum(values, classical.notes["cap"]), vectors)
    return replace(classical, witness=witness, distance=trace_distance(witness, rho))


def smooth_hmax_unconditional(rho: QuantumState, epsilon: float,
                              tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """H_max^eps(rho) through the classical rule on the spectrum, rotated back to rho's eigenbasis."""
    values, vectors = _state_spectrum(rho, tol)
    classical = smooth_hmax_classical(WeightedSpectrum.from_probabilities(values, tol), epsilon, tol)

    kept = int(round(2.0 ** classical.value.bits))
    truncated = values.copy()
    truncated[kept:] = 0.0
    witness = _rebuild(truncated, vectors)
    return replace(classical, witness=witness, distance=trace_distance(witness, rho))


def _require_normalized(rho: QuantumState, what: str):
    if not rho.normalized:
        raise NotNormalized(f"{what} needs a normalized state")


def _compress(rho: QuantumState, projector: np.ndarray) -> Tuple[QuantumState, float]:
    """(P rho P, 1 - Tr[P rho])."""
    compressed = projector @ rho.matrix @ projector
    state = QuantumState.from_matrix((compressed + compressed.conj().T) / 2)
    delta = 1.0 - float(np.trace(projector @ rho.matrix).real)
    return state, max(0.0, delta)


def projection_smooth_low(rho: QuantumState, gamma_bits: float,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[QuantumState, float]:
    """Cut the eigenvalues at or above 2^-gamma: Q rho Q with Q = {rho < 2^-gamma I}."""
    _require_normalized(rho, "Projection smoothing")
    threshold = (2.0 ** -gamma_bits) * HermitianOperator.identity(rho.dim)
    Q = spectral_projector(rho, threshold, "<", tol)
    return _compress(rho, Q.matrix)


def projection_smooth_high(rho: QuantumState, gamma_bits: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[QuantumState, float]:
    """Keep the eigenvalues at or above 2^-gamma: P rho P with P = {rho >= 2^-gamma I}."""
    _require_normalized(rho, "Projection smoothing")
    threshold = (2.0 ** -gamma_bits) * HermitianOperator.identity(rho.dim)
    P = spectral_projector(rho, threshold, ">=", tol)
    return _compress(rho, P.matrix)


def smooth_hmin_projection(rho: QuantumState, gamma_bits: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Min-entropy certificate from projection_smooth_low, valid at epsilon = 2 sqrt(delta)."""
    witness, delta = projection_smooth_low(rho, gamma_bits, tol)
    return SmoothingResult(
        value=h_min_unconditional(witness),
        epsilon=2 * math.sqrt(delta),
        method="projection",
        witness=witness,
        distance=trace_distance(witness, rho),
        notes={"gamma_bits": gamma_bits, "delta": delta},
    )


def smooth_hmax_projection(rho: QuantumState, gamma_bits: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Max-entropy certificate from projection_smooth_high, valid at epsilon = 2 sqrt(delta)."""
    witness, delta = projection_smooth_high(rho, gamma_bits, tol)
    return SmoothingResult(
        value=h_max_unconditional(witness, tol),
        epsilon=2 * math.sqrt(delta),
        method="projection",
        witness=witness,
        distance=trace_distance(witness, rho),
        notes={"gamma_bits": gamma_bits, "delta": delta},
    )


def additive_lemma_smooth(rho_ab: BipartiteState, sigma_b: QuantumState, lambda_bits: float,
                          delta_ab: HermitianOperator,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Smooth rho_AB <= 2^-lambda I (x) sigma_B + Delta_AB into a state with H_min >= lambda.

    With alpha = 2^-lambda I (x) sigma_B and beta = alpha + Delta, the operator
    T = alpha^1/2 beta^-1/2 is applied to a purification of rho_AB; the reduced
    state lies within sqrt(8 Tr Delta) of rho_AB.
    """
    _require_same_dim(rho_ab, delta_ab)
    alpha = (2.0 ** -lambda_bits) * conditioning_operator(rho_ab, sigma_b)

    smallest = float(delta_ab.eigenvalues()[-1])
    if smallest < -tol.positivity:
        raise PreconditionViolated(f"Delta_AB has eigenvalue {smallest:.3e} below zero")
    beta = alpha + delta_ab.entries
    violation = float(HermitianOperator(rho_ab.matrix - beta).eigenvalues()[0])
    if violation > tol.assertion:
        raise PreconditionViolated(
            f"rho_AB exceeds 2^-lambda I (x) sigma_B + Delta_AB by {violation:.3e}"
        )

    T = psd_power(HermitianOperator(alpha), 0.5, tol) @ psd_power(HermitianOperator(beta), -0.5, tol)
    t_bar_max = float(HermitianOperator((T + T.conj().T) / 2).eigenvalues()[0])
    if t_bar_max > 1 + tol.assertion:
        raise ConstructionFailure(f"(T + T^H)/2 has eigenvalue {t_bar_max:.12f} above 1")

    # apply T (x) I_R to the purification, then discard R
    dim = rho_ab.dim
    psi = purify(rho_ab.state)
    psi_prime = (T @ psi.reshape(dim, dim)).reshape(-1)
    smoothed = reduce_purification(psi_prime, dim)
    witness = QuantumState.from_matrix((smoothed + smoothed.conj().T) / 2)

    delta_trace = max(0.0, delta_ab.trace)
    overlap_deficit = 1.0 - abs(np.vdot(psi, psi_prime))
    if rho_ab.state.normalized and overlap_deficit > delta_trace + tol.inequality:
        logger.warning(f"Purification overlap deficit {overlap_deficit:.3e} exceeds Tr Delta {delta_trace:.3e}")

    value = h_min(BipartiteState(witness, rho_ab.dim_a, rho_ab.dim_b), sigma_b, tol)
    return SmoothingResult(
        value=value,
        epsilon=math.sqrt(8 * delta_trace),
        method="additiveLemma",
        witness=witness,
        distance=trace_distance(witness, rho_ab),
        notes={
            "lambda_bits": lambda_bits,
            "delta_trace": delta_trace,
            "t_bar_max": t_bar_max,
            "overlap_deficit": float(overlap_deficit),
        },
    )


def projector_lemma_smooth(rho_ab: BipartiteState, sigma_b: QuantumState, lambda_bits: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Additive smoothing with Delta the positive part of rho_AB - 2^-lambda I (x) sigma_B."""
    threshold = HermitianOperator((2.0 ** -lambda_bits) * conditioning_operator(rho_ab, sigma_b))
    P = spectral_projector(rho_ab, threshold, ">", tol)
    excess = positive_part(as_operator(rho_ab) - threshold, tol)

    result = additive_lemma_smooth(rho_ab, sigma_b, lambda_bits, excess, tol)
    projector_mass = max(0.0, float(np.trace(P.matrix @ rho_ab.matrix).real))
    result.notes["projector_mass"] = projector_mass
    return replace(result, epsilon=math.sqrt(8 * projector_mass), method="projectorLemma")


def _projector_epsilon(rho_ab: BipartiteState, conditioning: np.ndarray, lambda_bits: float,
                       tol: Tolerances) -> float:
    """sqrt(8 Tr[{rho > 2^-lambda M} rho])."""
    P = spectral_projector(rho_ab, HermitianOperator((2.0 ** -lambda_bits) * conditioning), ">", tol)
    return math.sqrt(8 * max(0.0, float(np.trace(P.matrix @ rho_ab.matrix).real)))


def smooth_hmin_conditional_lower(rho_ab: BipartiteState, sigma_b: QuantumState, epsilon: float,
                                  resolution_bits: float = BISECTION_RESOLUTION_BITS,
                                  tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Certified lower bound on H_min^eps(rho_AB|sigma_B) by bisection over the projector-lemma lambda."""
    if epsilon < 0 or not math.isfinite(epsilon):
        raise BadSpec(f"epsilon must be a finite nonnegative number, got {epsilon}")
    conditioning = conditioning_operator(rho_ab, sigma_b)

    def feasible(lambda_bits: float) -> bool:
        return _projector_epsilon(rho_ab, conditioning, lambda_bits, tol) <= epsilon

    lo = h_min(rho_ab, sigma_b, tol).bits
    if not math.isfinite(lo):
        # rho_B leaks outside supp(sigma_B): walk down until the leaked mass fits in epsilon
        lo = -1.0
        while not feasible(lo):
            lo *= 2
            if lo < -1024:
                raise PreconditionViolated("No lambda satisfies the projector bound; supp(sigma_B) misses rho_B")

    hi = lo + 1.0
    while feasible(hi):
        lo, hi = hi, hi + 2 * (hi - lo)
        if hi - lo > 4096:
            raise EpsilonTooLarge(f"epsilon={epsilon} leaves the smooth min-entropy unbounded")

    while hi - lo > resolution_bits:
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid

    result = projector_lemma_smooth(rho_ab, sigma_b, lo, tol)
    result.notes["lambda_bits"] = lo
    logger.debug(f"Conditional H_min lower bound: lambda={lo:.6f}, witness value={result.value.bits:.6f}")
    return replace(result, epsilon=float(epsilon))


def _pick_solver(preferred: Optional[str]) -> Optional[str]:
    if preferred and preferred in cp.installed_solvers():
        return preferred
    return None


def _into_ball(candidate: np.ndarray, rho: QuantumState, epsilon: float) -> QuantumState:
    """Clean a solver output into a PSD operator inside B^eps(rho)."""
    values, vectors = eigensystem((candidate + candidate.conj().T) / 2)
    cleaned = (vectors * np.clip(values, 0.0, None)) @ vectors.conj().T
    trace = float(np.trace(cleaned).real)
    if trace > rho.trace:
        cleaned *= rho.trace / trace

    distance = trace_distance(HermitianOperator(cleaned), rho)
    if distance > epsilon:
        weight = epsilon / distance
        cleaned = weight * cleaned + (1 - weight) * rho.matrix
    return QuantumState.from_matrix(cleaned)


def smooth_hmin_conditional_oracle(rho_ab: BipartiteState, sigma_b: QuantumState, epsilon: float,
                                   solver: Optional[str] = "CLARABEL", max_dim: int = ORACLE_MAX_DIM,
                                   tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Reference value of H_min^eps(rho_AB|sigma_B) from a semidefinite program over the ball.

    Minimizes lambda subject to rho_bar <= lambda I (x) sigma_B, rho_bar >= 0,
    Tr rho_bar <= Tr rho and ||rho_bar - rho||_1 <= eps, the trace norm being
    written as Tr(pos + neg) with rho_bar - rho = pos - neg.
    """
    if rho_ab.dim > max_dim:
        raise DimensionTooLarge(f"Oracle handles total dimension <= {max_dim}, got {rho_ab.dim}")
    if epsilon < 0 or not math.isfinite(epsilon):
        raise BadSpec(f"epsilon must be a finite nonnegative number, got {epsilon}")
    conditioning = conditioning_operator(rho_ab, sigma_b)

    if epsilon == 0:
        return SmoothingResult(value=h_min(rho_ab, sigma_b, tol), epsilon=0.0, method="oracle",
                               witness=rho_ab.state, distance=0.0)

    dim = rho_ab.dim
    rho = rho_ab.matrix
    rho_bar = cp.Variable((dim, dim), hermitian=True)
    pos = cp.Variable((dim, dim), hermitian=True)
    neg = cp.Variable((dim, dim), hermitian=True)
    gap = cp.Variable((dim, dim), hermitian=True)
    lam = cp.Variable()

    constraints = [
        rho_bar >> 0,
        pos >> 0,
        neg >> 0,
        gap >> 0,
        rho_bar - rho == pos - neg,
        gap == lam * conditioning - rho_bar,
        cp.real(cp.trace(pos + neg)) <= epsilon,
        cp.real(cp.trace(rho_bar)) <= rho_ab.state.trace,
    ]
    problem = cp.Problem(cp.Minimize(lam), constraints)

    try:
        problem.solve(solver=_pick_solver(solver))
    except cp.error.SolverError as e:
        raise NonConvergence(f"SDP solver failed: {e}") from e

    if problem.status == cp.OPTIMAL_INACCURATE:
        logger.warning(f"Oracle solve finished inaccurate (lambda={lam.value})")
    elif problem.status != cp.OPTIMAL:
        raise NonConvergence(f"Oracle SDP ended with status {problem.status}")

    witness = _into_ball(rho_bar.value, rho_ab.state, epsilon)
    value = h_min(BipartiteState(witness, rho_ab.dim_a, rho_ab.dim_b), sigma_b, tol)
    logger.debug(f"Oracle: solver lambda={float(lam.value):.6e}, witness H_min={value.bits:.6f}")
    return SmoothingResult(
        value=value,
        epsilon=float(epsilon),
        method="oracle",
        witness=witness,
        distance=trace_distance(witness, rho_ab),
        notes={"solver_lambda": float(lam.value), "status": problem.status},
    )


def _gamma_grid(rho_ab: BipartiteState, conditioning: np.ndarray, step_bits: float,
                tol: Tolerances) -> List[float]:
    """Descending gamma values covering every change of {rho >= 2^-gamma M}."""
    inverse_root = psd_power(HermitianOperator(conditioning), -0.5, tol)
    ratios = HermitianOperator(inverse_root @ rho_ab.matrix @ inverse_root).eigenvalues()
    positive = ratios[ratios > tol.rank_cutoff * max(ratios[0], 0.0)] if ratios[0] > 0 else ratios[:0]
    if positive.size == 0:
        return [0.0]

    breakpoints = -np.log2(positive)
    top = float(np.max(breakpoints)) + 2
    bottom = float(np.min(breakpoints)) - 1
    sweep = np.arange(top, bottom - step_bits, -step_bits)
    grid = np.concatenate([[top + 30], sweep, breakpoints])
    return sorted(set(float(g) for g in grid), reverse=True)


def smooth_hmax_conditional_upper(rho_ab: BipartiteState, sigma_b: QuantumState, epsilon: float,
                                  step_bits: float = HMAX_SWEEP_STEP_BITS,
                                  tol: Tolerances = DEFAULT_TOLERANCES) -> SmoothingResult:
    """Upper bound on H_max^eps(rho_AB|sigma_B) from projection smoothing with P = {rho >= 2^-gamma I (x) sigma_B}."""
    if epsilon < 0 or not math.isfinite(epsilon):
        raise BadSpec(f"epsilon must be a finite nonnegative number, got {epsilon}")
    conditioning = conditioning_operator(rho_ab, sigma_b)

    best = None
    for gamma in _gamma_grid(rho_ab, conditioning, step_bits, tol):
        threshold = HermitianOperator((2.0 ** -gamma) * conditioning)
        P = spectral_projector(rho_ab, threshold, ">=", tol)
        witness, delta = _compress(rho_ab.state, P.matrix)
        distance = trace_distance(witness, rho_ab)
        if distance > epsilon + BALL_SLACK:
            continue

        support = support_projector(witness, tol).matrix
        weight = float(np.trace(support @ conditioning).real)
        bits = math.log2(weight) if weight > tol.entropy_cutoff else -math.inf
        if best is None or bits < best[0]:
            best = (bits, gamma, witness, distance, delta)

    if best is None:
        raise NoFeasibleGamma(f"No gamma on the sweep keeps the smoothed state within epsilon={epsilon}")

    bits, gamma, witness, distance, delta = best
    if bits > gamma + tol.assertion:
        raise ConstructionFailure(f"Smoothed max-entropy {bits:.6f} exceeds its cap gamma={gamma:.6f}")

    value = h_max(BipartiteState(witness, rho_ab.dim_a, rho_ab.dim_b), sigma_b, tol)
    return SmoothingResult(
        value=value,
        epsilon=float(epsilon),
        method="projection",
        witness=witness,
        distance=distance,
        notes={"gamma_bits": gamma, "delta": delta},
    )

