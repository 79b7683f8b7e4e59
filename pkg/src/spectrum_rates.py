"""
Spectrum Rates - Finite-n information-spectrum functionals, rate profiles and the divergence proposition checks
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config_manager import Tolerances, DEFAULT_TOLERANCES
from entropy_core import conditioning_operator
from errors import (
    BadSpec,
    DimensionTooLarge,
    GridTooCoarse,
    NotNormalized,
    NotPositive,
    ParameterOrder,
    RankOutOfRange,
)
from iid_spectrum import (
    DEFAULT_MAX_CLASSES,
    iid_spectrum,
    spectral_excess_gamma,
    spectral_trace_gamma,
    top_mass,
)
from operator_core import (
    BipartiteState,
    HermitianOperator,
    OperatorLike,
    Projector,
    QuantumState,
    _require_same_dim,
    as_operator,
    bipartite_tensor_power,
    spectral_projector,
    tensor_power,
)

logger = logging.getLogger(__name__)

MAX_DENSE_DIM = 256

# (n, gamma) -> trace value
TraceFunction = Callable[[int, float], float]

ENTROPY = "entropy"
DIVERGENCE = "divergence"


def threshold_exponent(gamma: float, n: int, convention: str) -> float:
    """Exponent of 2 multiplying the reference operator.

    Entropy functionals compare against 2^(-n gamma) I, divergence functionals
    against 2^(+n gamma) omega.
    """
    if convention == ENTROPY:
        return -n * gamma
    if convention == DIVERGENCE:
        return n * gamma
    raise BadSpec(f"Unknown sign convention {convention!r}")


def _trace_with(P: Projector, X: np.ndarray) -> float:
    return float(np.trace(P.matrix @ X).real)


def _check_reference(rho: OperatorLike, omega: OperatorLike, tol: Tolerances) -> HermitianOperator:
    omega = as_operator(omega)
    _require_same_dim(as_operator(rho), omega)
    smallest = float(omega.eigenvalues()[-1])
    if smallest < -tol.positivity:
        raise NotPositive(f"omega has eigenvalue {smallest:.3e} below zero")
    return omega


def div_trace_primary(rho: OperatorLike, omega: OperatorLike, gamma_bits: float,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{Pi >= 0} Pi] with Pi = rho - 2^gamma omega."""
    omega = _check_reference(rho, omega, tol)
    shifted = (2.0 ** gamma_bits) * omega
    P = spectral_projector(rho, shifted, ">=", tol)
    return max(0.0, _trace_with(P, as_operator(rho).entries - shifted.entries))


def div_trace_alt(rho: OperatorLike, omega: OperatorLike, alpha_bits: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{rho >= 2^alpha omega} rho]."""
    omega = _check_reference(rho, omega, tol)
    P = spectral_projector(rho, (2.0 ** alpha_bits) * omega, ">=", tol)
    return max(0.0, _trace_with(P, as_operator(rho).entries))


def upsilon_trace(omega: OperatorLike, alpha_bits: float, sigma_b: Optional[QuantumState] = None,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{omega >= 2^-alpha R}(omega - 2^-alpha R)], R = I or I (x) sigma_B for bipartite omega."""
    if sigma_b is not None:
        if not isinstance(omega, BipartiteState):
            raise BadSpec("The conditional form needs a bipartite omega")
        reference = HermitianOperator(conditioning_operator(omega, sigma_b))
    else:
        reference = HermitianOperator.identity(as_operator(omega).dim)

    smallest = float(as_operator(omega).eigenvalues()[-1])
    if smallest < -tol.positivity:
        raise NotPositive(f"omega has eigenvalue {smallest:.3e} below zero")

    shifted = (2.0 ** -alpha_bits) * reference
    P = spectral_projector(omega, shifted, ">=", tol)
    return max(0.0, _trace_with(P, as_operator(omega).entries - shifted.entries))


def spectral_trace(rho: OperatorLike, gamma_bits: float,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{rho >= 2^-gamma I} rho]."""
    op = as_operator(rho)
    P = spectral_projector(op, (2.0 ** -gamma_bits) * HermitianOperator.identity(op.dim), ">=", tol)
    return max(0.0, _trace_with(P, op.entries))


def conditional_projector(rho_ab: BipartiteState, gamma_bits: float,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> Projector:
    """{rho_AB >= 2^-gamma I_A (x) rho_B}."""
    if not rho_ab.state.normalized:
        raise NotNormalized("The conditional spectrum needs a normalized state")
    reference = HermitianOperator(conditioning_operator(rho_ab, rho_ab.marginal("B")))
    return spectral_projector(rho_ab, (2.0 ** -gamma_bits) * reference, ">=", tol)


def conditional_trace(rho_ab: BipartiteState, gamma_bits: float,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{rho_AB >= 2^-gamma I_A (x) rho_B} rho_AB]."""
    P = conditional_projector(rho_ab, gamma_bits, tol)
    return max(0.0, _trace_with(P, rho_ab.matrix))


def conditional_lemma2_check(rho_ab: BipartiteState, gamma_bits: float,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """(Tr[P (I (x) rho_B)], 2^gamma) for P the conditional projector."""
    P = conditional_projector(rho_ab, gamma_bits, tol)
    reference = conditioning_operator(rho_ab, rho_ab.marginal("B"))
    return _trace_with(P, reference), 2.0 ** gamma_bits


def divergence_order_check(rho: OperatorLike, omega: OperatorLike, gamma_bits: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """(primary, alt) at the same exponent; primary never exceeds alt."""
    return div_trace_primary(rho, omega, gamma_bits, tol), div_trace_alt(rho, omega, gamma_bits, tol)


def proposition_chain_check(rho: OperatorLike, omega: OperatorLike, alpha_bits: float,
                            gamma_bits: float,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """(Tr[{rho >= 2^a w} rho], Tr[{rho >= 2^g w}(rho - 2^g w)] + 2^g Tr[{rho >= 2^a w} w]) for g <= a.

    The second term of the bound is at most 2^(g - a) for trace-bounded rho.
    """
    if gamma_bits > alpha_bits:
        raise ParameterOrder(f"gamma={gamma_bits} must not exceed alpha={alpha_bits}")
    omega = _check_reference(rho, omega, tol)

    lhs = div_trace_alt(rho, omega, alpha_bits, tol)
    P = spectral_projector(rho, (2.0 ** alpha_bits) * omega, ">=", tol)
    tail = (2.0 ** gamma_bits) * _trace_with(P, omega.entries)
    bound = div_trace_primary(rho, omega, gamma_bits, tol) + tail

    if abs(lhs - bound) <= tol.inequality:
        logger.debug(f"Proposition chain tight at alpha={alpha_bits}, gamma={gamma_bits}")
    return lhs, bound


def best_projector_trace(rho: OperatorLike, rank_budget: int) -> float:
    """max Tr(pi rho) over projectors of rank `rank_budget`: the sum of the top eigenvalues."""
    values = as_operator(rho).eigenvalues()
    if not 1 <= rank_budget <= len(values):
        raise RankOutOfRange(f"Rank budget {rank_budget} outside [1, {len(values)}]")
    return float(np.sum(values[:rank_budget]))


def iid_best_projector_trace(base_eigenvalues: Sequence[float], n: int, rank_budget: int,
                             max_classes: int = DEFAULT_MAX_CLASSES) -> float:
    """best_projector_trace of rho^(x)n through the type-class spectrum."""
    if rank_budget > len(base_eigenvalues) ** n:
        raise RankOutOfRange(f"Rank budget {rank_budget} exceeds the dimension of rho^(x){n}")
    return top_mass(iid_spectrum(base_eigenvalues, n, max_classes), rank_budget)


# Trace families: a state sequence bound to one functional, evaluated at rate gamma.

def iid_spectral_family(base_eigenvalues: Sequence[float], max_classes: int = DEFAULT_MAX_CLASSES,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> TraceFunction:
    """Tr[{rho_n >= 2^(-n gamma) I} rho_n] for rho_n = rho^(x)n via type classes."""
    spectrum_at = lru_cache(maxsize=None)(lambda n: iid_spectrum(base_eigenvalues, n, max_classes, tol))

    def trace(n: int, gamma: float) -> float:
        return spectral_trace_gamma(spectrum_at(n), gamma, n, tol)
    return trace


def iid_divergence_family(base_eigenvalues: Sequence[float], functional: str,
                          max_classes: int = DEFAULT_MAX_CLASSES,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> TraceFunction:
    """A divergence functional of rho^(x)n against omega_n = I, indexed by the entropy rate gamma.

    The divergence exponent is the negated entropy exponent, so both functionals
    rise from 0 to 1 as gamma crosses the entropy rate.
    """
    if functional not in ("primary", "alt"):
        raise BadSpec(f"Unknown divergence functional {functional!r}")
    spectrum_at = lru_cache(maxsize=None)(lambda n: iid_spectrum(base_eigenvalues, n, max_classes, tol))

    def trace(n: int, gamma: float) -> float:
        exponent = threshold_exponent(-gamma, n, DIVERGENCE)
        rate = -exponent / n
        if functional == "primary":
            return spectral_excess_gamma(spectrum_at(n), rate, n, tol)
        return spectral_trace_gamma(spectrum_at(n), rate, n, tol)
    return trace


def _dense_power(op: OperatorLike, n: int, max_dim: int) -> HermitianOperator:
    dim = as_operator(op).dim ** n
    if dim > max_dim:
        raise DimensionTooLarge(f"Dense tensor power has dimension {dim} > {max_dim}")
    return tensor_power(op, n)


def dense_spectral_family(rho: QuantumState, max_dim: int = MAX_DENSE_DIM,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> TraceFunction:
    """Tr[{rho_n >= 2^(-n gamma) I} rho_n] with rho_n built as a dense matrix."""
    power_at = lru_cache(maxsize=None)(lambda n: _dense_power(rho, n, max_dim))

    def trace(n: int, gamma: float) -> float:
        return spectral_trace(power_at(n), -threshold_exponent(gamma, n, ENTROPY), tol)
    return trace


def dense_conditional_family(rho_ab: BipartiteState, max_dim: int = MAX_DENSE_DIM,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> TraceFunction:
    """Tr[{rho_n^AB >= 2^(-n gamma) I (x) rho_n^B} rho_n^AB] on dense tensor powers."""
    def build(n: int) -> BipartiteState:
        if rho_ab.dim ** n > max_dim:
            raise DimensionTooLarge(f"Dense tensor power has dimension {rho_ab.dim ** n} > {max_dim}")
        return bipartite_tensor_power(rho_ab, n)
    power_at = lru_cache(maxsize=None)(build)

    def trace(n: int, gamma: float) -> float:
        return conditional_trace(power_at(n), -threshold_exponent(gamma, n, ENTROPY), tol)
    return trace


def dense_divergence_family(rho: QuantumState, omega: HermitianOperator, functional: str,
                            max_dim: int = MAX_DENSE_DIM,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> TraceFunction:
    """A divergence functional of (rho^(x)n, omega^(x)n) at divergence rate gamma."""
    functions = {"primary": div_trace_primary, "alt": div_trace_alt}
    if functional not in functions:
        raise BadSpec(f"Unknown divergence functional {functional!r}")
    rho_at = lru_cache(maxsize=None)(lambda n: _dense_power(rho, n, max_dim))
    omega_at = lru_cache(maxsize=None)(lambda n: _dense_power(omega, n, max_dim))

    def trace(n: int, gamma: float) -> float:
        return functions[functional](rho_at(n), omega_at(n), threshold_exponent(gamma, n, DIVERGENCE), tol)
    return trace


@dataclass
class RateProfile:
    """Finite-n trace values on an (n, gamma) grid with the brackets read off at the largest n."""
    rows: List[Tuple[int, float, float]]
    lower_bracket: float
    upper_bracket: float
    thresholds: Tuple[float, float]
    monotone: bool = True


def parse_gamma_grid(text: str) -> List[float]:
    """'lo:hi:step' -> ascending grid including both ends."""
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise BadSpec(f"Gamma grid must be lo:hi:step, got {text!r}") from e
    if step <= 0 or hi < lo:
        raise BadSpec(f"Gamma grid {text!r} is empty or not ascending")
    count = int(round((hi - lo) / step))
    return [lo + i * step for i in range(count + 1)]


def rate_profile(trace_function: TraceFunction, n_list: Sequence[int], gamma_grid: Sequence[float],
                 t_low: float = 0.01, t_high: float = 0.99,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> RateProfile:
    """Evaluate a trace family on the grid and bracket its 0 -> 1 transition at the largest n."""
    grid = [float(g) for g in gamma_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise BadSpec("Gamma grid must be non-empty and strictly ascending")
    if not 0 < t_low < t_high < 1:
        raise BadSpec(f"Thresholds need 0 < tLow < tHigh < 1, got ({t_low}, {t_high})")
    if not n_list:
        raise BadSpec("At least one n is required")

    rows = []
    monotone = True
    for n in sorted(n_list):
        values = [trace_function(n, gamma) for gamma in grid]
        drops = [i for i in range(1, len(values)) if values[i] < values[i - 1] - tol.assertion]
        if drops:
            monotone = False
            logger.warning(f"Trace profile at n={n} decreases at gamma={grid[drops[0]]:.4f}")
        rows.extend((n, gamma, value) for gamma, value in zip(grid, values))
        logger.debug(f"Profile row n={n}: {len(grid)} grid points")

    largest = max(n_list)
    final = [(gamma, value) for n, gamma, value in rows if n == largest]
    below = [gamma for gamma, value in final if value <= t_low]
    above = [gamma for gamma, value in final if value >= t_high]
    if not below or not above:
        raise GridTooCoarse(
            f"No crossing of ({t_low}, {t_high}) at n={largest} on [{grid[0]}, {grid[-1]}]"
        )

    lower, upper = max(below), min(above)
    if lower > upper:
        raise GridTooCoarse(f"Brackets cross: lower {lower} above upper {upper}")
    logger.info(f"Brackets at n={largest}: [{lower:.4f}, {upper:.4f}]")
    return RateProfile(rows, lower, upper, (t_low, t_high), monotone)
