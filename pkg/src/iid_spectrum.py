"""
IID Spectrum - Exact type-class spectra of product states rho^(x)n
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from config_manager import Tolerances, DEFAULT_TOLERANCES
from errors import BadSpec, NotNormalized, NotPositive, RankOutOfRange, TooManyClasses

logger = logging.getLogger(__name__)

LOG_DOMAIN_ABOVE_N = 100
EXACT_MULTINOMIAL_BELOW_N = 50
DEFAULT_MAX_CLASSES = 10_000_000
MASS_SLACK = 1e-9
COMPOSITION_CACHE_SIZE = 32


@dataclass(frozen=True, eq=False)
class WeightedSpectrum:
    """Multiset of (value, multiplicity) atoms sorted by value descending.

    With log_domain set, `values` and `multiplicities` hold log2 of the atom
    value and log2 of its count; otherwise they are plain numbers.
    """
    values: np.ndarray
    multiplicities: np.ndarray
    log_domain: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        multiplicities = np.array(self.multiplicities, dtype=float).reshape(-1)
        if values.shape != multiplicities.shape:
            raise BadSpec("Spectrum needs one multiplicity per value")
        if np.any(np.diff(values) > 0):
            raise BadSpec("Spectrum values must be sorted descending")
        values.setflags(write=False)
        multiplicities.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "multiplicities", multiplicities)
        if self.total_mass() > 1 + MASS_SLACK:
            raise NotNormalized(f"Spectrum has total mass {self.total_mass():.12f} above 1")

    @classmethod
    def from_log_atoms(cls, log_values, log_multiplicities, log_domain: bool,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> "WeightedSpectrum":
        """Sort, merge atoms whose values agree within the relative merge tolerance, and store."""
        log_values = np.asarray(log_values, dtype=float).reshape(-1)
        log_multiplicities = np.asarray(log_multiplicities, dtype=float).reshape(-1)
        keep = np.isfinite(log_values) & np.isfinite(log_multiplicities)
        log_values, log_multiplicities = log_values[keep], log_multiplicities[keep]

        order = np.argsort(-log_values, kind="stable")
        log_values, log_multiplicities = log_values[order], log_multiplicities[order]

        if log_values.size:
            gap = tol.merge_relative / math.log(2)
            starts = np.concatenate([[0], np.flatnonzero(-np.diff(log_values) > gap) + 1])
            log_values = log_values[starts]
            log_multiplicities = np.logaddexp2.reduceat(log_multiplicities, starts)

        if log_domain:
            return cls(log_values, log_multiplicities, True)
        return cls(np.exp2(log_values), np.exp2(log_multiplicities), False)

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[float, float]],
                   tol: Tolerances = DEFAULT_TOLERANCES) -> "WeightedSpectrum":
        """Build from (value, multiplicity) pairs; zero atoms are dropped."""
        pairs = [(float(v), float(m)) for v, m in atoms if v > 0 and m > 0]
        if any(v < 0 for v, _ in atoms):
            raise NotPositive("Spectrum values must be nonnegative")
        if not pairs:
            return cls(np.zeros(0), np.zeros(0), False)
        values, counts = zip(*pairs)
        return cls.from_log_atoms(np.log2(values), np.log2(counts), False, tol)

    @classmethod
    def from_probabilities(cls, probabilities: Sequence[float],
                           tol: Tolerances = DEFAULT_TOLERANCES) -> "WeightedSpectrum":
        """Classical distribution (or eigenvalue list) with unit multiplicities."""
        probabilities = np.asarray(probabilities, dtype=float).reshape(-1)
        if np.any(probabilities < -tol.positivity):
            raise NotPositive("Probabilities must be nonnegative")
        return cls.from_atoms([(p, 1.0) for p in probabilities], tol)

    def log2_values(self) -> np.ndarray:
        if self.log_domain:
            return self.values
        with np.errstate(divide="ignore"):
            return np.log2(self.values)

    def log2_multiplicities(self) -> np.ndarray:
        if self.log_domain:
            return self.multiplicities
        with np.errstate(divide="ignore"):
            return np.log2(self.multiplicities)

    def masses(self) -> np.ndarray:
        """Per-atom mass multiplicity * value."""
        return np.exp2(self.log2_values() + self.log2_multiplicities())

    def total_mass(self) -> float:
        return math.fsum(self.masses())

    def log2_support_size(self) -> float:
        """log2 of the total number of (nonzero) eigenvalues."""
        if not len(self.values):
            return -math.inf
        return float(np.logaddexp2.reduce(self.log2_multiplicities()))

    @property
    def atom_count(self) -> int:
        return len(self.values)

    def expanded(self) -> np.ndarray:
        """Every eigenvalue listed individually, descending (small spectra only)."""
        counts = np.rint(np.exp2(self.log2_multiplicities())).astype(int)
        return np.repeat(np.exp2(self.log2_values()), counts)


@lru_cache(maxsize=COMPOSITION_CACHE_SIZE)
def _compositions(n: int, k: int) -> np.ndarray:
    """All (k_1, ..., k_k) with k_j >= 0 summing to n, first part descending."""
    if k == 1:
        result = np.array([[n]], dtype=np.int64)
    else:
        blocks = []
        for first in range(n, -1, -1):
            rest = _compositions(n - first, k - 1)
            blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
        result = np.vstack(blocks)
    result.setflags(write=False)
    return result


def _log2_multinomial(n: int, counts: np.ndarray) -> np.ndarray:
    """log2 of n! / prod k_j! per row, exact integers for small n."""
    via_gamma = (gammaln(n + 1) - np.sum(gammaln(counts + 1), axis=1)) / math.log(2)
    if n >= EXACT_MULTINOMIAL_BELOW_N:
        return via_gamma

    exact = np.array([
        math.log2(math.factorial(n) // math.prod(math.factorial(int(k)) for k in row))
        for row in counts
    ])
    deviation = float(np.max(np.abs(exact - via_gamma))) if len(exact) else 0.0
    logger.debug(f"log-gamma multinomial deviation at n={n}: {deviation:.3e} bits")
    return exact


def _distinct_eigenvalues(base: np.ndarray, tol: Tolerances) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct positive base eigenvalues (descending) with their degeneracies."""
    top = float(np.max(base))
    positive = np.sort(base[base > tol.rank_cutoff * top])[::-1]
    distinct: List[float] = []
    degeneracy: List[int] = []
    for value in positive:
        if distinct and abs(distinct[-1] - value) <= tol.merge_relative * distinct[-1]:
            degeneracy[-1] += 1
        else:
            distinct.append(float(value))
            degeneracy.append(1)
    return np.array(distinct), np.array(degeneracy, dtype=float)


def type_class_count(n: int, distinct: int) -> int:
    """Number of occupation-count patterns of n copies over `distinct` values."""
    return math.comb(n + distinct - 1, distinct - 1)


def iid_spectrum(base_eigenvalues: Sequence[float], n: int,
                 max_classes: int = DEFAULT_MAX_CLASSES,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> WeightedSpectrum:
    """Spectrum of rho^(x)n from the eigenvalues of rho, one atom per type class."""
    base = np.asarray(base_eigenvalues, dtype=float).reshape(-1)
    if n < 1:
        raise BadSpec(f"n must be a positive integer, got {n}")
    if base.size == 0 or np.any(base < -tol.positivity):
        raise NotPositive("Base eigenvalues must be nonnegative")
    if abs(float(np.sum(base)) - 1) > tol.trace:
        raise NotNormalized(f"Base eigenvalues sum to {np.sum(base):.12f}, expected 1")
    base = np.clip(base, 0.0, None) / float(np.sum(np.clip(base, 0.0, None)))

    distinct, degeneracy = _distinct_eigenvalues(base, tol)
    classes = type_class_count(n, len(distinct))
    if classes > max_classes:
        raise TooManyClasses(f"n={n} over {len(distinct)} distinct eigenvalues gives {classes} type classes")

    counts = _compositions(n, len(distinct))
    log_values = counts @ np.log2(distinct)
    log_multiplicities = _log2_multinomial(n, counts) + counts @ np.log2(degeneracy)

    spectrum = WeightedSpectrum.from_log_atoms(
        log_values, log_multiplicities, n > LOG_DOMAIN_ABOVE_N, tol
    )
    logger.debug(f"i.i.d. spectrum n={n}: {classes} type classes, {spectrum.atom_count} atoms")
    return spectrum


def _threshold_mask(spec: WeightedSpectrum, log_threshold: float,
                    tol: Tolerances) -> np.ndarray:
    """Atoms with value >= 2^log_threshold, compared in the log domain."""
    slack = tol.merge_relative * max(1.0, abs(log_threshold))
    return spec.log2_values() >= log_threshold - slack


def spectral_trace_gamma(spec: WeightedSpectrum, gamma: float, n: int,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{rho_n >= 2^(-n gamma) I} rho_n]."""
    mask = _threshold_mask(spec, -n * gamma, tol)
    return math.fsum(spec.masses()[mask])


def spectral_excess_gamma(spec: WeightedSpectrum, gamma: float, n: int,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Tr[{rho_n >= 2^(-n gamma) I}(rho_n - 2^(-n gamma) I)]."""
    log_threshold = -n * gamma
    mask = _threshold_mask(spec, log_threshold, tol)
    subtracted = np.exp2(spec.log2_multiplicities()[mask] + log_threshold)
    return max(0.0, math.fsum(spec.masses()[mask]) - math.fsum(subtracted))


def top_mass(spec: WeightedSpectrum, rank_budget: int) -> float:
    """Largest Tr(pi rho) over projectors of rank `rank_budget` (sum of the top eigenvalues)."""
    if rank_budget < 1:
        raise RankOutOfRange(f"Rank budget must be at least 1, got {rank_budget}")

    remaining = float(rank_budget)
    collected = []
    for log_value, log_count in zip(spec.log2_values(), spec.log2_multiplicities()):
        count = 2.0 ** log_count
        taken = min(count, remaining)
        collected.append(2.0 ** (log_value + math.log2(taken)))
        remaining -= taken
        if remaining <= 0:
            break
    return math.fsum(collected)


@dataclass
class RateScanRow:
    """Smooth entropy rates of rho^(x)n at one (n, epsilon) grid point."""
    n: int
    epsilon: float
    hmin_rate: float
    hmax_rate: float
    entropy: float

    @property
    def hmin_gap(self) -> float:
        return self.entropy - self.hmin_rate

    @property
    def hmax_gap(self) -> float:
        return self.hmax_rate - self.entropy


def rate_scan(base_eigenvalues: Sequence[float], n_list: Sequence[int],
              epsilon_list: Sequence[float], max_classes: int = DEFAULT_MAX_CLASSES,
              tol: Tolerances = DEFAULT_TOLERANCES) -> List[RateScanRow]:
    """(1/n) H_min^eps and (1/n) H_max^eps of rho^(x)n over an (n, epsilon) grid."""
    from smoothing import smooth_hmax_classical, smooth_hmin_classical

    base = np.asarray(base_eigenvalues, dtype=float)
    positive = base[base > 0]
    entropy = float(-np.sum(positive * np.log2(positive)))

    rows = []
    for n in n_list:
        spectrum = iid_spectrum(base, n, max_classes, tol)
        for epsilon in epsilon_list:
            hmin = smooth_hmin_classical(spectrum, epsilon, tol).value.bits
            hmax = smooth_hmax_classical(spectrum, epsilon, tol).value.bits
            rows.append(RateScanRow(n, float(epsilon), hmin / n, hmax / n, entropy))
        logger.info(f"Rate scan n={n}: {spectrum.atom_count} atoms, "
                    f"{len(epsilon_list)} epsilon values")
    return rows
