"""
Verification Suite - Seeded battery of operator inequalities and smoothing contracts
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from config_manager import Tolerances, DEFAULT_TOLERANCES
from entropy_core import h_min
from errors import BadSpec, ToolkitError
from operator_core import (
    BipartiteState,
    HermitianOperator,
    QuantumState,
    check_corollary1,
    check_fidelity_chain,
    check_lemma1,
    check_lemma2,
    gentle_measurement_delta,
    gentle_project,
    numerical_rank,
    positive_part,
    trace_distance,
)
from smoothing import (
    additive_lemma_smooth,
    projection_smooth_high,
    projection_smooth_low,
    projector_lemma_smooth,
)
from spectrum_rates import (
    conditional_lemma2_check,
    divergence_order_check,
    proposition_chain_check,
)
from state_factory import random_density, random_effect, random_hermitian

MAX_BATTERY_DIM = 8


@dataclass
class CheckOutcome:
    """Aggregate of one check over all trials; slack >= -tolerance counts as a pass."""
    check: str
    trials: int
    failures: int
    worst_slack: float


class VerificationSuite:
    """Runs every registered check for a number of seeded trials."""

    def __init__(self, seed: int = 42, trials: int = 1000,
                 tolerances: Tolerances = DEFAULT_TOLERANCES, corrupt_tolerance: bool = False):
        """Initialize the battery; corrupt_tolerance makes every pass count as a failure."""
        if trials < 1:
            raise BadSpec(f"trials must be at least 1, got {trials}")
        self.seed = seed
        self.trials = trials
        self.tolerances = tolerances
        self.threshold = -1.0 if corrupt_tolerance else tolerances.inequality
        self.logger = logging.getLogger(__name__)

        self.checks: Dict[str, Callable[[np.random.Generator], float]] = {
            "lemma1": self._lemma1,
            "lemma1_strict": self._lemma1_strict,
            "corollary1": self._corollary1,
            "lemma2": self._lemma2,
            "lemma2_conditional": self._lemma2_conditional,
            "fidelity_chain": self._fidelity_chain,
            "gentle_measurement": self._gentle_measurement,
            "projection_low": self._projection_low,
            "projection_high": self._projection_high,
            "additive_lemma": self._additive_lemma,
            "projector_lemma": self._projector_lemma,
            "proposition_chain": self._proposition_chain,
            "divergence_order": self._divergence_order,
        }

    def run(self) -> List[CheckOutcome]:
        """Run all checks; each gets its own generator stream derived from the seed."""
        streams = np.random.SeedSequence(self.seed).spawn(len(self.checks))
        outcomes = []
        for (name, check), stream in zip(self.checks.items(), streams):
            outcomes.append(self._run_check(name, check, np.random.default_rng(stream)))

        failed = sum(o.failures for o in outcomes)
        if failed:
            self.logger.warning(f"❌ Verification found {failed} failures")
        else:
            self.logger.info(f"✅ All {len(outcomes)} checks passed ({self.trials} trials each)")
        return outcomes

    def _run_check(self, name: str, check: Callable, rng: np.random.Generator) -> CheckOutcome:
        failures = 0
        worst = math.inf
        for trial in range(self.trials):
            try:
                slack = check(rng)
            except ToolkitError as e:
                self.logger.error(f"{name} trial {trial} raised {type(e).__name__}: {e}")
                slack = -math.inf
            if slack < -self.threshold:
                failures += 1
                self.logger.debug(f"{name} trial {trial} failed with slack {slack:.3e}")
            worst = min(worst, slack)

        self.logger.info(f"{name}: {failures}/{self.trials} failures, worst slack {worst:.3e}")
        return CheckOutcome(name, self.trials, failures, worst)

    # Random inputs

    def _dim(self, rng: np.random.Generator) -> int:
        return int(rng.integers(2, MAX_BATTERY_DIM + 1))

    def _pair(self, rng: np.random.Generator):
        dim = self._dim(rng)
        return random_hermitian(rng, dim), random_hermitian(rng, dim), random_effect(rng, dim)

    def _reference(self, rng: np.random.Generator, dim: int) -> HermitianOperator:
        """Positive operator with a random overall scale."""
        return random_density(rng, dim).op * float(rng.uniform(0.2, 3.0))

    def _bipartite(self, rng: np.random.Generator) -> BipartiteState:
        dim_a, dim_b = int(rng.integers(2, 4)), int(rng.integers(2, 3))
        return BipartiteState(random_density(rng, dim_a * dim_b), dim_a, dim_b)

    # Checks (each returns its smallest slack)

    def _lemma1(self, rng) -> float:
        A, B, P = self._pair(rng)
        lhs, upper, lower = check_lemma1(A, B, P, tol=self.tolerances)
        return min(upper - lhs, lhs - lower)

    def _lemma1_strict(self, rng) -> float:
        A, B, P = self._pair(rng)
        lhs, upper, lower = check_lemma1(A, B, P, strict=True, tol=self.tolerances)
        return min(upper - lhs, lhs - lower)

    def _corollary1(self, rng) -> float:
        A, B, P = self._pair(rng)
        value, distance = check_corollary1(A, B, P, self.tolerances)
        return distance - value

    def _lemma2(self, rng) -> float:
        dim = self._dim(rng)
        rho = random_density(rng, dim)
        omega = self._reference(rng, dim)
        gamma, n = float(rng.uniform(-2, 2)), int(rng.integers(1, 4))
        value, bound = check_lemma2(rho, omega, gamma / n, n, self.tolerances)
        return bound - value

    def _lemma2_conditional(self, rng) -> float:
        rho_ab = self._bipartite(rng)
        value, bound = conditional_lemma2_check(rho_ab, float(rng.uniform(-3, 3)), self.tolerances)
        return bound - value

    def _fidelity_chain(self, rng) -> float:
        dim = self._dim(rng)
        half, sine, root = check_fidelity_chain(random_density(rng, dim), random_density(rng, dim))
        return min(sine - half, root - sine)

    def _gentle_measurement(self, rng) -> float:
        dim = self._dim(rng)
        rho = random_density(rng, dim)
        if rng.random() < 0.5:
            rho = QuantumState(rho.op * float(rng.uniform(0.3, 1.0)), normalized=False)
        Lambda = random_effect(rng, dim)
        smoothed, distance = gentle_project(rho, Lambda, self.tolerances)
        return 2 * math.sqrt(gentle_measurement_delta(rho, Lambda)) - distance

    def _projection_low(self, rng) -> float:
        dim = self._dim(rng)
        rho = random_density(rng, dim)
        gamma = float(rng.uniform(0, math.log2(dim) + 2))
        smoothed, delta = projection_smooth_low(rho, gamma, self.tolerances)
        norm = float(smoothed.eigenvalues()[0])
        distance = trace_distance(smoothed, rho)
        return min(2.0 ** -gamma - norm, 2 * math.sqrt(delta) - distance)

    def _projection_high(self, rng) -> float:
        dim = self._dim(rng)
        rho = random_density(rng, dim)
        gamma = float(rng.uniform(0, math.log2(dim) + 1))
        smoothed, delta = projection_smooth_high(rho, gamma, self.tolerances)
        rank = numerical_rank(smoothed, self.tolerances) if smoothed.trace > 0 else 0
        distance = trace_distance(smoothed, rho)
        return min(2.0 ** gamma - rank, 2 * math.sqrt(delta) - distance)

    def _lemma_inputs(self, rng):
        rho_ab = BipartiteState(random_density(rng, 4), 2, 2)
        sigma_b = rho_ab.marginal("B")
        lam = h_min(rho_ab, sigma_b, self.tolerances).bits + float(rng.uniform(0, 1))
        return rho_ab, sigma_b, lam

    def _additive_lemma(self, rng) -> float:
        rho_ab, sigma_b, lam = self._lemma_inputs(rng)
        reference = HermitianOperator((2.0 ** -lam) * np.kron(np.eye(2), sigma_b.matrix))
        delta = positive_part(rho_ab.state.op - reference, self.tolerances)
        result = additive_lemma_smooth(rho_ab, sigma_b, lam, delta, self.tolerances)
        return min(
            result.value.bits - lam + 1e-6,
            result.epsilon + 1e-8 - result.distance,
            1 + 1e-9 - result.notes["t_bar_max"],
        )

    def _projector_lemma(self, rng) -> float:
        rho_ab, sigma_b, lam = self._lemma_inputs(rng)
        result = projector_lemma_smooth(rho_ab, sigma_b, lam, self.tolerances)
        formula = math.sqrt(8 * result.notes["projector_mass"])
        return min(
            result.value.bits - lam + 1e-6,
            result.epsilon - result.distance,
            -abs(result.epsilon - formula),
        )

    def _proposition_chain(self, rng) -> float:
        dim = int(rng.integers(2, 7))
        rho = random_density(rng, dim)
        omega = self._reference(rng, dim)
        alpha = float(rng.uniform(-2, 2))
        gamma = alpha - float(rng.uniform(0, 2))
        lhs, bound = proposition_chain_check(rho, omega, alpha, gamma, self.tolerances)
        return bound - lhs

    def _divergence_order(self, rng) -> float:
        dim = self._dim(rng)
        primary, alt = divergence_order_check(random_density(rng, dim), self._reference(rng, dim),
                                              float(rng.uniform(-2, 2)), self.tolerances)
        return alt - primary
