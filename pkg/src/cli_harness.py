"""
CLI Harness - Subcommand implementations producing CSV run reports
"""

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from config_manager import ConfigManager
from entropy_core import (
    TRIVIAL_SIGMA,
    conditional_von_neumann_entropy,
    h_max,
    h_max_unconditional,
    h_min,
    h_min_unconditional,
    trivially_conditioned,
    von_neumann_entropy,
)
from errors import BadSpec, DimensionTooLarge
from iid_spectrum import rate_scan
from operator_core import BipartiteState, QuantumState
from smoothing import (
    smooth_hmax_conditional_upper,
    smooth_hmax_unconditional,
    smooth_hmin_conditional_lower,
    smooth_hmin_conditional_oracle,
    smooth_hmin_unconditional,
)
from spectrum_rates import (
    dense_conditional_family,
    iid_spectral_family,
    parse_gamma_grid,
    rate_profile,
)
from state_factory import (
    base_eigenvalues,
    parse_state_spec,
    random_density,
    resolve_state,
    save_operator_file,
)
from verification_suite import VerificationSuite

ORACLE_ACCURACY_BITS = 1e-3


@dataclass
class RunReport:
    """Result of one subcommand: CSV rows plus the bookkeeping around them."""
    command: str
    parameters: List[Tuple[str, Any]]
    header: List[str]
    rows: List[List[Any]]
    checks_failed: int = 0
    elapsed: float = 0.0
    summary_header: List[str] = field(default_factory=list)
    summary_rows: List[List[Any]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.checks_failed else 0

    def to_csv(self, header: bool = True, timestamp: bool = True, float_format: str = ".6f") -> str:
        """Render as CSV text; the timestamp line is the only non-deterministic part."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if timestamp:
            settings = " ".join(f"{k}={v}" for k, v in self.parameters)
            buffer.write(f"# {self.command} {datetime.now().isoformat(timespec='seconds')} {settings}\n")

        def fmt(value):
            if isinstance(value, (float, np.floating)):
                if math.isinf(value):
                    return "inf" if value > 0 else "-inf"
                return format(float(value), float_format)
            return value

        if header:
            writer.writerow(self.header)
        writer.writerows([[fmt(v) for v in row] for row in self.rows])
        if self.summary_rows:
            if header:
                writer.writerow(self.summary_header)
            writer.writerows([[fmt(v) for v in row] for row in self.summary_rows])
        return buffer.getvalue()

    def write(self, out: Optional[str], header: bool = True, timestamp: bool = True,
              float_format: str = ".6f") -> str:
        """Write to `out` (a path) or return the text for stdout."""
        text = self.to_csv(header, timestamp, float_format)
        if out:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        return text


def parse_number_list(text: str, cast=float) -> List:
    """'0.01,0.1' -> [0.01, 0.1]."""
    try:
        return [cast(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise BadSpec(f"Could not parse list {text!r}") from e


class ToolkitHarness:
    """Runs the toolkit's subcommands against the configured defaults."""

    def __init__(self, config_manager: ConfigManager):
        """Initialize harness with configuration."""
        self.config_manager = config_manager
        self.tolerances = config_manager.get_tolerances()
        self.experiment = config_manager.get_experiment_defaults()
        self.logger = logging.getLogger(__name__)

    def _conditioned(self, state_text: str, sigma_text: Optional[str],
                     seed: int) -> Tuple[BipartiteState, QuantumState]:
        """Resolve a state as bipartite plus its conditioning state (default rho_B)."""
        state = resolve_state(parse_state_spec(state_text, seed))
        if not isinstance(state, BipartiteState):
            if sigma_text:
                raise BadSpec("--sigma needs a bipartite state")
            return trivially_conditioned(state), TRIVIAL_SIGMA
        if sigma_text:
            sigma = resolve_state(parse_state_spec(sigma_text, seed))
            if isinstance(sigma, BipartiteState):
                raise BadSpec("--sigma must be a single-system state")
            return state, sigma
        return state, state.marginal("B")

    def cmd_entropy(self, state_text: str, sigma_text: Optional[str] = None, seed: int = 0) -> RunReport:
        """S, H_min and H_max (conditional for bipartite input)."""
        start = time.perf_counter()
        state = resolve_state(parse_state_spec(state_text, seed))
        tol = self.tolerances

        if isinstance(state, BipartiteState):
            rho_ab, sigma = self._conditioned(state_text, sigma_text, seed)
            rows = [
                ["S", conditional_von_neumann_entropy(rho_ab, tol).bits],
                ["Hmin", h_min(rho_ab, sigma, tol).bits],
                ["Hmax", h_max(rho_ab, sigma, tol).bits],
            ]
        else:
            if sigma_text:
                raise BadSpec("--sigma needs a bipartite state")
            rows = [
                ["S", von_neumann_entropy(state, tol).bits],
                ["Hmin", h_min_unconditional(state).bits],
                ["Hmax", h_max_unconditional(state, tol).bits],
            ]

        self.logger.info(f"Entropies of {state_text}: " + ", ".join(f"{q}={v:.6f}" for q, v in rows))
        return RunReport("entropy", [("state", state_text), ("sigma", sigma_text or "")],
                         ["quantity", "bits"], rows, elapsed=time.perf_counter() - start)

    def cmd_smooth(self, state_text: str, epsilons: Sequence[float], mode: str = "min",
                   conditional: bool = False, sigma_text: Optional[str] = None,
                   json_witness: Optional[str] = None, seed: int = 0) -> RunReport:
        """Smooth min- or max-entropy for each epsilon."""
        start = time.perf_counter()
        if mode not in ("min", "max"):
            raise BadSpec(f"mode must be 'min' or 'max', got {mode!r}")
        for epsilon in epsilons:
            if not 0 <= epsilon < 1:
                raise BadSpec(f"epsilon must lie in [0, 1), got {epsilon}")

        header = ["epsilon", "bits", "method", "distance"]
        rows = []
        witnesses = []
        oracle = self.config_manager.get_oracle_config()
        tol = self.tolerances

        if conditional:
            rho_ab, sigma = self._conditioned(state_text, sigma_text, seed)
            if mode == "min":
                header.append("oracle_bits")
            for epsilon in epsilons:
                if mode == "min":
                    result = smooth_hmin_conditional_lower(
                        rho_ab, sigma, epsilon, self.experiment["bisection_resolution_bits"], tol)
                    oracle_bits = ""
                    if rho_ab.dim <= oracle["max_dim"]:
                        oracle_bits = smooth_hmin_conditional_oracle(
                            rho_ab, sigma, epsilon, oracle["solver"], oracle["max_dim"], tol).value.bits
                    rows.append([epsilon, result.value.bits, result.method, result.distance, oracle_bits])
                else:
                    result = smooth_hmax_conditional_upper(
                        rho_ab, sigma, epsilon, self.experiment["hmax_sweep_step_bits"], tol)
                    rows.append([epsilon, result.value.bits, result.method, result.distance])
                witnesses.append((epsilon, result.witness))
        else:
            if sigma_text:
                raise BadSpec("--sigma needs --conditional")
            state = resolve_state(parse_state_spec(state_text, seed))
            if isinstance(state, BipartiteState):
                state = state.state
            smoother = smooth_hmin_unconditional if mode == "min" else smooth_hmax_unconditional
            for epsilon in epsilons:
                result = smoother(state, epsilon, tol)
                rows.append([epsilon, result.value.bits, result.method, result.distance])
                witnesses.append((epsilon, result.witness))

        if json_witness:
            self._dump_witnesses(json_witness, witnesses)

        return RunReport("smooth", [("state", state_text), ("mode", mode), ("conditional", conditional)],
                         header, rows, elapsed=time.perf_counter() - start)

    def _dump_witnesses(self, target: str, witnesses: List[Tuple[float, Optional[QuantumState]]]):
        path = Path(target)
        for epsilon, witness in witnesses:
            if witness is None:
                continue
            destination = path if len(witnesses) == 1 else path.with_name(f"{path.stem}_eps{epsilon:g}{path.suffix}")
            save_operator_file(witness, destination)
            self.logger.info(f"Witness for epsilon={epsilon:g} written to {destination}")

    def cmd_converge(self, base_text: str, n_list: Sequence[int], epsilons: Sequence[float]) -> RunReport:
        """Smooth entropy rates of an i.i.d. family against its von Neumann entropy."""
        start = time.perf_counter()
        base = base_eigenvalues(parse_state_spec(base_text))
        scan = rate_scan(base, n_list, epsilons, self.experiment["max_type_classes"], self.tolerances)
        rows = [[r.n, r.epsilon, r.hmin_rate, r.hmax_rate, r.entropy] for r in scan]
        return RunReport("converge", [("state", base_text)],
                         ["n", "epsilon", "hmin_rate", "hmax_rate", "svn"], rows,
                         elapsed=time.perf_counter() - start)

    def cmd_rate_scan(self, state_text: str, gamma_grid: str, n_list: Sequence[int],
                      thresholds: Optional[Tuple[float, float]] = None, conditional: bool = False,
                      seed: int = 0) -> RunReport:
        """Trace profile on an (n, gamma) grid with the bracket summary."""
        start = time.perf_counter()
        grid = parse_gamma_grid(gamma_grid)
        t_low, t_high = thresholds or self.config_manager.get_thresholds()
        spec = parse_state_spec(state_text, seed)

        if conditional:
            state = resolve_state(spec)
            if not isinstance(state, BipartiteState):
                raise BadSpec("The conditional profile needs a bipartite state")
            family = dense_conditional_family(state, self.experiment["max_dense_dim"], self.tolerances)
        else:
            family = iid_spectral_family(base_eigenvalues(spec), self.experiment["max_type_classes"],
                                         self.tolerances)

        profile = rate_profile(family, n_list, grid, t_low, t_high, self.tolerances)
        return RunReport(
            "rate-scan",
            [("state", state_text), ("grid", gamma_grid), ("thresholds", f"{t_low},{t_high}")],
            ["n", "gamma", "trace"],
            [list(row) for row in profile.rows],
            elapsed=time.perf_counter() - start,
            summary_header=["lowerBracket", "upperBracket"],
            summary_rows=[[profile.lower_bracket, profile.upper_bracket]],
        )

    def cmd_verify(self, seed: int, trials: int, corrupt_tolerance: bool = False) -> RunReport:
        """Run the verification battery; failures are reported, never raised."""
        start = time.perf_counter()
        suite = VerificationSuite(seed, trials, self.tolerances, corrupt_tolerance)
        outcomes = suite.run()
        rows = [[o.check, o.trials, o.failures, o.worst_slack] for o in outcomes]
        return RunReport("verify", [("seed", seed), ("trials", trials)],
                         ["check", "trials", "failures", "worstSlack"], rows,
                         checks_failed=sum(o.failures for o in outcomes),
                         elapsed=time.perf_counter() - start)

    def cmd_oracle_compare(self, seed: int, instances: int, epsilon: float = 0.1,
                           trivial_b: bool = False) -> RunReport:
        """Projector-lemma lower bound against the SDP oracle on seeded 2 x 2 instances."""
        start = time.perf_counter()
        oracle = self.config_manager.get_oracle_config()
        if oracle["max_dim"] < 4:
            raise DimensionTooLarge("Oracle dimension cap is below the 2 x 2 instances")

        rng = np.random.default_rng(seed)
        header = ["instance", "lower_bits", "oracle_bits", "gap"]
        if trivial_b:
            header.append("exact_bits")
        rows = []
        mismatched = 0
        for instance in range(instances):
            if trivial_b:
                rho = random_density(rng, 2)
                rho_ab, sigma = trivially_conditioned(rho), TRIVIAL_SIGMA
            else:
                rho_ab = BipartiteState(random_density(rng, 4), 2, 2)
                sigma = rho_ab.marginal("B")
            lower = smooth_hmin_conditional_lower(
                rho_ab, sigma, epsilon, self.experiment["bisection_resolution_bits"], self.tolerances)
            reference = smooth_hmin_conditional_oracle(
                rho_ab, sigma, epsilon, oracle["solver"], oracle["max_dim"], self.tolerances)
            gap = reference.value.bits - lower.value.bits
            row = [instance, lower.value.bits, reference.value.bits, gap]
            if trivial_b:
                exact = smooth_hmin_unconditional(rho, epsilon, self.tolerances).value.bits
                mismatched += abs(exact - reference.value.bits) > ORACLE_ACCURACY_BITS
                row.append(exact)
            rows.append(row)
            self.logger.debug(f"Instance {instance}: gap {gap:.6f} bits")

        below = sum(1 for row in rows if row[3] < -ORACLE_ACCURACY_BITS)
        if below:
            self.logger.warning(f"⚠️ {below} instances have the lower bound above the oracle")
        if mismatched:
            self.logger.warning(f"⚠️ {mismatched} oracle values miss the exact classical value")
        return RunReport("oracle-compare",
                         [("seed", seed), ("instances", instances), ("epsilon", epsilon)],
                         header, rows, checks_failed=below + mismatched,
                         elapsed=time.perf_counter() - start)
