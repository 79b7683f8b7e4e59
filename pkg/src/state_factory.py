"""
State Factory - Parse state specifications, build named and seeded random states, read and write operator files
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from errors import BadSpec, DimensionTooLarge, NotNormalized
from operator_core import (
    BipartiteState,
    HermitianOperator,
    QuantumState,
    operator_from_json,
    operator_to_json,
)

logger = logging.getLogger(__name__)

KINDS = ("file", "named", "randomDensity", "randomBipartite", "iidBase")
NAMED_STATES = ("bell", "ghz3", "maxmix", "qubit")
MAX_RANDOM_DIM = 64

AnyState = Union[QuantumState, BipartiteState]


@dataclass(frozen=True)
class StateSpec:
    """Where a state comes from: a file, a named state, a seeded random draw or an i.i.d. base."""
    kind: str
    payload: Tuple
    seed: int = 0


def _numbers(text: str, cast=float) -> List:
    try:
        return [cast(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise BadSpec(f"Could not parse numbers from {text!r}") from e


def parse_state_spec(text: str, seed: int = 0) -> StateSpec:
    """Parse 'bell', 'ghz3', 'maxmix:d', 'qubit:p', 'random:d', 'random:dAxdB', 'iid:p1,p2,...' or a file path."""
    text = text.strip()
    name, _, argument = text.partition(":")

    if name in ("bell", "ghz3") and not argument:
        return StateSpec("named", (name,), seed)
    if name == "maxmix":
        dims = _numbers(argument, int)
        if len(dims) != 1 or dims[0] < 1:
            raise BadSpec(f"maxmix needs one positive dimension, got {text!r}")
        return StateSpec("named", (name, dims[0]), seed)
    if name == "qubit":
        values = _numbers(argument)
        if len(values) != 1 or not 0 <= values[0] <= 1:
            raise BadSpec(f"qubit needs p in [0, 1], got {text!r}")
        return StateSpec("named", (name, values[0]), seed)
    if name == "random":
        if "x" in argument:
            dims = tuple(_numbers(argument.replace("x", ","), int))
            if len(dims) != 2:
                raise BadSpec(f"Bipartite random state needs dAxdB, got {text!r}")
            return StateSpec("randomBipartite", dims, seed)
        dims = _numbers(argument, int)
        if len(dims) != 1:
            raise BadSpec(f"random needs one dimension, got {text!r}")
        return StateSpec("randomDensity", (dims[0],), seed)
    if name == "iid":
        base = _numbers(argument)
        if not base:
            raise BadSpec(f"iid needs base eigenvalues, got {text!r}")
        return StateSpec("iidBase", tuple(base), seed)

    return StateSpec("file", (text,), seed)


def bell_state() -> BipartiteState:
    """|Phi+> = (|00> + |11>)/sqrt(2) on 2 x 2."""
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return BipartiteState(QuantumState(HermitianOperator.from_vector(phi)), 2, 2)


def ghz3_state() -> BipartiteState:
    """Three-qubit GHZ state with the first two qubits as A."""
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    return BipartiteState(QuantumState(HermitianOperator.from_vector(ghz)), 4, 2)


def maximally_mixed(dim: int) -> QuantumState:
    return QuantumState(HermitianOperator.identity(dim) * (1.0 / dim))


def qubit_state(p: float) -> QuantumState:
    """diag(p, 1 - p)."""
    return QuantumState(HermitianOperator.diag([p, 1 - p]))


def _ginibre(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def generate_random_state(seed: int, dim: int, kind: str = "density",
                          dims: Optional[Tuple[int, int]] = None) -> AnyState:
    """G G^H / Tr(G G^H) for a seeded complex Gaussian G; bipartite kind splits dim as dims."""
    if dim > MAX_RANDOM_DIM:
        raise DimensionTooLarge(f"Random states are limited to dimension {MAX_RANDOM_DIM}, got {dim}")
    if dim < 1:
        raise BadSpec(f"Dimension must be positive, got {dim}")

    G = _ginibre(np.random.default_rng(seed), dim)
    positive = G @ G.conj().T
    state = QuantumState.from_matrix(positive / np.trace(positive).real)

    if kind == "density":
        return state
    if kind == "bipartite":
        if dims is None:
            raise BadSpec("Bipartite random states need (dimA, dimB)")
        return BipartiteState(state, *dims)
    raise BadSpec(f"Unknown random state kind {kind!r}")


def random_unitary(seed: int, dim: int) -> np.ndarray:
    """Haar-random unitary."""
    return unitary_group.rvs(dim, random_state=np.random.default_rng(seed))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> HermitianOperator:
    """Gaussian Hermitian matrix (G + G^H) / 2."""
    G = _ginibre(rng, dim)
    return HermitianOperator(scale * (G + G.conj().T) / 2)


def random_effect(rng: np.random.Generator, dim: int) -> HermitianOperator:
    """Operator 0 <= P <= I with uniformly random eigenvalues in a Haar basis."""
    U = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1)
    values = rng.uniform(0.0, 1.0, size=dim)
    return HermitianOperator((U * values) @ U.conj().T)


def random_density(rng: np.random.Generator, dim: int) -> QuantumState:
    """Ginibre state drawn from an existing generator stream."""
    G = _ginibre(rng, dim)
    positive = G @ G.conj().T
    return QuantumState.from_matrix(positive / np.trace(positive).real)


def load_operator_file(path: Union[str, Path]) -> AnyState:
    """Read a state from the operator JSON format; declared dimA/dimB give a bipartite state."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BadSpec(f"{path} is not valid JSON: {e}") from e

    op, dims = operator_from_json(data)
    state = QuantumState.from_matrix(op.entries)
    logger.debug(f"Loaded {state.dim}-dimensional operator from {path}")
    if dims is not None:
        return BipartiteState(state, *dims)
    return state


def save_operator_file(state: Union[AnyState, HermitianOperator], path: Union[str, Path]) -> Path:
    """Write a state or operator in the operator JSON format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(operator_to_json(state), f, indent=2)
    return path


def resolve_state(spec: StateSpec) -> AnyState:
    """Build the state a specification describes."""
    if spec.kind == "named":
        name = spec.payload[0]
        if name == "bell":
            return bell_state()
        if name == "ghz3":
            return ghz3_state()
        if name == "maxmix":
            return maximally_mixed(spec.payload[1])
        return qubit_state(spec.payload[1])
    if spec.kind == "randomDensity":
        return generate_random_state(spec.seed, spec.payload[0])
    if spec.kind == "randomBipartite":
        dim_a, dim_b = spec.payload
        return generate_random_state(spec.seed, dim_a * dim_b, "bipartite", (dim_a, dim_b))
    if spec.kind == "iidBase":
        return QuantumState(HermitianOperator.diag(base_eigenvalues(spec)))
    if spec.kind == "file":
        return load_operator_file(spec.payload[0])
    raise BadSpec(f"Unknown state kind {spec.kind!r}")


def base_eigenvalues(spec: StateSpec) -> List[float]:
    """Eigenvalues of the single-copy state behind an i.i.d. family."""
    if spec.kind == "iidBase":
        base = list(spec.payload)
        if abs(sum(base) - 1) > 1e-10:
            raise NotNormalized(f"i.i.d. base sums to {sum(base):.12f}, expected 1")
        return base
    state = resolve_state(spec)
    if isinstance(state, BipartiteState):
        state = state.state
    return [float(v) for v in np.clip(state.eigenvalues(), 0.0, None)]
