"""
Operator Core - Dense Hermitian linear algebra, spectral projections and the elementary operator lemmas
"""

from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from config_manager import Tolerances, DEFAULT_TOLERANCES
from errors import (
    BadSpec,
    ConstructionFailure,
    DecompositionFailure,
    DimensionMismatch,
    LambdaOutOfRange,
    NotHermitian,
    NotNormalized,
    NotPositive,
    POutOfRange,
)

RELATIONS = (">=", ">", "<=", "<")


def _eigh(matrix: np.ndarray, values_only: bool = False):
    """Hermitian eigensolve with ascending eigenvalues."""
    try:
        if values_only:
            return linalg.eigvalsh(matrix)
        return linalg.eigh(matrix)
    except (linalg.LinAlgError, ValueError) as e:
        raise DecompositionFailure(f"Hermitian eigensolver failed: {e}") from e


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so that its first nonzero component is real positive."""
    fixed = vectors.copy()
    for j in range(fixed.shape[1]):
        column = fixed[:, j]
        nonzero = np.flatnonzero(np.abs(column) > 1e-12)
        if nonzero.size:
            pivot = column[nonzero[0]]
            fixed[:, j] = column * (abs(pivot) / pivot)
    return fixed


def eigensystem(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues sorted descending with phase-fixed eigenvectors as columns."""
    values, vectors = _eigh(matrix)
    order = np.argsort(-values, kind="stable")
    return values[order], _fix_phases(vectors[:, order])


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense complex Hermitian matrix."""
    entries: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise DimensionMismatch(f"Expected a non-empty square matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise NotHermitian("Operator has non-finite entries")

        scale = max(1.0, float(np.max(np.abs(matrix))))
        deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        if deviation > DEFAULT_TOLERANCES.hermiticity * scale:
            raise NotHermitian(f"Operator deviates from its adjoint by {deviation:.3e}")

        matrix = _hermitize(matrix)
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        return _eigh(self.entries, values_only=True)[::-1]

    def kron(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(np.kron(self.entries, other.entries))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same_dim(self, other)
        return HermitianOperator(self.entries + other.entries)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same_dim(self, other)
        return HermitianOperator(self.entries - other.entries)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(float(scalar) * self.entries)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_vector(cls, vector) -> "HermitianOperator":
        """Rank-one operator |v><v|."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        return cls(np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Positive semidefinite operator with trace at most one."""
    op: HermitianOperator
    normalized: bool = True

    def __post_init__(self):
        tol = DEFAULT_TOLERANCES
        smallest = float(_eigh(self.op.entries, values_only=True)[0])
        if smallest < -tol.positivity:
            raise NotPositive(f"State has eigenvalue {smallest:.3e} below zero")

        trace = np.trace(self.op.entries)
        if abs(trace.imag) > tol.trace:
            raise NotNormalized(f"State trace {trace} is not real")
        if trace.real > 1 + tol.trace:
            raise NotNormalized(f"State trace {trace.real:.12f} exceeds 1")
        if self.normalized and abs(trace.real - 1) > tol.trace:
            raise NotNormalized(f"State flagged normalized has trace {trace.real:.12f}")

    @classmethod
    def from_matrix(cls, matrix, normalized: Optional[bool] = None) -> "QuantumState":
        """Wrap a matrix; the normalization flag is inferred from the trace when not given."""
        op = HermitianOperator(matrix)
        if normalized is None:
            normalized = abs(op.trace - 1) <= DEFAULT_TOLERANCES.trace
        return cls(op, normalized)

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def trace(self) -> float:
        return self.op.trace

    def eigenvalues(self) -> np.ndarray:
        return self.op.eigenvalues()


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Quantum state on H_A (x) H_B with declared subsystem dimensions."""
    state: QuantumState
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1 or self.dim_a * self.dim_b != self.state.dim:
            raise DimensionMismatch(
                f"Subsystem dims {self.dim_a}x{self.dim_b} do not match state dimension {self.state.dim}"
            )

    @classmethod
    def from_matrix(cls, matrix, dim_a: int, dim_b: int,
                    normalized: Optional[bool] = None) -> "BipartiteState":
        return cls(QuantumState.from_matrix(matrix, normalized), dim_a, dim_b)

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix

    @property
    def dim(self) -> int:
        return self.state.dim

    def marginal(self, keep: str) -> QuantumState:
        """Reduced state on subsystem `keep`."""
        reduced = partial_trace(self, keep)
        return QuantumState(reduced, self.state.normalized)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector."""
    op: HermitianOperator

    def __post_init__(self):
        tol = DEFAULT_TOLERANCES.assertion
        matrix = self.op.entries
        if float(np.max(np.abs(matrix @ matrix - matrix))) > tol:
            raise ConstructionFailure("Projector is not idempotent")
        values = _eigh(matrix, values_only=True)
        if np.any(np.minimum(np.abs(values), np.abs(values - 1)) > tol):
            raise ConstructionFailure("Projector has eigenvalues outside {0, 1}")

    @classmethod
    def from_columns(cls, columns: np.ndarray) -> "Projector":
        """Projector onto the span of orthonormal columns."""
        return cls(HermitianOperator(columns @ columns.conj().T))

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def rank(self) -> int:
        return int(round(self.op.trace))


OperatorLike = Union[HermitianOperator, QuantumState, BipartiteState]


def as_operator(x: OperatorLike) -> HermitianOperator:
    """Underlying HermitianOperator of a state, bipartite state or operator."""
    if isinstance(x, BipartiteState):
        return x.state.op
    if isinstance(x, QuantumState):
        return x.op
    if isinstance(x, Projector):
        return x.op
    return x


def _require_same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatch(f"Dimension mismatch: {a.dim} vs {b.dim}")


def _check_effect(op: HermitianOperator, error_cls, name: str, tol: Tolerances):
    """Require 0 <= op <= I within tolerance."""
    values = _eigh(op.entries, values_only=True)
    if values[0] < -tol.positivity or values[-1] > 1 + tol.positivity:
        raise error_cls(
            f"{name} must satisfy 0 <= {name} <= I; eigenvalues span [{values[0]:.3e}, {values[-1]:.3e}]"
        )


def spectral_decompose(A: OperatorLike) -> List[Tuple[float, np.ndarray]]:
    """(eigenvalue, eigenvector) pairs with eigenvalues descending."""
    values, vectors = eigensystem(as_operator(A).entries)
    return [(float(values[i]), vectors[:, i]) for i in range(len(values))]


def spectral_projector(A: OperatorLike, B: OperatorLike, relation: str,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> Projector:
    """Spectral projection {A rel B}, i.e. onto eigenvectors of A - B whose eigenvalue satisfies rel 0.

    Eigenvalues with |lambda| <= tol.zero_eigenvalue count as zero: they belong
    to {>=} and {<=} but not to the strict projections.
    """
    A, B = as_operator(A), as_operator(B)
    _require_same_dim(A, B)
    if relation not in RELATIONS:
        raise BadSpec(f"Unknown relation {relation!r}; expected one of {RELATIONS}")

    values, vectors = eigensystem(A.entries - B.entries)
    z = tol.zero_eigenvalue
    masks = {
        ">=": values >= -z,
        ">": values > z,
        "<=": values <= z,
        "<": values < -z,
    }
    return Projector.from_columns(vectors[:, masks[relation]])


def positive_part(X: OperatorLike, tol: Tolerances = DEFAULT_TOLERANCES) -> HermitianOperator:
    """Sum of lambda |i><i| over eigenvalues lambda > 0 (same zero convention as {X > 0})."""
    values, vectors = eigensystem(as_operator(X).entries)
    keep = values > tol.zero_eigenvalue
    return HermitianOperator((vectors[:, keep] * values[keep]) @ vectors[:, keep].conj().T)


def support_projector(X: OperatorLike, tol: Tolerances = DEFAULT_TOLERANCES) -> Projector:
    """Projector onto eigenvalues above rank_cutoff times the largest eigenvalue."""
    values, vectors = eigensystem(as_operator(X).entries)
    top = values[0]
    if top <= 0:
        return Projector.from_columns(vectors[:, :0])
    return Projector.from_columns(vectors[:, values > tol.rank_cutoff * top])


def numerical_rank(X: OperatorLike, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    values = as_operator(X).eigenvalues()
    if values[0] <= 0:
        return 0
    return int(np.count_nonzero(values > tol.rank_cutoff * values[0]))


def psd_power(X: OperatorLike, power: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """X**power for positive semidefinite X, restricted to the numerical support.

    Negative powers are pseudo-inverse powers: eigenvalues at or below
    rank_cutoff * max are mapped to zero.
    """
    values, vectors = eigensystem(as_operator(X).entries)
    top = max(values[0], 0.0)
    support = values > tol.rank_cutoff * top if top > 0 else np.zeros_like(values, dtype=bool)
    powered = np.zeros_like(values)
    powered[support] = values[support] ** power
    return (vectors * powered) @ vectors.conj().T


def trace_distance(A: OperatorLike, B: OperatorLike) -> float:
    """Unhalved trace norm ||A - B||_1, the sum of absolute eigenvalues of A - B."""
    A, B = as_operator(A), as_operator(B)
    _require_same_dim(A, B)
    return float(np.sum(np.abs(_eigh(A.entries - B.entries, values_only=True))))


def fidelity(rho: QuantumState, rho_prime: QuantumState) -> float:
    """F(rho, rho') = Tr sqrt(rho^1/2 rho' rho^1/2)."""
    _require_same_dim(rho, rho_prime)
    root = psd_power(rho, 0.5, DEFAULT_TOLERANCES.with_overrides(rank_cutoff=0.0))
    inner = _hermitize(root @ rho_prime.matrix @ root)
    values = _eigh(inner, values_only=True)
    return float(np.sum(np.sqrt(np.clip(values, 0.0, None))))


def purify(rho: QuantumState) -> np.ndarray:
    """Spectral purification sum_i sqrt(lambda_i) |i> (x) |i> on system (x) reference."""
    values, vectors = eigensystem(rho.matrix)
    weights = np.sqrt(np.clip(values, 0.0, None))
    # Psi[s, r] = sqrt(lambda_r) <s|r>
    return (vectors * weights).reshape(-1)


def reduce_purification(psi: np.ndarray, dim: int) -> np.ndarray:
    """Trace out the reference factor of a vector on C^dim (x) C^(len/dim)."""
    psi = np.asarray(psi, dtype=complex).reshape(dim, -1)
    return psi @ psi.conj().T


def partial_trace_matrix(matrix: np.ndarray, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Partial trace of a (dim_a*dim_b)-square matrix, keeping subsystem A or B."""
    if matrix.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionMismatch(f"Matrix of shape {matrix.shape} is not {dim_a}x{dim_b} bipartite")
    blocks = matrix.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ijkj->ik", blocks)
    if keep == "B":
        return np.einsum("ijil->jl", blocks)
    raise BadSpec(f"keep must be 'A' or 'B', got {keep!r}")


def partial_trace(X: Union[BipartiteState, HermitianOperator], keep: str,
                  dim_a: Optional[int] = None, dim_b: Optional[int] = None) -> HermitianOperator:
    """Reduced operator on subsystem `keep`."""
    if isinstance(X, BipartiteState):
        dim_a, dim_b = X.dim_a, X.dim_b
    elif dim_a is None or dim_b is None:
        raise DimensionMismatch("Subsystem dimensions are required for a bare operator")
    matrix = as_operator(X).entries
    return HermitianOperator(partial_trace_matrix(matrix, dim_a, dim_b, keep))


def gentle_project(rho: QuantumState, Lambda: HermitianOperator,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[QuantumState, float]:
    """Post-measurement operator sqrt(L) rho sqrt(L) and its trace distance to rho."""
    _require_same_dim(rho, Lambda)
    _check_effect(Lambda, LambdaOutOfRange, "Lambda", tol)

    values, vectors = eigensystem(Lambda.entries)
    root = (vectors * np.sqrt(np.clip(values, 0.0, 1.0))) @ vectors.conj().T
    smoothed = _hermitize(root @ rho.matrix @ root)
    state = QuantumState.from_matrix(smoothed)
    return state, trace_distance(rho, state)


def gentle_measurement_delta(rho: QuantumState, Lambda: HermitianOperator) -> float:
    """delta with Tr(rho Lambda) = 1 - delta, floored at zero."""
    _require_same_dim(rho, Lambda)
    return max(0.0, 1.0 - float(np.trace(rho.matrix @ Lambda.entries).real))


def _trace_product(P: np.ndarray, X: np.ndarray) -> float:
    return float(np.trace(P @ X).real)


def check_lemma1(A: OperatorLike, B: OperatorLike, P: HermitianOperator, strict: bool = False,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float, float]:
    """(Tr[P(A-B)], Tr[{A>=B}(A-B)], Tr[{A<=B}(A-B)]); strict uses {A>B} and {A<B}."""
    A, B = as_operator(A), as_operator(B)
    _require_same_dim(A, B)
    _require_same_dim(A, P)
    _check_effect(P, POutOfRange, "P", tol)

    difference = A.entries - B.entries
    upper_relation, lower_relation = (">", "<") if strict else (">=", "<=")
    lhs = _trace_product(P.entries, difference)
    rhs_upper = _trace_product(spectral_projector(A, B, upper_relation, tol).matrix, difference)
    rhs_lower = _trace_product(spectral_projector(A, B, lower_relation, tol).matrix, difference)
    return lhs, rhs_upper, rhs_lower


def check_corollary1(A: OperatorLike, B: OperatorLike, P: HermitianOperator,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """(Tr[P(A-B)], ||A-B||_1): the first never exceeds the second."""
    A, B = as_operator(A), as_operator(B)
    _require_same_dim(A, P)
    _check_effect(P, POutOfRange, "P", tol)
    return _trace_product(P.entries, A.entries - B.entries), trace_distance(A, B)


def check_fidelity_chain(rho: QuantumState, rho_prime: QuantumState) -> Tuple[float, float, float]:
    """(||rho - rho'||_1 / 2, sqrt(1 - F^2), sqrt(2(1 - F))) for normalized states."""
    if not (rho.normalized and rho_prime.normalized):
        raise NotNormalized("The fidelity chain is stated for normalized states")
    F = min(fidelity(rho, rho_prime), 1.0)
    return 0.5 * trace_distance(rho, rho_prime), float(np.sqrt(1 - F ** 2)), float(np.sqrt(2 * (1 - F)))


def check_lemma2(rho: QuantumState, omega: HermitianOperator, gamma: float, n: int,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """(Tr[{rho >= 2^(-n gamma) omega} omega], 2^(n gamma))."""
    if not rho.normalized:
        raise NotNormalized("check_lemma2 needs a normalized state")
    _require_same_dim(rho, omega)
    smallest = float(omega.eigenvalues()[-1])
    if smallest < -tol.positivity:
        raise NotPositive(f"omega has eigenvalue {smallest:.3e} below zero")

    exponent = n * gamma
    P = spectral_projector(rho, (2.0 ** -exponent) * omega, ">=", tol)
    return _trace_product(P.matrix, omega.entries), 2.0 ** exponent


def tensor_power(op: OperatorLike, n: int) -> HermitianOperator:
    """n-fold tensor power."""
    matrix = as_operator(op).entries
    return HermitianOperator(reduce(np.kron, [matrix] * n))


def bipartite_tensor_power(rho_ab: BipartiteState, n: int) -> BipartiteState:
    """rho_AB^(x)n with factors regrouped as (A_1..A_n) (x) (B_1..B_n)."""
    dim_a, dim_b = rho_ab.dim_a, rho_ab.dim_b
    full = tensor_power(rho_ab, n).entries

    # axes are (a1, b1, ..., an, bn) for rows, then the same for columns
    tensor = full.reshape([dim_a, dim_b] * n * 2)
    half = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    tensor = tensor.transpose(half + [2 * n + axis for axis in half])
    size = (dim_a * dim_b) ** n
    return BipartiteState.from_matrix(tensor.reshape(size, size), dim_a ** n, dim_b ** n,
                                      normalized=rho_ab.state.normalized)


def operator_to_json(op: OperatorLike, dim_a: Optional[int] = None,
                     dim_b: Optional[int] = None) -> Dict:
    """Encode as {"dim", "re", "im"} (plus "dimA"/"dimB" for bipartite operators)."""
    if isinstance(op, BipartiteState):
        dim_a, dim_b = op.dim_a, op.dim_b
    matrix = as_operator(op).entries
    data = {
        "dim": int(matrix.shape[0]),
        "re": matrix.real.tolist(),
        "im": matrix.imag.tolist(),
    }
    if dim_a is not None and dim_b is not None:
        data["dimA"] = int(dim_a)
        data["dimB"] = int(dim_b)
    return data


def operator_from_json(data: Dict) -> Tuple[HermitianOperator, Optional[Tuple[int, int]]]:
    """Decode the operator JSON format; returns the operator and (dimA, dimB) if declared."""
    try:
        dim = int(data["dim"])
        real = np.asarray(data["re"], dtype=float)
        imag = np.asarray(data.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise BadSpec(f"Malformed operator JSON: {e}") from e

    if real.shape != (dim, dim) or imag.shape != (dim, dim):
        raise BadSpec(f"Operator JSON entries must be {dim}x{dim}")

    dims = None
    if "dimA" in data or "dimB" in data:
        try:
            dims = (int(data["dimA"]), int(data["dimB"]))
        except (KeyError, TypeError, ValueError) as e:
            raise BadSpec(f"Operator JSON needs both dimA and dimB as integers: {e}") from e
    return HermitianOperator(real + 1j * imag), dims
