# ------------------------------------------------
# State operators, pure states and proper mixtures
# ------------------------------------------------

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from utils.exceptions import DimensionMismatchError, InvalidStateError, NotNormalizedError
from utils.linalg_functions import (
    DEFAULT_POLICY,
    HilbertSpace,
    Ket,
    NumericPolicy,
    Operator,
    identity,
    min_eigenvalue,
    random_ket,
)


@dataclass(frozen=True)
class StateDiagnostic:
    """One violated state-operator invariant and how badly it is violated."""
    invariant: str      # "hermiticity" | "trace" | "positivity"
    magnitude: float
    message: str

    def __str__(self) -> str:
        return f"{self.invariant}: {self.message}"


def state_diagnostics(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> List[StateDiagnostic]:
    diagnostics = []
    defect = op.hermitian_defect()
    if not op.is_hermitian(policy):
        diagnostics.append(StateDiagnostic("hermiticity", defect, f"max asymmetry {defect:.3e}"))
        return diagnostics
    trace_dev = abs(op.trace() - 1.0)
    if trace_dev > policy.trace_tol:
        diagnostics.append(StateDiagnostic("trace", trace_dev,
                                           f"trace {op.trace().real:.12g} deviates by {trace_dev:.3e}"))
    lowest = min_eigenvalue(op)
    if lowest < -policy.psd_tol:
        diagnostics.append(StateDiagnostic("positivity", lowest, f"min eigenvalue {lowest:.3e}"))
    return diagnostics


@dataclass(frozen=True, eq=False)
class StateOperator:
    """Hermitian, positive semidefinite, unit-trace operator. Construction enforces all three."""
    op: Operator

    def __init__(self, op: Operator, policy: NumericPolicy = DEFAULT_POLICY):
        diagnostics = state_diagnostics(op, policy)
        if diagnostics:
            raise InvalidStateError(diagnostics)
        object.__setattr__(self, "op", op)

    @property
    def space(self) -> HilbertSpace:
        return self.op.space

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def expectation(self, a: Operator) -> float:
        return float(np.real(np.trace(self.entries @ a.entries)))


def validate_state(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> Union[StateOperator, List[StateDiagnostic]]:
    """The state if all invariants hold, otherwise the list of violated invariants."""
    diagnostics = state_diagnostics(op, policy)
    if diagnostics:
        return diagnostics
    return StateOperator(op, policy)


def pure_state(k: Ket, policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    if abs(k.norm - 1.0) > policy.norm_tol:
        raise NotNormalizedError(k.norm)
    return StateOperator(k.dyad(), policy)


def maximally_mixed(space: HilbertSpace) -> StateOperator:
    return StateOperator(identity(space) * (1.0 / space.total_dim))


def random_state(space: HilbertSpace, rng: np.random.Generator, rank: int = 0) -> StateOperator:
    """Random mixed state of the given rank (full rank when rank is 0)."""
    rank = rank or space.total_dim
    weights = rng.dirichlet(np.ones(rank))
    acc = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
    for w in weights:
        k = random_ket(space, rng)
        acc += w * np.outer(k.amplitudes, k.amplitudes.conj())
    return StateOperator(Operator(space, acc))


def overlap(a: StateOperator, b: StateOperator) -> float:
    """tr(A B)"""
    if a.space != b.space:
        raise DimensionMismatchError(f"Space mismatch: {a.space} vs {b.space}")
    return float(np.real(np.trace(a.entries @ b.entries)))


@dataclass(frozen=True)
class MixtureBranch:
    probability: float
    state: StateOperator
    label: str


@dataclass(frozen=True)
class ProperMixture:
    """Convex combination read as: the system is in exactly one branch, with that branch's probability."""
    branches: Tuple[MixtureBranch, ...]

    def __init__(self, branches: Sequence[MixtureBranch], policy: NumericPolicy = DEFAULT_POLICY):
        branches = tuple(branches)
        if not branches:
            raise InvalidStateError(["mixture has no branches"])
        labels = [b.label for b in branches]
        if len(set(labels)) != len(labels):
            raise InvalidStateError([f"duplicate branch labels in {labels}"])
        for b in branches:
            if not -policy.trace_tol <= b.probability <= 1.0 + policy.trace_tol:
                raise InvalidStateError([f"branch '{b.label}' probability {b.probability} outside [0, 1]"])
            if b.state.space != branches[0].state.space:
                raise DimensionMismatchError(f"branch '{b.label}' lives on {b.state.space}")
        total = sum(b.probability for b in branches)
        if abs(total - 1.0) > policy.trace_tol:
            raise InvalidStateError([f"branch probabilities sum to {total:.12g}"])
        object.__setattr__(self, "branches", branches)

    @property
    def labels(self) -> List[str]:
        return [b.label for b in self.branches]

    @property
    def probabilities(self) -> List[float]:
        return [b.probability for b in self.branches]

    def branch(self, label: str) -> MixtureBranch:
        for b in self.branches:
            if b.label == label:
                return b
        raise KeyError(label)


def average_state(m: ProperMixture, policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    space = m.branches[0].state.space
    acc = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
    for b in m.branches:
        acc += b.probability * b.state.entries
    return StateOperator(Operator(space, acc), policy)
