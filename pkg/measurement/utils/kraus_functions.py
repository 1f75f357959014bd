# -------------------------------------------------------------
# POV measures, Kraus state transformers and conditional states
# -------------------------------------------------------------

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from utils.exceptions import (
    CompletenessError,
    DimensionMismatchError,
    ImpossibleOutcomeError,
    NotHermitianError,
    PositivityError,
    UnknownLabelError,
)
from utils.linalg_functions import (
    DEFAULT_POLICY,
    HilbertSpace,
    Ket,
    NumericPolicy,
    Operator,
    basis_ket,
    max_deviation,
    min_eigenvalue,
    partial_trace,
    require_unitary,
    tensor_product,
)
from utils.state_functions import MixtureBranch, ProperMixture, StateOperator


def check_unique_labels(labels: Sequence[str]) -> None:
    if len(set(labels)) != len(labels):
        raise DimensionMismatchError(f"Outcome labels must be unique: {list(labels)}")


@dataclass(frozen=True)
class POVMeasure:
    """Finite family of probability operators E_r >= 0 with sum_r E_r = 1."""
    outcomes: Tuple[Tuple[str, Operator], ...]

    def __init__(self, outcomes: Sequence[Tuple[str, Operator]], policy: NumericPolicy = DEFAULT_POLICY):
        outcomes = tuple((str(label), effect) for label, effect in outcomes)
        if not outcomes:
            raise DimensionMismatchError("A POV measure needs at least one outcome")
        check_unique_labels([label for label, _ in outcomes])
        space = outcomes[0][1].space
        total = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
        for label, effect in outcomes:
            if effect.space != space:
                raise DimensionMismatchError(f"Effect '{label}' lives on {effect.space}, expected {space}")
            check_effect(label, effect, policy)
            total += effect.entries
        defect = float(np.max(np.abs(total - np.eye(space.total_dim))))
        if defect > policy.completeness_tol:
            raise CompletenessError("Normalization sum_r E_r = 1", defect)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def space(self) -> HilbertSpace:
        return self.outcomes[0][1].space

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.outcomes]

    def effect(self, label: str) -> Operator:
        for r, e in self.outcomes:
            if r == label:
                return e
        raise UnknownLabelError(label, self.labels)

    def probabilities(self, t: StateOperator) -> Dict[str, float]:
        return {r: t.expectation(e) for r, e in self.outcomes}


def check_effect(label: str, effect: Operator, policy: NumericPolicy) -> None:
    if not effect.is_hermitian(policy):
        raise NotHermitianError(effect.hermitian_defect())
    lowest = min_eigenvalue(effect)
    if lowest < -policy.psd_tol:
        raise PositivityError(label, lowest)


@dataclass(frozen=True)
class StateTransformer:
    """Kraus operators O_rk per outcome r with sum_rk O_rk^dag O_rk = 1."""
    outcomes: Tuple[Tuple[str, Tuple[Operator, ...]], ...]

    def __init__(self, outcomes: Sequence[Tuple[str, Sequence[Operator]]],
                 policy: NumericPolicy = DEFAULT_POLICY):
        outcomes = tuple((str(label), tuple(ops)) for label, ops in outcomes)
        if not outcomes or not all(ops for _, ops in outcomes):
            raise DimensionMismatchError("Every outcome needs at least one Kraus operator")
        check_unique_labels([label for label, _ in outcomes])
        space = outcomes[0][1][0].space
        total = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
        for label, ops in outcomes:
            for o in ops:
                if o.space != space:
                    raise DimensionMismatchError(f"Kraus operator of '{label}' lives on {o.space}")
                total += o.entries.conj().T @ o.entries
        defect = float(np.max(np.abs(total - np.eye(space.total_dim))))
        if defect > policy.completeness_tol:
            raise CompletenessError("Completeness sum_rk O_rk^dag O_rk = 1", defect)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def space(self) -> HilbertSpace:
        return self.outcomes[0][1][0].space

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.outcomes]

    def kraus_ops(self, label: str) -> Tuple[Operator, ...]:
        for r, ops in self.outcomes:
            if r == label:
                return ops
        raise UnknownLabelError(label, self.labels)


def apply_transformer(t: StateTransformer, r: str, state: StateOperator) -> Tuple[Operator, float]:
    """O_r(T) = sum_k O_rk T O_rk^dag together with its trace, the outcome probability."""
    if state.space != t.space:
        raise DimensionMismatchError(f"State on {state.space}, transformer on {t.space}")
    acc = np.zeros_like(state.entries)
    for o in t.kraus_ops(r):
        acc = acc + o.entries @ state.entries @ o.entries.conj().T
    unnormalized = Operator(t.space, acc)
    return unnormalized, float(unnormalized.trace().real)


def conditional_state(t: StateTransformer, r: str, state: StateOperator,
                      policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    unnormalized, prob = apply_transformer(t, r, state)
    if prob <= policy.zero_probability:
        raise ImpossibleOutcomeError(r, prob)
    return StateOperator(unnormalized * (1.0 / prob), policy)


def induced_pov(t: StateTransformer, policy: NumericPolicy = DEFAULT_POLICY) -> POVMeasure:
    """E_r = sum_k O_rk^dag O_rk"""
    effects = []
    for label, ops in t.outcomes:
        acc = sum(o.entries.conj().T @ o.entries for o in ops)
        effects.append((label, Operator(t.space, acc)))
    return POVMeasure(effects, policy)


def unconditional_state(t: StateTransformer, state: StateOperator,
                        policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    """Non-selective output sum_r P_r T_r^out = sum_r O_r(T)."""
    acc = np.zeros_like(state.entries)
    for label in t.labels:
        unnormalized, _ = apply_transformer(t, label, state)
        acc = acc + unnormalized.entries
    return StateOperator(Operator(t.space, acc), policy)


def unconditional_mixture(t: StateTransformer, state: StateOperator,
                          policy: NumericPolicy = DEFAULT_POLICY) -> ProperMixture:
    """Outcomes with their probabilities and conditional states; impossible outcomes are left out."""
    branches = []
    for label in t.labels:
        unnormalized, prob = apply_transformer(t, label, state)
        if prob <= policy.zero_probability:
            continue
        branches.append(MixtureBranch(prob, StateOperator(unnormalized * (1.0 / prob), policy), label))
    # renormalize away the dropped zero-probability mass
    total = sum(b.probability for b in branches)
    branches = [MixtureBranch(b.probability / total, b.state, b.label) for b in branches]
    return ProperMixture(branches, policy)


def unconditional_consistency(u: Operator, t_s: StateOperator, t_m: StateOperator,
                              t: StateTransformer, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Max-entry distance between sum_r P_r T_r^out and tr_M(U (T_S x T_M) U^dag)."""
    require_unitary(u, policy)
    joint = tensor_product(t_s.op, t_m.op)
    if u.space != joint.space:
        raise DimensionMismatchError(f"Coupling on {u.space}, composite on {joint.space}")
    evolved = u.sandwich(joint)
    reduced = partial_trace(evolved, t_s.space.labels)
    acc = np.zeros_like(t_s.entries)
    for label in t.labels:
        unnormalized, _ = apply_transformer(t, label, t_s)
        acc = acc + unnormalized.entries
    return max_deviation(Operator(t_s.space, acc), reduced)


def projective_transformer(kets: Sequence[Ket], labels: Sequence[str],
                           policy: NumericPolicy = DEFAULT_POLICY) -> StateTransformer:
    """Von Neumann-Lueders measurement: one rank-1 Kraus operator |r><r| per outcome."""
    if len(kets) != len(labels):
        raise DimensionMismatchError("One label per ket is required")
    return StateTransformer([(label, [k.dyad()]) for label, k in zip(labels, kets)], policy)


def random_transformer(space: HilbertSpace, n_outcomes: int, n_kraus: int,
                       rng: np.random.Generator, policy: NumericPolicy = DEFAULT_POLICY) -> StateTransformer:
    """Random transformer cut out of a Haar-like isometry V: C^d -> C^(d * n_outcomes * n_kraus)."""
    d = space.total_dim
    blocks = n_outcomes * n_kraus
    z = rng.normal(size=(d * blocks, d)) + 1j * rng.normal(size=(d * blocks, d))
    v, _ = np.linalg.qr(z)
    outcomes = []
    for r in range(n_outcomes):
        ops = [Operator(space, v[(r * n_kraus + k) * d:(r * n_kraus + k + 1) * d, :]) for k in range(n_kraus)]
        outcomes.append((str(r), ops))
    return StateTransformer(outcomes, policy)


def random_pov(space: HilbertSpace, n_outcomes: int, rng: np.random.Generator,
               policy: NumericPolicy = DEFAULT_POLICY) -> POVMeasure:
    return induced_pov(random_transformer(space, n_outcomes, 1, rng, policy), policy)


def spanning_states(space: HilbertSpace) -> List[StateOperator]:
    """d^2 pure states whose projectors span all operators on the space."""
    d = space.total_dim
    states = [StateOperator(basis_ket(space, i).dyad()) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1.0, 1j):
                k = (basis_ket(space, i) + basis_ket(space, j) * phase) * (1 / np.sqrt(2))
                states.append(StateOperator(k.dyad()))
    return states


def transformers_equivalent(a: StateTransformer, b: StateTransformer,
                            policy: NumericPolicy = DEFAULT_POLICY) -> bool:
    """Extensional equality: same outcome set and same action O_r(T) on a spanning set of states."""
    if a.space != b.space or sorted(a.labels) != sorted(b.labels):
        return False
    for state in spanning_states(a.space):
        for label in a.labels:
            out_a, _ = apply_transformer(a, label, state)
            out_b, _ = apply_transformer(b, label, state)
            if max_deviation(out_a, out_b) > policy.completeness_tol:
                return False
    return True
