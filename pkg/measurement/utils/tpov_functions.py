# ---------------------------------------------------------------
# Minimal experiment subspace and truncated POV (TPOV) measures
# ---------------------------------------------------------------

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from utils.exceptions import CompletenessError, DimensionMismatchError, UnknownLabelError
from utils.kraus_functions import POVMeasure, check_effect, check_unique_labels
from utils.linalg_functions import (
    DEFAULT_POLICY,
    HilbertSpace,
    Ket,
    NumericPolicy,
    Operator,
    eig_hermitian,
    max_deviation,
    projector_onto_span,
    range_basis,
    require_projector,
)
from utils.state_functions import StateOperator


@dataclass(frozen=True)
class PreparedEnsemble:
    """The preparation repertoire T_Exp = {T_1, ..., T_K} of an experiment."""
    states: Tuple[StateOperator, ...]

    def __init__(self, states: Sequence[StateOperator]):
        states = tuple(states)
        if not states:
            raise DimensionMismatchError("A prepared ensemble needs at least one state")
        for s in states[1:]:
            if s.space != states[0].space:
                raise DimensionMismatchError(f"Prepared states live on {states[0].space} and {s.space}")
        object.__setattr__(self, "states", states)

    @property
    def space(self) -> HilbertSpace:
        return self.states[0].space


@dataclass(frozen=True)
class TPOVMeasure:
    """Effects E'_r >= 0 summing to the subspace projector Pi[H_Exp] instead of the identity."""
    outcomes: Tuple[Tuple[str, Operator], ...]
    subspace_projector: Operator

    def __init__(self, outcomes: Sequence[Tuple[str, Operator]], subspace_projector: Operator,
                 policy: NumericPolicy = DEFAULT_POLICY):
        outcomes = tuple((str(label), effect) for label, effect in outcomes)
        if not outcomes:
            raise DimensionMismatchError("A TPOV measure needs at least one outcome")
        check_unique_labels([label for label, _ in outcomes])
        require_projector(subspace_projector, policy)
        space = subspace_projector.space
        total = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
        for label, effect in outcomes:
            if effect.space != space:
                raise DimensionMismatchError(f"Effect '{label}' lives on {effect.space}, expected {space}")
            check_effect(label, effect, policy)
            total += effect.entries
        defect = float(np.max(np.abs(total - subspace_projector.entries)))
        if defect > policy.completeness_tol:
            raise CompletenessError("Truncated normalization sum_r E'_r = Pi[H_Exp]", defect)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "subspace_projector", subspace_projector)

    @property
    def space(self) -> HilbertSpace:
        return self.subspace_projector.space

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.outcomes]

    @property
    def subspace_dim(self) -> int:
        return int(round(self.subspace_projector.trace().real))

    def effect(self, label: str) -> Operator:
        for r, e in self.outcomes:
            if r == label:
                return e
        raise UnknownLabelError(label, self.labels)

    def probabilities(self, t: StateOperator) -> Dict[str, float]:
        return {r: t.expectation(e) for r, e in self.outcomes}

    def compressed(self) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """Effects in H_Exp coordinates: an orthonormal basis V of H_Exp and V^dag E'_r V per outcome."""
        basis = range_basis(self.subspace_projector)
        v = np.column_stack([k.amplitudes for k in basis]) if basis else np.zeros((self.space.total_dim, 0))
        return v, {r: v.conj().T @ e.entries @ v for r, e in self.outcomes}


def support_kets(e: PreparedEnsemble, rtol: float = DEFAULT_POLICY.rank_rtol) -> List[Ket]:
    """Eigenvectors spanning the ranges of all prepared states (eigenvalue > rtol * largest)."""
    kets: List[Ket] = []
    for state in e.states:
        values, vectors = eig_hermitian(state.op)
        cutoff = rtol * max(values[0], 0.0)
        kets.extend(k for v, k in zip(values, vectors) if v > cutoff)
    return kets


def minimal_support_subspace(e: PreparedEnsemble, tol: float = DEFAULT_POLICY.rank_rtol) -> Operator:
    """Projector onto the span of the ranges of all prepared states, the smallest Pi with Pi T Pi = T."""
    return projector_onto_span(support_kets(e, tol), tol=tol, space=e.space)


def supports_ensemble(p: Operator, e: PreparedEnsemble, tol: float = DEFAULT_POLICY.overlap_tol) -> bool:
    """Pi T_k Pi = T_k for every prepared state."""
    return all(max_deviation(p.sandwich(s.op), s.op) <= tol for s in e.states)


def support_is_minimal(p: Operator, e: PreparedEnsemble, tol: float = DEFAULT_POLICY.overlap_tol) -> bool:
    """Removing any single direction of Pi's range must break Pi T_k Pi = T_k for some k."""
    if not supports_ensemble(p, e, tol):
        return False
    for k in range_basis(p):
        reduced = p - k.dyad()
        if supports_ensemble(reduced, e, tol):
            return False
    return True


def truncate_pov(p: POVMeasure, projector: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> TPOVMeasure:
    """E'_r = Pi E_r Pi"""
    if projector.space != p.space:
        raise DimensionMismatchError(f"Projector on {projector.space}, POV measure on {p.space}")
    require_projector(projector, policy)
    effects = [(label, projector @ effect @ projector) for label, effect in p.outcomes]
    return TPOVMeasure(effects, projector, policy)


def impossibility_witness(p: POVMeasure, t: StateOperator) -> Tuple[float, str]:
    """Largest outcome probability; normalization forces it to be at least 1/|R| for every state."""
    probs = p.probabilities(t)
    label = max(probs, key=probs.get)
    return probs[label], label


def annihilation_check(t: TPOVMeasure, state: StateOperator, tol: float = DEFAULT_POLICY.annihilation_tol) -> bool:
    """True iff the TPOV gives every outcome a probability below tol on this state."""
    return all(abs(prob) < tol for prob in t.probabilities(state).values())
