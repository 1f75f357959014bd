# ------------------------------------------------------------------
# Meter structure, branch-wise formal evolution and state reduction
# ------------------------------------------------------------------

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.exceptions import (
    AnnihilatedPreparationError,
    DimensionMismatchError,
    InvalidStateError,
    PointerHypothesisError,
    ReductionNotTriggered,
    UnknownLabelError,
)
from utils.extent_functions import (
    EnergyThreshold,
    GridKinematics,
    TypeSeparation,
    above_threshold,
    separation_status,
)
from utils.identical_functions import ParticleEnsemble
from utils.linalg_functions import (
    DEFAULT_POLICY,
    HilbertSpace,
    Ket,
    NumericPolicy,
    Operator,
    partial_trace,
    require_projector,
    require_unitary,
    tensor_all,
    tensor_product,
)
from utils.state_functions import MixtureBranch, ProperMixture, StateOperator

logger = logging.getLogger(__name__)


class MeterRole(Enum):
    ANCILLA = "ancilla"
    DETECTOR = "detector_active_volume"
    SIGNAL_COLLECTOR = "signal_collector"
    SCREEN = "screen"


@dataclass(frozen=True, eq=False)
class MeterComponent:
    """One part of a meter: its pointer factor(s), initial state and the particle ensemble used for status checks."""
    name: str
    role: MeterRole
    space: HilbertSpace
    initial_state: StateOperator
    shares_particle_types: Tuple[str, ...] = ()
    metastable_label: Optional[str] = None
    threshold: Optional[EnergyThreshold] = None
    status_ensemble: Optional[Tuple[StateOperator, ParticleEnsemble]] = None

    def __post_init__(self):
        if self.initial_state.space != self.space:
            raise DimensionMismatchError(f"Component '{self.name}' initial state on {self.initial_state.space}, "
                                         f"expected {self.space}")
        object.__setattr__(self, "shares_particle_types", tuple(self.shares_particle_types))


@dataclass(frozen=True, eq=False)
class Meter:
    components: Tuple[MeterComponent, ...]
    name: str = "meter"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.detectors:
            raise PointerHypothesisError(self.name)
        for c in self.detectors:
            if not c.metastable_label:
                raise PointerHypothesisError(self.name, f"detector '{c.name}' has no metastable initial state")

    @property
    def detectors(self) -> List[MeterComponent]:
        return [c for c in self.components if c.role is MeterRole.DETECTOR]

    @property
    def space(self) -> HilbertSpace:
        out = HilbertSpace()
        for c in self.components:
            out = out.concat(c.space)
        return out

    @property
    def initial_state(self) -> StateOperator:
        return StateOperator(tensor_all([c.initial_state.op for c in self.components]))

    def component(self, name: str) -> MeterComponent:
        for c in self.components:
            if c.name == name:
                return c
        raise UnknownLabelError(name, [c.name for c in self.components])


@dataclass(frozen=True, eq=False)
class BranchDeclaration:
    """Pointer outcomes j with orthonormal branch kets |j> and whether each branch ends in a status loss."""
    pointer_labels: Tuple[str, ...]
    branch_kets: Tuple[Ket, ...]
    status_loss: Tuple[bool, ...]

    def __init__(self, pointer_labels: Sequence[str], branch_kets: Sequence[Ket], status_loss: Sequence[bool],
                 policy: NumericPolicy = DEFAULT_POLICY):
        labels, kets, loss = tuple(str(l) for l in pointer_labels), tuple(branch_kets), tuple(bool(s) for s in status_loss)
        if not labels or not len(labels) == len(kets) == len(loss):
            raise DimensionMismatchError("Branch declaration needs one ket and one status flag per label")
        if len(set(labels)) != len(labels):
            raise DimensionMismatchError(f"Branch labels must be unique: {list(labels)}")
        gram = np.array([[a.inner(b) for b in kets] for a in kets])
        defect = float(np.max(np.abs(gram - np.eye(len(kets)))))
        if defect > policy.overlap_tol:
            raise InvalidStateError([f"branch kets are not orthonormal: Gram deviation {defect:.3e}"])
        object.__setattr__(self, "pointer_labels", labels)
        object.__setattr__(self, "branch_kets", kets)
        object.__setattr__(self, "status_loss", loss)

    @property
    def space(self) -> HilbertSpace:
        return self.branch_kets[0].space

    def ket(self, label: str) -> Ket:
        try:
            return self.branch_kets[self.pointer_labels.index(label)]
        except ValueError:
            raise UnknownLabelError(label, list(self.pointer_labels)) from None

    def loses_status(self, label: str) -> bool:
        return self.status_loss[self.pointer_labels.index(label)]


@dataclass(frozen=True)
class ObjectSystem:
    """Which joint-space factors carry the object's grid coordinates, and its particle type."""
    particle_type: str
    factor_labels: Tuple[str, ...]


@dataclass(frozen=True)
class StatusLossEvent:
    branch: str
    component: str
    time_tag: str = "t2"
    source: str = "declared"      # "declared" | "scan"
    report: Optional[TypeSeparation] = field(default=None, compare=False)


@dataclass(frozen=True, eq=False)
class ReductionResult:
    mixture: ProperMixture
    coefficients: Dict[str, float]
    reduced_joint_state: StateOperator
    events: Tuple[StatusLossEvent, ...]
    lost_branches: Tuple[str, ...]


# ---------------------------
# Formal (Schroedinger) evolution
# ---------------------------

def annihilation_norm(initial: Operator, antisym: Optional[Operator],
                      policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """N = 1 / tr(Pi T Pi)"""
    if antisym is None:
        return 1.0 / float(initial.trace().real)
    trace = float(antisym.sandwich(initial).trace().real)
    if trace < policy.annihilation_tol:
        raise AnnihilatedPreparationError(trace)
    return 1.0 / trace


def formal_evolution(u: Operator, initial: StateOperator, antisym: Optional[Operator] = None,
                     norm: Optional[float] = None, policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    """N U Pi T Pi U^dag"""
    require_unitary(u, policy)
    if u.space.total_dim != initial.space.total_dim:
        raise DimensionMismatchError(f"Coupling on {u.space}, state on {initial.space}")
    t = initial.op if u.space == initial.space else Operator(u.space, initial.entries)
    if antisym is not None:
        require_projector(antisym, policy)
        n = norm if norm is not None else annihilation_norm(t, antisym, policy)
        t = antisym.sandwich(t) * n
    elif norm is not None:
        t = t * norm
    return StateOperator(u.sandwich(t), policy)


def _branch_initial(packet: Ket, branch_ket: Ket, meter_state: StateOperator, bra: Optional[Ket] = None) -> Operator:
    left = tensor_product(packet, branch_ket)
    right = tensor_product(packet, bra) if bra is not None else left
    return tensor_product(left.dyad(right), meter_state.op)


def branch_states(u: Operator, packet: Ket, branches: BranchDeclaration, meter_state: StateOperator,
                  antisym: Optional[Operator] = None,
                  policy: NumericPolicy = DEFAULT_POLICY) -> Dict[str, StateOperator]:
    """T_j(t2): formal evolution of (packet x |j>) (x) meter state, one per declared branch."""
    out = {}
    for label, ket in zip(branches.pointer_labels, branches.branch_kets):
        initial = StateOperator(_branch_initial(packet, ket, meter_state), policy)
        out[label] = formal_evolution(u, initial, antisym, policy=policy)
        logger.debug(f"Branch '{label}' evolved, purity {out[label].purity:.6f}")
    return out


def cross_terms(u: Operator, packet: Ket, branches: BranchDeclaration, meter_state: StateOperator,
                antisym: Optional[Operator] = None,
                policy: NumericPolicy = DEFAULT_POLICY) -> Dict[Tuple[str, str], Operator]:
    """T_jj'(t2), the operator coefficients of the quadratic form in c; diagonal entries are the branch states."""
    require_unitary(u, policy)

    def initial(ket: Ket, bra: Optional[Ket] = None) -> Operator:
        return Operator(u.space, _branch_initial(packet, ket, meter_state, bra).entries)

    norms = {label: annihilation_norm(initial(ket), antisym, policy)
             for label, ket in zip(branches.pointer_labels, branches.branch_kets)}
    out = {}
    for j, ket_j in zip(branches.pointer_labels, branches.branch_kets):
        for jp, ket_jp in zip(branches.pointer_labels, branches.branch_kets):
            t = initial(ket_j, ket_jp)
            if antisym is not None:
                t = antisym.sandwich(t)
            out[(j, jp)] = u.sandwich(t) * float(np.sqrt(norms[j] * norms[jp]))
    return out


# ---------------------------
# Status loss and reduction
# ---------------------------

def status_loss_scan(branch_map: Dict[str, StateOperator], components: Sequence[MeterComponent],
                     k: GridKinematics, obj: ObjectSystem,
                     policy: NumericPolicy = DEFAULT_POLICY) -> Dict[str, List[StatusLossEvent]]:
    """Per branch, the detector components whose same-type ensemble overlaps the object's extent at t2."""
    ensemble = ParticleEnsemble(obj.particle_type, 1, k.space)
    events: Dict[str, List[StatusLossEvent]] = {}
    for label, state in branch_map.items():
        reduced = partial_trace(state.op, obj.factor_labels)
        obj_state = StateOperator(Operator(k.space, reduced.entries), policy)
        events[label] = []
        for c in components:
            if c.role is not MeterRole.DETECTOR or c.status_ensemble is None:
                continue
            if obj.particle_type not in c.shares_particle_types:
                continue
            separated, reports = separation_status({obj.particle_type: (obj_state, ensemble)},
                                                   {obj.particle_type: c.status_ensemble}, k, policy)
            if separated:
                continue
            report = reports[0]
            if c.threshold is not None and not above_threshold(report.system_box, c.threshold):
                logger.debug(f"Branch '{label}' overlaps '{c.name}' but stays below E0 = {c.threshold.E0}")
                continue
            events[label].append(StatusLossEvent(label, c.name, "t2", "scan", report))
    return events


def apply_reduction(c: Sequence[complex], branch_map: Dict[str, StateOperator], branches: BranchDeclaration,
                    events: Optional[Sequence[StatusLossEvent]] = None,
                    policy: NumericPolicy = DEFAULT_POLICY) -> ReductionResult:
    """Replace sum_jj' c_j c*_j' T_jj' by the proper mixture sum_j |c_j|^2 T_j, provided a declared branch loses status.

    Scanned events are carried into the result as evidence; they never trigger the reduction on their own.
    """
    c = np.asarray(c, dtype=np.complex128)
    labels = branches.pointer_labels
    if c.shape != (len(labels),):
        raise DimensionMismatchError(f"{c.size} coefficients for {len(labels)} branches")
    weights = np.abs(c) ** 2
    total = float(weights.sum())
    if abs(total - 1.0) > policy.trace_tol:
        raise InvalidStateError([f"sum |c_j|^2 = {total:.12g}"])
    events = tuple(events or ())
    declared = tuple(StatusLossEvent(l, "declared", "t2", "declared")
                     for l, lost in zip(labels, branches.status_loss) if lost)
    lost = tuple(l for l in labels if branches.loses_status(l))
    if not lost:
        raise ReductionNotTriggered()
    mixture_branches = []
    for label, w in zip(labels, weights):
        if w < policy.zero_probability:
            logger.info(f"Branch '{label}' dropped from the mixture: |c|^2 = {w:.3e}")
            continue
        if label not in branch_map:
            raise UnknownLabelError(label, list(branch_map))
        mixture_branches.append(MixtureBranch(float(w), branch_map[label], label))
    mixture = ProperMixture(mixture_branches, policy)
    space = mixture_branches[0].state.space
    acc = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
    for b in mixture_branches:
        acc += b.probability * b.state.entries
    reduced = StateOperator(Operator(space, acc), policy)
    return ReductionResult(mixture, {l: float(w) for l, w in zip(labels, weights)}, reduced,
                           declared + events, lost)


def sample_outcome(r: ReductionResult, seed) -> Tuple[str, StateOperator]:
    """One registration: branch j with probability |c_j|^2, from a single draw of default_rng(seed)."""
    rng = np.random.default_rng(seed)
    draw = rng.random()
    cumulative = np.cumsum(r.mixture.probabilities)
    index = int(np.searchsorted(cumulative, draw * cumulative[-1], side="right"))
    branch = r.mixture.branches[min(index, len(r.mixture.branches) - 1)]
    return branch.label, branch.state
