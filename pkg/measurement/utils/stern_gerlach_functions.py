# -------------------------------------------------------------------
# Stern-Gerlach model: spin-1/2 Gaussian packet, field coupling, film
# -------------------------------------------------------------------

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from utils.exceptions import CouplingTooWeakError, DimensionMismatchError, InvalidStateError
from utils.extent_functions import (
    EnergyThreshold,
    GridKinematics,
    free_flight,
    gaussian_packet,
    momentum_kick,
    uniform_region_state,
)
from utils.identical_functions import ParticleEnsemble
from utils.kraus_functions import POVMeasure
from utils.linalg_functions import (
    DEFAULT_POLICY,
    HilbertSpace,
    Ket,
    NumericPolicy,
    Operator,
    basis_ket,
    embed_operator,
    identity,
    require_unitary,
    tensor_product,
)
from utils.pipeline_functions import BuiltExperiment, run_pipeline
from utils.reduction_functions import BranchDeclaration, Meter, MeterComponent, MeterRole, ObjectSystem
from utils.report_functions import RunReport
from utils.state_functions import StateOperator, pure_state
from utils.tpov_functions import PreparedEnsemble, TPOVMeasure, minimal_support_subspace, truncate_pov

logger = logging.getLogger(__name__)

SPIN_LABELS = ("+", "-")
FILM_LEVELS = ("idle", "strip+", "strip-")
STRIP_OVERLAP_LIMIT = 1e-6


@dataclass(frozen=True)
class SternGerlachSpec:
    """Desk-scale Stern-Gerlach setup; defaults give strips at +-32 grid units, about seven packet widths from x = 0 and from the wrap."""
    packet_center: float = 0.0
    mean_momentum: float = 0.0
    momentum_spread: float = 0.125
    spin_coeffs: Tuple[complex, complex] = (1 / np.sqrt(2), 1 / np.sqrt(2))
    grid_n: int = 128
    spacing: float = 1.0
    coupling_strength: float = 1.6
    mass: float = 1.0
    times: Tuple[float, float] = (0.0, 20.0)
    film_region: Tuple[float, float] = (-56.0, 56.0)
    film_E0: float = 0.25
    particle_type: str = "silver"
    name: str = "stern-gerlach-default"
    labels: Tuple[str, str] = SPIN_LABELS
    status_loss: Tuple[bool, bool] = (True, True)
    prepared: Tuple[Tuple[complex, ...], ...] = ((1.0, 0.0), (0.0, 1.0))

    @property
    def sigma(self) -> float:
        """Position spread of the minimal-uncertainty packet, 1 / (2 dp)."""
        return 1.0 / (2.0 * self.momentum_spread)

    @property
    def tau(self) -> float:
        return self.times[1] - self.times[0]

    @cached_property
    def kinematics(self) -> GridKinematics:
        return GridKinematics(1, self.grid_n, self.spacing)


def default_sg_spec() -> SternGerlachSpec:
    return SternGerlachSpec()


def spin_space() -> HilbertSpace:
    return HilbertSpace.of(("spin", 2))


def film_space() -> HilbertSpace:
    return HilbertSpace.of(("film", len(FILM_LEVELS)))


def object_space(s: SternGerlachSpec) -> HilbertSpace:
    return s.kinematics.space.concat(spin_space())


def joint_space(s: SternGerlachSpec) -> HilbertSpace:
    return object_space(s).concat(film_space())


def packet_ket(s: SternGerlachSpec) -> Ket:
    """|p, dp>"""
    return gaussian_packet(s.kinematics, [s.packet_center], [s.sigma], [s.mean_momentum])


def spatial_propagator(s: SternGerlachSpec, sign: float) -> Operator:
    """Spin-conditional kick of +-q followed by free flight over tau."""
    k = s.kinematics
    return free_flight(k, s.tau, s.mass) @ momentum_kick(k, sign * s.coupling_strength)


def _film_swap(level: int) -> np.ndarray:
    v = np.eye(len(FILM_LEVELS))
    v[[0, level]] = v[[level, 0]]
    return v


def build_coupling(s: SternGerlachSpec, policy: NumericPolicy = DEFAULT_POLICY) -> Operator:
    """U = sum_j U_x^j (x) |j><j| (x) V_j, with V_j flipping the film from idle to strip j."""
    validate_sg_spec(s, policy)
    acc = 0
    for index, sign in enumerate((+1.0, -1.0)):
        spin_proj = np.zeros((2, 2))
        spin_proj[index, index] = 1.0
        acc = acc + np.kron(np.kron(spatial_propagator(s, sign).entries, spin_proj), _film_swap(index + 1))
    u = Operator(joint_space(s), acc)
    require_unitary(u, policy)
    return u


def strip_packets(s: SternGerlachSpec) -> Dict[str, Ket]:
    g = packet_ket(s)
    return {label: spatial_propagator(s, sign).apply(g) for label, sign in zip(s.labels, (+1.0, -1.0))}


def validate_sg_spec(s: SternGerlachSpec, policy: NumericPolicy = DEFAULT_POLICY) -> None:
    """Checks the coefficients and that the coupling actually separates the two strips at t2."""
    c = np.asarray(s.spin_coeffs, dtype=np.complex128)
    norm = float(np.sum(np.abs(c) ** 2))
    if c.shape != (2,) or abs(norm - 1.0) > policy.norm_tol:
        raise InvalidStateError([f"spin coefficients must satisfy |c+|^2 + |c-|^2 = 1, got {norm:.12g}"])
    if s.momentum_spread <= 0 or s.mass <= 0 or s.tau <= 0:
        raise DimensionMismatchError("Momentum spread, mass and flight time must be positive")
    strips = strip_packets(s)
    plus, minus = (strips[l] for l in s.labels)
    overlap = abs(plus.inner(minus)) ** 2
    if overlap >= STRIP_OVERLAP_LIMIT:
        raise CouplingTooWeakError(overlap, STRIP_OVERLAP_LIMIT)
    logger.debug(f"Strip overlap |<g+|g->|^2 = {overlap:.3e}")


def strip_projectors(s: SternGerlachSpec) -> Dict[str, Operator]:
    """Position projectors onto x > 0 (strip +) and x < 0 (strip -), on the joint space."""
    k = s.kinematics
    x = k.coordinates
    out = {}
    for label, mask in zip(s.labels, (x > 0, x < 0)):
        proj = Operator(k.space, np.diag(mask.astype(float)))
        out[label] = embed_operator(proj, joint_space(s))
    return out


def signal_projectors(s: SternGerlachSpec) -> Dict[str, Operator]:
    """Film pointer projectors |strip j><strip j| on the joint space."""
    out = {}
    for label, level in zip(s.labels, (1, 2)):
        ket = basis_ket(film_space(), level)
        out[label] = embed_operator(ket.dyad(), joint_space(s))
    return out


def film_component(s: SternGerlachSpec) -> MeterComponent:
    k = s.kinematics
    idle = pure_state(basis_ket(film_space(), 0))
    ensemble = uniform_region_state(k, [s.film_region[0]], [s.film_region[1]])
    return MeterComponent(
        name="film",
        role=MeterRole.DETECTOR,
        space=film_space(),
        initial_state=idle,
        shares_particle_types=(s.particle_type,),
        metastable_label="idle",
        threshold=EnergyThreshold(s.film_E0, s.mass),
        status_ensemble=(ensemble, ParticleEnsemble(s.particle_type, 1, k.space)),
    )


def branch_declaration(s: SternGerlachSpec) -> BranchDeclaration:
    return BranchDeclaration(s.labels, [basis_ket(spin_space(), 0), basis_ket(spin_space(), 1)], s.status_loss)


def prepared_state(s: SternGerlachSpec) -> StateOperator:
    """|p, dp> (x) (c+|+> + c-|->)"""
    spin = Ket(spin_space(), np.asarray(s.spin_coeffs, dtype=np.complex128))
    return pure_state(tensor_product(packet_ket(s), spin))


def sg_tpov(s: SternGerlachSpec, policy: NumericPolicy = DEFAULT_POLICY) -> TPOVMeasure:
    """E_j = |p,dp><p,dp| (x) |j><j|; with both spin states prepared, H_Exp = |p,dp> (x) C^2."""
    g = packet_ket(s)
    spin_kets = [basis_ket(spin_space(), i) for i in range(2)]
    prepared = PreparedEnsemble([pure_state(tensor_product(g, Ket(spin_space(), np.asarray(v, dtype=np.complex128))))
                                 for v in s.prepared])
    projector = minimal_support_subspace(prepared)
    effects = [(label, tensor_product(identity(s.kinematics.space), sk.dyad()))
               for label, sk in zip(s.labels, spin_kets)]
    return truncate_pov(POVMeasure(effects, policy), projector, policy)



def build_sg_experiment(s: SternGerlachSpec, policy: NumericPolicy = DEFAULT_POLICY) -> BuiltExperiment:
    return BuiltExperiment(
        name=s.name,
        coupling=build_coupling(s, policy),
        packet=packet_ket(s),
        branches=branch_declaration(s),
        coefficients=tuple(complex(c) for c in s.spin_coeffs),
        meter=Meter([film_component(s)], name="film meter"),
        tpov=sg_tpov(s, policy),
        prepared_state=prepared_state(s),
        pointer_projectors=signal_projectors(s),
        object_system=ObjectSystem(s.particle_type, tuple(s.kinematics.axes)),
        kinematics=s.kinematics,
        strip_projectors=strip_projectors(s),
    )


def run_sg(s: SternGerlachSpec, runs: int, seed: int, progress: bool = True,
           policy: NumericPolicy = DEFAULT_POLICY) -> RunReport:
    return run_pipeline(build_sg_experiment(s, policy), runs, seed, progress, policy)


def strip_masses(t: StateOperator, s: SternGerlachSpec) -> Dict[str, float]:
    return {label: float(np.real(np.trace(t.entries @ p.entries))) for label, p in strip_projectors(s).items()}