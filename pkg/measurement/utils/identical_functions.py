# ----------------------------------------------------------------
# Identical particles: (anti)symmetrization and symmetrized observables
# ----------------------------------------------------------------

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np

from utils.exceptions import DimensionMismatchError, NonOrthogonalError, NotNormalizedError
from utils.linalg_functions import DEFAULT_POLICY, HilbertSpace, Ket, NumericPolicy, Operator, partial_trace
from utils.state_functions import StateOperator, pure_state


class ExchangeSymmetry(Enum):
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"


@dataclass(frozen=True)
class ParticleEnsemble:
    """N particles of one type; the joint space is the N-fold tensor power of the single-particle space."""
    particle_type: str
    n: int
    single_space: HilbertSpace

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatchError(f"Particle count must be at least 1, got {self.n}")

    @property
    def joint_space(self) -> HilbertSpace:
        if self.n == 1:
            return self.single_space
        return HilbertSpace(tuple((f"{label}_{k}", dim)
                                  for k in range(1, self.n + 1)
                                  for label, dim in self.single_space.factors))

    @property
    def single_dim(self) -> int:
        return self.single_space.total_dim


def permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def permutation_operator(e: ParticleEnsemble, perm: Sequence[int]) -> Operator:
    """Operator that moves the particle in slot perm[k] into slot k."""
    d, n = e.single_dim, e.n
    if sorted(perm) != list(range(n)):
        raise DimensionMismatchError(f"{list(perm)} is not a permutation of {n} slots")
    total = d ** n
    source = np.arange(total).reshape((d,) * n).transpose(perm).ravel()
    entries = np.zeros((total, total))
    entries[np.arange(total), source] = 1.0
    return Operator(e.joint_space, entries)


def swap_operator(e: ParticleEnsemble) -> Operator:
    if e.n != 2:
        raise DimensionMismatchError("The swap operator is defined for two particles")
    return permutation_operator(e, (1, 0))


def symmetrizer(e: ParticleEnsemble, kind: ExchangeSymmetry) -> Operator:
    """(1/n!) sum_pi sgn(pi)^[fermionic] P_pi, the projector onto the (anti)symmetric subspace."""
    total = e.single_dim ** e.n
    acc = np.zeros((total, total))
    for perm in itertools.permutations(range(e.n)):
        sign = permutation_sign(perm) if kind is ExchangeSymmetry.FERMIONIC else 1
        acc += sign * permutation_operator(e, perm).entries
    return Operator(e.joint_space, acc / math.factorial(e.n))


def two_particle_ket(psi: Ket, phi: Ket, kind: ExchangeSymmetry,
                     policy: NumericPolicy = DEFAULT_POLICY) -> Ket:
    """(|psi 1>|phi 2> -+ |phi 1>|psi 2>)/sqrt(2) for orthogonal single-particle states."""
    if psi.space != phi.space:
        raise DimensionMismatchError(f"Single-particle states on {psi.space} and {phi.space}")
    for k in (psi, phi):
        if abs(k.norm - 1.0) > policy.norm_tol:
            raise NotNormalizedError(k.norm)
    ov = abs(psi.inner(phi))
    if ov > policy.overlap_tol:
        raise NonOrthogonalError(ov)
    sign = -1.0 if kind is ExchangeSymmetry.FERMIONIC else 1.0
    amps = (np.kron(psi.amplitudes, phi.amplitudes) + sign * np.kron(phi.amplitudes, psi.amplitudes)) / np.sqrt(2)
    joint = ParticleEnsemble("", 2, psi.space).joint_space
    return Ket(joint, amps)


def two_particle_state(psi: Ket, phi: Ket, kind: ExchangeSymmetry,
                       policy: NumericPolicy = DEFAULT_POLICY) -> StateOperator:
    return pure_state(two_particle_ket(psi, phi, kind, policy), policy)


def symmetrized_observable(a: Operator, e: ParticleEnsemble) -> Operator:
    """sum_k 1 x ... x a (slot k) x ... x 1"""
    if a.dim != e.single_dim:
        raise DimensionMismatchError(f"Observable of dimension {a.dim} on a {e.single_dim}-dimensional particle")
    d, n = e.single_dim, e.n
    acc = np.zeros((d ** n, d ** n), dtype=np.complex128)
    for slot in range(n):
        term = np.eye(1)
        for k in range(n):
            term = np.kron(term, a.entries if k == slot else np.eye(d))
        acc += term
    return Operator(e.joint_space, acc)


def slot_labels(e: ParticleEnsemble, slot: int) -> List[str]:
    """Joint-space factor labels belonging to particle slot (0-based)."""
    if e.n == 1:
        return e.single_space.labels
    return [f"{label}_{slot + 1}" for label in e.single_space.labels]


def one_body_density(t: StateOperator, e: ParticleEnsemble) -> Operator:
    """(1/N) sum_k tr_{all but k} T, an operator on the single-particle space."""
    if t.space.total_dim != e.single_dim ** e.n:
        raise DimensionMismatchError(f"State of dimension {t.space.total_dim} for {e.n} particles "
                                     f"of dimension {e.single_dim}")
    if e.n == 1:
        return Operator(e.single_space, t.entries)
    op = t.op if t.space == e.joint_space else Operator(e.joint_space, t.entries)
    acc = np.zeros((e.single_dim, e.single_dim), dtype=np.complex128)
    for slot in range(e.n):
        acc += partial_trace(op, slot_labels(e, slot)).entries
    return Operator(e.single_space, acc / e.n)


def symmetrized_expectation(k: Ket, a: Operator, e: ParticleEnsemble) -> float:
    """<Psi| sum_k a_k |Psi> evaluated slot by slot on the amplitude tensor."""
    d, n = e.single_dim, e.n
    if k.space.total_dim != d ** n or a.dim != d:
        raise DimensionMismatchError(f"Ket of dimension {k.space.total_dim}, observable of dimension {a.dim}, "
                                     f"{n} particles of dimension {d}")
    tensor = np.asarray(k.amplitudes).reshape((d,) * n)
    acc = 0.0
    for slot in range(n):
        applied = np.moveaxis(np.tensordot(a.entries, tensor, axes=([1], [slot])), 0, slot)
        acc += np.vdot(tensor, applied).real
    return float(acc)


def disturbed_average(psi: Ket, phi: Ket, a: Operator, kind: ExchangeSymmetry,
                      policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """What a meter that cannot tell the two particles apart reports for a: <psi|a|psi> + <phi|a|phi>."""
    joint = two_particle_ket(psi, phi, kind, policy)
    return symmetrized_expectation(joint, a, ParticleEnsemble("", 2, psi.space))
