# ------------------------------------------------------------
# Phase-space extent of particle ensembles and separation status
# ------------------------------------------------------------

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from utils.exceptions import DimensionMismatchError, NumericalError
from utils.identical_functions import ParticleEnsemble, one_body_density
from utils.linalg_functions import DEFAULT_POLICY, HilbertSpace, Ket, NumericPolicy, Operator, embed_operator
from utils.state_functions import StateOperator

logger = logging.getLogger(__name__)

AXIS_LABELS = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class GridKinematics:
    """Uniform periodic grid with n points per axis; hbar = 1, momenta from the discrete Fourier transform."""
    d: int
    n: int
    spacing: float = 1.0
    space: HilbertSpace = field(init=False)
    position_ops: Tuple[Operator, ...] = field(init=False)
    momentum_ops: Tuple[Operator, ...] = field(init=False)

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise DimensionMismatchError(f"Grid dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise DimensionMismatchError(f"Grid points per axis must be a power of two, got {self.n}")
        if self.spacing <= 0:
            raise DimensionMismatchError(f"Grid spacing must be positive, got {self.spacing}")
        axis_space = HilbertSpace(tuple((label, self.n) for label in AXIS_LABELS[:self.d]))
        dft = np.fft.fft(np.eye(self.n), axis=0, norm="ortho")
        p_axis = dft.conj().T @ np.diag(self.wavenumbers) @ dft
        x_ops, p_ops = [], []
        for label in axis_space.labels:
            factor = HilbertSpace.of((label, self.n))
            x_ops.append(embed_operator(Operator(factor, np.diag(self.coordinates).astype(complex)), axis_space))
            p_ops.append(embed_operator(Operator(factor, p_axis), axis_space))
        object.__setattr__(self, "space", axis_space)
        object.__setattr__(self, "position_ops", tuple(x_ops))
        object.__setattr__(self, "momentum_ops", tuple(p_ops))

    @property
    def coordinates(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @property
    def axes(self) -> List[str]:
        return list(AXIS_LABELS[:self.d])


@dataclass(frozen=True)
class Interval:
    """Open interval (center - half_width, center + half_width)."""
    center: float
    half_width: float

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def disjoint(self, other: "Interval") -> bool:
        if self.half_width <= 0 or other.half_width <= 0:
            return True
        return self.upper <= other.lower or other.upper <= self.lower

    def contains(self, value: float) -> bool:
        return self.lower < value < self.upper


@dataclass(frozen=True)
class ExtentBox:
    position: Tuple[Interval, ...]
    momentum: Tuple[Interval, ...]

    @property
    def intervals(self) -> Tuple[Interval, ...]:
        return self.position + self.momentum

    def as_dict(self) -> Dict[str, List[List[float]]]:
        return {
            "position": [[i.lower, i.upper] for i in self.position],
            "momentum": [[i.lower, i.upper] for i in self.momentum],
        }


@dataclass(frozen=True)
class EnergyThreshold:
    E0: float
    mass: float

    def __post_init__(self):
        if self.E0 < 0 or self.mass <= 0:
            raise DimensionMismatchError(f"Threshold needs E0 >= 0 and mass > 0, got {self.E0}, {self.mass}")


def _lift(a: Operator, e: ParticleEnsemble) -> Operator:
    if a.space == e.single_space:
        return a
    if a.dim != e.single_dim:
        raise DimensionMismatchError(f"Observable of dimension {a.dim} on a {e.single_dim}-dimensional particle")
    if set(a.space.labels) <= set(e.single_space.labels):
        return embed_operator(a, e.single_space)
    return Operator(e.single_space, a.entries)


def mean_per_particle(t: StateOperator, a: Operator, e: ParticleEnsemble) -> float:
    """tr(T sum_k a_k / N), evaluated on the one-body density."""
    rho = one_body_density(t, e)
    return float(np.real(np.trace(rho.entries @ _lift(a, e).entries)))


def spread_per_particle(t: StateOperator, a: Operator, e: ParticleEnsemble,
                        policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """sqrt(tr(T sum_k (a_k - a_mean)^2 / N))"""
    rho = one_body_density(t, e)
    lifted = _lift(a, e).entries
    mean = float(np.real(np.trace(rho.entries @ lifted)))
    shifted = lifted - mean * np.eye(e.single_dim)
    radicand = float(np.real(np.trace(rho.entries @ shifted @ shifted)))
    if radicand < 0:
        if radicand < -policy.psd_tol * max(1.0, mean ** 2):
            raise NumericalError(f"Negative variance {radicand:.3e} for mean {mean:.6g}")
        radicand = 0.0
    return float(np.sqrt(radicand))


def extent(t: StateOperator, e: ParticleEnsemble, k: GridKinematics,
           policy: NumericPolicy = DEFAULT_POLICY) -> ExtentBox:
    if e.single_dim != k.space.total_dim:
        raise DimensionMismatchError(f"Particle space of dimension {e.single_dim} on a grid of {k.space.total_dim}")
    rho = one_body_density(t, e)
    single = ParticleEnsemble(e.particle_type, 1, e.single_space)
    state = StateOperator(rho, policy)

    def interval(op: Operator) -> Interval:
        a = Operator(e.single_space, op.entries)
        return Interval(mean_per_particle(state, a, single), spread_per_particle(state, a, single, policy))

    return ExtentBox(tuple(interval(x) for x in k.position_ops), tuple(interval(p) for p in k.momentum_ops))


def boxes_disjoint(a: ExtentBox, b: ExtentBox) -> bool:
    """Open boxes have empty intersection iff some coordinate pair of intervals is disjoint."""
    if len(a.position) != len(b.position) or len(a.momentum) != len(b.momentum):
        raise DimensionMismatchError(f"Boxes of dimension {len(a.position)} and {len(b.position)}")
    return any(i.disjoint(j) for i, j in zip(a.intervals, b.intervals))


@dataclass(frozen=True)
class TypeSeparation:
    particle_type: str
    system_box: ExtentBox
    environment_box: ExtentBox
    separated: bool


def separation_status(system: Dict[str, Tuple[StateOperator, ParticleEnsemble]],
                      environment: Dict[str, Tuple[StateOperator, ParticleEnsemble]],
                      k: GridKinematics,
                      policy: NumericPolicy = DEFAULT_POLICY) -> Tuple[bool, List[TypeSeparation]]:
    """The system has separation status iff its extent avoids the environment's for every shared particle type."""
    reports = []
    for ptype in sorted(system):
        if ptype not in environment:
            logger.debug(f"No environment particles of type '{ptype}': trivially separated")
            continue
        sys_box = extent(*system[ptype], k, policy)
        env_box = extent(*environment[ptype], k, policy)
        reports.append(TypeSeparation(ptype, sys_box, env_box, boxes_disjoint(sys_box, env_box)))
    return all(r.separated for r in reports), reports


def above_threshold(box: ExtentBox, th: EnergyThreshold) -> bool:
    """Whole momentum box clears E0: |p_min|^2 / 2m > E0 at the corner nearest the origin."""
    p_min_sq = 0.0
    for i in box.momentum:
        if i.lower <= 0.0 <= i.upper:
            continue
        p_min_sq += min(abs(i.lower), abs(i.upper)) ** 2
    if p_min_sq == 0.0:
        return False
    return p_min_sq / (2 * th.mass) > th.E0


# ---------------------------
# Grid states and propagators
# ---------------------------

def gaussian_packet(k: GridKinematics, center: Sequence[float], sigma: Sequence[float],
                    mean_momentum: Sequence[float] = ()) -> Ket:
    """Product of psi(x) ~ exp(-(x - c)^2 / (4 sigma^2) + i p0 x); sigma is the position standard deviation."""
    mean_momentum = list(mean_momentum) or [0.0] * k.d
    if not len(center) == len(sigma) == len(mean_momentum) == k.d:
        raise DimensionMismatchError(f"Packet parameters must have {k.d} components")
    x = k.coordinates
    amps = np.ones(1, dtype=np.complex128)
    for c, s, p0 in zip(center, sigma, mean_momentum):
        axis = np.exp(-((x - c) ** 2) / (4 * s ** 2) + 1j * p0 * x)
        amps = np.kron(amps, axis)
    return Ket(k.space, amps).normalized()


def uniform_region_state(k: GridKinematics, lower: Sequence[float], upper: Sequence[float]) -> StateOperator:
    """Incoherent equal-weight mixture of the grid points inside [lower, upper] (a localized thermal-like ensemble)."""
    x = k.coordinates
    weights = np.ones(1)
    for lo, hi in zip(lower, upper):
        weights = np.kron(weights, ((x >= lo) & (x <= hi)).astype(float))
    if weights.sum() == 0:
        raise DimensionMismatchError(f"Region {list(lower)}..{list(upper)} contains no grid points")
    return StateOperator(Operator(k.space, np.diag(weights / weights.sum()).astype(complex)))


def free_flight(k: GridKinematics, tau: float, mass: float) -> Operator:
    """exp(-i p^2 tau / 2m) on the grid."""
    dft = np.fft.fft(np.eye(k.n), axis=0, norm="ortho")
    phase = np.exp(-1j * k.wavenumbers ** 2 * tau / (2 * mass))
    axis_op = dft.conj().T @ np.diag(phase) @ dft
    out = np.ones((1, 1), dtype=np.complex128)
    for _ in range(k.d):
        out = np.kron(out, axis_op)
    return Operator(k.space, out)


def momentum_kick(k: GridKinematics, q: float, axis: int = 0) -> Operator:
    """exp(i q x) along one axis."""
    factor = HilbertSpace.of((k.axes[axis], k.n))
    return embed_operator(Operator(factor, np.diag(np.exp(1j * q * k.coordinates))), k.space)
