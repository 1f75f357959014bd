# ----------------------------------------------------------
# Dense complex linear algebra on labelled tensor-factor spaces
# ----------------------------------------------------------

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.exceptions import (
    DimensionMismatchError,
    LabelCollisionError,
    NotHermitianError,
    NotProjectorError,
    NotUnitaryError,
    UnknownLabelError,
)


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances threaded through every constructor and operation."""
    hermitian_tol: float = 1e-10
    trace_tol: float = 1e-10
    psd_tol: float = 1e-10
    norm_tol: float = 1e-10
    completeness_tol: float = 1e-10
    rank_rtol: float = 1e-10
    zero_probability: float = 1e-14
    annihilation_tol: float = 1e-12
    overlap_tol: float = 1e-10


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True)
class HilbertSpace:
    factors: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((str(l), int(d)) for l, d in self.factors))
        labels = self.labels
        if len(set(labels)) != len(labels):
            dup = next(l for l in labels if labels.count(l) > 1)
            raise LabelCollisionError(dup)
        for label, dim in self.factors:
            if dim < 1:
                raise DimensionMismatchError(f"Factor '{label}' has non-positive dimension {dim}")

    @classmethod
    def of(cls, *factors: Tuple[str, int]) -> "HilbertSpace":
        return cls(tuple(factors))

    @property
    def labels(self) -> List[str]:
        return [l for l, _ in self.factors]

    @property
    def dims(self) -> List[int]:
        return [d for _, d in self.factors]

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabelError(label, self.labels) from None

    def dim_of(self, label: str) -> int:
        return self.factors[self.index(label)][1]

    def concat(self, other: "HilbertSpace") -> "HilbertSpace":
        for label in other.labels:
            if label in self.labels:
                raise LabelCollisionError(label)
        return HilbertSpace(self.factors + other.factors)

    def restrict(self, keep: Iterable[str]) -> "HilbertSpace":
        keep = set(keep)
        for label in keep:
            self.index(label)
        return HilbertSpace(tuple(f for f in self.factors if f[0] in keep))

    def permuted(self, order: Sequence[str]) -> "HilbertSpace":
        if sorted(order) != sorted(self.labels):
            raise DimensionMismatchError(f"Order {list(order)} is not a permutation of {self.labels}")
        return HilbertSpace(tuple(self.factors[self.index(l)] for l in order))

    def __str__(self) -> str:
        return " x ".join(f"{l}({d})" for l, d in self.factors) or "C"


def _frozen_array(values, shape: Tuple[int, ...]) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != shape:
        raise DimensionMismatchError(f"Expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ket:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.amplitudes, (self.space.total_dim,))
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatchError("Ket amplitudes must be finite")
        object.__setattr__(self, "amplitudes", arr)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Ket":
        return Ket(self.space, self.amplitudes / self.norm)

    def inner(self, other: "Ket") -> complex:
        """<self|other>"""
        _check_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def dyad(self, other: Optional["Ket"] = None) -> "Operator":
        """|self><other|, or the projector |self><self| when other is omitted."""
        other = self if other is None else other
        _check_same_space(self.space, other.space)
        return Operator(self.space, np.outer(self.amplitudes, other.amplitudes.conj()))

    def __add__(self, other: "Ket") -> "Ket":
        _check_same_space(self.space, other.space)
        return Ket(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "Ket") -> "Ket":
        _check_same_space(self.space, other.space)
        return Ket(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "Ket":
        return Ket(self.space, self.amplitudes * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        d = self.space.total_dim
        object.__setattr__(self, "entries", _frozen_array(self.entries, (d, d)))

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dagger(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def apply(self, k: Ket) -> Ket:
        _check_same_space(self.space, k.space)
        return Ket(self.space, self.entries @ k.amplitudes)

    def expectation(self, k: Ket) -> complex:
        return k.inner(self.apply(k))

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) if self.dim else 0.0

    def is_hermitian(self, policy: NumericPolicy = DEFAULT_POLICY) -> bool:
        return self.hermitian_defect() <= policy.hermitian_tol * max(1.0, _max_norm(self.entries))

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(self.entries.conj().T @ self.entries - np.eye(self.dim))))

    def is_unitary(self, policy: NumericPolicy = DEFAULT_POLICY) -> bool:
        return self.unitarity_defect() <= policy.hermitian_tol

    def projector_defect(self) -> float:
        e = self.entries
        return max(float(np.max(np.abs(e @ e - e))), self.hermitian_defect())

    def is_projector(self, policy: NumericPolicy = DEFAULT_POLICY) -> bool:
        return self.projector_defect() <= policy.hermitian_tol

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.entries * scalar)

    __rmul__ = __mul__

    def sandwich(self, t: "Operator") -> "Operator":
        """self . t . self^dag"""
        _check_same_space(self.space, t.space)
        return Operator(self.space, self.entries @ t.entries @ self.entries.conj().T)


def _max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def max_deviation(a: Operator, b: Operator) -> float:
    """Max-entry norm of a - b."""
    _check_same_space(a.space, b.space)
    return _max_norm(a.entries - b.entries)


def _check_same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a != b:
        raise DimensionMismatchError(f"Space mismatch: {a} vs {b}")


def require_unitary(u: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> None:
    if not u.is_unitary(policy):
        raise NotUnitaryError(u.unitarity_defect())


def require_projector(p: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> None:
    if not p.is_projector(policy):
        raise NotProjectorError(p.projector_defect())


# ---------------------------
# Constructors
# ---------------------------

def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def zero_operator(space: HilbertSpace) -> Operator:
    return Operator(space, np.zeros((space.total_dim, space.total_dim)))


def basis_ket(space: HilbertSpace, index: int) -> Ket:
    if not 0 <= index < space.total_dim:
        raise DimensionMismatchError(f"Basis index {index} out of range for {space}")
    amps = np.zeros(space.total_dim, dtype=np.complex128)
    amps[index] = 1.0
    return Ket(space, amps)


def random_ket(space: HilbertSpace, rng: np.random.Generator) -> Ket:
    d = space.total_dim
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return Ket(space, v / np.linalg.norm(v))


def random_unitary(space: HilbertSpace, rng: np.random.Generator) -> Operator:
    d = space.total_dim
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    # Haar measure needs the phases of diag(r) divided out
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return Operator(space, q)


def random_hermitian(space: HilbertSpace, rng: np.random.Generator) -> Operator:
    d = space.total_dim
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return Operator(space, (z + z.conj().T) / 2)


# ---------------------------
# Tensor structure
# ---------------------------

Tensorable = Union[Operator, Ket]


def tensor_product(a: Tensorable, b: Tensorable) -> Tensorable:
    """A (x) B on the concatenated factor list; both operands must be kets or both operators."""
    space = a.space.concat(b.space)
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(space, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(space, np.kron(a.entries, b.entries))
    raise TypeError("tensor_product needs two kets or two operators")


def tensor_all(items: Sequence[Tensorable]) -> Tensorable:
    out = items[0]
    for item in items[1:]:
        out = tensor_product(out, item)
    return out


def partial_trace(t: Operator, keep: Iterable[str]) -> Operator:
    """Trace out every factor whose label is not in keep; kept factors stay in their original order."""
    keep = set(keep)
    space = t.space
    for label in keep:
        space.index(label)
    dims = space.dims
    tensor = np.asarray(t.entries).reshape(dims + dims)
    traced = [i for i, l in enumerate(space.labels) if l not in keep]
    for pos in sorted(traced, reverse=True):
        half = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=pos, axis2=pos + half)
    kept = space.restrict(keep)
    d = kept.total_dim
    return Operator(kept, tensor.reshape(d, d))


def permute_factors(x: Tensorable, order: Sequence[str]) -> Tensorable:
    """Reorder the tensor factors of a ket or operator to the given label order."""
    space = x.space
    new_space = space.permuted(order)
    axes = [space.index(l) for l in order]
    dims = space.dims
    d = space.total_dim
    if isinstance(x, Ket):
        amps = np.asarray(x.amplitudes).reshape(dims).transpose(axes).reshape(d)
        return Ket(new_space, amps)
    n = len(dims)
    ent = np.asarray(x.entries).reshape(dims + dims)
    ent = ent.transpose(axes + [a + n for a in axes]).reshape(d, d)
    return Operator(new_space, ent)


def embed_operator(op: Operator, space: HilbertSpace) -> Operator:
    """Lift op, acting on a subset of the factors of space, to all of space (identity elsewhere)."""
    for label, dim in op.space.factors:
        if space.dim_of(label) != dim:
            raise DimensionMismatchError(f"Factor '{label}' has dimension {dim}, space has {space.dim_of(label)}")
    rest = HilbertSpace(tuple(f for f in space.factors if f[0] not in op.space.labels))
    lifted = tensor_product(op, identity(rest)) if rest.factors else op
    return permute_factors(lifted, space.labels)


# ---------------------------
# Spectral tools
# ---------------------------

def eig_hermitian(t: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> Tuple[np.ndarray, List[Ket]]:
    """Eigenvalues in descending order with orthonormal eigenvectors."""
    if not t.is_hermitian(policy):
        raise NotHermitianError(t.hermitian_defect())
    herm = (t.entries + t.entries.conj().T) / 2
    values, vectors = np.linalg.eigh(herm)
    order = np.argsort(values)[::-1]
    kets = [Ket(t.space, vectors[:, i]) for i in order]
    return values[order].astype(float), kets


def min_eigenvalue(t: Operator) -> float:
    herm = (t.entries + t.entries.conj().T) / 2
    return float(np.linalg.eigvalsh(herm)[0]) if t.dim else 0.0


def projector_onto_span(kets: Sequence[Ket], tol: float = DEFAULT_POLICY.rank_rtol,
                        space: Optional[HilbertSpace] = None) -> Operator:
    """Orthogonal projector onto span(kets); singular values <= tol do not count towards the rank.

    An empty list spans nothing and gives the zero operator, on `space` when it is passed and otherwise
    on the factorless one-dimensional space.
    """
    if not kets:
        return zero_operator(space if space is not None else HilbertSpace())
    space = kets[0].space
    for k in kets[1:]:
        _check_same_space(space, k.space)
    m = np.column_stack([k.amplitudes for k in kets])
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    basis = u[:, s > tol]
    return Operator(space, basis @ basis.conj().T)


def range_basis(p: Operator, tol: float = 0.5) -> List[Ket]:
    """Orthonormal basis of the range of a projector."""
    values, kets = eig_hermitian(p)
    return [k for v, k in zip(values, kets) if v > tol]


def rank(t: Operator, rtol: float = DEFAULT_POLICY.rank_rtol) -> int:
    s = np.linalg.svd(t.entries, compute_uv=False)
    if not s.size or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


