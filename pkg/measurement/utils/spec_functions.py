# --------------------------------------------------------------
# Experiment documents: parsing, validation and serialization
# --------------------------------------------------------------

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

try:
    from yaml import CSafeLoader as Loader
except ImportError:
    from yaml import SafeLoader as Loader

from utils.exceptions import SpecValidationError
from utils.linalg_functions import DEFAULT_POLICY
from utils.reduction_functions import MeterRole

SCHEMA_VERSION = 1
PACKET_KINDS = ("gaussian", "amplitudes", "basis")
COUPLING_KINDS = ("stern-gerlach", "matrix")
ROLES = tuple(r.value for r in MeterRole)
DEFAULT_RUNS = 1000
MAX_JOINT_DIM = 4096
NORM_TOL = 1e-9


# ---------------------------
# Document model
# ---------------------------

@dataclass(frozen=True)
class FactorSpec:
    label: str
    dim: int


@dataclass(frozen=True)
class PacketSpec:
    kind: str
    center: Tuple[float, ...] = ()
    momentum_spread: Tuple[float, ...] = ()
    mean_momentum: Tuple[float, ...] = ()
    values: Tuple[complex, ...] = ()
    dim: int = 0
    index: int = 0
    label: str = "orbital"


@dataclass(frozen=True)
class ObjectSpec:
    particle_type: str
    packet: PacketSpec
    branch_factor: FactorSpec
    coefficients: Tuple[complex, ...]


@dataclass(frozen=True)
class BranchSpec:
    labels: Tuple[str, ...]
    kets: Tuple[Tuple[complex, ...], ...]
    status_loss: Tuple[bool, ...]


@dataclass(frozen=True)
class ThresholdSpec:
    E0: float
    mass: float


@dataclass(frozen=True)
class RegionSpec:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    role: str
    factors: Tuple[FactorSpec, ...]
    initial_state: Tuple[complex, ...]
    metastable_label: Optional[str] = None
    shares_particle_types: Tuple[str, ...] = ()
    threshold: Optional[ThresholdSpec] = None
    ensemble: Optional[RegionSpec] = None


@dataclass(frozen=True)
class CouplingSpec:
    kind: str
    strength: float = 0.0
    mass: float = 1.0
    times: Tuple[float, float] = (0.0, 0.0)
    dim: int = 0
    rows: Tuple[Tuple[complex, ...], ...] = ()


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    spacing: float = 1.0


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    object: ObjectSpec
    prepared: Tuple[Tuple[complex, ...], ...]
    branches: BranchSpec
    meter: Tuple[ComponentSpec, ...]
    coupling: CouplingSpec
    grid: Optional[GridSpec] = None
    runs: int = DEFAULT_RUNS
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    @property
    def packet_dim(self) -> int:
        p = self.object.packet
        if p.kind == "gaussian":
            return self.grid.n ** self.grid.d
        if p.kind == "amplitudes":
            return len(p.values)
        return p.dim

    @property
    def joint_dim(self) -> int:
        meter_dim = math.prod(f.dim for c in self.meter for f in c.factors)
        return self.packet_dim * self.object.branch_factor.dim * meter_dim


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


# ---------------------------
# Cell parsing
# ---------------------------

def parse_complex_cell(cell) -> complex:
    """Numbers, or complex literals such as '(0.5+0.5j)' / '0.5-1j'."""
    if isinstance(cell, bool) or cell is None:
        raise ValueError(f"not a number: {cell!r}")
    if isinstance(cell, (int, float)):
        try:
            return complex(cell)
        except OverflowError:
            raise ValueError("number out of range") from None
    s = str(cell).strip().replace(" ", "")
    if not s:
        raise ValueError("empty number")
    return complex(s)


def format_complex(value: complex):
    value = complex(value)
    if value.imag == 0:
        return float(value.real)
    return repr(value)


class _Checker:
    """Walks the raw document, collecting path-tagged diagnostics instead of stopping at the first problem."""

    def __init__(self):
        self.diagnostics: List[Diagnostic] = []

    def error(self, path: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(path, message))

    def mapping(self, node, path: str, required: Sequence[str], optional: Sequence[str] = ()) -> Optional[Dict]:
        if not isinstance(node, dict):
            self.error(path, f"expected a mapping, got {type(node).__name__}")
            return None
        for key in node:
            if key not in required and key not in optional:
                self.error(f"{path}.{key}" if path else str(key), "unknown key")
        ok = True
        for key in required:
            if key not in node:
                self.error(path or "<root>", f"missing required key '{key}'")
                ok = False
        return node if ok else None

    def string(self, node, path: str) -> Optional[str]:
        if not isinstance(node, str) or not node.strip():
            self.error(path, "expected a non-empty string")
            return None
        return node

    def integer(self, node, path: str, minimum: Optional[int] = None) -> Optional[int]:
        if isinstance(node, bool) or not isinstance(node, int):
            self.error(path, f"expected an integer, got {node!r}")
            return None
        if minimum is not None and node < minimum:
            self.error(path, f"must be at least {minimum}, got {node}")
            return None
        return node

    def real(self, node, path: str) -> Optional[float]:
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            self.error(path, f"expected a finite real number, got {node!r}")
            return None
        try:
            value = float(node)
        except OverflowError:
            self.error(path, "number out of range")
            return None
        if not math.isfinite(value):
            self.error(path, f"expected a finite real number, got {node!r}")
            return None
        return value

    def boolean(self, node, path: str) -> Optional[bool]:
        if not isinstance(node, bool):
            self.error(path, f"expected true or false, got {node!r}")
            return None
        return node

    def sequence(self, node, path: str) -> Optional[list]:
        if not isinstance(node, list):
            self.error(path, f"expected a list, got {type(node).__name__}")
            return None
        return node

    def complex_vector(self, node, path: str) -> Optional[Tuple[complex, ...]]:
        items = self.sequence(node, path)
        if items is None:
            return None
        out = []
        for i, cell in enumerate(items):
            try:
                value = parse_complex_cell(cell)
            except (ValueError, TypeError, OverflowError) as e:
                self.error(f"{path}[{i}]", str(e))
                return None
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                self.error(f"{path}[{i}]", "non-finite number")
                return None
            out.append(value)
        if not out:
            self.error(path, "empty vector")
            return None
        return tuple(out)

    def real_vector(self, node, path: str) -> Optional[Tuple[float, ...]]:
        items = self.sequence(node, path)
        if items is None:
            return None
        values = [self.real(v, f"{path}[{i}]") for i, v in enumerate(items)]
        return None if any(v is None for v in values) else tuple(values)

    def normalized(self, vec: Tuple[complex, ...], path: str) -> None:
        with np.errstate(over="ignore", invalid="ignore"):
            norm = float(np.linalg.norm(np.asarray(vec, dtype=np.complex128)))
        if not abs(norm - 1.0) <= NORM_TOL:
            self.error(path, f"vector is not normalized (norm {norm:.12g})")

    def factor(self, node, path: str) -> Optional[FactorSpec]:
        m = self.mapping(node, path, ["label", "dim"])
        if m is None:
            return None
        label = self.string(m["label"], f"{path}.label")
        dim = self.integer(m["dim"], f"{path}.dim", minimum=1)
        return None if label is None or dim is None else FactorSpec(label, dim)


# ---------------------------
# Section readers
# ---------------------------

def _read_grid(c: _Checker, node) -> Optional[GridSpec]:
    m = c.mapping(node, "grid", ["d", "n"], ["spacing"])
    if m is None:
        return None
    d = c.integer(m["d"], "grid.d", minimum=1)
    n = c.integer(m["n"], "grid.n", minimum=2)
    spacing = c.real(m.get("spacing", 1.0), "grid.spacing")
    if d is not None and d > 3:
        c.error("grid.d", f"spatial dimension must be 1, 2 or 3, got {d}")
        return None
    if n is not None and n & (n - 1):
        c.error("grid.n", f"grid points per axis must be a power of two, got {n}")
        return None
    if spacing is not None and spacing <= 0:
        c.error("grid.spacing", "must be positive")
        return None
    if None in (d, n, spacing):
        return None
    return GridSpec(d, n, spacing)


def _read_packet(c: _Checker, node, grid: Optional[GridSpec]) -> Optional[PacketSpec]:
    path = "object.packet"
    if not isinstance(node, dict) or node.get("kind") not in PACKET_KINDS:
        kind = node.get("kind") if isinstance(node, dict) else None
        c.error(f"{path}.kind", f"expected one of {', '.join(PACKET_KINDS)}, got {kind!r}")
        return None
    kind = node["kind"]
    if kind == "gaussian":
        m = c.mapping(node, path, ["kind", "center", "momentum_spread"], ["mean_momentum"])
        if m is None:
            return None
        if grid is None:
            c.error(path, "a gaussian packet needs a 'grid' section")
            return None
        center = c.real_vector(m["center"], f"{path}.center")
        spread = c.real_vector(m["momentum_spread"], f"{path}.momentum_spread")
        mean = c.real_vector(m.get("mean_momentum", [0.0] * grid.d), f"{path}.mean_momentum")
        if None in (center, spread, mean):
            return None
        for key, vec in (("center", center), ("momentum_spread", spread), ("mean_momentum", mean)):
            if len(vec) != grid.d:
                c.error(f"{path}.{key}", f"needs {grid.d} components, got {len(vec)}")
                return None
        if any(s <= 0 for s in spread):
            c.error(f"{path}.momentum_spread", "must be positive")
            return None
        return PacketSpec(kind, center=center, momentum_spread=spread, mean_momentum=mean)
    if kind == "amplitudes":
        m = c.mapping(node, path, ["kind", "values"], ["label"])
        if m is None:
            return None
        values = c.complex_vector(m["values"], f"{path}.values")
        label = c.string(m.get("label", "orbital"), f"{path}.label")
        if values is None or label is None:
            return None
        c.normalized(values, f"{path}.values")
        return PacketSpec(kind, values=values, label=label)
    m = c.mapping(node, path, ["kind", "dim", "index"], ["label"])
    if m is None:
        return None
    dim = c.integer(m["dim"], f"{path}.dim", minimum=1)
    index = c.integer(m["index"], f"{path}.index", minimum=0)
    label = c.string(m.get("label", "orbital"), f"{path}.label")
    if None in (dim, index, label):
        return None
    if index >= dim:
        c.error(f"{path}.index", f"index {index} out of range for dimension {dim}")
        return None
    return PacketSpec(kind, dim=dim, index=index, label=label)


def _read_object(c: _Checker, node, grid: Optional[GridSpec]) -> Optional[ObjectSpec]:
    m = c.mapping(node, "object", ["particle_type", "packet", "branch_factor", "coefficients"])
    if m is None:
        return None
    ptype = c.string(m["particle_type"], "object.particle_type")
    packet = _read_packet(c, m["packet"], grid)
    factor = c.factor(m["branch_factor"], "object.branch_factor")
    coeffs = c.complex_vector(m["coefficients"], "object.coefficients")
    if coeffs is not None:
        c.normalized(coeffs, "object.coefficients")
    if None in (ptype, packet, factor, coeffs):
        return None
    return ObjectSpec(ptype, packet, factor, coeffs)


def _read_branches(c: _Checker, node, obj: Optional[ObjectSpec]) -> Optional[BranchSpec]:
    m = c.mapping(node, "branches", ["labels", "kets", "status_loss"])
    if m is None:
        return None
    labels = c.sequence(m["labels"], "branches.labels")
    kets_raw = c.sequence(m["kets"], "branches.kets")
    loss_raw = c.sequence(m["status_loss"], "branches.status_loss")
    if None in (labels, kets_raw, loss_raw):
        return None
    labels = [c.string(l, f"branches.labels[{i}]") for i, l in enumerate(labels)]
    kets = [c.complex_vector(k, f"branches.kets[{i}]") for i, k in enumerate(kets_raw)]
    loss = [c.boolean(s, f"branches.status_loss[{i}]") for i, s in enumerate(loss_raw)]
    if any(v is None for v in labels + kets + loss):
        return None
    if not labels:
        c.error("branches.labels", "at least one branch is required")
        return None
    if len(set(labels)) != len(labels):
        c.error("branches.labels", f"labels must be unique: {labels}")
        return None
    if not len(labels) == len(kets) == len(loss):
        c.error("branches", "labels, kets and status_loss must have the same length")
        return None
    if obj is not None:
        dim = obj.branch_factor.dim
        for i, k in enumerate(kets):
            if len(k) != dim:
                c.error(f"branches.kets[{i}]", f"needs {dim} amplitudes for factor '{obj.branch_factor.label}'")
                return None
        with np.errstate(over="ignore", invalid="ignore"):
            gram = np.array([[np.vdot(a, b) for b in kets] for a in kets])
            defect = float(np.max(np.abs(gram - np.eye(len(kets)))))
        if not defect <= DEFAULT_POLICY.overlap_tol:
            c.error("branches.kets", f"branch kets are not orthonormal (Gram deviation {defect:.3e})")
        if len(obj.coefficients) != len(labels):
            c.error("object.coefficients", f"needs one coefficient per branch ({len(labels)})")
    return BranchSpec(tuple(labels), tuple(kets), tuple(loss))


def _read_component(c: _Checker, node, path: str, grid: Optional[GridSpec]) -> Optional[ComponentSpec]:
    m = c.mapping(node, path, ["name", "role", "factors", "initial_state"],
                  ["metastable_label", "shares_particle_types", "threshold", "ensemble"])
    if m is None:
        return None
    name = c.string(m["name"], f"{path}.name")
    role = m["role"]
    if role not in ROLES:
        c.error(f"{path}.role", f"expected one of {', '.join(ROLES)}, got {role!r}")
        role = None
    factors_raw = c.sequence(m["factors"], f"{path}.factors")
    factors = [c.factor(f, f"{path}.factors[{i}]") for i, f in enumerate(factors_raw or [])]
    if not factors:
        c.error(f"{path}.factors", "at least one factor is required")
    initial = c.complex_vector(m["initial_state"], f"{path}.initial_state")
    metastable = m.get("metastable_label")
    if metastable is not None:
        metastable = c.string(metastable, f"{path}.metastable_label")
    shares_raw = c.sequence(m.get("shares_particle_types", []), f"{path}.shares_particle_types") or []
    shares = tuple(s for s in (c.string(s, f"{path}.shares_particle_types[{i}]") for i, s in enumerate(shares_raw))
                   if s is not None)
    threshold = None
    if "threshold" in m:
        t = c.mapping(m["threshold"], f"{path}.threshold", ["E0", "mass"])
        if t is not None:
            e0, mass = c.real(t["E0"], f"{path}.threshold.E0"), c.real(t["mass"], f"{path}.threshold.mass")
            if e0 is not None and e0 < 0:
                c.error(f"{path}.threshold.E0", "must be non-negative")
            elif mass is not None and mass <= 0:
                c.error(f"{path}.threshold.mass", "must be positive")
            elif e0 is not None and mass is not None:
                threshold = ThresholdSpec(e0, mass)
    ensemble = None
    if "ensemble" in m:
        r = c.mapping(m["ensemble"], f"{path}.ensemble", ["lower", "upper"])
        if grid is None:
            c.error(f"{path}.ensemble", "a particle ensemble needs a 'grid' section")
        elif r is not None:
            lower, upper = c.real_vector(r["lower"], f"{path}.ensemble.lower"), c.real_vector(r["upper"], f"{path}.ensemble.upper")
            if lower is not None and upper is not None:
                if len(lower) != grid.d or len(upper) != grid.d:
                    c.error(f"{path}.ensemble", f"bounds need {grid.d} components")
                elif any(lo >= hi for lo, hi in zip(lower, upper)):
                    c.error(f"{path}.ensemble", "lower bounds must be below upper bounds")
                else:
                    ensemble = RegionSpec(lower, upper)
    if None in (name, role, initial) or any(f is None for f in factors) or not factors:
        return None
    dim = math.prod(f.dim for f in factors)
    if len(initial) != dim:
        c.error(f"{path}.initial_state", f"needs {dim} amplitudes, got {len(initial)}")
        return None
    c.normalized(initial, f"{path}.initial_state")
    return ComponentSpec(name, role, tuple(factors), initial, metastable, shares, threshold, ensemble)


def _read_meter(c: _Checker, node, grid: Optional[GridSpec]) -> Optional[Tuple[ComponentSpec, ...]]:
    items = c.sequence(node, "meter")
    if items is None:
        return None
    if not items:
        c.error("meter", "a meter needs at least one component")
        return None
    components = [_read_component(c, item, f"meter[{i}]", grid) for i, item in enumerate(items)]
    if any(comp is None for comp in components):
        return None
    names = [comp.name for comp in components]
    if len(set(names)) != len(names):
        c.error("meter", f"component names must be unique: {names}")
    detectors = [(i, comp) for i, comp in enumerate(components) if comp.role == MeterRole.DETECTOR.value]
    if not detectors:
        c.error("meter", "meter violates Pointer Hypothesis: no detector_active_volume component")
    for i, comp in detectors:
        if not comp.metastable_label:
            c.error(f"meter[{i}].metastable_label", "detector components need a metastable initial state label")
    return tuple(components)


def _read_coupling(c: _Checker, node) -> Optional[CouplingSpec]:
    kind = node.get("kind") if isinstance(node, dict) else None
    if kind not in COUPLING_KINDS:
        c.error("coupling.kind", f"expected one of {', '.join(COUPLING_KINDS)}, got {kind!r}")
        return None
    if kind == "stern-gerlach":
        m = c.mapping(node, "coupling", ["kind", "strength", "times"], ["mass"])
        if m is None:
            return None
        strength = c.real(m["strength"], "coupling.strength")
        mass = c.real(m.get("mass", 1.0), "coupling.mass")
        times = c.real_vector(m["times"], "coupling.times")
        if None in (strength, mass, times):
            return None
        if mass <= 0:
            c.error("coupling.mass", "must be positive")
            return None
        if len(times) != 2 or times[1] <= times[0]:
            c.error("coupling.times", "expected [t1, t2] with t2 > t1")
            return None
        return CouplingSpec(kind, strength=strength, mass=mass, times=(times[0], times[1]))
    m = c.mapping(node, "coupling", ["kind", "dim", "rows"])
    if m is None:
        return None
    dim = c.integer(m["dim"], "coupling.dim", minimum=1)
    rows_raw = c.sequence(m["rows"], "coupling.rows")
    if dim is None or rows_raw is None:
        return None
    rows = [c.complex_vector(r, f"coupling.rows[{i}]") for i, r in enumerate(rows_raw)]
    if any(r is None for r in rows):
        return None
    if len(rows) != dim or any(len(r) != dim for r in rows):
        c.error("coupling.rows", f"expected a {dim} x {dim} matrix")
        return None
    u = np.array(rows, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(dim))))
    if not defect <= DEFAULT_POLICY.hermitian_tol:
        c.error("coupling.rows", f"matrix is not unitary (|U^dag U - 1| = {defect:.3e})")
        return None
    return CouplingSpec(kind, dim=dim, rows=tuple(tuple(r) for r in rows))


def _cross_checks(c: _Checker, spec: ExperimentSpec) -> None:
    if spec.joint_dim > MAX_JOINT_DIM:
        path = "grid.n" if spec.object.packet.kind == "gaussian" else "<document>"
        c.error(path, f"joint space dimension {spec.joint_dim} exceeds the limit of {MAX_JOINT_DIM}")
        return
    labels = []
    p = spec.object.packet
    labels += ["x", "y", "z"][:spec.grid.d] if p.kind == "gaussian" else [p.label]
    labels.append(spec.object.branch_factor.label)
    labels += [f.label for comp in spec.meter for f in comp.factors]
    dup = sorted({l for l in labels if labels.count(l) > 1})
    if dup:
        c.error("meter", f"factor labels collide: {', '.join(dup)}")
    for i, vec in enumerate(spec.prepared):
        if len(vec) != len(spec.branches.labels):
            c.error(f"prepared[{i}]", f"needs one coefficient per branch ({len(spec.branches.labels)})")
        else:
            c.normalized(vec, f"prepared[{i}]")
    if spec.coupling.kind == "matrix" and spec.coupling.dim != spec.joint_dim:
        c.error("coupling.dim", f"coupling dimension {spec.coupling.dim} does not match the joint space "
                                f"dimension {spec.joint_dim}")
    if spec.coupling.kind == "stern-gerlach":
        if p.kind != "gaussian" or spec.grid.d != 1:
            c.error("object.packet", "the stern-gerlach coupling needs a 1D gaussian packet")
        if spec.object.branch_factor.dim != 2 or len(spec.branches.labels) != 2:
            c.error("object.branch_factor", "the stern-gerlach coupling needs a two-level spin factor and two branches")
        elif not np.allclose(np.array(spec.branches.kets), np.eye(2)):
            c.error("branches.kets", "the stern-gerlach branches are the spin basis [[1, 0], [0, 1]]")
        detectors = [comp for comp in spec.meter if comp.role == MeterRole.DETECTOR.value]
        if len(spec.meter) != 1 or len(detectors) != 1:
            c.error("meter", "the stern-gerlach coupling needs a meter with exactly one detector (the film)")
        else:
            film = detectors[0]
            if len(film.factors) != 1 or film.factors[0].dim != 3:
                c.error("meter[0].factors", "the film pointer needs one factor of dimension 3 (idle, strip+, strip-)")
            if film.threshold is None or film.ensemble is None:
                c.error("meter[0]", "the film needs a threshold and an ensemble region")
            elif film.threshold.mass != spec.coupling.mass:
                c.error("meter[0].threshold.mass", "must equal the coupling mass of the deflected particles")
    for i, comp in enumerate(spec.meter):
        if spec.object.particle_type in comp.shares_particle_types and comp.ensemble is None \
                and comp.role == MeterRole.DETECTOR.value and spec.grid is not None:
            c.error(f"meter[{i}].ensemble", f"detector sharing '{spec.object.particle_type}' particles "
                                            "needs an ensemble region for the status scan")


# ---------------------------
# Public API
# ---------------------------

TOP_LEVEL_REQUIRED = ("schema_version", "name", "object", "branches", "meter", "coupling")
TOP_LEVEL_OPTIONAL = ("prepared", "grid", "run")


def _load(text: str, c: _Checker):
    try:
        return yaml.load(text, Loader=Loader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "<document>"
        c.error(where, f"syntax error: {e.problem}")
    except yaml.YAMLError as e:
        c.error("<document>", f"syntax error: {e}")
    except (ValueError, OverflowError, RecursionError) as e:
        # integer literals past the digit limit and impossible timestamps raise ValueError
        c.error("<document>", f"unreadable document: {type(e).__name__}")
    return None


def _read_document(text: str) -> Tuple[Optional[ExperimentSpec], List[Diagnostic]]:
    c = _Checker()
    raw = _load(text, c)
    if c.diagnostics:
        return None, c.diagnostics
    root = c.mapping(raw, "", TOP_LEVEL_REQUIRED, TOP_LEVEL_OPTIONAL)
    if root is None:
        return None, c.diagnostics
    version = c.integer(root["schema_version"], "schema_version")
    if version is not None and version != SCHEMA_VERSION:
        c.error("schema_version", f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    name = c.string(root["name"], "name")
    grid = _read_grid(c, root["grid"]) if "grid" in root else None
    obj = _read_object(c, root["object"], grid)
    branches = _read_branches(c, root["branches"], obj)
    meter = _read_meter(c, root["meter"], grid)
    coupling = _read_coupling(c, root["coupling"])
    prepared = None
    if "prepared" in root:
        items = c.sequence(root["prepared"], "prepared")
        if items is not None:
            vecs = [c.complex_vector(v, f"prepared[{i}]") for i, v in enumerate(items)]
            if not vecs:
                c.error("prepared", "at least one prepared state is required")
            elif all(v is not None for v in vecs):
                prepared = tuple(vecs)
    elif obj is not None:
        prepared = (obj.coefficients,)
    runs, seed = DEFAULT_RUNS, 0
    if "run" in root:
        r = c.mapping(root["run"], "run", [], ["runs", "seed"])
        if r is not None:
            runs = c.integer(r.get("runs", DEFAULT_RUNS), "run.runs", minimum=1)
            seed = c.integer(r.get("seed", 0), "run.seed", minimum=0)
    if c.diagnostics or None in (name, obj, branches, meter, coupling, prepared, runs, seed):
        return None, c.diagnostics
    spec = ExperimentSpec(name, obj, prepared, branches, meter, coupling, grid, runs, seed, version)
    _cross_checks(c, spec)
    if c.diagnostics:
        return None, c.diagnostics
    return spec, []


def check_spec(text: str) -> List[Diagnostic]:
    """All diagnostics for a document; empty when it is valid."""
    return _read_document(text)[1]


def parse_spec(text: str) -> ExperimentSpec:
    spec, diagnostics = _read_document(text)
    if diagnostics:
        raise SpecValidationError(diagnostics)
    return spec


def spec_to_document(spec: ExperimentSpec) -> Dict[str, Any]:
    def vec(values):
        return [format_complex(v) for v in values]

    def factor(f: FactorSpec):
        return {"label": f.label, "dim": f.dim}

    p = spec.object.packet
    if p.kind == "gaussian":
        packet = {"kind": p.kind, "center": list(p.center), "momentum_spread": list(p.momentum_spread),
                  "mean_momentum": list(p.mean_momentum)}
    elif p.kind == "amplitudes":
        packet = {"kind": p.kind, "values": vec(p.values), "label": p.label}
    else:
        packet = {"kind": p.kind, "dim": p.dim, "index": p.index, "label": p.label}

    meter = []
    for comp in spec.meter:
        item: Dict[str, Any] = {
            "name": comp.name,
            "role": comp.role,
            "factors": [factor(f) for f in comp.factors],
            "initial_state": vec(comp.initial_state),
            "shares_particle_types": list(comp.shares_particle_types),
        }
        if comp.metastable_label:
            item["metastable_label"] = comp.metastable_label
        if comp.threshold is not None:
            item["threshold"] = {"E0": comp.threshold.E0, "mass": comp.threshold.mass}
        if comp.ensemble is not None:
            item["ensemble"] = {"lower": list(comp.ensemble.lower), "upper": list(comp.ensemble.upper)}
        meter.append(item)

    cp = spec.coupling
    if cp.kind == "stern-gerlach":
        coupling = {"kind": cp.kind, "strength": cp.strength, "mass": cp.mass, "times": list(cp.times)}
    else:
        coupling = {"kind": cp.kind, "dim": cp.dim, "rows": [vec(r) for r in cp.rows]}

    doc: Dict[str, Any] = {
        "schema_version": spec.schema_version,
        "name": spec.name,
        "object": {
            "particle_type": spec.object.particle_type,
            "packet": packet,
            "branch_factor": factor(spec.object.branch_factor),
            "coefficients": vec(spec.object.coefficients),
        },
        "prepared": [vec(v) for v in spec.prepared],
        "branches": {
            "labels": list(spec.branches.labels),
            "kets": [vec(k) for k in spec.branches.kets],
            "status_loss": list(spec.branches.status_loss),
        },
        "meter": meter,
        "coupling": coupling,
        "run": {"runs": spec.runs, "seed": spec.seed},
    }
    if spec.grid is not None:
        doc["grid"] = {"d": spec.grid.d, "n": spec.grid.n, "spacing": spec.grid.spacing}
    return doc


def serialize_spec(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec_to_document(spec), sort_keys=False, default_flow_style=None)
