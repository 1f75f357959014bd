# -----------------------------------------------------------------
# From experiment documents to runs: build, run, sweep and presets
# -----------------------------------------------------------------

import logging
import os
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from utils.extent_functions import EnergyThreshold, GridKinematics, gaussian_packet, uniform_region_state
from utils.identical_functions import ParticleEnsemble
from utils.io_functions import read_text
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
    tensor_product,
)
from utils.pipeline_functions import BuiltExperiment, run_pipeline, stage
from utils.reduction_functions import BranchDeclaration, Meter, MeterComponent, MeterRole, ObjectSystem
from utils.report_functions import RunReport
from utils.spec_functions import ExperimentSpec, format_complex, parse_spec
from utils.state_functions import pure_state
from utils.stern_gerlach_functions import SternGerlachSpec, build_sg_experiment
from utils.tpov_functions import PreparedEnsemble, minimal_support_subspace, truncate_pov

logger = logging.getLogger(__name__)

PRESET_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")


# ---------------------------
# Presets
# ---------------------------

def list_presets() -> List[str]:
    if not os.path.isdir(PRESET_DIR):
        return []
    return sorted(f[:-5] for f in os.listdir(PRESET_DIR) if f.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = os.path.join(PRESET_DIR, f"{name}.yaml")
    if not os.path.isfile(path):
        raise KeyError(f"Unknown preset '{name}' (available: {', '.join(list_presets())})")
    return read_text(path)


def load_preset(name: str) -> ExperimentSpec:
    return parse_spec(preset_text(name))


# ---------------------------
# Building
# ---------------------------

def sg_spec_from(spec: ExperimentSpec) -> SternGerlachSpec:
    p = spec.object.packet
    film = spec.meter[0]
    return SternGerlachSpec(
        packet_center=p.center[0],
        mean_momentum=p.mean_momentum[0],
        momentum_spread=p.momentum_spread[0],
        spin_coeffs=tuple(spec.object.coefficients),
        grid_n=spec.grid.n,
        spacing=spec.grid.spacing,
        coupling_strength=spec.coupling.strength,
        mass=spec.coupling.mass,
        times=spec.coupling.times,
        film_region=(film.ensemble.lower[0], film.ensemble.upper[0]),
        film_E0=film.threshold.E0,
        particle_type=spec.object.particle_type,
        name=spec.name,
        labels=tuple(spec.branches.labels),
        status_loss=tuple(spec.branches.status_loss),
        prepared=spec.prepared,
    )


def _component(c, k: Optional[GridKinematics], particle_type: str) -> MeterComponent:
    space = HilbertSpace(tuple((f.label, f.dim) for f in c.factors))
    ensemble = None
    if c.ensemble is not None and k is not None:
        ensemble = (uniform_region_state(k, c.ensemble.lower, c.ensemble.upper),
                    ParticleEnsemble(particle_type, 1, k.space))
    return MeterComponent(
        name=c.name,
        role=MeterRole(c.role),
        space=space,
        initial_state=pure_state(Ket(space, np.asarray(c.initial_state))),
        shares_particle_types=c.shares_particle_types,
        metastable_label=c.metastable_label,
        threshold=EnergyThreshold(c.threshold.E0, c.threshold.mass) if c.threshold is not None else None,
        status_ensemble=ensemble,
    )


def build_matrix_experiment(spec: ExperimentSpec, policy: NumericPolicy = DEFAULT_POLICY) -> BuiltExperiment:
    """Explicit coupling matrix on packet (x) branch factor (x) meter factors."""
    p = spec.object.packet
    k = GridKinematics(spec.grid.d, spec.grid.n, spec.grid.spacing) if spec.grid is not None else None
    if p.kind == "gaussian":
        packet = gaussian_packet(k, p.center, [1.0 / (2.0 * s) for s in p.momentum_spread], p.mean_momentum)
    elif p.kind == "amplitudes":
        packet = Ket(HilbertSpace.of((p.label, len(p.values))), np.asarray(p.values))
    else:
        packet = basis_ket(HilbertSpace.of((p.label, p.dim)), p.index)

    bf = spec.object.branch_factor
    branch_space = HilbertSpace.of((bf.label, bf.dim))
    kets = [Ket(branch_space, np.asarray(v)) for v in spec.branches.kets]
    branches = BranchDeclaration(spec.branches.labels, kets, spec.branches.status_loss, policy)
    meter = Meter([_component(c, k, spec.object.particle_type) for c in spec.meter])
    obj_space = packet.space.concat(branch_space)
    joint = obj_space.concat(meter.space)
    u = Operator(joint, np.array(spec.coupling.rows, dtype=np.complex128))

    def object_ket(coeffs) -> Ket:
        spin = sum((kt * c for kt, c in zip(kets, coeffs)), Ket(branch_space, np.zeros(bf.dim)))
        return tensor_product(packet, spin)

    effects = [(label, tensor_product(identity(packet.space), kt.dyad()))
               for label, kt in zip(branches.pointer_labels, kets)]
    rest = np.eye(obj_space.total_dim) - sum(e.entries for _, e in effects)
    if np.max(np.abs(rest)) > policy.completeness_tol:
        # branch kets do not span the factor: the remainder is the "no registration" outcome
        effects.append(("none", Operator(obj_space, rest)))
    prepared = PreparedEnsemble([pure_state(object_ket(v), policy) for v in spec.prepared])
    tpov = truncate_pov(POVMeasure(effects, policy), minimal_support_subspace(prepared), policy)

    pointer = {label: embed_operator(kt.dyad(), joint) for label, kt in zip(branches.pointer_labels, kets)}
    on_grid = k is not None and p.kind == "gaussian"
    return BuiltExperiment(
        name=spec.name,
        coupling=u,
        packet=packet,
        branches=branches,
        coefficients=tuple(spec.object.coefficients),
        meter=meter,
        tpov=tpov,
        prepared_state=pure_state(object_ket(spec.object.coefficients), policy),
        pointer_projectors=pointer,
        object_system=ObjectSystem(spec.object.particle_type, tuple(k.axes)) if on_grid else None,
        kinematics=k if on_grid else None,
    )


def build_experiment(spec: ExperimentSpec, policy: NumericPolicy = DEFAULT_POLICY) -> BuiltExperiment:
    with stage("prepare"):
        if spec.coupling.kind == "stern-gerlach":
            return build_sg_experiment(sg_spec_from(spec), policy)
        return build_matrix_experiment(spec, policy)


# ---------------------------
# Running
# ---------------------------

def run_experiment(spec: ExperimentSpec, runs: Optional[int] = None, seed: Optional[int] = None,
                   progress: bool = True, policy: NumericPolicy = DEFAULT_POLICY) -> RunReport:
    runs = spec.runs if runs is None else runs
    seed = spec.seed if seed is None else seed
    logger.info(f"Running '{spec.name}': {runs} registrations, seed {seed}")
    return run_pipeline(build_experiment(spec, policy), runs, seed, progress, policy)


def run_sweep(spec: ExperimentSpec, coefficient_sets: Sequence[Sequence[complex]], runs: Optional[int] = None,
              seed: Optional[int] = None, progress: bool = True,
              policy: NumericPolicy = DEFAULT_POLICY) -> pd.DataFrame:
    """One run per coefficient vector; sweep points get their own seeds derived from the master seed."""
    seed = spec.seed if seed is None else seed
    point_seeds = np.random.SeedSequence(seed).spawn(len(coefficient_sets))
    # every sweep point is a preparation of the same experiment
    prepared = tuple(tuple(complex(c) for c in coeffs) for coeffs in coefficient_sets)
    rows = []
    for i, coeffs in enumerate(tqdm(coefficient_sets, desc="Sweep points", disable=not progress)):
        point = replace(spec, object=replace(spec.object, coefficients=prepared[i]), prepared=prepared)
        point_seed = int(point_seeds[i].generate_state(1)[0])
        report = run_experiment(point, runs, point_seed, progress=False, policy=policy)
        row = {"point": i, "seed": point_seed,
               "coefficients": ", ".join(str(format_complex(c)) for c in point.object.coefficients)}
        for label in report.outcomes:
            row[f"predicted[{label}]"] = report.predicted_probabilities[label]
            row[f"empirical[{label}]"] = report.empirical_frequencies[label]
        rows.append(row)
    return pd.DataFrame(rows)
