# ------------------------------------------------------------------
# Experiment pipeline: prepare, evolve, scan, reduce, sample, report
# ------------------------------------------------------------------

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from utils.exceptions import MeasurementError, PipelineError, ReductionNotTriggered
from utils.extent_functions import GridKinematics, extent
from utils.identical_functions import ParticleEnsemble
from utils.linalg_functions import DEFAULT_POLICY, Ket, NumericPolicy, Operator, partial_trace
from utils.reduction_functions import (
    BranchDeclaration,
    Meter,
    ObjectSystem,
    ReductionResult,
    StatusLossEvent,
    apply_reduction,
    branch_states,
    sample_outcome,
    status_loss_scan,
)
from utils.report_functions import RunReport
from utils.state_functions import StateOperator
from utils.tpov_functions import TPOVMeasure

logger = logging.getLogger(__name__)

STAGES = ("prepare", "evolve", "status-scan", "reduce", "sample", "report")


@dataclass(frozen=True, eq=False)
class BuiltExperiment:
    """Everything a run needs, already validated and in matrix form."""
    name: str
    coupling: Operator
    packet: Ket
    branches: BranchDeclaration
    coefficients: Tuple[complex, ...]
    meter: Meter
    tpov: TPOVMeasure
    prepared_state: StateOperator
    pointer_projectors: Dict[str, Operator]
    antisym: Optional[Operator] = None
    object_system: Optional[ObjectSystem] = None
    kinematics: Optional[GridKinematics] = None
    strip_projectors: Dict[str, Operator] = field(default_factory=dict)


@contextmanager
def stage(name: str) -> Iterator[None]:
    logger.debug(f"Stage '{name}' started")
    try:
        yield
    except PipelineError:
        raise
    except (MeasurementError, np.linalg.LinAlgError, MemoryError, FloatingPointError) as e:
        raise PipelineError(name, e) from e


def derive_seeds(master: int, runs: int) -> List[np.random.SeedSequence]:
    """Per-run seeds indexed by run number, independent of execution order."""
    return np.random.SeedSequence(master).spawn(runs)


def sample_outcomes(r: ReductionResult, runs: int, seed: int, progress: bool = True) -> List[str]:
    seeds = derive_seeds(seed, runs)
    return [sample_outcome(r, s)[0] for s in tqdm(seeds, desc="Sampling registrations", disable=not progress)]


def _expectation(t: StateOperator, p: Operator) -> float:
    return float(np.real(np.trace(t.entries @ p.entries)))


def _object_state(built: BuiltExperiment, t: StateOperator, policy: NumericPolicy) -> StateOperator:
    k = built.kinematics
    reduced = partial_trace(t.op, built.object_system.factor_labels)
    return StateOperator(Operator(k.space, reduced.entries), policy)


def run_pipeline(built: BuiltExperiment, runs: int, seed: int, progress: bool = True,
                 policy: NumericPolicy = DEFAULT_POLICY) -> RunReport:
    labels = list(built.branches.pointer_labels)

    with stage("prepare"):
        meter_state = built.meter.initial_state
        predicted = built.tpov.probabilities(built.prepared_state)
        logger.info(f"[{built.name}] TPOV prediction: "
                    + ", ".join(f"{l}={p:.6f}" for l, p in predicted.items()))

    with stage("evolve"):
        branch_map = branch_states(built.coupling, built.packet, built.branches, meter_state,
                                   built.antisym, policy)

    scanned: Dict[str, List[StatusLossEvent]] = {l: [] for l in labels}
    with stage("status-scan"):
        if built.kinematics is not None and built.object_system is not None:
            scanned = status_loss_scan(branch_map, built.meter.components, built.kinematics,
                                       built.object_system, policy)
            for label in labels:
                if bool(scanned[label]) != built.branches.loses_status(label):
                    logger.warning(f"Branch '{label}': declared status loss {built.branches.loses_status(label)}, "
                                   f"computed {bool(scanned[label])}")
        else:
            logger.info("No grid model for the object; using declared status-loss flags only")

    events = [e for label in labels for e in scanned[label]]
    with stage("reduce"):
        try:
            result: Optional[ReductionResult] = apply_reduction(built.coefficients, branch_map, built.branches,
                                                                events, policy)
        except ReductionNotTriggered as e:
            logger.warning(str(e))
            result = None

    with stage("sample"):
        samples = sample_outcomes(result, runs, seed, progress) if result is not None else []

    with stage("report"):
        counts = {l: samples.count(l) for l in labels}
        n = max(len(samples), 1)
        empirical = {l: counts[l] / n for l in labels}
        reduction_probs = {l: float(abs(c) ** 2) for l, c in zip(labels, built.coefficients)}
        pred = {l: float(predicted.get(l, 0.0)) for l in labels}
        max_dev = max(abs(empirical[l] - pred[l]) for l in labels) if samples else 0.0

        summaries = {}
        for label, t in branch_map.items():
            summary = {
                "trace": float(t.op.trace().real),
                "purity": t.purity,
                "pointer_masses": {p: _expectation(t, proj) for p, proj in built.pointer_projectors.items()},
            }
            if built.strip_projectors:
                summary["strip_masses"] = {s: _expectation(t, proj) for s, proj in built.strip_projectors.items()}
            summaries[label] = summary

        reduced_masses: Dict[str, float] = {}
        consistency = {"tpov_vs_reduction": max(abs(pred[l] - reduction_probs[l]) for l in labels)}
        if result is not None:
            reduced_masses = {p: _expectation(result.reduced_joint_state, proj)
                              for p, proj in built.pointer_projectors.items()}
            consistency["pointer_vs_reduction"] = max(abs(reduced_masses.get(l, 0.0) - reduction_probs[l])
                                                      for l in labels)

        boxes = {}
        if built.kinematics is not None and built.object_system is not None:
            k = built.kinematics
            single = ParticleEnsemble(built.object_system.particle_type, 1, k.space)
            for label, t in branch_map.items():
                box = extent(_object_state(built, t, policy), single, k, policy)
                boxes[f"object[{label}]"] = {**box.as_dict(), "units": "position: grid length; momentum: 1/length"}
            for c in built.meter.components:
                if c.status_ensemble is not None:
                    box = extent(*c.status_ensemble, k, policy)
                    boxes[c.name] = {**box.as_dict(), "units": "position: grid length; momentum: 1/length"}

        all_events = result.events if result is not None else tuple(events)
        tpov = built.tpov
        report = RunReport(
            experiment=built.name,
            seed=int(seed),
            runs=int(runs),
            outcomes=labels,
            predicted_probabilities=pred,
            reduction_probabilities=reduction_probs,
            empirical_frequencies=empirical,
            counts=counts,
            max_deviation=float(max_dev),
            consistency={k: float(v) for k, v in consistency.items()},
            branch_summaries=summaries,
            reduced_pointer_masses=reduced_masses,
            extent_boxes=boxes,
            status_events=[{"branch": e.branch, "component": e.component, "time": e.time_tag, "source": e.source}
                           for e in all_events],
            tpov={
                "outcomes": tpov.labels,
                "subspace_dim": tpov.subspace_dim,
                "space": str(tpov.space),
                "effect_traces": {l: float(tpov.effect(l).trace().real) for l in tpov.labels},
            },
            reduction_triggered=result is not None,
            samples=samples,
        )
    logger.info(f"[{built.name}] {runs} registrations, max |empirical - predicted| = {report.max_deviation:.4f}")
    return report
