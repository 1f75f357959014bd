from dataclasses import replace

import numpy as np
import pytest

from utils.exceptions import CouplingTooWeakError, InvalidStateError
from utils.reduction_functions import apply_reduction, branch_states
from utils.stern_gerlach_functions import (
    build_sg_experiment,
    joint_space,
    prepared_state,
    run_sg,
    sg_tpov,
    strip_masses,
    strip_packets,
    validate_sg_spec,
)

WEIGHTS = (0.3, 0.7)


@pytest.fixture(scope="module")
def branch_map(sg_built):
    return branch_states(sg_built.coupling, sg_built.packet, sg_built.branches, sg_built.meter.initial_state)


@pytest.fixture(scope="module")
def skewed(sg_spec):
    return replace(sg_spec, spin_coeffs=tuple(np.sqrt(WEIGHTS)))


def test_joint_space_layout(sg_spec):
    assert joint_space(sg_spec).labels == ["x", "spin", "film"]
    assert joint_space(sg_spec).total_dim == 128 * 2 * 3


def test_coupling_is_unitary(sg_built):
    assert sg_built.coupling.unitarity_defect() < 1e-10


def test_strips_are_far_apart(sg_spec):
    strips = strip_packets(sg_spec)
    x = sg_spec.kinematics.position_ops[0]
    assert x.expectation(strips["+"]).real == pytest.approx(32.0, abs=1e-3)
    assert x.expectation(strips["-"]).real == pytest.approx(-32.0, abs=1e-3)


def test_branches_land_on_their_strip(sg_spec, branch_map):
    assert strip_masses(branch_map["+"], sg_spec)["+"] > 0.99
    assert strip_masses(branch_map["-"], sg_spec)["-"] > 0.99


def test_branches_do_not_overlap(branch_map):
    assert np.trace(branch_map["+"].entries @ branch_map["-"].entries).real < 1e-6


def test_tpov_has_two_effects_on_a_plane(sg_spec):
    tpov = sg_tpov(sg_spec)
    assert tpov.labels == ["+", "-"]
    assert tpov.subspace_dim == 2


def test_state_off_the_packet_is_annihilated(sg_spec):
    displaced = replace(sg_spec, packet_center=-40.0)
    probs = sg_tpov(sg_spec).probabilities(prepared_state(displaced))
    assert all(p < 1e-6 for p in probs.values())


def test_three_probabilities_agree(skewed):
    built = build_sg_experiment(skewed)
    branch_map = branch_states(built.coupling, built.packet, built.branches, built.meter.initial_state)
    r = apply_reduction(built.coefficients, branch_map, built.branches)
    tpov = built.tpov.probabilities(built.prepared_state)
    for label, w in zip(built.branches.pointer_labels, WEIGHTS):
        pointer = np.trace(r.reduced_joint_state.entries @ built.pointer_projectors[label].entries).real
        assert r.coefficients[label] == pytest.approx(w, abs=1e-8)
        assert tpov[label] == pytest.approx(w, abs=1e-8)
        assert pointer == pytest.approx(w, abs=1e-8)
        assert strip_masses(r.reduced_joint_state, skewed)[label] == pytest.approx(w, abs=1e-8)


def test_zero_coupling_is_too_weak(sg_spec):
    with pytest.raises(CouplingTooWeakError):
        validate_sg_spec(replace(sg_spec, coupling_strength=0.0))


def test_unnormalized_coefficients_rejected(sg_spec):
    with pytest.raises(InvalidStateError):
        validate_sg_spec(replace(sg_spec, spin_coeffs=(1.0, 1.0)))


def test_run_frequencies(sg_spec):
    runs = 10_000
    report = run_sg(sg_spec, runs=runs, seed=42, progress=False)
    assert report.reduction_triggered
    for label in ("+", "-"):
        assert abs(report.empirical_frequencies[label] - 0.5) < 3 * np.sqrt(0.25 / runs)
        assert report.branch_summaries[label]["strip_masses"][label] > 0.99
    assert report.consistency["tpov_vs_reduction"] < 1e-8
    assert report.consistency["pointer_vs_reduction"] < 1e-8
    scanned = {e["branch"] for e in report.status_events if e["source"] == "scan"}
    assert scanned == {"+", "-"}


def test_run_is_reproducible(sg_spec):
    a = run_sg(sg_spec, runs=300, seed=5, progress=False)
    b = run_sg(sg_spec, runs=300, seed=5, progress=False)
    assert a.samples == b.samples


def test_scanned_events_do_not_override_declared_flags(sg_spec):
    report = run_sg(replace(sg_spec, status_loss=(False, False)), runs=10, seed=1, progress=False)
    assert not report.reduction_triggered
    assert report.samples == []
    assert sum(report.counts.values()) == 0
    sources = {e["source"] for e in report.status_events}
    assert sources == {"scan"}
