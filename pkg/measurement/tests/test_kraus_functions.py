import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import repeat
from utils.exceptions import CompletenessError, DimensionMismatchError, ImpossibleOutcomeError, PositivityError
from utils.kraus_functions import (
    POVMeasure,
    StateTransformer,
    apply_transformer,
    conditional_state,
    induced_pov,
    projective_transformer,
    random_transformer,
    unconditional_consistency,
    unconditional_mixture,
    unconditional_state,
    transformers_equivalent,
)
from utils.linalg_functions import HilbertSpace, Ket, Operator, basis_ket, identity
from utils.state_functions import pure_state, random_state

CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)


def test_pov_probabilities(qubit, plus_ket):
    z0, z1 = basis_ket(qubit, 0).dyad(), basis_ket(qubit, 1).dyad()
    pov = POVMeasure([("0", z0), ("1", z1)])
    probs = pov.probabilities(pure_state(plus_ket))
    assert probs == pytest.approx({"0": 0.5, "1": 0.5})


def test_pov_rejects_incomplete(qubit):
    with pytest.raises(CompletenessError):
        POVMeasure([("0", basis_ket(qubit, 0).dyad())])


def test_pov_rejects_negative_effect(qubit):
    with pytest.raises(PositivityError):
        POVMeasure([("a", Operator(qubit, np.diag([1.5, 1.0]))), ("b", Operator(qubit, np.diag([-0.5, 0.0])))])


def test_pov_rejects_duplicate_labels(qubit):
    half = identity(qubit) * 0.5
    with pytest.raises(DimensionMismatchError):
        POVMeasure([("a", half), ("a", half)])


def test_transformer_rejects_incomplete(qubit):
    with pytest.raises(CompletenessError):
        StateTransformer([("0", [basis_ket(qubit, 0).dyad()])])


def test_apply_transformer_returns_unnormalized_branch(qubit, plus_ket):
    t = projective_transformer([basis_ket(qubit, 0), basis_ket(qubit, 1)], ["0", "1"])
    out, prob = apply_transformer(t, "0", pure_state(plus_ket))
    assert prob == pytest.approx(0.5)
    assert_allclose(out.entries, np.diag([0.5, 0]), atol=1e-12)


def test_projective_conditional_states(qubit, plus_ket):
    t = projective_transformer([basis_ket(qubit, 0), basis_ket(qubit, 1)], ["0", "1"])
    out = conditional_state(t, "1", pure_state(plus_ket))
    assert_allclose(out.entries, np.diag([0, 1]), atol=1e-12)


def test_impossible_outcome(qubit):
    t = projective_transformer([basis_ket(qubit, 0), basis_ket(qubit, 1)], ["0", "1"])
    with pytest.raises(ImpossibleOutcomeError):
        conditional_state(t, "1", pure_state(basis_ket(qubit, 0)))


def test_unconditional_mixture_drops_impossible(qubit):
    t = projective_transformer([basis_ket(qubit, 0), basis_ket(qubit, 1)], ["0", "1"])
    m = unconditional_mixture(t, pure_state(basis_ket(qubit, 0)))
    assert m.labels == ["0"]
    assert m.probabilities == pytest.approx([1.0])


def test_unconditional_state_dephases(qubit, plus_ket):
    t = projective_transformer([basis_ket(qubit, 0), basis_ket(qubit, 1)], ["0", "1"])
    assert_allclose(unconditional_state(t, pure_state(plus_ket)).entries, np.eye(2) / 2, atol=1e-12)


@repeat(10)
def test_random_transformer_induces_pov(seed):
    rng = np.random.default_rng(seed)
    space = HilbertSpace.of(("s", 3))
    t = random_transformer(space, 3, 2, rng)
    pov = induced_pov(t)
    state = random_state(space, rng)
    probs = pov.probabilities(state)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-10)
    assert all(p >= -1e-12 for p in probs.values())


def test_transformer_equivalence_up_to_kraus_mixing(qubit):
    # {|0><0|, |1><1|} and the rotated pair ((|0><0| +- |1><1|) / sqrt 2) give the same single outcome
    z0, z1 = basis_ket(qubit, 0).dyad(), basis_ket(qubit, 1).dyad()
    a = StateTransformer([("r", [z0, z1])])
    b = StateTransformer([("r", [(z0 + z1) * (1 / np.sqrt(2)), (z0 - z1) * (1 / np.sqrt(2))])])
    assert transformers_equivalent(a, b)
    c = StateTransformer([("r", [identity(qubit)])])
    assert not transformers_equivalent(a, c)


def test_cnot_readout_consistency(two_qubits):
    s = HilbertSpace.of(("a", 2))
    m = HilbertSpace.of(("b", 2))
    t_s = pure_state(Ket(s, np.array([np.sqrt(0.3), np.sqrt(0.7)])))
    t_m = pure_state(basis_ket(m, 0))
    t = projective_transformer([basis_ket(s, 0), basis_ket(s, 1)], ["0", "1"])
    u = Operator(two_qubits, CNOT)
    assert unconditional_consistency(u, t_s, t_m, t) < 1e-10


def test_cnot_mismatched_transformer_detected(two_qubits):
    s = HilbertSpace.of(("a", 2))
    m = HilbertSpace.of(("b", 2))
    t_s = pure_state(Ket(s, np.array([1.0, 1.0]) / np.sqrt(2)))
    t_m = pure_state(basis_ket(m, 0))
    identity_transformer = StateTransformer([("id", [identity(s)])])
    u = Operator(two_qubits, CNOT)
    assert unconditional_consistency(u, t_s, t_m, identity_transformer) > 0.1
