import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.exceptions import InvalidStateError, NotNormalizedError
from utils.linalg_functions import HilbertSpace, Ket, Operator, basis_ket
from utils.state_functions import (
    MixtureBranch,
    ProperMixture,
    StateOperator,
    average_state,
    maximally_mixed,
    overlap,
    pure_state,
    random_state,
    validate_state,
)


def test_pure_state_is_projector(plus_ket):
    t = pure_state(plus_ket)
    assert_allclose(t.entries, np.full((2, 2), 0.5), atol=1e-12)
    assert t.purity == pytest.approx(1.0)


def test_pure_state_needs_unit_norm(qubit):
    with pytest.raises(NotNormalizedError):
        pure_state(Ket(qubit, [1.0, 1.0]))


def test_maximally_mixed(qubit):
    t = maximally_mixed(qubit)
    assert t.purity == pytest.approx(0.5)


def test_validate_reports_trace(qubit):
    diagnostics = validate_state(Operator(qubit, np.diag([0.5, 0.6])))
    assert [d.invariant for d in diagnostics] == ["trace"]


def test_validate_reports_positivity(qubit):
    diagnostics = validate_state(Operator(qubit, np.diag([1.5, -0.5])))
    assert [d.invariant for d in diagnostics] == ["positivity"]
    assert diagnostics[0].magnitude == pytest.approx(-0.5)


def test_validate_reports_hermiticity(qubit):
    diagnostics = validate_state(Operator(qubit, [[0.5, 1.0], [0.0, 0.5]]))
    assert diagnostics[0].invariant == "hermiticity"


def test_constructor_rejects_invalid(qubit):
    with pytest.raises(InvalidStateError, match="positivity"):
        StateOperator(Operator(qubit, np.diag([1.5, -0.5])))


def test_validate_accepts_state(qubit):
    assert isinstance(validate_state(Operator(qubit, np.diag([0.25, 0.75]))), StateOperator)


def test_random_state_rank(rng):
    space = HilbertSpace.of(("s", 4))
    t = random_state(space, rng, rank=1)
    assert t.purity == pytest.approx(1.0)


def test_overlap_of_orthogonal_states(qubit):
    a, b = pure_state(basis_ket(qubit, 0)), pure_state(basis_ket(qubit, 1))
    assert overlap(a, b) == pytest.approx(0.0)
    assert overlap(a, a) == pytest.approx(1.0)


def test_proper_mixture_average(qubit):
    up, down = pure_state(basis_ket(qubit, 0)), pure_state(basis_ket(qubit, 1))
    m = ProperMixture([MixtureBranch(0.3, up, "up"), MixtureBranch(0.7, down, "down")])
    assert m.labels == ["up", "down"]
    assert m.branch("down").probability == 0.7
    assert_allclose(average_state(m).entries, np.diag([0.3, 0.7]), atol=1e-12)


def test_proper_mixture_rejects_bad_weights(qubit):
    up = pure_state(basis_ket(qubit, 0))
    with pytest.raises(InvalidStateError):
        ProperMixture([MixtureBranch(0.3, up, "up"), MixtureBranch(0.3, up, "again")])
    with pytest.raises(InvalidStateError):
        ProperMixture([MixtureBranch(0.5, up, "up"), MixtureBranch(0.5, up, "up")])
