import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.exceptions import NonOrthogonalError
from utils.extent_functions import GridKinematics, gaussian_packet, mean_per_particle, spread_per_particle
from utils.identical_functions import (
    ExchangeSymmetry,
    ParticleEnsemble,
    disturbed_average,
    one_body_density,
    swap_operator,
    symmetrized_expectation,
    symmetrized_observable,
    symmetrizer,
    two_particle_ket,
    two_particle_state,
)
from utils.linalg_functions import HilbertSpace, Operator, basis_ket, identity, random_hermitian, random_ket, rank

PAULI_Z = np.diag([1.0, -1.0])


def orthogonal_pair(space, rng):
    psi = random_ket(space, rng)
    raw = random_ket(space, rng)
    phi = (raw - psi * psi.inner(raw)).normalized()
    return psi, phi


@pytest.fixture
def pair(qubit):
    return ParticleEnsemble("electron", 2, qubit)


def test_joint_space_labels(pair):
    assert pair.joint_space.labels == ["q_1", "q_2"]


def test_single_particle_symmetrizer_is_identity(qubit):
    single = ParticleEnsemble("electron", 1, qubit)
    assert_allclose(symmetrizer(single, ExchangeSymmetry.FERMIONIC).entries, np.eye(2))


def test_fermionic_symmetrizer_is_singlet_projector(pair):
    p = symmetrizer(pair, ExchangeSymmetry.FERMIONIC)
    assert rank(p) == 1
    assert p.projector_defect() < 1e-12


def test_bosonic_symmetrizer_rank(pair):
    p = symmetrizer(pair, ExchangeSymmetry.BOSONIC)
    assert rank(p) == 3
    assert p.projector_defect() < 1e-12


def test_three_fermions_in_two_levels_vanish(qubit):
    triple = ParticleEnsemble("electron", 3, qubit)
    assert_allclose(symmetrizer(triple, ExchangeSymmetry.FERMIONIC).entries, np.zeros((8, 8)))
    assert rank(symmetrizer(triple, ExchangeSymmetry.BOSONIC)) == 4


def test_bosonic_pair_amplitudes(qubit):
    k = two_particle_ket(basis_ket(qubit, 0), basis_ket(qubit, 1), ExchangeSymmetry.BOSONIC)
    assert_allclose(k.amplitudes, np.array([0, 1, 1, 0]) / np.sqrt(2))


@pytest.mark.parametrize("kind, sign", [(ExchangeSymmetry.FERMIONIC, -1.0), (ExchangeSymmetry.BOSONIC, 1.0)])
def test_swap_sign(qubit, pair, kind, sign):
    k = two_particle_ket(basis_ket(qubit, 0), basis_ket(qubit, 1), kind)
    swapped = swap_operator(pair).apply(k)
    assert np.max(np.abs(swapped.amplitudes - sign * k.amplitudes)) < 1e-12


def test_non_orthogonal_rejected(qubit, plus_ket):
    with pytest.raises(NonOrthogonalError) as info:
        two_particle_state(basis_ket(qubit, 0), plus_ket, ExchangeSymmetry.FERMIONIC)
    assert info.value.overlap == pytest.approx(1 / np.sqrt(2))


def test_symmetrized_observable_examples(qubit, pair):
    assert_allclose(symmetrized_observable(identity(qubit), pair).entries, 2 * np.eye(4))
    z = symmetrized_observable(Operator(qubit, PAULI_Z), pair)
    assert_allclose(sorted(np.linalg.eigvalsh(z.entries)), [-2, 0, 0, 2], atol=1e-12)
    single = ParticleEnsemble("electron", 1, qubit)
    assert_allclose(symmetrized_observable(Operator(qubit, PAULI_Z), single).entries, PAULI_Z)


def test_symmetrizer_commutes_with_symmetrized_observable(rng):
    space = HilbertSpace.of(("s", 3))
    e = ParticleEnsemble("boson", 2, space)
    a = symmetrized_observable(random_hermitian(space, rng), e).entries
    for kind in ExchangeSymmetry:
        p = symmetrizer(e, kind).entries
        assert np.max(np.abs(p @ a - a @ p)) < 1e-10


@pytest.mark.parametrize("kind", list(ExchangeSymmetry))
def test_disturbed_average_identity(rng, kind):
    space = HilbertSpace.of(("s", 6))
    a = random_hermitian(space, rng)
    for _ in range(10):
        psi, phi = orthogonal_pair(space, rng)
        expected = a.expectation(psi).real + a.expectation(phi).real
        assert disturbed_average(psi, phi, a, kind) == pytest.approx(expected, abs=1e-10)


def test_disturbed_average_of_identity(qubit):
    value = disturbed_average(basis_ket(qubit, 0), basis_ket(qubit, 1), identity(qubit), ExchangeSymmetry.FERMIONIC)
    assert value == pytest.approx(2.0)


@pytest.mark.parametrize("offset", [8, 16, 32])
def test_disturbance_grows_with_distance(offset):
    k = GridKinematics(1, 128)
    psi = gaussian_packet(k, [0.0], [0.5])
    phi = gaussian_packet(k, [float(offset)], [0.5])
    x = k.position_ops[0]
    value = disturbed_average(psi, phi, x, ExchangeSymmetry.FERMIONIC)
    disturbance = value - x.expectation(psi).real
    assert disturbance / offset == pytest.approx(1.0, abs=1e-6)


def test_ket_and_operator_expectations_agree(rng):
    space = HilbertSpace.of(("s", 4))
    e = ParticleEnsemble("boson", 2, space)
    a = random_hermitian(space, rng)
    psi, phi = orthogonal_pair(space, rng)
    k = two_particle_ket(psi, phi, ExchangeSymmetry.BOSONIC)
    dense = symmetrized_observable(a, e).expectation(k).real
    assert symmetrized_expectation(k, a, e) == pytest.approx(dense, abs=1e-10)


def test_one_body_density_of_pair(rng):
    space = HilbertSpace.of(("s", 4))
    e = ParticleEnsemble("boson", 2, space)
    psi, phi = orthogonal_pair(space, rng)
    rho = one_body_density(two_particle_state(psi, phi, ExchangeSymmetry.BOSONIC), e)
    assert_allclose(rho.entries, (psi.dyad().entries + phi.dyad().entries) / 2, atol=1e-12)


def test_two_boson_closed_forms():
    rng = np.random.default_rng(2024)
    space = HilbertSpace.of(("s", 8))
    e = ParticleEnsemble("boson", 2, space)
    for _ in range(50):
        a = random_hermitian(space, rng)
        psi, phi = orthogonal_pair(space, rng)
        t = two_particle_state(psi, phi, ExchangeSymmetry.BOSONIC)
        m_psi, m_phi = a.expectation(psi).real, a.expectation(phi).real
        v_psi = (a @ a).expectation(psi).real - m_psi ** 2
        v_phi = (a @ a).expectation(phi).real - m_phi ** 2

        mean = mean_per_particle(t, a, e)
        spread = spread_per_particle(t, a, e)
        assert mean == pytest.approx((m_psi + m_phi) / 2, abs=1e-10)
        assert spread == pytest.approx(np.sqrt(0.5 * (v_psi + v_phi + 0.5 * (m_psi - m_phi) ** 2)), abs=1e-10)

        # direct traces on the 64-dimensional joint space
        direct_mean = np.trace(t.entries @ symmetrized_observable(a, e).entries).real / 2
        shifted = Operator(space, a.entries - mean * np.eye(8))
        direct_var = np.trace(t.entries @ symmetrized_observable(shifted @ shifted, e).entries).real / 2
        assert mean == pytest.approx(direct_mean, abs=1e-10)
        assert spread == pytest.approx(np.sqrt(direct_var), abs=1e-10)
