import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from coolchain import gates

angles = st.floats(-np.pi, np.pi)


class TestRotationGenerators:
    """Each rotation must equal expm(-i theta/2 generator) exactly."""

    @settings(max_examples=30, deadline=None)
    @given(theta=angles)
    def test_rx(self, theta):
        assert np.allclose(gates.rx(theta), expm(-0.5j * theta * gates.PAULI_X))

    @settings(max_examples=30, deadline=None)
    @given(theta=angles)
    def test_rz(self, theta):
        assert np.allclose(gates.rz(theta), expm(-0.5j * theta * gates.PAULI_Z))

    @settings(max_examples=30, deadline=None)
    @given(theta=angles)
    def test_rzz(self, theta):
        gen = np.kron(gates.PAULI_Z, gates.PAULI_Z)
        assert np.allclose(gates.rzz(theta), expm(-0.5j * theta * gen))

    @settings(max_examples=30, deadline=None)
    @given(theta=angles)
    def test_ryy(self, theta):
        gen = np.kron(gates.PAULI_Y, gates.PAULI_Y)
        assert np.allclose(gates.ryy(theta), expm(-0.5j * theta * gen))

    @settings(max_examples=30, deadline=None)
    @given(theta=angles)
    def test_all_unitary(self, theta):
        for gate in (gates.rx(theta), gates.rz(theta), gates.rzz(theta), gates.ryy(theta)):
            assert gates.is_unitary(gate)

    def test_zero_angle_is_identity(self):
        assert np.allclose(gates.rzz(0.0), np.eye(4))
        assert np.allclose(gates.rx(0.0), np.eye(2))


class TestFixedMatrices:
    def test_swap(self):
        v = np.array([0, 1, 0, 0], dtype=complex)  # |01>
        assert np.allclose(gates.SWAP @ v, [0, 0, 1, 0])  # |10>

    def test_projectors(self):
        assert np.allclose(gates.PROJ_0 + gates.PROJ_1, np.eye(2))
        assert np.allclose(gates.PROJ_0 @ gates.PROJ_1, 0)

    def test_pauli_lookup(self):
        assert gates.PAULI_BY_NAME["X"] is gates.PAULI_X
        assert np.allclose(gates.PAULI_Y @ gates.PAULI_Y, np.eye(2))


class TestNoiseAlphabets:
    def test_two_qubit_paulis_exclude_identity_pair(self):
        assert len(gates.TWO_QUBIT_PAULIS) == 15
        assert ("I", "I") not in gates.TWO_QUBIT_PAULIS
        assert len(set(gates.TWO_QUBIT_PAULIS)) == 15

    def test_single_qubit_paulis(self):
        assert gates.ONE_QUBIT_PAULIS == ("X", "Y", "Z")


class TestIsUnitary:
    def test_accepts_unitary(self):
        assert gates.is_unitary(gates.SWAP)

    def test_rejects_projector(self):
        assert not gates.is_unitary(gates.PROJ_0)

    def test_rejects_non_square(self):
        assert not gates.is_unitary(np.ones((2, 3)))
