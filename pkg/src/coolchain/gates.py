"""Elementary gate matrices shared by the exact and MPS engines.

All rotation gates follow the exp(-i * angle/2 * generator) convention.
Two-qubit matrices are ordered with the first qubit most significant.
"""

from __future__ import annotations

import numpy as np

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_BY_NAME = {"I": ID2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

PROJ_0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ_1 = np.array([[0, 0], [0, 1]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    """exp(-i theta/2 X)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz(theta: float) -> np.ndarray:
    """exp(-i theta/2 Z)."""
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


def rzz(theta: float) -> np.ndarray:
    """exp(-i theta/2 Z x Z)."""
    e_m, e_p = np.exp(-1j * theta / 2), np.exp(1j * theta / 2)
    return np.diag([e_m, e_p, e_p, e_m])


def ryy(theta: float) -> np.ndarray:
    """exp(-i theta/2 Y x Y)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = c * np.eye(4, dtype=complex)
    out[0, 3] = out[3, 0] = 1j * s
    out[1, 2] = out[2, 1] = -1j * s
    return out


# The 15 non-identity two-qubit Pauli pairs, in a fixed draw order.
TWO_QUBIT_PAULIS: tuple[tuple[str, str], ...] = tuple(
    (a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")
)

ONE_QUBIT_PAULIS: tuple[str, ...] = ("X", "Y", "Z")


def is_unitary(gate: np.ndarray, tol: float = 1e-12) -> bool:
    gate = np.asarray(gate)
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
        return False
    return np.allclose(gate @ gate.conj().T, np.eye(gate.shape[0]), atol=tol)
