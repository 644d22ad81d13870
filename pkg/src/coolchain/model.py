"""Target model: the open-chain transverse-field Ising Hamiltonian.

Conventions used throughout the package:

* ``H = -J * sum_j Z_j Z_{j+1} - h * sum_j X_j`` on an open chain of
  ``n_sys`` spins, with ferromagnetic ``J >= 0``.  Energies are quoted in
  units where ``J + h = 1`` unless the caller chooses otherwise.
* Sites are 1-based on every public interface.  The chain has ``n_sys``
  system qubits (``n_sys`` even) and ``n_sys / 2`` bath qubits; bath qubit
  ``j`` couples to system site ``2j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

# Largest system for which dense/sparse diagonalization of the 2^N
# Hamiltonian is considered feasible.
DENSE_SOLVER_MAX_SITES = 14

_ANGLE_TOL = 1e-6  # slack for table values rounded to 3.141593


class SizeExceededError(ValueError):
    """Raised when a dense solver is asked for a system that is too large."""


@dataclass(frozen=True)
class TfimParams:
    """Couplings and size of the target Ising chain."""

    n_sys: int
    coupling_j: float
    field_h: float

    def __post_init__(self):
        if self.n_sys < 2 or self.n_sys % 2 != 0:
            raise ValueError(f"n_sys must be even and >= 2, got {self.n_sys}")
        if self.coupling_j < 0:
            raise ValueError(f"coupling_j must be >= 0, got {self.coupling_j}")


@dataclass(frozen=True)
class Layout:
    """System/bath qubit arrangement: bath qubit j couples to system site 2j."""

    n_sys: int
    n_bath: int
    bath_couplings: tuple[tuple[int, int], ...]

    @classmethod
    def for_system(cls, n_sys: int) -> "Layout":
        if n_sys < 2 or n_sys % 2 != 0:
            raise ValueError(f"n_sys must be even and >= 2, got {n_sys}")
        n_bath = n_sys // 2
        couplings = tuple((j, 2 * j) for j in range(1, n_bath + 1))
        return cls(n_sys=n_sys, n_bath=n_bath, bath_couplings=couplings)

    def __post_init__(self):
        if self.n_bath != self.n_sys // 2:
            raise ValueError("n_bath must equal n_sys / 2")
        sys_sites = [s for _, s in self.bath_couplings]
        bath_sites = [b for b, _ in self.bath_couplings]
        if sorted(bath_sites) != list(range(1, self.n_bath + 1)):
            raise ValueError("bath indices must be 1..n_bath without duplicates")
        if any(s != 2 * b for b, s in self.bath_couplings):
            raise ValueError("bath qubit j must couple to system site 2j")
        if len(set(sys_sites)) != len(sys_sites):
            raise ValueError("duplicate system sites in bath couplings")

    @property
    def n_total(self) -> int:
        return self.n_sys + self.n_bath


@dataclass(frozen=True)
class LayerAngles:
    """The four rotation angles of one unitary layer (radians)."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if abs(v) > math.pi + _ANGLE_TOL:
                raise ValueError(f"{name}={v} outside [-pi, pi]")


@dataclass(frozen=True)
class CycleParams:
    """The 4p variational angles of a p-layer cooling cycle."""

    layers: tuple[LayerAngles, ...]

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("at least one layer is required")

    @property
    def p(self) -> int:
        return len(self.layers)

    def to_vector(self) -> np.ndarray:
        """Flatten to [a1, b1, g1, d1, a2, ...]."""
        return np.array(
            [v for l in self.layers for v in (l.alpha, l.beta, l.gamma, l.delta)]
        )

    @classmethod
    def from_vector(cls, vec) -> "CycleParams":
        vec = np.asarray(vec, dtype=float)
        if vec.size % 4 != 0 or vec.size == 0:
            raise ValueError(f"vector length must be a positive multiple of 4, got {vec.size}")
        layers = tuple(
            LayerAngles(*vec[4 * i : 4 * i + 4]) for i in range(vec.size // 4)
        )
        return cls(layers)

    @classmethod
    def from_rows(cls, rows) -> "CycleParams":
        """Build from an iterable of (alpha, beta, gamma, delta) rows."""
        return cls(tuple(LayerAngles(*row) for row in rows))


@dataclass(frozen=True)
class PauliTerm:
    """A weighted Pauli string, e.g. -J * Z_1 Z_2."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        sites = [s for s, _ in self.factors]
        if len(set(sites)) != len(sites):
            raise ValueError("site indices within a term must be distinct")
        if any(ax not in ("X", "Y", "Z") for _, ax in self.factors):
            raise ValueError("axis must be one of X, Y, Z")


def hamiltonian_terms(tfim: TfimParams) -> list[PauliTerm]:
    """The 2N-1 terms of the open-chain Hamiltonian: N-1 ZZ bonds and N X fields."""
    terms = [
        PauliTerm(-tfim.coupling_j, ((j, "Z"), (j + 1, "Z")))
        for j in range(1, tfim.n_sys)
    ]
    terms += [PauliTerm(-tfim.field_h, ((j, "X"),)) for j in range(1, tfim.n_sys + 1)]
    return terms


_PAULI = {
    "I": sp.identity(2, format="csr", dtype=float),
    "X": sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])),
    "Z": sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]])),
}


def _sparse_hamiltonian(tfim: TfimParams) -> sp.csr_matrix:
    n = tfim.n_sys
    dim = 2**n
    ham = sp.csr_matrix((dim, dim), dtype=float)
    for term in hamiltonian_terms(tfim):
        ops = ["I"] * n
        for site, axis in term.factors:
            ops[site - 1] = axis
        mat = _PAULI[ops[0]]
        for op in ops[1:]:
            mat = sp.kron(mat, _PAULI[op], format="csr")
        ham = ham + term.coefficient * mat
    return ham


@lru_cache(maxsize=32)
def dense_hamiltonian(tfim: TfimParams) -> np.ndarray:
    """Dense 2^N x 2^N system Hamiltonian (site 1 is the most significant qubit)."""
    if tfim.n_sys > DENSE_SOLVER_MAX_SITES:
        raise SizeExceededError(
            f"dense Hamiltonian limited to n_sys <= {DENSE_SOLVER_MAX_SITES}, "
            f"got {tfim.n_sys}"
        )
    return _sparse_hamiltonian(tfim).toarray()


def ground_energy_dense(tfim: TfimParams) -> float:
    """Lowest eigenvalue of the explicitly diagonalized chain Hamiltonian.

    Limited to ``n_sys <= 14``; the free-fermion solver covers larger chains.
    """
    if tfim.n_sys > DENSE_SOLVER_MAX_SITES:
        raise SizeExceededError(
            f"dense diagonalization limited to n_sys <= {DENSE_SOLVER_MAX_SITES}, "
            f"got {tfim.n_sys}"
        )
    if tfim.n_sys <= 10:
        return float(np.linalg.eigvalsh(dense_hamiltonian(tfim))[0])
    vals = eigsh(_sparse_hamiltonian(tfim), k=1, which="SA", return_eigenvectors=False)
    return float(vals[0])


def ground_energy_free_fermion(tfim: TfimParams) -> float:
    """Ground energy of the open chain via the quadratic-fermion mapping.

    The chain maps (after a global basis rotation) to free fermions with a
    2N x 2N Bogoliubov-de Gennes single-particle matrix; the ground energy is
    the constant offset plus half the sum of the negative branch.  Agrees with
    :func:`ground_energy_dense` to ~1e-12 for every feasible size.
    """
    n = tfim.n_sys
    j, h = tfim.coupling_j, tfim.field_h
    # Hopping block (symmetric) and pairing block (antisymmetric).
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    np.fill_diagonal(a, 2.0 * h)
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = -j
        b[i, i + 1] = -j
        b[i + 1, i] = j
    bdg = np.block([[a, b], [-b, -a]])
    vals = np.linalg.eigvalsh(bdg)
    const = -h * n
    return float(const + 0.5 * np.trace(a) + 0.5 * vals[: n].sum())


def ground_energy(tfim: TfimParams) -> float:
    """Reference ground energy: dense for small chains, free-fermion beyond."""
    if tfim.n_sys <= DENSE_SOLVER_MAX_SITES:
        return ground_energy_dense(tfim)
    return ground_energy_free_fermion(tfim)


def ground_state_zz(tfim: TfimParams, pairs) -> list[float]:
    """<Z_i Z_j> in the exact ground state (1-based sites, dense sizes only)."""
    if tfim.n_sys > DENSE_SOLVER_MAX_SITES:
        raise SizeExceededError(
            f"ground-state correlations limited to n_sys <= {DENSE_SOLVER_MAX_SITES}"
        )
    n = tfim.n_sys
    if n <= 10:
        _, vecs = np.linalg.eigh(dense_hamiltonian(tfim))
        psi = vecs[:, 0]
    else:
        _, vecs = eigsh(_sparse_hamiltonian(tfim), k=1, which="SA")
        psi = vecs[:, 0]
    prob = np.abs(psi) ** 2
    idx = np.arange(2**n)
    out = []
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexError(f"sites ({i}, {j}) out of range 1..{n}")
        if i == j:
            out.append(1.0)
            continue
        z_i = 1.0 - 2.0 * ((idx >> (n - i)) & 1)
        z_j = 1.0 - 2.0 * ((idx >> (n - j)) & 1)
        out.append(float(np.sum(prob * z_i * z_j)))
    return out


def residual_density(energy: float, tfim: TfimParams, e0: float | None = None) -> float:
    """Per-site energy above the exact ground state, (E - E0) / N."""
    if e0 is None:
        e0 = ground_energy(tfim)
    return (energy - e0) / tfim.n_sys
