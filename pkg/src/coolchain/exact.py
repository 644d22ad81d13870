"""Deterministic density-matrix simulation of the cooling channel.

This is the training backend: one cycle applies p unitary layers to the full
system+bath register and then resets the bath qubits to |0>.  The register is
stored as a dense density matrix with system qubits 1..N first (site 1 most
significant) followed by bath qubits 1..N/2.

Feasible up to ~14 total qubits; the MPS engine covers larger chains.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gates
from .model import CycleParams, LayerAngles, Layout, SizeExceededError, TfimParams
from .model import dense_hamiltonian, ground_energy, residual_density

EXACT_MAX_QUBITS = 14

# Precomputing the dense cycle unitary beats per-gate application up to this
# register dimension (memory for one dim x dim matrix stays below ~20 MB).
_DENSE_CYCLE_MAX_DIM = 1024


@dataclass
class DensityState:
    """Mixed state of the full register; ``matrix`` has shape (2^n, 2^n)."""

    matrix: np.ndarray
    layout: Layout

    def __post_init__(self):
        if self.layout.n_total > EXACT_MAX_QUBITS:
            raise SizeExceededError(
                f"exact engine limited to {EXACT_MAX_QUBITS} total qubits, "
                f"layout has {self.layout.n_total}"
            )
        dim = 2**self.layout.n_total
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match register dim {dim}"
            )

    @property
    def n_qubits(self) -> int:
        return self.layout.n_total

    def validate(self, psd: bool = False) -> None:
        """Assert Hermiticity, unit trace and (optionally) positivity."""
        m = self.matrix
        if np.abs(m - m.conj().T).max() >= 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) >= 1e-10:
            raise ValueError("density matrix trace deviates from 1")
        if psd and np.linalg.eigvalsh(m)[0] <= -1e-9:
            raise ValueError("density matrix has a significantly negative eigenvalue")


@dataclass
class EnergyTrajectory:
    """Energy after 0..n_cycles applications of the cooling channel."""

    energies: list[float]
    tfim: TfimParams
    initial_label: str

    @property
    def n_cycles(self) -> int:
        return len(self.energies) - 1

    def residual_densities(self, e0: float | None = None) -> list[float]:
        if e0 is None:
            e0 = ground_energy(self.tfim)
        return [residual_density(e, self.tfim, e0) for e in self.energies]

    def to_csv(self, path, comments: list[str] | None = None) -> None:
        e0 = ground_energy(self.tfim)
        with Path(path).open("w", newline="") as fh:
            for line in comments or []:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["cycle", "energy", "residual_density"])
            for cycle, e in enumerate(self.energies):
                writer.writerow([cycle, f"{e:.12g}", f"{residual_density(e, self.tfim, e0):.12g}"])


def _apply_on_axes(tensor: np.ndarray, gate: np.ndarray, axes: list[int]) -> np.ndarray:
    """Contract a (2^m x 2^m) gate into the given axes of a (2,)*k tensor."""
    m = len(axes)
    g = gate.reshape((2,) * (2 * m))
    out = np.tensordot(g, tensor, axes=(list(range(m, 2 * m)), axes))
    return np.moveaxis(out, range(m), axes)


def apply_unitary(state: DensityState, gate: np.ndarray, qubits: list[int]) -> DensityState:
    """Conjugate the state by a gate on the given 0-based register qubits."""
    n = state.n_qubits
    dim = 2**n
    t = state.matrix.reshape((2,) * (2 * n))
    t = _apply_on_axes(t, gate, list(qubits))
    t = _apply_on_axes(t, gate.conj(), [n + q for q in qubits])
    return DensityState(t.reshape(dim, dim), state.layout)


def _layer_gate_list(layout: Layout, layer: LayerAngles) -> list[tuple[np.ndarray, list[int]]]:
    """The elementary gates of one layer, in application order."""
    n = layout.n_sys
    ops: list[tuple[np.ndarray, list[int]]] = []
    g_zz = gates.rzz(layer.alpha)
    for j in range(n - 1):
        ops.append((g_zz, [j, j + 1]))
    g_x = gates.rx(layer.beta)
    for j in range(n):
        ops.append((g_x, [j]))
    g_z = gates.rz(layer.gamma)
    for k in range(layout.n_bath):
        ops.append((g_z, [n + k]))
    g_yy = gates.ryy(layer.delta)
    for bath, site in layout.bath_couplings:
        ops.append((g_yy, [n + bath - 1, site - 1]))
    return ops


def apply_layer(state: DensityState, layer: LayerAngles) -> DensityState:
    """One unitary layer: ZZ rotations first, then X, bath Z, and bath-system YY."""
    for gate, qubits in _layer_gate_list(state.layout, layer):
        state = apply_unitary(state, gate, qubits)
    return state


def layer_unitary(layout: Layout, layer: LayerAngles) -> np.ndarray:
    """Dense register unitary of one layer (small registers only)."""
    dim = 2**layout.n_total
    if dim > _DENSE_CYCLE_MAX_DIM:
        raise SizeExceededError(f"dense layer unitary limited to dim {_DENSE_CYCLE_MAX_DIM}")
    n = layout.n_total
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for gate, qubits in _layer_gate_list(layout, layer):
        u = _apply_on_axes(u, gate, qubits)
    return u.reshape(dim, dim)


def cycle_unitary(layout: Layout, params: CycleParams) -> np.ndarray:
    """Dense unitary of the full p-layer block (layer 1 applied first)."""
    dim = 2**layout.n_total
    n = layout.n_total
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for layer in params.layers:
        for gate, qubits in _layer_gate_list(layout, layer):
            u = _apply_on_axes(u, gate, qubits)
    return u.reshape(dim, dim)


def system_marginal(state: DensityState) -> np.ndarray:
    """Partial trace over the bath qubits."""
    ds = 2**state.layout.n_sys
    db = 2**state.layout.n_bath
    r4 = state.matrix.reshape(ds, db, ds, db)
    return np.trace(r4, axis1=1, axis2=3)


def reset_bath(state: DensityState) -> DensityState:
    """Trace out the bath and replace it with |0...0>."""
    db = 2**state.layout.n_bath
    bath0 = np.zeros((db, db), dtype=complex)
    bath0[0, 0] = 1.0
    return DensityState(np.kron(system_marginal(state), bath0), state.layout)


def run_cycle(state: DensityState, params: CycleParams) -> DensityState:
    """One application of the cooling channel: p layers, then bath reset."""
    for layer in params.layers:
        state = apply_layer(state, layer)
    state = reset_bath(state)
    # Re-symmetrize to suppress floating-point drift over long runs.
    state.matrix = 0.5 * (state.matrix + state.matrix.conj().T)
    return state


def energy(state: DensityState, tfim: TfimParams) -> float:
    """Tr[rho H] with H acting on the system qubits only."""
    if tfim.n_sys != state.layout.n_sys:
        raise ValueError("tfim.n_sys does not match the state layout")
    marg = system_marginal(state)
    val = np.trace(marg @ dense_hamiltonian(tfim))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"energy has non-negligible imaginary part {val.imag}")
    return float(val.real)


def zz_correlation(state: DensityState, i: int, j: int) -> float:
    """Tr[rho Z_i Z_j] over system sites (1-based); i == j gives 1."""
    n = state.layout.n_sys
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"sites ({i}, {j}) out of range 1..{n}")
    if i == j:
        return 1.0
    diag = np.real(np.diag(system_marginal(state)))
    idx = np.arange(2**n)
    z_i = 1.0 - 2.0 * ((idx >> (n - i)) & 1)
    z_j = 1.0 - 2.0 * ((idx >> (n - j)) & 1)
    return float(np.sum(diag * z_i * z_j))


def density_from_label(label: str, layout: Layout) -> DensityState:
    """Product state from a system descriptor over {0, 1, +, -}; bath in |0>."""
    if len(label) != layout.n_sys:
        raise ValueError(f"label length {len(label)} != n_sys {layout.n_sys}")
    single = {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
        "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    }
    vec = np.array([1.0 + 0j])
    for ch in label:
        if ch not in single:
            raise ValueError(f"unknown state symbol {ch!r}")
        vec = np.kron(vec, single[ch])
    bath = np.zeros(2**layout.n_bath, dtype=complex)
    bath[0] = 1.0
    vec = np.kron(vec, bath)
    return DensityState(np.outer(vec, vec.conj()), layout)


def run_protocol(
    initial: DensityState,
    params: CycleParams,
    n_cycles: int,
    tfim: TfimParams,
    initial_label: str = "",
) -> EnergyTrajectory:
    """Energies after 0..n_cycles cycles starting from ``initial``."""
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    layout = initial.layout
    energies = [energy(initial, tfim)]
    state = initial
    dim = 2**layout.n_total
    if n_cycles > 0 and dim <= _DENSE_CYCLE_MAX_DIM:
        u = cycle_unitary(layout, params)
        db = 2**layout.n_bath
        bath0 = np.zeros((db, db), dtype=complex)
        bath0[0, 0] = 1.0
        rho = state.matrix
        for _ in range(n_cycles):
            rho = u @ rho @ u.conj().T
            ds = 2**layout.n_sys
            marg = np.trace(rho.reshape(ds, db, ds, db), axis1=1, axis2=3)
            rho = np.kron(marg, bath0)
            rho = 0.5 * (rho + rho.conj().T)
            state = DensityState(rho, layout)
            energies.append(energy(state, tfim))
    else:
        for _ in range(n_cycles):
            state = run_cycle(state, params)
            energies.append(energy(state, tfim))
    return EnergyTrajectory(energies, tfim, initial_label)


def final_state(
    initial: DensityState, params: CycleParams, n_cycles: int
) -> DensityState:
    """The register state after n_cycles cycles (for correlation studies)."""
    state = initial
    dim = 2**initial.layout.n_total
    if n_cycles > 0 and dim <= _DENSE_CYCLE_MAX_DIM:
        u = cycle_unitary(initial.layout, params)
        for _ in range(n_cycles):
            rho = u @ state.matrix @ u.conj().T
            state = DensityState(rho, initial.layout)
            state = reset_bath(state)
            state.matrix = 0.5 * (state.matrix + state.matrix.conj().T)
    else:
        for _ in range(n_cycles):
            state = run_cycle(state, params)
    return state
