"""Matrix-product-state backend for large-chain trajectory simulation.

The register is embedded in a 1D chain with each bath qubit placed directly
after the system site it couples to: [s1, s2, b1, s3, s4, b2, ...].  All
physical gates are then nearest-neighbor except the system ZZ bonds that
span a bath site; those are routed with a SWAP pair.

Tensors are rank-3 ``(left, physical, right)`` with a tracked orthogonality
center; two-site gates truncate to ``chi_max`` singular values and
renormalize, so the state stays at unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates


@dataclass(frozen=True)
class SiteOrdering:
    """Interleaved chain embedding of the system/bath layout."""

    n_sys: int

    def __post_init__(self):
        if self.n_sys < 2 or self.n_sys % 2 != 0:
            raise ValueError(f"n_sys must be even and >= 2, got {self.n_sys}")

    @property
    def n_bath(self) -> int:
        return self.n_sys // 2

    @property
    def n_sites(self) -> int:
        return self.n_sys + self.n_bath

    def system_pos(self, j: int) -> int:
        """Chain position of system site j (1-based)."""
        if not 1 <= j <= self.n_sys:
            raise KeyError(f"system site {j} out of range 1..{self.n_sys}")
        k, r = divmod(j - 1, 2)
        return 3 * k + r

    def bath_pos(self, k: int) -> int:
        """Chain position of bath qubit k (1-based)."""
        if not 1 <= k <= self.n_bath:
            raise KeyError(f"bath qubit {k} out of range 1..{self.n_bath}")
        return 3 * (k - 1) + 2

    def position(self, label) -> int:
        """Chain position of a label like ("s", 3), ("b", 1), "s3" or "b1"."""
        if isinstance(label, str):
            kind, idx = label[0], int(label[1:])
        else:
            kind, idx = label
        if kind == "s":
            return self.system_pos(idx)
        if kind == "b":
            return self.bath_pos(idx)
        raise KeyError(f"unknown site label {label!r}")

    def chain_labels(self) -> list[str]:
        out = [""] * self.n_sites
        for j in range(1, self.n_sys + 1):
            out[self.system_pos(j)] = f"s{j}"
        for k in range(1, self.n_bath + 1):
            out[self.bath_pos(k)] = f"b{k}"
        return out


class MpsState:
    """Tensor train with bounded bond dimension and an orthogonality center."""

    def __init__(self, tensors: list[np.ndarray], chi_max: int, ordering: SiteOrdering, center: int = 0):
        if chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        if len(tensors) != ordering.n_sites:
            raise ValueError(
                f"{len(tensors)} tensors for a {ordering.n_sites}-site chain"
            )
        self.tensors = tensors
        self.chi_max = chi_max
        self.ordering = ordering
        self.center = center

    @classmethod
    def from_product(cls, bits, chi_max: int, ordering: SiteOrdering) -> "MpsState":
        bits = list(bits)
        if len(bits) != ordering.n_sites:
            raise ValueError(
                f"{len(bits)} bits for a {ordering.n_sites}-site chain"
            )
        tensors = []
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bits must be 0 or 1, got {b!r}")
            t = np.zeros((1, 2, 1), dtype=complex)
            t[0, b, 0] = 1.0
            tensors.append(t)
        return cls(tensors, chi_max, ordering)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def max_bond(self) -> int:
        return max(t.shape[2] for t in self.tensors[:-1]) if self.n_sites > 1 else 1

    def norm(self) -> float:
        t = self.tensors[self.center]
        return float(np.sqrt(np.real(np.sum(t * t.conj()))))

    def move_center(self, target: int) -> None:
        while self.center < target:
            i = self.center
            t = self.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * d, dr))
            self.tensors[i] = q.reshape(dl, d, -1)
            self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
            self.center = i + 1
        while self.center > target:
            i = self.center
            t = self.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
            self.tensors[i] = q.conj().T.reshape(-1, d, dr)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.conj().T, axes=(2, 0))
            self.center = i - 1

    def apply_1site(self, pos: int, gate: np.ndarray) -> None:
        """Apply a 2x2 gate; safe for unitaries regardless of the center."""
        t = self.tensors[pos]
        self.tensors[pos] = np.einsum("ab,ibj->iaj", gate, t)

    def project_1site(self, pos: int, op: np.ndarray) -> float:
        """Apply a (non-unitary) 2x2 operator at the center and renormalize.

        Returns the pre-normalization norm (the square root of the outcome
        probability for a projector).
        """
        self.move_center(pos)
        t = np.einsum("ab,ibj->iaj", op, self.tensors[pos])
        w = float(np.sqrt(np.real(np.sum(t * t.conj()))))
        if w < 1e-14:
            raise FloatingPointError(
                f"projection norm underflow ({w:.3e}) at chain position {pos}"
            )
        self.tensors[pos] = t / w
        return w

    def apply_2site(self, pos: int, gate: np.ndarray) -> float:
        """Apply a 4x4 gate on chain sites (pos, pos+1); returns truncation weight."""
        if self.center < pos or self.center > pos + 1:
            self.move_center(pos)
        t1, t2 = self.tensors[pos], self.tensors[pos + 1]
        dl = t1.shape[0]
        dr = t2.shape[2]
        theta = np.tensordot(t1, t2, axes=(2, 0)).reshape(dl, 4, dr)
        theta = np.einsum("ab,ibj->iaj", gate, theta)
        theta = theta.reshape(dl, 2, 2, dr).reshape(dl * 2, 2 * dr)
        try:
            u, s, vh = np.linalg.svd(theta, full_matrices=False)
        except np.linalg.LinAlgError:  # rare gesdd failure
            import scipy.linalg

            u, s, vh = scipy.linalg.svd(theta, full_matrices=False, lapack_driver="gesvd")
        keep = min(self.chi_max, int(np.count_nonzero(s > 1e-14)))
        keep = max(keep, 1)
        discarded = float(np.sum(s[keep:] ** 2))
        s = s[:keep]
        s /= np.linalg.norm(s)
        self.tensors[pos] = u[:, :keep].reshape(dl, 2, keep)
        self.tensors[pos + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, dr)
        self.center = pos + 1
        return discarded

    def expect_window(self, ops: dict[int, np.ndarray]) -> float:
        """<psi| O |psi> for a product of single-site operators.

        ``ops`` maps chain positions to 2x2 matrices; everything else is
        identity.  Moves the center to the leftmost operator position.
        """
        if not ops:
            return 1.0
        a, b = min(ops), max(ops)
        self.move_center(a)
        env = None
        for pos in range(a, b + 1):
            t = self.tensors[pos]
            top = t if pos not in ops else np.einsum("ab,ibj->iaj", ops[pos], t)
            if env is None:
                env = np.tensordot(top, t.conj(), axes=([0, 1], [0, 1]))
            else:
                tmp = np.tensordot(env, top, axes=(0, 0))
                env = np.tensordot(tmp, t.conj(), axes=([0, 1], [0, 1]))
        val = np.trace(env)
        return float(np.real(val))

    def to_statevector(self) -> np.ndarray:
        """Dense state in chain-position order (small chains only)."""
        if self.n_sites > 20:
            raise ValueError("statevector conversion limited to 20 sites")
        vec = self.tensors[0]
        for t in self.tensors[1:]:
            vec = np.tensordot(vec, t, axes=(vec.ndim - 1, 0))
        return vec.reshape(-1)

    def statevector_register_order(self) -> np.ndarray:
        """Dense state reordered to (system 1..N, bath 1..N/2)."""
        vec = self.to_statevector().reshape((2,) * self.n_sites)
        order = [self.ordering.system_pos(j) for j in range(1, self.ordering.n_sys + 1)]
        order += [self.ordering.bath_pos(k) for k in range(1, self.ordering.n_bath + 1)]
        return np.transpose(vec, order).reshape(-1)


def mps_from_product(bits, chi_max: int, ordering: SiteOrdering) -> MpsState:
    """Bond-dimension-1 product state |bits> in chain order."""
    return MpsState.from_product(bits, chi_max, ordering)


def all_zero_state(n_sys: int, chi_max: int) -> MpsState:
    ordering = SiteOrdering(n_sys)
    return mps_from_product([0] * ordering.n_sites, chi_max, ordering)


def apply_gate(state: MpsState, sites, gate: np.ndarray) -> MpsState:
    """Apply a 1- or 2-qubit gate by site label, routing with SWAPs as needed.

    Routing SWAPs truncate like any two-site operation but are a simulation
    artifact: callers inserting gate noise must not attach it to them.
    """
    gate = np.asarray(gate, dtype=complex)
    if isinstance(sites, (str, tuple)) and (not isinstance(sites, tuple) or len(sites) == 2 and isinstance(sites[1], int) and isinstance(sites[0], str)):
        sites = [sites]
    labels = list(sites)
    if not gates.is_unitary(gate):
        raise ValueError("gate is not unitary within 1e-12")
    if len(labels) == 1:
        if gate.shape != (2, 2):
            raise ValueError("single-site gate must be 2x2")
        state.apply_1site(state.ordering.position(labels[0]), gate)
        return state
    if len(labels) != 2 or gate.shape != (4, 4):
        raise ValueError("two-site gate must be 4x4 with two site labels")
    p1, p2 = (state.ordering.position(l) for l in labels)
    if p1 == p2:
        raise ValueError("two-site gate needs distinct sites")
    if p1 > p2:
        # Reorder the gate so its first factor matches the left chain site.
        gate = gate.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        p1, p2 = p2, p1
    # Route the right site leftward until adjacent, apply, route back.
    swapped = []
    while p2 - p1 > 1:
        state.apply_2site(p2 - 1, gates.SWAP)
        swapped.append(p2 - 1)
        p2 -= 1
    state.apply_2site(p1, gate)
    for pos in reversed(swapped):
        state.apply_2site(pos, gates.SWAP)
    return state


def stochastic_reset(state: MpsState, bath_label, rng) -> MpsState:
    """Measure a bath qubit in the computational basis and flip to |0>."""
    pos = state.ordering.position(bath_label)
    state.move_center(pos)
    p1 = 0.5 * (1.0 - state.expect_window({pos: gates.PAULI_Z}))
    if rng.random() < p1:
        state.project_1site(pos, gates.PROJ_1)
        state.apply_1site(pos, gates.PAULI_X)
    else:
        state.project_1site(pos, gates.PROJ_0)
    return state
