"""Noisy stochastic trajectories of the cooling protocol on the MPS backend.

Each trajectory keeps a pure state: unitary gates are applied exactly (up to
bond truncation), depolarizing noise inserts a random Pauli after each logical
gate, and bath resets are computational-basis measurements with a conditional
bit flip.  Observables are evaluated by exact tensor contraction at the end of
the run, so shot noise enters only through the trajectory stochasticity.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gates
from .model import CycleParams, TfimParams, hamiltonian_terms
from .mps import MpsState, SiteOrdering, mps_from_product, stochastic_reset


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise: probability xi after every two-qubit gate."""

    xi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must be in [0, 1], got {self.xi}")

    @property
    def xi_1q(self) -> float:
        """Single-qubit gate error probability, fixed at xi / 10."""
        return self.xi / 10.0


@dataclass(frozen=True)
class TrajectoryObservables:
    """Per-trajectory outputs: contracted expectation values, no sampling."""

    energy: float
    correlations: tuple[float, ...]
    max_bond: int
    energy_trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class TrajectoryResult:
    """Ensemble aggregate over independent trajectory seeds."""

    shots: int
    mean_energy: float
    std_error: float
    correlations: tuple[tuple[int, float, float], ...]
    truncation_error: float


@dataclass(frozen=True)
class EnsembleConfig:
    tfim: TfimParams
    params: CycleParams
    n_cycles: int = 40
    noise: NoiseModel = field(default_factory=NoiseModel)
    chi_max: int = 64
    shots: int = 100
    master_seed: int = 0
    correlation_distances: tuple[int, ...] = ()
    truncation_check: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.shots < 2:
            raise ValueError("shots must be >= 2")
        if self.n_cycles < 0:
            raise ValueError("n_cycles must be >= 0")


_NOISE_2Q = [
    (gates.PAULI_BY_NAME[a], gates.PAULI_BY_NAME[b]) for a, b in gates.TWO_QUBIT_PAULIS
]
_NOISE_1Q = [gates.PAULI_BY_NAME[a] for a in gates.ONE_QUBIT_PAULIS]


def apply_noise(state: MpsState, sites, model: NoiseModel, rng) -> MpsState:
    """Maybe insert a uniformly random non-identity Pauli after a gate.

    ``sites`` holds the one or two labels of the logical gate just applied.
    """
    labels = [sites] if isinstance(sites, str) else list(sites)
    positions = [state.ordering.position(l) for l in labels]
    return _apply_noise_at(state, positions, model, rng)


def _apply_noise_at(state: MpsState, positions: list[int], model: NoiseModel, rng) -> MpsState:
    if len(positions) == 2:
        if model.xi > 0.0 and rng.random() < model.xi:
            g1, g2 = _NOISE_2Q[rng.integers(len(_NOISE_2Q))]
            if g1 is not gates.ID2:
                state.apply_1site(positions[0], g1)
            if g2 is not gates.ID2:
                state.apply_1site(positions[1], g2)
    elif len(positions) == 1:
        if model.xi > 0.0 and rng.random() < model.xi_1q:
            state.apply_1site(positions[0], _NOISE_1Q[rng.integers(len(_NOISE_1Q))])
    else:
        raise ValueError("noise attaches to one- or two-site gates only")
    return state


def _compile_cycle(params: CycleParams, ordering: SiteOrdering):
    """Flatten one cycle into primitive MPS operations.

    Entries are ("1q", pos, gate), ("2q", pos, gate) for adjacent pairs, or
    ("2q_routed", pos_left, gate) for a pair spanning one intermediate site
    (routed with a SWAP before and after; the SWAPs carry no noise).
    Noise positions ride along as the last element.
    """
    n = ordering.n_sys
    ops = []
    for layer in params.layers:
        g_zz = gates.rzz(layer.alpha)
        for j in range(1, n):
            p1, p2 = ordering.system_pos(j), ordering.system_pos(j + 1)
            if p2 - p1 == 1:
                ops.append(("2q", p1, g_zz, (p1, p2)))
            else:
                ops.append(("2q_routed", p1, g_zz, (p1, p2)))
        g_x = gates.rx(layer.beta)
        for j in range(1, n + 1):
            p = ordering.system_pos(j)
            ops.append(("1q", p, g_x, (p,)))
        g_z = gates.rz(layer.gamma)
        for k in range(1, ordering.n_bath + 1):
            p = ordering.bath_pos(k)
            ops.append(("1q", p, g_z, (p,)))
        # Bath qubit k sits immediately right of its partner site 2k, so the
        # YY coupling (bath first in the generator) needs its factors swapped.
        g_yy = gates.ryy(layer.delta).reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        for k in range(1, ordering.n_bath + 1):
            p_sys = ordering.system_pos(2 * k)
            p_bath = ordering.bath_pos(k)
            ops.append(("2q", p_sys, g_yy, (p_sys, p_bath)))
    return ops


def _run_compiled_cycle(state: MpsState, ops, noise: NoiseModel, rng) -> None:
    for kind, pos, gate, noise_pos in ops:
        if kind == "1q":
            state.apply_1site(pos, gate)
        elif kind == "2q":
            state.apply_2site(pos, gate)
        else:
            state.apply_2site(pos + 1, gates.SWAP)
            state.apply_2site(pos, gate)
            state.apply_2site(pos + 1, gates.SWAP)
        _apply_noise_at(state, list(noise_pos), noise, rng)
    for k in range(1, state.ordering.n_bath + 1):
        stochastic_reset(state, ("b", k), rng)


def energy_expectation(state: MpsState, tfim: TfimParams) -> float:
    """<H> by exact contraction, summing the Hamiltonian terms left to right."""
    total = 0.0
    terms = sorted(
        hamiltonian_terms(tfim),
        key=lambda t: min(state.ordering.system_pos(s) for s, _ in t.factors),
    )
    for term in terms:
        ops = {
            state.ordering.system_pos(site): gates.PAULI_BY_NAME[axis]
            for site, axis in term.factors
        }
        total += term.coefficient * state.expect_window(ops)
    return total


def zz_expectation(state: MpsState, i: int, j: int) -> float:
    """<Z_i Z_j> over system sites (1-based); i == j gives 1."""
    if i == j:
        return 1.0
    return state.expect_window(
        {
            state.ordering.system_pos(i): gates.PAULI_Z,
            state.ordering.system_pos(j): gates.PAULI_Z,
        }
    )


def center_pairs(n_sys: int, distances) -> list[tuple[int, int]]:
    """Site pairs (i, i+d) placed symmetrically about the chain center."""
    center = (n_sys + 1) // 2
    pairs = []
    for d in distances:
        if not 0 <= d <= n_sys - 1:
            raise ValueError(f"distance {d} invalid for {n_sys} sites")
        i = center - d // 2
        pairs.append((i, i + d))
    return pairs


def center_correlations(state: MpsState, distances) -> list[tuple[int, float]]:
    """<Z_i Z_j> at the given separations, centered on the chain."""
    return [
        (j - i, zz_expectation(state, i, j))
        for i, j in center_pairs(state.ordering.n_sys, distances)
    ]


_SINGLE_SITE = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


def mps_from_system_label(label: str, chi_max: int, ordering: SiteOrdering) -> MpsState:
    """Product state from a system descriptor over {0, 1, +, -}; bath in |0>."""
    if len(label) != ordering.n_sys:
        raise ValueError(f"label length {len(label)} != n_sys {ordering.n_sys}")
    state = mps_from_product([0] * ordering.n_sites, chi_max, ordering)
    for j, ch in enumerate(label, start=1):
        if ch not in _SINGLE_SITE:
            raise ValueError(f"unknown state symbol {ch!r}")
        vec = _SINGLE_SITE[ch]
        state.tensors[ordering.system_pos(j)] = vec.reshape(1, 2, 1).copy()
    return state


def run_trajectory(
    tfim: TfimParams,
    params: CycleParams,
    n_cycles: int,
    noise: NoiseModel,
    chi_max: int,
    seed,
    correlation_pairs: tuple[tuple[int, int], ...] = (),
    initial_label: str | None = None,
    trace_energy: bool = False,
) -> TrajectoryObservables:
    """One stochastic realization; deterministic given the seed."""
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    ordering = SiteOrdering(tfim.n_sys)
    if initial_label is None:
        state = mps_from_product([0] * ordering.n_sites, chi_max, ordering)
    else:
        state = mps_from_system_label(initial_label, chi_max, ordering)
    rng = np.random.default_rng(seed)
    ops = _compile_cycle(params, ordering)
    trace = [energy_expectation(state, tfim)] if trace_energy else []
    for _ in range(n_cycles):
        _run_compiled_cycle(state, ops, noise, rng)
        if trace_energy:
            trace.append(energy_expectation(state, tfim))
    corr = tuple(zz_expectation(state, i, j) for i, j in correlation_pairs)
    return TrajectoryObservables(
        energy=trace[-1] if trace_energy else energy_expectation(state, tfim),
        correlations=corr,
        max_bond=state.max_bond(),
        energy_trace=tuple(trace),
    )


def _trajectory_job(args) -> TrajectoryObservables:
    tfim, params, n_cycles, noise, chi_max, seed, pairs = args
    return run_trajectory(tfim, params, n_cycles, noise, chi_max, seed, pairs)


def _collect(config: EnsembleConfig, chi_max: int, seeds) -> tuple[np.ndarray, np.ndarray]:
    pairs = tuple(center_pairs(config.tfim.n_sys, config.correlation_distances))
    jobs = [
        (config.tfim, config.params, config.n_cycles, config.noise, chi_max, s, pairs)
        for s in seeds
    ]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(_trajectory_job, jobs, chunksize=1))
    else:
        results = [_trajectory_job(j) for j in jobs]
    energies = np.array([r.energy for r in results])
    corrs = np.array([r.correlations for r in results]).reshape(len(results), len(pairs))
    return energies, corrs


def ensemble_run(config: EnsembleConfig) -> TrajectoryResult:
    """Aggregate independent trajectories spawned from the master seed.

    With ``truncation_check`` the whole ensemble is re-run at half the bond
    dimension (same seeds) and the shift in the mean energy is reported as
    ``truncation_error``.
    """
    seeds = np.random.SeedSequence(config.master_seed).spawn(config.shots)
    energies, corrs = _collect(config, config.chi_max, seeds)
    n = config.shots
    mean_e = float(energies.mean())
    se_e = float(energies.std(ddof=1) / np.sqrt(n))
    corr_rows = tuple(
        (int(d), float(corrs[:, k].mean()), float(corrs[:, k].std(ddof=1) / np.sqrt(n)))
        for k, d in enumerate(config.correlation_distances)
    )
    trunc = 0.0
    if config.truncation_check:
        energies_lo, _ = _collect(
            replace(config, correlation_distances=()), max(1, config.chi_max // 2), seeds
        )
        trunc = abs(mean_e - float(energies_lo.mean()))
    return TrajectoryResult(
        shots=n,
        mean_energy=mean_e,
        std_error=se_e,
        correlations=corr_rows,
        truncation_error=trunc,
    )
