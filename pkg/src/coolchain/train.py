"""Classical training stack for the cooling-cycle angles.

The objective is the deterministic density-matrix energy after ``t_train``
cycles, guarded by a strict monotone-decrease window of 2*tau + 1 cycles
around ``t_train``; parameter sets violating the window evaluate to the
``REJECTED`` sentinel, which the simplex optimizer treats as +infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import exact
from .model import CycleParams, Layout, TfimParams

_MONOTONE_TOL = 1e-12


class _Rejected:
    """Contract value for parameter sets failing the monotonicity screen."""

    def __repr__(self):
        return "REJECTED"


REJECTED = _Rejected()


class InfeasibleStartError(RuntimeError):
    """Every vertex of the initial simplex was rejected by the screen."""


@dataclass(frozen=True)
class TrainConfig:
    tfim: TfimParams
    t_train: int = 7
    tau: int = 2
    initial_state: str = ""
    steady_proxy_cycles: int = 40
    bounds: tuple[float, float] = (-math.pi, math.pi)
    enforce_monotonic: bool = True

    def __post_init__(self):
        if self.t_train < 1:
            raise ValueError("t_train must be >= 1")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.t_train - self.tau < 1:
            raise ValueError("t_train - tau must be >= 1")
        if self.t_train + self.tau > self.steady_proxy_cycles:
            raise ValueError("t_train + tau must not exceed steady_proxy_cycles")
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError("bounds must be an increasing interval")
        if self.initial_state and len(self.initial_state) != self.tfim.n_sys:
            raise ValueError("initial_state length must match n_sys")

    @property
    def label(self) -> str:
        return self.initial_state or "0" * self.tfim.n_sys


def _trajectory_energies(params: CycleParams, config: TrainConfig, n_cycles: int) -> list[float]:
    layout = Layout.for_system(config.tfim.n_sys)
    initial = exact.density_from_label(config.label, layout)
    return exact.run_protocol(initial, params, n_cycles, config.tfim).energies


def objective(params: CycleParams, config: TrainConfig):
    """Energy after t_train cycles, or REJECTED if the window is not monotone."""
    energies = _trajectory_energies(params, config, config.t_train + config.tau)
    if config.enforce_monotonic:
        window = energies[config.t_train - config.tau : config.t_train + config.tau + 1]
        for prev, cur in zip(window, window[1:]):
            if cur >= prev - _MONOTONE_TOL:
                return REJECTED
    return energies[config.t_train]


def steady_energy_proxy(params: CycleParams, config: TrainConfig) -> float:
    """Energy after the steady-state proxy horizon (reporting, never training)."""
    return _trajectory_energies(params, config, config.steady_proxy_cycles)[-1]


@dataclass
class SimplexResult:
    """Raw output of the simplex minimizer over a plain vector objective."""

    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    history: list[float]
    objective_history: list[float]


@dataclass
class OptimizerReport:
    best_params: CycleParams
    best_objective: float
    steady_energy_history: list[float]
    objective_history: list[float]
    iterations: int
    converged: bool


def nelder_mead(
    fn,
    x0,
    bounds: tuple[float, float] | None = None,
    xatol: float = 1e-6,
    fatol: float = 1e-9,
    max_iterations: int = 5000,
    report_fn=None,
) -> SimplexResult:
    """Nelder-Mead simplex minimization with clipping box bounds.

    ``fn`` may return the REJECTED sentinel, treated as +infinity so the
    simplex retreats from constraint-violating regions.  ``report_fn``, if
    given, is evaluated at the incumbent best vertex once per iteration and
    collected into the history.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    lo, hi = bounds if bounds is not None else (-np.inf, np.inf)

    def evaluate(x):
        val = fn(np.clip(x, lo, hi))
        return math.inf if val is REJECTED else float(val)

    # Classical initial simplex: 5% relative steps, absolute for zero entries.
    simplex = [x0]
    for i in range(dim):
        v = x0.copy()
        v[i] = v[i] * 1.05 if v[i] != 0.0 else 0.00025
        simplex.append(v)
    simplex = np.clip(np.array(simplex), lo, hi)
    values = np.array([evaluate(v) for v in simplex])
    if not np.isfinite(values).any():
        raise InfeasibleStartError(
            "every initial simplex vertex was rejected by the monotonicity "
            "screen; start from an initial state with energy above the "
            "un-optimized steady energy or from a feasible parameter set"
        )

    history: list[float] = []
    objective_history: list[float] = []
    iterations = 0
    converged = False
    while iterations < max_iterations:
        order = np.argsort(values)
        simplex, values = simplex[order], values[order]
        objective_history.append(float(values[0]))
        if report_fn is not None:
            history.append(report_fn(np.clip(simplex[0], lo, hi)))
        finite = values[np.isfinite(values)]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        spread = finite.max() - finite.min() if finite.size > 1 else math.inf
        if diameter < xatol or spread < fatol:
            converged = True
            break
        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        reflected = centroid + (centroid - simplex[-1])
        f_r = evaluate(reflected)
        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - simplex[-1])
            f_e = evaluate(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        else:
            if f_r < values[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (simplex[-1] - centroid)
            f_c = evaluate(contracted)
            if f_c < min(f_r, values[-1]):
                simplex[-1], values[-1] = contracted, f_c
            else:
                # Shrink toward the best vertex.
                for i in range(1, dim + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = evaluate(simplex[i])
    order = np.argsort(values)
    best = np.clip(simplex[order[0]], lo, hi)
    return SimplexResult(
        best, values[order[0]], iterations, converged, history, objective_history
    )


def optimize_params(
    params0: CycleParams,
    config: TrainConfig,
    max_iterations: int = 5000,
) -> OptimizerReport:
    """Locally optimize a cycle's angles under the monotonicity constraint."""

    def fn(vec):
        return objective(CycleParams.from_vector(vec), config)

    proxy_cache: dict[bytes, float] = {}

    def report(vec):
        key = vec.tobytes()
        if key not in proxy_cache:
            proxy_cache[key] = steady_energy_proxy(CycleParams.from_vector(vec), config)
        return proxy_cache[key]

    res = nelder_mead(
        fn,
        params0.to_vector(),
        bounds=config.bounds,
        max_iterations=max_iterations,
        report_fn=report,
    )
    best = CycleParams.from_vector(res.x)
    return OptimizerReport(
        best_params=best,
        best_objective=res.fun,
        steady_energy_history=res.history,
        objective_history=res.objective_history,
        iterations=res.iterations,
        converged=res.converged,
    )


@dataclass
class ScreenResult:
    candidates: list[CycleParams]
    n_survivors: int
    n_samples: int


def random_screen(
    n_samples: int, keep: int, config: TrainConfig, rng, p: int = 3
) -> ScreenResult:
    """Uniform random starts filtered by the monotone screen, ranked by proxy."""
    if n_samples < keep:
        raise ValueError("n_samples must be >= keep")
    lo, hi = config.bounds
    survivors: list[tuple[float, CycleParams]] = []
    for _ in range(n_samples):
        params = CycleParams.from_vector(rng.uniform(lo, hi, size=4 * p))
        if objective(params, config) is REJECTED:
            continue
        survivors.append((steady_energy_proxy(params, config), params))
    survivors.sort(key=lambda sp: sp[0])
    return ScreenResult(
        candidates=[params for _, params in survivors[:keep]],
        n_survivors=len(survivors),
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class TrotterInit:
    """First-order Trotterization of a slow demagnetization sweep."""

    p: int = 10
    sweep_time: float = 5.0
    ramp_g: str = "raised-cosine"
    ramp_b: str = "raised-cosine"
    g_peak: float = 1.0
    b_start: float | None = None
    b_end: float = 0.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.sweep_time <= 0:
            raise ValueError("sweep_time must be > 0")
        for name in (self.ramp_g, self.ramp_b):
            if name not in ("linear", "raised-cosine"):
                raise ValueError(f"unknown ramp {name!r}")

    @property
    def dt(self) -> float:
        return self.sweep_time / self.p

    def bath_field(self, t: float) -> float:
        """B(t): monotone ramp from b_start (default pi*dt/2) to b_end."""
        start = self.b_start if self.b_start is not None else 0.5 * math.pi * self.dt
        s = t / self.sweep_time
        if self.ramp_b == "linear":
            w = s
        else:
            w = 0.5 * (1.0 - math.cos(math.pi * s))
        return start + (self.b_end - start) * w

    def coupling_ramp(self, t: float) -> float:
        """g(t): symmetric bump from 0 up to g_peak and back to 0."""
        s = t / self.sweep_time
        if self.ramp_g == "linear":
            return self.g_peak * (1.0 - abs(2.0 * s - 1.0))
        return self.g_peak * 0.5 * (1.0 - math.cos(2.0 * math.pi * s))


def trotter_init(cfg: TrotterInit, tfim: TfimParams) -> CycleParams:
    """Layer angles of one coarse Trotter step per layer, clipped to [-pi, pi]."""
    dt = cfg.dt
    rows = []
    for layer in range(1, cfg.p + 1):
        t = layer * dt
        rows.append(
            (
                2.0 * tfim.coupling_j * dt,
                2.0 * tfim.field_h * dt,
                2.0 * cfg.coupling_ramp(t) * dt,
                2.0 * cfg.bath_field(t) * dt,
            )
        )
    clipped = np.clip(np.array(rows), -math.pi, math.pi)
    return CycleParams.from_rows(clipped)


_WHOLE_LAYER_THRESHOLD = 7  # above this p, prune whole layers at once


@dataclass
class PruneEpoch:
    p_after: int
    jump_energy: float
    retrained_energy: float
    candidate_evaluations: int
    report: OptimizerReport


@dataclass
class PruneReport:
    final: OptimizerReport
    epochs: list[PruneEpoch]


def _whole_layer_candidates(params: CycleParams):
    for i in range(params.p):
        yield CycleParams(params.layers[:i] + params.layers[i + 1 :])


def _per_angle_candidates(params: CycleParams):
    """All ways to drop one entry from each of the four angle sequences."""
    p = params.p
    cols = list(zip(*[(l.alpha, l.beta, l.gamma, l.delta) for l in params.layers]))
    for ia in range(p):
        for ib in range(p):
            for ig in range(p):
                for idl in range(p):
                    kept = [
                        [v for k, v in enumerate(col) if k != drop]
                        for col, drop in zip(cols, (ia, ib, ig, idl))
                    ]
                    yield CycleParams.from_rows(zip(*kept))


def prune_and_retrain(
    params: CycleParams,
    target_p: int,
    config: TrainConfig,
    max_iterations: int = 5000,
) -> PruneReport:
    """Remove layers (or per-family angles) one epoch at a time, retraining after each."""
    if target_p < 1 or target_p >= params.p:
        raise ValueError("target_p must satisfy 1 <= target_p < p")
    epochs: list[PruneEpoch] = []
    report: OptimizerReport | None = None
    current = params
    while current.p > target_p:
        if current.p > _WHOLE_LAYER_THRESHOLD:
            candidates = list(_whole_layer_candidates(current))
        else:
            candidates = list(_per_angle_candidates(current))
        scored = [(steady_energy_proxy(c, config), c) for c in candidates]
        jump, best_candidate = min(scored, key=lambda sc: sc[0])
        try:
            report = optimize_params(best_candidate, config, max_iterations=max_iterations)
        except InfeasibleStartError as exc:
            raise InfeasibleStartError(
                f"pruning epoch at p={current.p - 1}: {exc}"
            ) from exc
        current = report.best_params
        epochs.append(
            PruneEpoch(
                p_after=current.p,
                jump_energy=jump,
                retrained_energy=steady_energy_proxy(current, config),
                candidate_evaluations=len(candidates),
                report=report,
            )
        )
    assert report is not None
    return PruneReport(final=report, epochs=epochs)


def bootstrap(
    params_at: CycleParams,
    from_point: tuple[float, float],
    to_point: tuple[float, float],
    config: TrainConfig,
    max_iterations: int = 5000,
) -> OptimizerReport:
    """Reoptimize a trained cycle at a neighboring (J, h) point."""
    del from_point  # documentational; the starting params carry the information
    tfim = replace(config.tfim, coupling_j=to_point[0], field_h=to_point[1])
    return optimize_params(params_at, replace(config, tfim=tfim), max_iterations=max_iterations)
