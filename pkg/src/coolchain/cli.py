"""Command-line front end: ground energies, training, cooling runs, sweeps.

Every command resolves its configuration up front, writes its outputs into a
single directory, and drops a JSON run manifest echoing the full resolved
configuration so the run can be reproduced bit-identically with `rerun`.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from . import exact, train
from . import trajectories as tj
from .model import (
    Layout,
    SizeExceededError,
    TfimParams,
    ground_energy,
    ground_energy_dense,
    ground_energy_free_fermion,
    ground_state_zz,
    residual_density,
)
from .params_io import read_param_table, write_param_table

OUT_DIR_ENV = "COOLCHAIN_OUT_DIR"

# Ensemble sizes used for the reference noise study, by system size.
DEFAULT_SHOTS = {4: 7000, 8: 3500, 16: 175, 28: 100}


def default_shots(n_sys: int) -> int:
    if n_sys in DEFAULT_SHOTS:
        return DEFAULT_SHOTS[n_sys]
    for bound, shots in ((4, 7000), (8, 3500), (16, 175)):
        if n_sys <= bound:
            return shots
    return 100


def _versions() -> str:
    try:
        own = metadata.version("coolchain")
    except metadata.PackageNotFoundError:
        own = "unknown"
    import scipy

    return f"coolchain={own} numpy={np.__version__} scipy={scipy.__version__}"


@dataclass
class RunManifest:
    command: str
    config_echo: dict
    master_seed: int
    artifact_versions: str
    outputs: list[str]
    argv: list[str]

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")


def _resolve_out_dir(args) -> Path:
    out = args.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_lines(echo: dict) -> list[str]:
    return [f"{k}={v}" for k, v in sorted(echo.items())]


def _write_csv(path: Path, header: list[str], rows, echo: dict) -> None:
    with path.open("w", newline="") as fh:
        for line in _echo_lines(echo):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _finish(args, command: str, echo: dict, outputs: list[Path], out_dir: Path) -> None:
    manifest = RunManifest(
        command=command,
        config_echo={k: str(v) for k, v in sorted(echo.items())},
        master_seed=int(echo.get("seed", 0)),
        artifact_versions=_versions(),
        outputs=[str(p) for p in outputs],
        argv=list(args.raw_argv),
    )
    manifest_path = out_dir / f"{command}_manifest.json"
    manifest.write(manifest_path)
    print(f"manifest: {manifest_path}")


def _parse_list(text: str, cast):
    return [cast(part) for part in text.split(",") if part.strip() != ""]


def cmd_ground(args) -> int:
    out_dir = _resolve_out_dir(args)
    tfim = TfimParams(args.n, args.j, args.h)
    results = {}
    if args.method in ("dense", "both"):
        results["dense"] = ground_energy_dense(tfim)
    if args.method in ("fermion", "both"):
        results["fermion"] = ground_energy_free_fermion(tfim)
    for name, value in results.items():
        print(f"E0[{name}] = {value:.10f}")
    if len(results) == 2:
        gap = abs(results["dense"] - results["fermion"])
        print(f"cross-method discrepancy = {gap:.3e}")
    echo = {"N": args.n, "J": args.j, "h": args.h, "method": args.method, "seed": 0}
    out = out_dir / "ground_energy.csv"
    _write_csv(
        out,
        ["method", "energy"],
        [(name, f"{value:.12g}") for name, value in results.items()],
        echo,
    )
    _finish(args, "ground", echo, [out], out_dir)
    return 0


def _train_section(path: str) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    if "train" not in parser:
        raise ValueError("config file needs a [train] section")
    return dict(parser["train"])


def cmd_train(args) -> int:
    out_dir = _resolve_out_dir(args)
    raw = _train_section(args.config)
    mode = raw.get("mode", "screen")
    tfim = TfimParams(
        int(raw.get("n", 4)), float(raw.get("j", 0.4)), float(raw.get("h", 0.6))
    )
    config = train.TrainConfig(
        tfim=tfim,
        t_train=int(raw.get("t_train", 7)),
        tau=int(raw.get("tau", 2)),
        initial_state=raw.get("initial_state", ""),
        enforce_monotonic=raw.get("enforce_monotonic", "true").lower() != "false",
    )
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    max_iterations = int(raw.get("max_iterations", 5000))
    p = int(raw.get("p", 3))
    echo = dict(raw)
    echo.update({"mode": mode, "seed": seed, "config_file": args.config})

    curve_rows: list[tuple] = []
    provenance = mode
    if mode == "screen":
        n_samples = int(raw.get("n_samples", 15000))
        keep = int(raw.get("keep", 10))
        rng = np.random.default_rng(seed)
        screen = train.random_screen(n_samples, keep, config, rng, p=p)
        print(f"screen: {screen.n_survivors}/{n_samples} survivors, keeping {len(screen.candidates)}")
        if not screen.candidates:
            print("error: no random initialization survived the monotonicity screen", file=sys.stderr)
            return 2
        best_report = None
        for idx, candidate in enumerate(screen.candidates):
            report = train.optimize_params(candidate, config, max_iterations=max_iterations)
            proxy = train.steady_energy_proxy(report.best_params, config)
            print(f"candidate {idx}: objective={report.best_objective:.6f} proxy={proxy:.6f}")
            if best_report is None or proxy < best_report[0]:
                best_report = (proxy, report)
        _, report = best_report
        provenance = "random-screen"
    elif mode == "params":
        params0, _ = read_param_table(raw["params_file"])
        report = train.optimize_params(params0, config, max_iterations=max_iterations)
        provenance = f"params-file:{raw['params_file']}"
    elif mode == "prune":
        init = train.TrotterInit(
            p=int(raw.get("trotter_p", 10)),
            sweep_time=float(raw.get("sweep_time", 5.0)),
        )
        start = train.trotter_init(init, tfim)
        prune = train.prune_and_retrain(start, int(raw.get("target_p", 3)), config,
                                        max_iterations=max_iterations)
        report = prune.final
        for epoch in prune.epochs:
            for it, (obj, proxy) in enumerate(
                zip(epoch.report.objective_history, epoch.report.steady_energy_history)
            ):
                curve_rows.append((epoch.p_after, it, f"{obj:.12g}", f"{proxy:.12g}"))
        provenance = f"pruned-from-p{init.p}"
    else:
        print(f"error: unknown train mode {mode!r}", file=sys.stderr)
        return 2

    if not curve_rows:
        curve_rows = [
            ("", it, f"{obj:.12g}", f"{proxy:.12g}")
            for it, (obj, proxy) in enumerate(
                zip(report.objective_history, report.steady_energy_history)
            )
        ]
    proxy = train.steady_energy_proxy(report.best_params, config)
    e0 = ground_energy(tfim)
    print(
        f"best objective {report.best_objective:.6f}, steady proxy {proxy:.6f}, "
        f"residual density {residual_density(proxy, tfim, e0):.6g}"
    )

    params_path = out_dir / "trained_params.txt"
    write_param_table(
        params_path,
        report.best_params,
        {
            "J": tfim.coupling_j,
            "h": tfim.field_h,
            "p": report.best_params.p,
            "T_train": config.t_train,
            "tau": config.tau,
            "seed": seed,
            "objective": f"{report.best_objective:.12g}",
            "steady_proxy": f"{proxy:.12g}",
            "provenance": provenance,
        },
    )
    curve_path = out_dir / "training_curve.csv"
    _write_csv(curve_path, ["p", "iteration", "objective", "steady_proxy"], curve_rows, echo)
    _finish(args, "train", echo, [params_path, curve_path], out_dir)
    return 0


def cmd_cool(args) -> int:
    out_dir = _resolve_out_dir(args)
    params, header = read_param_table(args.params)
    tfim = TfimParams(args.n, float(header["J"]), float(header["h"]))
    initials = args.initial.split(",") if args.initial else ["0" * args.n]
    seed = args.seed if args.seed is not None else 0
    echo = {
        "params": args.params, "N": args.n, "J": header["J"], "h": header["h"],
        "cycles": args.cycles, "engine": args.engine, "initial": ",".join(initials),
        "xi": args.xi, "shots": args.shots, "chi": args.chi, "seed": seed,
    }
    e0 = ground_energy(tfim)
    rows = []
    if args.engine == "exact":
        layout = Layout.for_system(args.n)
        if layout.n_total > exact.EXACT_MAX_QUBITS:
            print(
                f"error: exact engine refused for {layout.n_total} total qubits "
                f"(> {exact.EXACT_MAX_QUBITS}); use --engine mps",
                file=sys.stderr,
            )
            return 2
        if args.xi:
            print("error: the exact engine is noiseless; --xi needs --engine mps", file=sys.stderr)
            return 2
        header_row = ["initial", "cycle", "energy", "residual_density"]
        for label in initials:
            traj = exact.run_protocol(
                exact.density_from_label(label, layout), params, args.cycles, tfim, label
            )
            for cycle, e in enumerate(traj.energies):
                rows.append((label, cycle, f"{e:.12g}", f"{residual_density(e, tfim, e0):.12g}"))
    else:
        shots = args.shots or default_shots(args.n)
        noise = tj.NoiseModel(args.xi)
        header_row = ["initial", "cycle", "mean_energy", "std_error", "residual_density"]
        for label in initials:
            seeds = np.random.SeedSequence(seed).spawn(shots)
            traces = np.array(
                [
                    tj.run_trajectory(
                        tfim, params, args.cycles, noise, args.chi, s,
                        initial_label=label, trace_energy=True,
                    ).energy_trace
                    for s in seeds
                ]
            )
            means = traces.mean(axis=0)
            errs = traces.std(axis=0, ddof=1) / np.sqrt(shots)
            for cycle in range(args.cycles + 1):
                rows.append(
                    (
                        label, cycle, f"{means[cycle]:.12g}", f"{errs[cycle]:.12g}",
                        f"{residual_density(means[cycle], tfim, e0):.12g}",
                    )
                )
    out = out_dir / "cool_trajectory.csv"
    _write_csv(out, header_row, rows, echo)
    _finish(args, "cool", echo, [out], out_dir)
    return 0


def cmd_noise_sweep(args) -> int:
    out_dir = _resolve_out_dir(args)
    params, header = read_param_table(args.params)
    sizes = _parse_list(args.sizes, int)
    xis = _parse_list(args.xi, float)
    seed = args.seed if args.seed is not None else 0
    echo = {
        "params": args.params, "J": header["J"], "h": header["h"], "sizes": args.sizes,
        "xi": args.xi, "shots": args.shots or "per-size defaults", "chi": args.chi,
        "cycles": args.cycles, "seed": seed, "threads": args.threads,
    }
    rows = []
    for n in sizes:
        tfim = TfimParams(n, float(header["J"]), float(header["h"]))
        e0 = ground_energy(tfim)
        shots = args.shots or default_shots(n)
        for xi in xis:
            config = tj.EnsembleConfig(
                tfim=tfim, params=params, n_cycles=args.cycles,
                noise=tj.NoiseModel(xi), chi_max=args.chi, shots=shots,
                master_seed=seed, truncation_check=not args.no_truncation_check,
                n_jobs=args.threads,
            )
            res = tj.ensemble_run(config)
            rows.append(
                (
                    n, xi, shots, args.chi,
                    f"{res.mean_energy:.12g}",
                    f"{residual_density(res.mean_energy, tfim, e0):.12g}",
                    f"{res.std_error / n:.12g}",
                    f"{res.truncation_error:.12g}",
                )
            )
            print(
                f"N={n} xi={xi}: residual={(res.mean_energy - e0) / n:.6g} "
                f"+- {res.std_error / n:.2g} (trunc {res.truncation_error:.2g})"
            )
    out = out_dir / "noise_sweep.csv"
    _write_csv(
        out,
        ["N", "xi", "shots", "chi", "mean_energy", "mean_residual_density",
         "residual_std_error", "truncation_error"],
        rows,
        echo,
    )
    _finish(args, "noise-sweep", echo, [out], out_dir)
    return 0


def cmd_correlations(args) -> int:
    out_dir = _resolve_out_dir(args)
    params, header = read_param_table(args.params)
    j = args.j if args.j is not None else float(header["J"])
    h = args.h if args.h is not None else float(header["h"])
    tfim = TfimParams(args.n, j, h)
    xis = _parse_list(args.xi, float)
    if args.distances:
        distances = _parse_list(args.distances, int)
    else:
        distances = list(range(args.n))
    seed = args.seed if args.seed is not None else 0
    shots = args.shots or default_shots(args.n)
    echo = {
        "params": args.params, "N": args.n, "J": j, "h": h, "xi": args.xi,
        "distances": ",".join(map(str, distances)), "shots": shots, "chi": args.chi,
        "cycles": args.cycles, "seed": seed, "threads": args.threads,
    }
    pairs = tj.center_pairs(args.n, distances)
    try:
        reference = ground_state_zz(tfim, pairs)
        echo["reference"] = "exact-ground-state"
    except SizeExceededError:
        # Reference-quality stand-in: noiseless steady state at doubled chi.
        ref_cfg = tj.EnsembleConfig(
            tfim=tfim, params=params, n_cycles=args.cycles, noise=tj.NoiseModel(0.0),
            chi_max=2 * args.chi, shots=max(8, shots // 4), master_seed=seed + 1,
            correlation_distances=tuple(distances), n_jobs=args.threads,
        )
        reference = [mean for _, mean, _ in tj.ensemble_run(ref_cfg).correlations]
        echo["reference"] = f"steady-state-chi{2 * args.chi}-noiseless"
    columns = {}
    for xi in xis:
        config = tj.EnsembleConfig(
            tfim=tfim, params=params, n_cycles=args.cycles, noise=tj.NoiseModel(xi),
            chi_max=args.chi, shots=shots, master_seed=seed,
            correlation_distances=tuple(distances), n_jobs=args.threads,
        )
        columns[xi] = tj.ensemble_run(config).correlations
        print(f"xi={xi}: " + " ".join(f"d{d}={m:.4f}" for d, m, _ in columns[xi]))
    header_row = ["distance", "site_i", "site_j", "ground_reference"]
    for xi in xis:
        header_row += [f"mean_xi{xi:g}", f"std_error_xi{xi:g}"]
    rows = []
    for k, (d, (si, sj)) in enumerate(zip(distances, pairs)):
        row = [d, si, sj, f"{reference[k]:.12g}"]
        for xi in xis:
            _, mean, err = columns[xi][k]
            row += [f"{mean:.12g}", f"{err:.12g}"]
        rows.append(tuple(row))
    out = out_dir / "correlations.csv"
    _write_csv(out, header_row, rows, echo)
    _finish(args, "correlations", echo, [out], out_dir)
    return 0


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest["argv"]
    print(f"re-executing: coolchain {' '.join(argv)}")
    return main(argv)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--threads", type=int, default=1, help="trajectory worker count")
    parser.add_argument("--out-dir", default=None, help=f"output directory (or ${OUT_DIR_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coolchain",
        description="Variational cooling of the transverse-field Ising chain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground", help="reference ground energy of the target chain")
    p.add_argument("n", type=int)
    p.add_argument("j", type=float)
    p.add_argument("h", type=float)
    p.add_argument("--method", choices=("dense", "fermion", "both"), default="both")
    _add_common(p)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("train", help="train cycle angles from a config file")
    p.add_argument("config", help="INI config with a [train] section")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cool", help="replay a trained cycle and emit energy vs cycle")
    p.add_argument("--params", required=True, help="parameter table file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cycles", type=int, default=40)
    p.add_argument("--initial", default="", help="comma-separated system labels over 01+-")
    p.add_argument("--engine", choices=("exact", "mps"), default="exact")
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--chi", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=cmd_cool)

    p = sub.add_parser("noise-sweep", help="steady residual density over an (N, xi) grid")
    p.add_argument("--params", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated system sizes")
    p.add_argument("--xi", required=True, help="comma-separated error probabilities")
    p.add_argument("--shots", type=int, default=None, help="override per-size defaults")
    p.add_argument("--chi", type=int, default=64)
    p.add_argument("--cycles", type=int, default=40)
    p.add_argument("--no-truncation-check", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("correlations", help="center-symmetric ZZ correlations vs distance")
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--j", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--xi", default="0", help="comma-separated error probabilities")
    p.add_argument("--distances", default="", help="comma-separated separations")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--chi", type=int, default=64)
    p.add_argument("--cycles", type=int, default=40)
    _add_common(p)
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("rerun", help="re-execute a command from its run manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.raw_argv = argv
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, SizeExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
