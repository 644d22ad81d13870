"""Plain-text parameter tables for trained cooling cycles.

Format (one key=value pair per header line, one ``layer=`` record per layer):

    # coolchain parameter table
    format=1
    J=0.4
    h=0.6
    p=3
    layer=1 alpha=0.010773 beta=-0.350834 gamma=3.141593 delta=1.463996

Extra header keys (seed, objective, provenance, ...) round-trip untouched.
"""

from __future__ import annotations

from pathlib import Path

from importlib import resources

from .model import CycleParams, LayerAngles

FORMAT_VERSION = "1"

_REQUIRED_HEADER = ("J", "h", "p")


def write_param_table(path, params: CycleParams, header: dict) -> None:
    """Write a parameter table; ``header`` must carry J, h and p."""
    for key in _REQUIRED_HEADER:
        if key not in header:
            raise ValueError(f"header is missing required key {key!r}")
    if int(header["p"]) != params.p:
        raise ValueError(f"header p={header['p']} does not match {params.p} layers")
    lines = ["# coolchain parameter table", f"format={FORMAT_VERSION}"]
    for key, value in header.items():
        lines.append(f"{key}={value}")
    for i, layer in enumerate(params.layers, start=1):
        lines.append(
            f"layer={i} alpha={layer.alpha:.6f} beta={layer.beta:.6f} "
            f"gamma={layer.gamma:.6f} delta={layer.delta:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def parse_param_table(text: str) -> tuple[CycleParams, dict]:
    """Parse table text into (CycleParams, header dict)."""
    header: dict[str, str] = {}
    rows: list[tuple[int, LayerAngles]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("layer="):
            fields = dict(item.split("=", 1) for item in line.split())
            try:
                idx = int(fields["layer"])
                angles = LayerAngles(
                    alpha=float(fields["alpha"]),
                    beta=float(fields["beta"]),
                    gamma=float(fields["gamma"]),
                    delta=float(fields["delta"]),
                )
            except KeyError as exc:
                raise ValueError(f"layer record missing field: {line!r}") from exc
            rows.append((idx, angles))
        elif "=" in line:
            key, value = line.split("=", 1)
            header[key.strip()] = value.strip()
        else:
            raise ValueError(f"unparseable line in parameter table: {line!r}")
    for key in _REQUIRED_HEADER:
        if key not in header:
            raise ValueError(f"parameter table missing header key {key!r}")
    rows.sort(key=lambda r: r[0])
    if [idx for idx, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError("layer indices must be 1..p without gaps")
    params = CycleParams(tuple(angles for _, angles in rows))
    if params.p != int(header["p"]):
        raise ValueError(
            f"header p={header['p']} does not match {params.p} layer records"
        )
    return params, header


def read_param_table(path) -> tuple[CycleParams, dict]:
    return parse_param_table(Path(path).read_text())


def bundled_table_names() -> list[str]:
    """Names of the parameter tables shipped with the package."""
    root = resources.files("coolchain") / "fixtures"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".txt"))


def load_bundled_table(coupling_j: float, field_h: float) -> tuple[CycleParams, dict]:
    """Load the shipped trained table for the given (J, h) point."""
    name = f"p3_j{coupling_j:.2f}_h{field_h:.2f}.txt"
    ref = resources.files("coolchain") / "fixtures" / name
    if not ref.is_file():
        raise FileNotFoundError(
            f"no bundled parameter table for J={coupling_j}, h={field_h} "
            f"(available: {', '.join(bundled_table_names())})"
        )
    return parse_param_table(ref.read_text())
