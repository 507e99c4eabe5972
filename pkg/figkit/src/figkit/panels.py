"""Panel specifications and rendering from the cavmol CSV schema.

The renderer is a pure consumer: it reads spectrum.csv, snapshots.csv and
density_<t>.csv files, validates their headers column by column, and draws a
deterministic matplotlib figure. A sha256 checksum of the input bytes is
embedded in the image metadata so a panel can always be traced to its data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

PANEL_KINDS = ("spectrum-at-times", "tls-traces", "density-waterfall", "spectra-compare")

SPECTRUM_COLUMNS = ("omega_prime", "time", "probability")
SNAPSHOT_COLUMNS = ("t", "n_cav", "n_flu", "parity", "n_excited", "norm", "energy", "p_diss")
DENSITY_COLUMNS = ("x", "density")

# fixed hash salt keeps SVG element ids stable across renders
matplotlib.rcParams["svg.hashsalt"] = "figkit"


class SchemaError(ValueError):
    """CSV header does not match the cli-io schema; names the offending column."""


@dataclass(frozen=True)
class PanelSpec:
    """One panel: input run directories, panel kind, time selection, output path.

    Per-curve normalization factors (the paper-style "scaled for visual
    clarity") are computed at render time and written into the figure margin.
    """

    kind: str
    inputs: tuple[Path, ...]
    out: Path
    times: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel kind {self.kind!r}; expected one of {PANEL_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input directory is required")
        if self.kind == "spectra-compare" and len(self.inputs) < 2:
            raise ValueError("spectra-compare needs two or more input directories")
        if Path(self.out).suffix not in (".png", ".svg"):
            raise ValueError(f"output must be .png or .svg, got {self.out}")


def _check_header(path: Path, expected: tuple[str, ...]) -> None:
    with open(path) as fh:
        header = fh.readline().strip()
    got = tuple(header.split(","))
    for i, name in enumerate(expected):
        if i >= len(got) or got[i] != name:
            found = got[i] if i < len(got) else "<missing>"
            raise SchemaError(
                f"{path}: expected column {name!r} at position {i}, found {found!r}"
            )
    if len(got) > len(expected):
        raise SchemaError(f"{path}: unexpected extra column {got[len(expected)]!r}")


def read_spectrum(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """spectrum.csv -> (omega_scan, times, P[omega', t])."""
    _check_header(path, SPECTRUM_COLUMNS)
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    scan = np.unique(data["omega_prime"])
    times = np.unique(data["time"])
    p = np.full((len(scan), len(times)), np.nan)
    iw = np.searchsorted(scan, data["omega_prime"])
    it = np.searchsorted(times, data["time"])
    p[iw, it] = data["probability"]
    return scan, times, p


def read_snapshots(path: Path) -> np.ndarray:
    _check_header(path, SNAPSHOT_COLUMNS)
    return np.atleast_1d(np.genfromtxt(path, delimiter=",", names=True, missing_values="NA"))


def read_density_set(directory: Path) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """All density_<t>.csv files in a run directory, sorted by time."""
    rows = []
    for path in sorted(Path(directory).glob("density_*.csv")):
        tag = path.stem[len("density_"):]
        t = float(tag.replace("p", ".").replace("m", "-"))
        _check_header(path, DENSITY_COLUMNS)
        data = np.atleast_1d(np.genfromtxt(path, delimiter=",", names=True))
        rows.append((t, data["x"], data["density"]))
    rows.sort(key=lambda r: r[0])
    return rows


def _input_files(spec: PanelSpec) -> list[Path]:
    files: list[Path] = []
    for directory in spec.inputs:
        directory = Path(directory)
        if spec.kind == "tls-traces":
            files.append(directory / "snapshots.csv")
        elif spec.kind == "density-waterfall":
            found = sorted(directory.glob("density_*.csv"))
            if not found:
                raise FileNotFoundError(f"no density_<t>.csv files in {directory}")
            files.extend(found)
        else:
            files.append(directory / "spectrum.csv")
    for f in files:
        if not f.exists():
            raise FileNotFoundError(f"missing input file: {f}")
    return files


def input_checksum(spec: PanelSpec) -> str:
    digest = hashlib.sha256()
    for f in _input_files(spec):
        digest.update(f.name.encode())
        digest.update(f.read_bytes())
    return digest.hexdigest()


def _select_times(available: np.ndarray, requested: tuple[float, ...] | None) -> np.ndarray:
    if requested is None:
        # default: up to four evenly spaced reported times, always the last
        idx = np.unique(np.linspace(0, len(available) - 1, min(4, len(available))).astype(int))
        return available[idx]
    chosen = []
    for t in requested:
        hit = available[np.isclose(available, t, rtol=0.0, atol=1e-9 + 1e-9 * abs(t))]
        if len(hit) == 0:
            raise ValueError(f"requested time {t} not present in CSV (available: {available})")
        chosen.append(float(hit[0]))
    return np.asarray(chosen)


def _margin_note(fig, factors: dict[str, float]) -> None:
    note = "scaled for visual clarity: " + ", ".join(
        f"{label} x {1.0 / f:.3g}" if f != 0 else f"{label} x 1" for label, f in factors.items()
    )
    fig.text(0.01, 0.01, note, fontsize=6, ha="left", va="bottom")


def _panel_spectrum_at_times(spec: PanelSpec, fig, ax) -> dict[str, float]:
    scan, times, p = read_spectrum(Path(spec.inputs[0]) / "spectrum.csv")
    factors = {}
    for t in _select_times(times, spec.times):
        row = p[:, int(np.searchsorted(times, t))]
        peak = float(np.nanmax(row)) if np.any(np.isfinite(row)) else 0.0
        scale = peak if peak > 0 else 1.0
        label = f"t = {t:g}"
        factors[label] = scale
        ax.plot(scan, row / scale, label=label, linewidth=1.0)
    ax.set_xlabel(r"$\omega'$")
    ax.set_ylabel(r"$P(\omega')$ (scaled)")
    ax.legend(fontsize=7)
    return factors


def _panel_tls_traces(spec: PanelSpec, fig, ax) -> dict[str, float]:
    snaps = read_snapshots(Path(spec.inputs[0]) / "snapshots.csv")
    factors = {}
    for column, label in (("n_cav", r"$n_{cav}$"), ("parity", r"$\Pi$"), ("n_excited", r"$n_1$")):
        y = snaps[column]
        if not np.any(np.isfinite(y)):
            continue
        peak = float(np.nanmax(np.abs(y)))
        scale = peak if peak > 0 else 1.0
        factors[label] = scale
        ax.plot(snaps["t"], y / scale, label=label, linewidth=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("traces (scaled)")
    ax.legend(fontsize=7)
    return factors


def _panel_density_waterfall(spec: PanelSpec, fig, ax) -> dict[str, float]:
    rows = read_density_set(Path(spec.inputs[0]))
    if spec.times is not None:
        available = np.asarray([t for t, _, _ in rows])
        keep = set(float(t) for t in _select_times(available, spec.times))
        rows = [r for r in rows if float(r[0]) in keep]
    peak = max(float(np.max(d)) for _, _, d in rows)
    scale = peak if peak > 0 else 1.0
    offset = 0.0
    for t, x, dens in rows:
        ax.plot(x, dens / scale + offset, linewidth=0.9)
        ax.text(float(x[-1]), offset, f" t = {t:g}", fontsize=6, va="bottom")
        offset += 1.1
    ax.set_xlabel("r")
    ax.set_ylabel("N(r) (scaled, offset by time)")
    return {"N(r)": scale}


def _panel_spectra_compare(spec: PanelSpec, fig, ax) -> dict[str, float]:
    factors = {}
    for directory in spec.inputs:
        scan, times, p = read_spectrum(Path(directory) / "spectrum.csv")
        t = _select_times(times, spec.times)[-1]
        row = p[:, int(np.searchsorted(times, t))]
        peak = float(np.nanmax(row)) if np.any(np.isfinite(row)) else 0.0
        scale = peak if peak > 0 else 1.0
        label = f"{Path(directory).name} (t = {t:g})"
        factors[label] = scale
        ax.plot(scan, row / scale, label=label, linewidth=1.0)
    ax.set_xlabel(r"$\omega'$")
    ax.set_ylabel(r"$P(\omega')$ (scaled)")
    ax.legend(fontsize=7)
    return factors


_PANELS = {
    "spectrum-at-times": _panel_spectrum_at_times,
    "tls-traces": _panel_tls_traces,
    "density-waterfall": _panel_density_waterfall,
    "spectra-compare": _panel_spectra_compare,
}


def render(spec: PanelSpec) -> tuple[Path, dict[str, float]]:
    """Draw the panel and write it to spec.out.

    Returns the output path and the per-curve normalization factors. The image
    is deterministic for identical inputs; the input checksum is embedded in
    the image metadata.
    """
    checksum = input_checksum(spec)
    fig, ax = plt.subplots(figsize=(4.2, 3.2), dpi=150)
    try:
        factors = _PANELS[spec.kind](spec, fig, ax)
        _margin_note(fig, factors)
        fig.tight_layout(rect=(0.0, 0.04, 1.0, 1.0))
        out = Path(spec.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if out.suffix == ".png":
            metadata = {"InputChecksum": checksum, "Software": "figkit"}
        else:
            metadata = {"Description": f"input-sha256:{checksum}", "Date": None}
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return Path(spec.out), factors
