"""Configuration parsing, tabular output, provenance and checkpoint/resume."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .bath import BathParams
from .hilbert import SpaceShape
from .model import DimerModel, DriveEnvelope, MolecularParams, TwoLevelModel
from .observables import Snapshot
from .propagator import KrylovConfig
from .scenarios import (
    CoherentInit,
    Dissipation,
    PumpInit,
    Scenario,
    SpectrumResult,
    default_scan,
    scenario_resonance,
)

CHECKPOINT_VERSION = 1
WORKERS_ENV = "CAVMOL_WORKERS"

# full float round-trip needs 17 significant digits
FLOAT_FMT = "{:.16e}"


class ConfigError(ValueError):
    """Configuration document rejected; message names the offending key path."""


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run description: the physics plus the plumbing."""

    scenario: Scenario
    workers: int = 1
    out_dir: Optional[str] = None
    checkpoint_every: int = 0  # steps between in-flight checkpoints; 0 disables


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _take(node: dict, path: str, known: dict):
    """Pop known keys with defaults; reject anything left over."""
    out = {}
    for key, default in known.items():
        out[key] = node.pop(key, default)
    if node:
        extra = ", ".join(sorted(str(k) for k in node))
        raise ConfigError(f"{path}: unknown key(s): {extra}")
    return out


def _number(value, path, minimum=None, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: value {value} is below the minimum {minimum}")
    return value


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: value {value} is below the minimum {minimum}")
    return value


def _parse_model(node):
    node = _require_mapping(node, "model")
    kind = node.pop("kind", None)
    if kind == "tls":
        fields = _take(node, "model", {"gap": None})
        if fields["gap"] is None:
            raise ConfigError("model.gap: required for model.kind = tls")
        return TwoLevelModel(gap=_number(fields["gap"], "model.gap"))
    if kind == "dimer":
        fields = _take(
            node,
            "model",
            {
                "mass": None,
                "repulsion_c": 0.6,
                "hubbard_u": 1.0,
                "hopping_v": -2.0,
                "hopping_decay": 0.6,
                "r_fixed": 1.156,
            },
        )
        if fields["mass"] is None:
            raise ConfigError("model.mass: required for model.kind = dimer")
        mass = _number(fields["mass"], "model.mass")
        if mass <= 0:
            raise ConfigError(f"model.mass: must be positive, got {mass}")
        return DimerModel(
            MolecularParams(
                mass=mass,
                repulsion_c=_number(fields["repulsion_c"], "model.repulsion_c"),
                hubbard_u=_number(fields["hubbard_u"], "model.hubbard_u"),
                hopping_v=_number(fields["hopping_v"], "model.hopping_v"),
                hopping_decay=_number(fields["hopping_decay"], "model.hopping_decay"),
                r_fixed=_number(fields["r_fixed"], "model.r_fixed"),
            )
        )
    raise ConfigError(f"model.kind: expected 'tls' or 'dimer', got {kind!r}")


def _parse_space(node, n_elec):
    node = _require_mapping(node, "space")
    fields = _take(
        node,
        "space",
        {"n_cav": 32, "n_flu": 3, "n_grid": 1, "grid_min": 0.0, "grid_max": 0.0},
    )
    try:
        return SpaceShape(
            n_elec=n_elec,
            n_cav=_integer(fields["n_cav"], "space.n_cav", 1),
            n_flu=_integer(fields["n_flu"], "space.n_flu", 1),
            n_grid=_integer(fields["n_grid"], "space.n_grid", 1),
            grid_min=_number(fields["grid_min"], "space.grid_min"),
            grid_max=_number(fields["grid_max"], "space.grid_max"),
        )
    except ValueError as exc:
        raise ConfigError(f"space: {exc}") from exc


def _parse_drive(node, omega0):
    node = _require_mapping(node, "init.drive")
    fields = _take(
        node,
        "init.drive",
        {"g_d": 0.0, "mode": "sudden", "carrier": None, "t1": 0.0, "t2": 0.0, "ts": 0.0},
    )
    carrier = fields["carrier"]
    carrier = omega0 if carrier is None else _number(carrier, "init.drive.carrier")
    try:
        return DriveEnvelope(
            g_d=_number(fields["g_d"], "init.drive.g_d", minimum=0.0),
            mode=str(fields["mode"]),
            carrier=carrier,
            t1=_number(fields["t1"], "init.drive.t1"),
            t2=_number(fields["t2"], "init.drive.t2"),
            ts=_number(fields["ts"], "init.drive.ts"),
        )
    except ValueError as exc:
        raise ConfigError(f"init.drive: {exc}") from exc


def _parse_init(node, omega0):
    node = _require_mapping(node, "init")
    kind = node.pop("kind", None)
    if kind == "coherent":
        fields = _take(node, "init", {"beta": None})
        if fields["beta"] is None:
            raise ConfigError("init.beta: required for init.kind = coherent")
        return CoherentInit(beta=_number(fields["beta"], "init.beta", minimum=0.0))
    if kind == "pump":
        fields = _take(node, "init", {"drive": {}, "target_n": None})
        drive = _parse_drive(dict(fields["drive"] or {}), omega0)
        target = _number(fields["target_n"], "init.target_n", minimum=0.0, allow_none=True)
        return PumpInit(envelope=drive, target_n=target)
    raise ConfigError(f"init.kind: expected 'coherent' or 'pump', got {kind!r}")


def _parse_dissipation(node):
    node = _require_mapping(node, "dissipation")
    fields = _take(
        node,
        "dissipation",
        {"kind": "none", "gamma": 0.0, "bath": None},
    )
    kind = str(fields["kind"])
    bath = None
    if fields["bath"] is not None:
        bnode = _require_mapping(dict(fields["bath"]), "dissipation.bath")
        bfields = _take(
            bnode,
            "dissipation.bath",
            {"n_osc": 1000, "amplitude": 0.01, "exponent": 0.6, "delta": 0.01},
        )
        try:
            bath = BathParams(
                n_osc=_integer(bfields["n_osc"], "dissipation.bath.n_osc", 1),
                amplitude=_number(bfields["amplitude"], "dissipation.bath.amplitude"),
                exponent=_number(bfields["exponent"], "dissipation.bath.exponent"),
                delta=_number(bfields["delta"], "dissipation.bath.delta"),
            )
        except ValueError as exc:
            raise ConfigError(f"dissipation.bath: {exc}") from exc
    try:
        return Dissipation(kind=kind, gamma=_number(fields["gamma"], "dissipation.gamma"), bath=bath)
    except ValueError as exc:
        raise ConfigError(f"dissipation: {exc}") from exc


def _parse_scan(node, omega0, omega_r):
    if node is None:
        return tuple(default_scan(omega0, omega_r))
    if isinstance(node, (list, tuple)):
        return tuple(_number(v, "run.omega_scan[]") for v in node)
    node = _require_mapping(dict(node), "run.omega_scan")
    fields = _take(node, "run.omega_scan", {"start": None, "stop": None, "points": 80})
    points = _integer(fields["points"], "run.omega_scan.points", 1)
    if fields["start"] is None and fields["stop"] is None:
        return tuple(default_scan(omega0, omega_r, points))
    start = _number(fields["start"], "run.omega_scan.start")
    stop = _number(fields["stop"], "run.omega_scan.stop")
    return tuple(np.linspace(start, stop, points))


def _parse_krylov(node):
    node = _require_mapping(node, "krylov")
    fields = _take(node, "krylov", {"dt": 0.02, "m": 12, "tol": 1e-10, "midpoint": True})
    if not isinstance(fields["midpoint"], bool):
        raise ConfigError(f"krylov.midpoint: expected a boolean, got {fields['midpoint']!r}")
    try:
        return KrylovConfig(
            dt=_number(fields["dt"], "krylov.dt"),
            m=_integer(fields["m"], "krylov.m"),
            tol=_number(fields["tol"], "krylov.tol"),
            midpoint=fields["midpoint"],
        )
    except ValueError as exc:
        raise ConfigError(f"krylov: {exc}") from exc


def parse_config(document: str) -> RunConfig:
    """Parse a YAML configuration document into a fully resolved RunConfig.

    Unknown keys anywhere in the document are rejected with the key path.
    """
    try:
        raw = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ConfigError(f"document: not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    raw = _require_mapping(raw, "document")
    top = _take(
        dict(raw),
        "document",
        {
            "model": None,
            "space": {},
            "run": {},
            "init": None,
            "dissipation": {},
            "krylov": {},
            "output": {},
        },
    )
    if top["model"] is None:
        raise ConfigError("model: required section")
    if top["init"] is None:
        raise ConfigError("init: required section")
    model = _parse_model(dict(top["model"]))
    space = _parse_space(dict(top["space"] or {}), model.n_elec)

    run = _require_mapping(dict(top["run"] or {}), "run")
    run_fields = _take(
        run,
        "run",
        {
            "omega0": None,
            "g_c": 0.0,
            "g_f": 0.01,
            "t_end": None,
            "omega_scan": None,
            "snapshot_every": 50,
            "r_cut": None,
            "seed": 0,
        },
    )
    if run_fields["omega0"] is None:
        raise ConfigError("run.omega0: required")
    if run_fields["t_end"] is None:
        raise ConfigError("run.t_end: required")
    omega0 = _number(run_fields["omega0"], "run.omega0", minimum=0.0)

    init = _parse_init(dict(top["init"]), omega0)
    dissipation = _parse_dissipation(dict(top["dissipation"] or {}))
    krylov = _parse_krylov(dict(top["krylov"] or {}))

    output = _require_mapping(dict(top["output"] or {}), "output")
    out_fields = _take(
        output,
        "output",
        {"workers": None, "directory": None, "checkpoint_every": 0},
    )
    workers = out_fields["workers"]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    else:
        workers = _integer(workers, "output.workers", 1)

    try:
        scenario = Scenario(
            model=model,
            space=space,
            omega0=omega0,
            g_c=_number(run_fields["g_c"], "run.g_c"),
            g_f=_number(run_fields["g_f"], "run.g_f"),
            init=init,
            dissipation=dissipation,
            t_end=_number(run_fields["t_end"], "run.t_end"),
            omega_scan=_parse_scan(
                run_fields["omega_scan"], omega0, _model_resonance(model)
            ),
            krylov=krylov,
            snapshot_every=_integer(run_fields["snapshot_every"], "run.snapshot_every", 1),
            r_cut=_number(run_fields["r_cut"], "run.r_cut", allow_none=True),
            seed=_integer(run_fields["seed"], "run.seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from exc
    return RunConfig(
        scenario=scenario,
        workers=workers,
        out_dir=out_fields["directory"],
        checkpoint_every=_integer(out_fields["checkpoint_every"], "output.checkpoint_every", 0),
    )


def _model_resonance(model):
    if isinstance(model, TwoLevelModel):
        return model.gap
    p = model.params
    return float(
        p.hubbard_u / 2.0 + np.sqrt(4.0 * p.v_eff(p.r_fixed) ** 2 + (p.hubbard_u / 2.0) ** 2)
    )


# ---------------------------------------------------------------------------
# resolved-config rendering (round-trips through parse_config)
# ---------------------------------------------------------------------------


def config_dict(config: RunConfig) -> dict:
    """The fully resolved configuration as a plain nested dict."""
    sc = config.scenario
    if isinstance(sc.model, TwoLevelModel):
        model = {"kind": "tls", "gap": sc.model.gap}
    else:
        p = sc.model.params
        model = {
            "kind": "dimer",
            "mass": p.mass,
            "repulsion_c": p.repulsion_c,
            "hubbard_u": p.hubbard_u,
            "hopping_v": p.hopping_v,
            "hopping_decay": p.hopping_decay,
            "r_fixed": p.r_fixed,
        }
    sp = sc.space
    if isinstance(sc.init, CoherentInit):
        init = {"kind": "coherent", "beta": sc.init.beta}
    else:
        env = sc.init.envelope
        init = {
            "kind": "pump",
            "target_n": sc.init.target_n,
            "drive": {
                "g_d": env.g_d,
                "mode": env.mode,
                "carrier": env.carrier,
                "t1": env.t1,
                "t2": env.t2,
                "ts": env.ts,
            },
        }
    dis = {"kind": sc.dissipation.kind, "gamma": sc.dissipation.gamma}
    if sc.dissipation.bath is not None:
        b = sc.dissipation.bath
        dis["bath"] = {
            "n_osc": b.n_osc,
            "amplitude": b.amplitude,
            "exponent": b.exponent,
            "delta": b.delta,
        }
    return {
        "model": model,
        "space": {
            "n_cav": sp.n_cav,
            "n_flu": sp.n_flu,
            "n_grid": sp.n_grid,
            "grid_min": sp.grid_min,
            "grid_max": sp.grid_max,
        },
        "run": {
            "omega0": sc.omega0,
            "g_c": sc.g_c,
            "g_f": sc.g_f,
            "t_end": sc.t_end,
            "omega_scan": [float(w) for w in sc.omega_scan],
            "snapshot_every": sc.snapshot_every,
            "r_cut": sc.r_cut,
            "seed": sc.seed,
        },
        "init": init,
        "dissipation": dis,
        "krylov": {
            "dt": sc.krylov.dt,
            "m": sc.krylov.m,
            "tol": sc.krylov.tol,
            "midpoint": sc.krylov.midpoint,
        },
        "output": {
            "workers": config.workers,
            "directory": config.out_dir,
            "checkpoint_every": config.checkpoint_every,
        },
    }


def render_config(config: RunConfig) -> str:
    """Resolved YAML document; parse_config(render_config(c)) == c."""
    return yaml.safe_dump(config_dict(config), sort_keys=False, default_flow_style=False)


def scenario_hash(scenario: Scenario) -> str:
    """Stable digest of the physics content of a scenario."""
    probe = RunConfig(scenario=scenario)
    blob = json.dumps(config_dict(probe), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# tabular output
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "NA"
    return FLOAT_FMT.format(float(value))


def write_spectrum(result: SpectrumResult, out_dir, config: Optional[RunConfig] = None) -> list[Path]:
    """Write spectrum.csv, snapshots.csv, density_<t>.csv and provenance.txt.

    Returns the list of files written. Rows are sorted by (omega', t); floats
    are printed with full round-trip precision (17 significant digits).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "spectrum.csv"
    with open(path, "w", newline="") as fh:
        fh.write("omega_prime,time,probability\n")
        for i, w in enumerate(result.omega_scan):
            for j, t in enumerate(result.times):
                fh.write(f"{_fmt(w)},{_fmt(t)},{_fmt(result.p[i, j])}\n")
    written.append(path)

    path = out / "snapshots.csv"
    with open(path, "w", newline="") as fh:
        fh.write("t,n_cav,n_flu,parity,n_excited,norm,energy,p_diss\n")
        for s in result.reference_run.snapshots:
            fields = [s.t, s.n_cav, s.n_flu, s.parity, s.n_excited, s.norm, s.energy, s.p_diss]
            fh.write(",".join(_fmt(v) for v in fields) + "\n")
    written.append(path)

    grid = None
    if result.scenario.space.n_grid > 1:
        from .hilbert import build_space

        grid = build_space(result.scenario.space).grid
    for s in result.reference_run.snapshots:
        if s.nuclear_density is None:
            continue
        path = out / f"density_{_time_tag(s.t)}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("x,density\n")
            for x, d in zip(grid, s.nuclear_density):
                fh.write(f"{_fmt(x)},{_fmt(d)}\n")
        written.append(path)

    path = out / "provenance.txt"
    with open(path, "w") as fh:
        from . import __version__

        fh.write(f"# cavmol {__version__}\n")
        fh.write(f"# scenario hash: {scenario_hash(result.scenario)}\n")
        if result.failures:
            for w, msg in sorted(result.failures.items()):
                fh.write(f"# failed omega'={w}: {msg}\n")
        if config is None:
            config = RunConfig(scenario=result.scenario)
        fh.write(render_config(config))
    written.append(path)
    return written


def _time_tag(t: float) -> str:
    return f"{t:.6f}".rstrip("0").rstrip(".").replace(".", "p").replace("-", "m")


def read_spectrum(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of the spectrum.csv writer: (omega_scan, times, P[omega', t])."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    if data.size == 0:
        return np.array([]), np.array([]), np.zeros((0, 0))
    scan = np.unique(data["omega_prime"])
    times = np.unique(data["time"])
    p = np.full((len(scan), len(times)), np.nan)
    wi = np.searchsorted(scan, data["omega_prime"])
    ti = np.searchsorted(times, data["time"])
    p[wi, ti] = data["probability"]
    return scan, times, p


def read_snapshots(path) -> np.ndarray:
    """snapshots.csv as a structured array; 'NA' fields come back as nan."""
    return np.atleast_1d(
        np.genfromtxt(path, delimiter=",", names=True, dtype=float, missing_values="NA")
    )


# ---------------------------------------------------------------------------
# checkpoint / resume
# ---------------------------------------------------------------------------


def _snapshot_to_jsonable(s: Snapshot) -> dict:
    d = asdict(s)
    if d["nuclear_density"] is not None:
        d["nuclear_density"] = [float(v) for v in d["nuclear_density"]]
    return d


def _snapshot_from_jsonable(d: dict) -> Snapshot:
    if d.get("nuclear_density") is not None:
        d["nuclear_density"] = np.asarray(d["nuclear_density"], dtype=float)
    return Snapshot(**d)


class Checkpointer:
    """In-flight full-state checkpoint of a single propagation.

    Layout: <dir>/state.raw holds the little-endian complex128 amplitudes;
    <dir>/manifest.json holds the step counter, time, scenario hash, bath
    phase-space coordinates and the snapshot stream. Resume is bit-identical
    because the full state is stored and the propagation is deterministic.
    """

    def __init__(self, directory, scenario: Scenario, every: int = 500):
        if every < 1:
            raise ValueError("checkpoint cadence must be >= 1 step")
        self.dir = Path(directory)
        self.every = every
        self.hash = scenario_hash(scenario)

    def due(self, step: int) -> bool:
        return step % self.every == 0

    def save(self, payload: dict) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        amps = np.ascontiguousarray(payload["amplitudes"], dtype="<c16")
        tmp = self.dir / "state.raw.tmp"
        tmp.write_bytes(amps.tobytes())
        manifest = {
            "version": CHECKPOINT_VERSION,
            "scenario_hash": self.hash,
            "step": int(payload["step"]),
            "t": float(payload["t"]),
            "n": int(amps.size),
            "snapshots": [_snapshot_to_jsonable(s) for s in payload["snapshots"]],
            "bath_rows": [list(row) for row in payload.get("bath_rows", [])],
        }
        if "bath_x" in payload:
            manifest["bath_x"] = [float(v) for v in payload["bath_x"]]
            manifest["bath_p"] = [float(v) for v in payload["bath_p"]]
        mtmp = self.dir / "manifest.json.tmp"
        mtmp.write_text(json.dumps(manifest))
        # rename last so a torn write never looks like a valid checkpoint
        tmp.rename(self.dir / "state.raw")
        mtmp.rename(self.dir / "manifest.json")

    def load(self) -> Optional[dict]:
        manifest_path = self.dir / "manifest.json"
        state_path = self.dir / "state.raw"
        if not manifest_path.exists() or not state_path.exists():
            return None
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
        if manifest["scenario_hash"] != self.hash:
            raise ValueError(
                "checkpoint belongs to a different scenario "
                f"(hash {manifest['scenario_hash'][:12]}... != {self.hash[:12]}...)"
            )
        amps = np.frombuffer(state_path.read_bytes(), dtype="<c16").copy()
        if amps.size != manifest["n"]:
            raise ValueError("checkpoint state size does not match its manifest")
        out = {
            "amplitudes": amps,
            "step": manifest["step"],
            "t": manifest["t"],
            "snapshots": [_snapshot_from_jsonable(d) for d in manifest["snapshots"]],
            "bath_rows": [tuple(r) for r in manifest["bath_rows"]],
        }
        if "bath_x" in manifest:
            out["bath_x"] = np.asarray(manifest["bath_x"], dtype=float)
            out["bath_p"] = np.asarray(manifest["bath_p"], dtype=float)
        return out


class SweepCheckpoint:
    """Row-granular resume for a fluorescence-frequency sweep.

    Completed omega' rows (times and P values, plus the reference run's
    snapshot stream) are persisted under <dir>/rows/ as they finish; a resumed
    sweep skips them and recomputes only the missing rows.
    """

    def __init__(self, directory, scenario: Scenario):
        self.dir = Path(directory)
        self.rows_dir = self.dir / "rows"
        self.hash = scenario_hash(scenario)

    def _row_path(self, index: int) -> Path:
        return self.rows_dir / f"row_{index:04d}.json"

    def save_row(self, index: int, run) -> None:
        self.rows_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "scenario_hash": self.hash,
            "omega_prime": float(run.omega_prime),
            "times": [float(t) for t in run.times],
            "p_fluor": [float(p) for p in run.p_fluor],
            "snapshots": [_snapshot_to_jsonable(s) for s in run.snapshots],
        }
        tmp = self._row_path(index).with_suffix(".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.rename(self._row_path(index))

    def load_rows(self) -> dict[int, dict]:
        if not self.rows_dir.exists():
            return {}
        rows = {}
        for path in sorted(self.rows_dir.glob("row_*.json")):
            doc = json.loads(path.read_text())
            if doc["scenario_hash"] != self.hash:
                raise ValueError(f"{path}: belongs to a different scenario")
            index = int(path.stem.split("_")[1])
            rows[index] = doc
        return rows


def sweep_with_resume(
    scenario: Scenario,
    workers: int = 1,
    checkpoint: Optional[SweepCheckpoint] = None,
    with_density: bool = True,
) -> SpectrumResult:
    """sweep_spectrum with row-granular resume.

    Identical output to an uninterrupted sweep: each omega' row is an
    independent deterministic job, persisted as it completes and skipped on
    resume.
    """
    import multiprocessing

    from .scenarios import RunResult, _sweep_job, reference_index, resolve_drive

    scan = np.asarray(scenario.omega_scan, dtype=float)
    done = checkpoint.load_rows() if checkpoint is not None else {}
    ref = reference_index(scan, scenario.omega0)

    runs: dict[int, RunResult] = {}
    for i, doc in done.items():
        runs[i] = RunResult(
            omega_prime=doc["omega_prime"],
            times=np.asarray(doc["times"]),
            p_fluor=np.asarray(doc["p_fluor"]),
            snapshots=[_snapshot_from_jsonable(d) for d in doc["snapshots"]],
            final_state=None,
            drive=None,
        )

    pending = [i for i in range(len(scan)) if i not in runs]
    failures: dict[float, str] = {}
    if pending:
        drive = resolve_drive(scenario)
        jobs = [
            (scenario, float(scan[i]), drive, with_density and i == ref)
            for i in pending
        ]
        if workers > 1 and len(jobs) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(processes=workers) as pool:
                outputs = pool.map(_sweep_job, jobs)
        else:
            outputs = [_sweep_job(j) for j in jobs]
        for i, (w, res, err) in zip(pending, outputs):
            if err is not None:
                failures[w] = err
                continue
            runs[i] = res
            if checkpoint is not None:
                checkpoint.save_row(i, res)

    if not runs:
        raise RuntimeError(f"every omega' job failed: {failures}")
    any_run = runs[min(runs)]
    times = any_run.times
    p = np.full((len(scan), len(times)), np.nan)
    for i, res in runs.items():
        p[i, :] = res.p_fluor
    reference = runs.get(ref, any_run)
    return SpectrumResult(scan, times, p, reference, scenario, failures)
