"""Command-line surface: run scenarios, calibrations and diagnostics."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import (
    ConfigError,
    RunConfig,
    SweepCheckpoint,
    parse_config,
    render_config,
    sweep_with_resume,
    write_spectrum,
)
from .scenarios import calibrate_pump, convergence_check


def _load_config(path: str) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(p.read_text())


def _out_dir(args, config: RunConfig) -> Path:
    out = args.out or config.out_dir or "run"
    return Path(out)


def _workers(args, config: RunConfig) -> int:
    return args.workers if args.workers is not None else config.workers


def cmd_ground_state(args) -> int:
    from .hilbert import build_space
    from .model import CouplingParams, Hamiltonian, RadiationParams
    from .propagator import ground_state

    config = _load_config(args.config)
    sc = config.scenario
    space = build_space(sc.space)
    ham = Hamiltonian(
        space,
        sc.model,
        RadiationParams(omega0=sc.omega0, omega_f=float(sc.omega_scan[len(sc.omega_scan) // 2])),
        sc.couplings(),
    )
    res = ground_state(ham.matvec(0.0), space, seed=sc.seed)
    print(f"ground-state energy: {res.energy:.12e}")
    print(f"residual: {res.residual:.3e}")
    if args.out:
        out = _out_dir(args, config)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ground_state.txt").write_text(
            f"energy,{res.energy:.16e}\nresidual,{res.residual:.16e}\n"
        )
        (out / "provenance.txt").write_text(f"# cavmol {__version__}\n" + render_config(config))
    return 0


def cmd_spectrum(args) -> int:
    config = _load_config(args.config)
    out = _out_dir(args, config)
    checkpoint = None
    if args.resume:
        checkpoint = SweepCheckpoint(args.resume, config.scenario)
    result = sweep_with_resume(
        config.scenario, workers=_workers(args, config), checkpoint=checkpoint
    )
    files = write_spectrum(result, out, config)
    for f in files:
        print(f"wrote {f}")
    if result.failures:
        for w, msg in sorted(result.failures.items()):
            print(f"failed omega'={w}: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_calibrate_pump(args) -> int:
    config = _load_config(args.config)
    sc = config.scenario
    from .scenarios import PumpInit

    if not isinstance(sc.init, PumpInit):
        raise ConfigError("calibrate-pump requires init.kind = pump")
    if sc.init.target_n is None:
        raise ConfigError("calibrate-pump requires init.target_n")
    drive = calibrate_pump(sc, sc.init.target_n)
    print(f"calibrated g_d: {drive.g_d:.12e}")
    if args.out:
        out = _out_dir(args, config)
        out.mkdir(parents=True, exist_ok=True)
        (out / "calibration.txt").write_text(f"g_d,{drive.g_d:.16e}\n")
    return 0


def cmd_bo_surface(args) -> int:
    from .model import DimerModel, bo_surface

    config = _load_config(args.config)
    sc = config.scenario
    if not isinstance(sc.model, DimerModel):
        raise ConfigError("bo-surface requires model.kind = dimer")
    shape = sc.space
    if shape.n_grid > 1:
        x = np.linspace(shape.grid_min, shape.grid_max, shape.n_grid)
    else:
        x = np.linspace(0.5, 8.0, 256)
    e = bo_surface(x, sc.model.params)
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bo_surface.csv"
    with open(path, "w", newline="") as fh:
        fh.write("x,energy\n")
        for xi, ei in zip(x, e):
            fh.write(f"{xi:.16e},{ei:.16e}\n")
    print(f"wrote {path}")
    print(f"minimum at x = {x[int(np.argmin(e))]:.6f}, energy {float(np.min(e)):.6f}")
    return 0


def cmd_oracle_compare(args) -> int:
    from .hilbert import SpaceShape, StateVector, build_space
    from .propagator import KrylovConfig, dense_expm_reference, krylov_step

    n = args.n
    rng = np.random.default_rng(args.seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (a + a.conj().T) / (2.0 * np.sqrt(n))
    space = build_space(SpaceShape(1, n, 1, 1))
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    state = StateVector(space, v).normalized()
    worst = 0.0
    for dt in (0.01, 0.05, 0.1):
        out = krylov_step(
            state, lambda vv, t: h @ vv, 0.0, KrylovConfig(dt=dt, m=min(40, n), tol=1e-12)
        )
        ref = dense_expm_reference(h, state, dt)
        worst = max(worst, float(np.linalg.norm(out.amplitudes - ref.amplitudes)))
    print(f"max deviation vs dense oracle (N={n}): {worst:.3e}")
    if worst >= 1e-10:
        print("OracleMismatch: Krylov step deviates from the dense reference", file=sys.stderr)
        return 1
    return 0


def cmd_convergence(args) -> int:
    config = _load_config(args.config)
    knobs = ["n_cav", "n_flu", "dt"]
    if config.scenario.space.n_grid > 1:
        knobs.append("n_grid")
    report = convergence_check(config.scenario, knobs=knobs, workers=_workers(args, config))
    ok = True
    for knob, dev in report.items():
        verdict = "ok" if dev < 0.01 else "NOT CONVERGED"
        ok = ok and dev < 0.01
        print(f"{knob}: relative deviation {dev:.3e} [{verdict}]")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavmol",
        description="Exact wavefunction simulation of a molecule in a lossy cavity.",
    )
    parser.add_argument("--version", action="version", version=f"cavmol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a YAML run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel workers (default: config or $CAVMOL_WORKERS)")

    p = sub.add_parser("ground-state", help="interacting ground state of the configured system")
    common(p)
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("spectrum", help="fluorescence-frequency sweep, writes the CSV set")
    common(p)
    p.add_argument("--resume", help="sweep checkpoint directory to resume from / write to")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("calibrate-pump", help="bisect the drive amplitude to a target photon number")
    common(p)
    p.set_defaults(func=cmd_calibrate_pump)

    p = sub.add_parser("bo-surface", help="Born-Oppenheimer ground surface of the dimer")
    common(p)
    p.set_defaults(func=cmd_bo_surface)

    p = sub.add_parser("oracle-compare", help="Krylov step vs dense eigendecomposition oracle")
    p.add_argument("--n", type=int, default=256, help="Hilbert-space dimension")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("convergence", help="doubling protocol on the configured scenario")
    common(p)
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
