"""Run orchestration: initial states, pump calibration, the parallel
fluorescence-frequency sweep, peak detection and the convergence protocol."""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import find_peaks

from .bath import BathParams, BathState, bath_feedback_term, verlet_step
from .hilbert import HilbertSpace, SpaceShape, StateVector, build_space
from .model import (
    CouplingParams,
    DimerModel,
    DriveEnvelope,
    ElectronicModel,
    Hamiltonian,
    MolecularParams,
    RadiationParams,
    TwoLevelModel,
    electronic_block,
    resonance_frequency,
)
from .observables import Snapshot, quadrature_expectation, take_snapshot
from .propagator import KrylovConfig, ground_state, krylov_step


class CutoffTooSmallError(ValueError):
    """Raised when a Fock cutoff cannot hold the requested coherent state."""

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


class PumpCalibrationError(RuntimeError):
    def __init__(self, message: str, history: list):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class CoherentInit:
    """Product start |g_m> |beta>_c |0>_f."""

    beta: float


@dataclass(frozen=True)
class PumpInit:
    """Full interacting ground state, then a classical cavity pump.

    If target_n is set and g_d is 0, the drive amplitude is calibrated by
    bisection before the run.
    """

    envelope: DriveEnvelope
    target_n: Optional[float] = None


InitSpec = Union[CoherentInit, PumpInit]


@dataclass(frozen=True)
class Dissipation:
    kind: str = "none"  # "none" | "exponential" | "bath"
    gamma: float = 0.0
    bath: Optional[BathParams] = None

    def __post_init__(self):
        if self.kind not in ("none", "exponential", "bath"):
            raise ValueError(f"unknown dissipation kind {self.kind!r}")
        if self.kind == "exponential" and self.gamma <= 0:
            raise ValueError("exponential dissipation requires gamma > 0")
        if self.kind == "bath" and self.bath is None:
            raise ValueError("bath dissipation requires bath parameters")


@dataclass(frozen=True)
class Scenario:
    """A reproducible run description."""

    model: ElectronicModel
    space: SpaceShape
    omega0: float
    g_c: float
    g_f: float
    init: InitSpec
    dissipation: Dissipation
    t_end: float
    omega_scan: tuple
    krylov: KrylovConfig = KrylovConfig()
    snapshot_every: int = 50
    r_cut: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        scan = np.asarray(self.omega_scan, dtype=float)
        if scan.ndim != 1 or len(scan) == 0:
            raise ValueError("omega_scan must be a non-empty 1D sequence")
        if len(scan) > 1 and not np.all(np.diff(scan) > 0):
            raise ValueError("omega_scan must be strictly increasing")
        if isinstance(self.init, PumpInit) and self.init.target_n is not None:
            if self.init.target_n < 0:
                raise ValueError("target photon number must be >= 0")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    def couplings(self) -> CouplingParams:
        gamma = self.dissipation.gamma if self.dissipation.kind == "exponential" else 0.0
        return CouplingParams(
            g_c=self.g_c,
            g_f=self.g_f,
            gamma=gamma,
            bath_enabled=self.dissipation.kind == "bath",
        )

    def dissociation_cut(self) -> Optional[float]:
        if self.space.n_grid <= 1:
            return None
        if self.r_cut is not None:
            return self.r_cut
        if isinstance(self.model, DimerModel):
            return 4.0 * self.model.params.r_fixed
        return None


@dataclass
class RunResult:
    """Snapshot stream of one propagation at a fixed fluorescence frequency."""

    omega_prime: float
    times: np.ndarray
    p_fluor: np.ndarray
    snapshots: list
    final_state: StateVector
    drive: Optional[DriveEnvelope]
    bath_trace: Optional[np.ndarray] = None  # columns (t, f, bath energy)


@dataclass
class SpectrumResult:
    """P(omega', t) surface plus auxiliary traces and full provenance."""

    omega_scan: np.ndarray
    times: np.ndarray
    p: np.ndarray  # shape (n_omega, n_times)
    reference_run: RunResult
    scenario: Scenario
    failures: dict = field(default_factory=dict)  # omega' -> error message


def default_scan(omega0: float, omega_r: float, n_points: int = 80) -> np.ndarray:
    """80 points spanning [0.2, 1.6] x max(omega0, Omega_R)."""
    top = max(omega0, omega_r)
    return np.linspace(0.2 * top, 1.6 * top, n_points)


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------


def coherent_amplitudes(beta: float, cutoff: int) -> np.ndarray:
    """Truncated coherent-state amplitudes exp(-beta^2/2) beta^n / sqrt(n!)."""
    n = np.arange(cutoff)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, cutoff)))))
    if beta == 0.0:
        amps = np.zeros(cutoff)
        amps[0] = 1.0
        return amps
    log_amps = -0.5 * beta**2 + n * math.log(beta) - 0.5 * log_fact
    return np.exp(log_amps)


def molecular_ground_state(model: ElectronicModel, space: HilbertSpace) -> tuple[float, np.ndarray]:
    """Ground state of the uncoupled matter Hamiltonian on (electronic x grid).

    Returns (energy, array of shape (n_elec, n_grid)).
    """
    shape = space.shape
    if isinstance(model, TwoLevelModel):
        vec = np.zeros((2, shape.n_grid))
        vec[0, 0] = 1.0
        return 0.0, vec
    params = model.params
    if shape.n_grid == 1:
        h4 = electronic_block(float(params.v_eff(params.r_fixed)), params.hubbard_u)
        evals, evecs = np.linalg.eigh(h4)
        return float(evals[0]), evecs[:, 0].reshape(4, 1)
    x = space.grid
    n_r = shape.n_grid
    kin = np.zeros((n_r, n_r))
    k = 1.0 / (params.mass * space.dx**2)
    np.fill_diagonal(kin, 2.0 * k)
    idx = np.arange(n_r - 1)
    kin[idx, idx + 1] = -k
    kin[idx + 1, idx] = -k
    pot = np.diag(params.repulsion_c / x**4)
    from .model import DOCC4, HOP4

    h = (
        np.kron(params.hubbard_u * np.diag(DOCC4), np.eye(n_r))
        + np.kron(np.eye(4), kin + pot)
        - np.kron(HOP4, np.diag(params.v_eff(x)))
    )
    if h.shape[0] <= 3200:
        evals, evecs = np.linalg.eigh(h)
        e0, v0 = float(evals[0]), evecs[:, 0]
    else:
        from scipy.sparse import csr_matrix
        from scipy.sparse.linalg import eigsh

        evals, evecs = eigsh(csr_matrix(h), k=1, which="SA")
        e0, v0 = float(evals[0]), evecs[:, 0]
    return e0, v0.reshape(4, n_r)


def coherent_initial_state(
    beta: float,
    space: HilbertSpace,
    model: ElectronicModel,
    deficit_tol: float = 1e-8,
) -> StateVector:
    """|g_m> (x) |beta>_cavity (x) |0>_fluorescence, truncated and renormalized."""
    shape = space.shape
    cav = coherent_amplitudes(beta, shape.n_cav)
    deficit = 1.0 - float(np.sum(cav**2))
    if deficit > deficit_tol:
        raise CutoffTooSmallError(
            f"cavity cutoff {shape.n_cav} truncates |beta={beta}> with norm deficit "
            f"{deficit:.3e} > {deficit_tol:.1e}",
            deficit,
        )
    _, matter = molecular_ground_state(model, space)
    flu = np.zeros(shape.n_flu)
    flu[0] = 1.0
    tensor = (
        matter[:, None, None, :]
        * cav[None, :, None, None]
        * flu[None, None, :, None]
    )
    return StateVector(space, tensor).normalized()


def _system_hamiltonian(scenario: Scenario, omega_prime: float, drive=None) -> Hamiltonian:
    space = build_space(scenario.space)
    rad = RadiationParams(omega0=scenario.omega0, omega_f=omega_prime)
    return Hamiltonian(space, scenario.model, rad, scenario.couplings(), drive=drive)


def prepare_initial_state(scenario: Scenario, omega_prime: float) -> StateVector:
    """Initial state per the scenario's init mode (drive not yet applied)."""
    space = build_space(scenario.space)
    if isinstance(scenario.init, CoherentInit):
        return coherent_initial_state(scenario.init.beta, space, scenario.model)
    ham = _system_hamiltonian(scenario, omega_prime)
    mv = ham.matvec(0.0)
    result = ground_state(mv, space, seed=scenario.seed)
    return result.state


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def run_single(
    scenario: Scenario,
    omega_prime: float,
    drive: Optional[DriveEnvelope] = None,
    t_end: Optional[float] = None,
    initial_state: Optional[StateVector] = None,
    with_density: bool = False,
    record_bath: bool = False,
    checkpointer=None,
) -> RunResult:
    """Propagate one scenario at a fixed fluorescence frequency omega'.

    Per step, the Ehrenfest interleave is: evaluate the photon quadratures and
    the bath feedback f(t) from the current state, take one SIL step with f and
    the drive/damping scalars frozen (midpoint for the scalars), then advance
    the bath one Verlet step with the frozen quadratures.
    """
    if drive is None and isinstance(scenario.init, PumpInit):
        drive = resolve_drive(scenario, omega_prime)
    t_end = scenario.t_end if t_end is None else t_end
    cfg = scenario.krylov
    n_steps = max(1, int(round(t_end / cfg.dt)))
    ham_full = _system_hamiltonian(scenario, omega_prime, drive=drive)
    ham_sys = ham_full if drive is None else _system_hamiltonian(scenario, omega_prime)
    dims = scenario.space.dims
    r_cut = scenario.dissociation_cut()

    bath = None
    if scenario.dissipation.kind == "bath":
        bath = BathState.at_rest(scenario.dissipation.bath)

    state = initial_state if initial_state is not None else prepare_initial_state(scenario, omega_prime)
    step0 = 0
    snapshots: list[Snapshot] = []
    bath_rows: list[tuple] = []

    if checkpointer is not None:
        loaded = checkpointer.load()
        if loaded is not None:
            state = StateVector(state.space, loaded["amplitudes"])
            step0 = loaded["step"]
            snapshots = loaded["snapshots"]
            bath_rows = loaded.get("bath_rows", [])
            if bath is not None:
                bath = BathState(bath.params, loaded["bath_x"], loaded["bath_p"], loaded["t"])

    def observe(step: int):
        t = step * cfg.dt
        energy = ham_sys.expectation(state, t)
        snapshots.append(
            take_snapshot(state, t, scenario.model, energy, r_cut=r_cut, with_density=with_density)
        )
        if record_bath and bath is not None:
            f = bath_feedback_term(bath)
            q = quadrature_expectation(state, "cavity") + quadrature_expectation(state, "fluorescence")
            bath_rows.append((t, f, bath.energy(), -f * q))

    if step0 == 0:
        observe(0)

    for step in range(step0, n_steps):
        t = step * cfg.dt
        if bath is not None:
            q = quadrature_expectation(state, "cavity") + quadrature_expectation(state, "fluorescence")
            f = bath_feedback_term(bath)
        else:
            q, f = 0.0, 0.0
        apply_h = lambda v, tt: ham_full.apply_tensor(v.reshape(dims), tt, f).reshape(-1)
        state = krylov_step(state, apply_h, t, cfg)
        if bath is not None:
            bath = verlet_step(bath, q, cfg.dt)
        done = step + 1
        if done % scenario.snapshot_every == 0 or done == n_steps:
            observe(done)
        if checkpointer is not None and checkpointer.due(done) and done < n_steps:
            payload = {
                "amplitudes": state.amplitudes,
                "step": done,
                "t": done * cfg.dt,
                "snapshots": snapshots,
                "bath_rows": bath_rows,
            }
            if bath is not None:
                payload["bath_x"] = bath.x
                payload["bath_p"] = bath.p
            checkpointer.save(payload)

    times = np.array([s.t for s in snapshots])
    p_fluor = np.array([s.p_fluor for s in snapshots])
    trace = np.array(bath_rows) if bath_rows else None
    return RunResult(omega_prime, times, p_fluor, snapshots, state, drive, trace)


# ---------------------------------------------------------------------------
# pump calibration
# ---------------------------------------------------------------------------


def _pump_photon_number(scenario: Scenario, g_d: float, envelope: DriveEnvelope, omega_prime: float,
                        initial_state: StateVector) -> float:
    from .observables import photon_number

    drive = replace(envelope, g_d=g_d)
    res = run_single(
        scenario,
        omega_prime,
        drive=drive,
        t_end=drive.off_time,
        initial_state=initial_state.copy(),
    )
    return photon_number(res.final_state, "cavity")


def calibrate_pump(
    scenario: Scenario,
    target_n: float,
    envelope: Optional[DriveEnvelope] = None,
    omega_prime: Optional[float] = None,
    rel_tol: float = 0.02,
    max_probes: int = 40,
) -> DriveEnvelope:
    """Bisection on the drive amplitude so <b+ b> at shut-off hits target_n.

    Each probe is a full propagation up to the envelope's off time.
    """
    if envelope is None:
        if not isinstance(scenario.init, PumpInit):
            raise ValueError("calibrate_pump needs a pump envelope")
        envelope = scenario.init.envelope
    if target_n == 0.0:
        return replace(envelope, g_d=0.0)
    if omega_prime is None:
        omega_prime = float(scenario.omega_scan[len(scenario.omega_scan) // 2])
    initial = prepare_initial_state(scenario, omega_prime)
    history: list[tuple[float, float]] = []

    def probe(g: float) -> float:
        n = _pump_photon_number(scenario, g, envelope, omega_prime, initial)
        history.append((g, n))
        return n

    g_hi = envelope.g_d if envelope.g_d > 0 else 0.1
    n_hi = probe(g_hi)
    grows = 0
    while n_hi < target_n and grows < 20:
        g_hi *= 2.0
        n_hi = probe(g_hi)
        grows += 1
    if n_hi < target_n:
        raise PumpCalibrationError(
            f"could not bracket target n={target_n}: reached n={n_hi:.4g} at g_d={g_hi:.4g}",
            history,
        )
    g_lo, n_lo = 0.0, 0.0
    for _ in range(max_probes):
        g_mid = 0.5 * (g_lo + g_hi)
        n_mid = probe(g_mid)
        if abs(n_mid - target_n) <= rel_tol * target_n:
            return replace(envelope, g_d=g_mid)
        if n_mid < target_n:
            g_lo, n_lo = g_mid, n_mid
        else:
            g_hi, n_hi = g_mid, n_mid
    raise PumpCalibrationError(
        f"bisection did not converge to {rel_tol:.0%} of target n={target_n} "
        f"after {max_probes} probes (last bracket [{g_lo:.6g}, {g_hi:.6g}])",
        history,
    )


def resolve_drive(scenario: Scenario, omega_prime: Optional[float] = None) -> Optional[DriveEnvelope]:
    """The drive envelope actually used: calibrated if target_n is set and g_d is 0."""
    if not isinstance(scenario.init, PumpInit):
        return None
    env = scenario.init.envelope
    if scenario.init.target_n is not None and env.g_d == 0.0:
        return calibrate_pump(scenario, scenario.init.target_n, env, omega_prime)
    return env


# ---------------------------------------------------------------------------
# the omega' sweep
# ---------------------------------------------------------------------------


def _sweep_job(args):
    scenario, omega_prime, drive, with_density = args
    try:
        res = run_single(scenario, omega_prime, drive=drive, with_density=with_density)
        return (omega_prime, res, None)
    except Exception as exc:  # per-omega' failures must not abort the sweep
        return (omega_prime, None, f"{type(exc).__name__}: {exc}")


def reference_index(scan: Sequence[float], omega0: float) -> int:
    scan = np.asarray(scan, dtype=float)
    return int(np.argmin(np.abs(scan - omega0)))


def sweep_spectrum(scenario: Scenario, workers: int = 1, with_density: bool = True) -> SpectrumResult:
    """One full propagation per omega' in the scan; rows are P(omega', t).

    Deterministic for a fixed configuration: every job is independent and
    results are merged by scan index.
    """
    scan = np.asarray(scenario.omega_scan, dtype=float)
    drive = resolve_drive(scenario)
    ref = reference_index(scan, scenario.omega0)
    jobs = [
        (scenario, float(w), drive, with_density and i == ref)
        for i, w in enumerate(scan)
    ]
    if workers > 1 and len(jobs) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            outputs = pool.map(_sweep_job, jobs)
    else:
        outputs = [_sweep_job(j) for j in jobs]

    failures: dict[float, str] = {}
    runs: dict[int, RunResult] = {}
    for i, (w, res, err) in enumerate(outputs):
        if err is not None:
            failures[w] = err
        else:
            runs[i] = res
    if not runs:
        raise RuntimeError(f"every omega' job failed: {failures}")
    any_run = runs[min(runs)]
    times = any_run.times
    p = np.full((len(scan), len(times)), np.nan)
    for i, res in runs.items():
        p[i, :] = res.p_fluor
    reference = runs.get(ref, any_run)
    return SpectrumResult(scan, times, p, reference, scenario, failures)


# ---------------------------------------------------------------------------
# peak detection and convergence protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Peak:
    index: int
    omega: float
    height: float
    prominence: float


def detect_peaks(row: np.ndarray, scan: Sequence[float], min_prominence: float) -> list[Peak]:
    """Local maxima of a spectrum row above an absolute prominence threshold."""
    row = np.asarray(row, dtype=float)
    scan = np.asarray(scan, dtype=float)
    idx, props = find_peaks(row, prominence=min_prominence)
    return [
        Peak(int(i), float(scan[i]), float(row[i]), float(pr))
        for i, pr in zip(idx, props["prominences"])
    ]


def _doubled(scenario: Scenario, which: str) -> Scenario:
    sp = scenario.space
    if which == "n_cav":
        return replace(scenario, space=replace(sp, n_cav=2 * sp.n_cav))
    if which == "n_flu":
        return replace(scenario, space=replace(sp, n_flu=2 * sp.n_flu))
    if which == "n_grid":
        if sp.n_grid <= 1:
            raise ValueError("n_grid doubling needs a grid run")
        return replace(scenario, space=replace(sp, n_grid=2 * sp.n_grid))
    if which == "dt":
        cfg = scenario.krylov
        return replace(
            scenario,
            krylov=replace(cfg, dt=cfg.dt / 2.0),
            snapshot_every=2 * scenario.snapshot_every,
        )
    raise ValueError(f"unknown convergence knob {which!r}")


def convergence_check(
    scenario: Scenario,
    knobs: Sequence[str] = ("n_cav", "n_flu", "dt"),
    workers: int = 1,
    rel_limit: float = 0.01,
) -> dict:
    """Doubling protocol: each knob doubled individually must change
    P(omega', t) by less than rel_limit of its maximum.

    Returns {knob: relative max deviation}; scan and snapshot times are held
    aligned across variants.
    """
    base = sweep_spectrum(scenario, workers=workers, with_density=False)
    scale = float(np.nanmax(base.p))
    report: dict[str, float] = {}
    for knob in knobs:
        variant = sweep_spectrum(_doubled(scenario, knob), workers=workers, with_density=False)
        if variant.p.shape != base.p.shape or not np.allclose(variant.times, base.times):
            raise RuntimeError(f"variant {knob} produced misaligned snapshot times")
        dev = float(np.nanmax(np.abs(variant.p - base.p)))
        report[knob] = dev / scale if scale > 0 else dev
    return report


def scenario_resonance(scenario: Scenario) -> float:
    """Omega_R of the scenario's electronic model (TLS: the gap)."""
    if isinstance(scenario.model, TwoLevelModel):
        return scenario.model.gap
    p = scenario.model.params
    return resonance_frequency(p.hubbard_u, float(p.v_eff(p.r_fixed)))
