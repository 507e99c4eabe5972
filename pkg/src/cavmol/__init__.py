"""Exact wavefunction dynamics of a diatomic molecule (or TLS) in a pumped,
leaky optical cavity, with a scanned fluorescence mode."""

from .bath import BathParams, BathState, bath_feedback_term, coupling_constants, verlet_step
from .hilbert import (
    HilbertSpace,
    SpaceShape,
    StateVector,
    build_space,
    inner,
    marginal_probability,
)
from .model import (
    CouplingParams,
    DimerModel,
    DriveEnvelope,
    Hamiltonian,
    MolecularParams,
    RadiationParams,
    TwoLevelModel,
    apply_dipole,
    apply_drive,
    apply_h_int,
    apply_h_mol,
    apply_h_rad,
    bo_surface,
    electronic_eigs_analytic,
    resonance_frequency,
    spin_squared,
)
from .observables import (
    Snapshot,
    dissociation_probability,
    excited_population,
    fluorescence_probability,
    nuclear_density,
    photon_number,
    total_parity,
)
from .propagator import (
    GroundStateResult,
    KrylovConfig,
    dense_expm_reference,
    ground_state,
    krylov_step,
)
from .io import (
    Checkpointer,
    ConfigError,
    RunConfig,
    SweepCheckpoint,
    parse_config,
    read_snapshots,
    read_spectrum,
    render_config,
    scenario_hash,
    sweep_with_resume,
    write_spectrum,
)
from .scenarios import (
    CoherentInit,
    Dissipation,
    PumpInit,
    RunResult,
    Scenario,
    SpectrumResult,
    calibrate_pump,
    coherent_initial_state,
    convergence_check,
    default_scan,
    detect_peaks,
    run_single,
    sweep_spectrum,
)

__version__ = "0.1.0"
