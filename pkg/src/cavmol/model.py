"""Matrix-free Hamiltonian terms for the molecule + two photon modes.

Electronic sector conventions (dimer): two-electron basis states are
c+_{i,up} c+_{j,down} |vac> in the fixed order

    (1u1d, 1u2d, 2u1d, 2u2d)

and every 4x4 operator matrix below is derived once from that ordering.
The TLS variant uses the two levels {|0>, |1>} with the level-swap dipole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .hilbert import HilbertSpace, StateVector

# Hopping sum_sigma (c+_1s c_2s + h.c.) in the two-electron basis.
HOP4 = np.array(
    [
        [0.0, 1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 1.0, 0.0],
    ]
)

# Double occupancy sum_i n_{i,up} n_{i,down}: sites doubly occupied in b0, b3.
DOCC4 = np.array([1.0, 0.0, 0.0, 1.0])

# Dipole M = sum_sigma (n_{1s} - n_{2s}); diagonal in the site basis.
DIPOLE4 = np.array([2.0, 0.0, 0.0, -2.0])

# Total spin squared; nonzero only on the {1u2d, 2u1d} block,
# with the triplet combination (b1 - b2)/sqrt(2) at S(S+1) = 2.
SPIN2_4 = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
        [0.0, -1.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)

# Site swap 1 <-> 2 (spatial parity).
PARITY4 = np.array(
    [
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ]
)

SWAP2 = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class MolecularParams:
    """Physical constants of the dimer molecule (model units)."""

    mass: float  # atomic mass M; reduced mass is M/2
    repulsion_c: float = 0.6  # inter-atomic repulsion C in C/x^4
    hubbard_u: float = 1.0  # intra-orbital repulsion U
    hopping_v: float = -2.0  # bare hopping amplitude V
    hopping_decay: float = 0.6  # attenuation lambda in V exp(-lambda x)
    r_fixed: float = 1.156  # coordinate used when n_grid = 1

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.repulsion_c <= 0:
            raise ValueError(f"repulsion_c must be positive, got {self.repulsion_c}")
        if self.hopping_decay <= 0:
            raise ValueError(f"hopping_decay must be positive, got {self.hopping_decay}")

    def v_eff(self, x: float | np.ndarray):
        """Effective hopping V exp(-lambda x)."""
        return self.hopping_v * np.exp(-self.hopping_decay * x)


@dataclass(frozen=True)
class RadiationParams:
    """Cavity and fluorescence mode frequencies."""

    omega0: float
    omega_f: float

    def __post_init__(self):
        if self.omega0 < 0 or self.omega_f < 0:
            raise ValueError("mode frequencies must be non-negative")


@dataclass(frozen=True)
class CouplingParams:
    """Light-matter couplings and the exponential damping of g'(t)."""

    g_c: float
    g_f: float
    gamma: float = 0.0  # Gamma in g'(t) = g_f exp(-Gamma t); 0 disables
    bath_enabled: bool = False

    def __post_init__(self):
        if self.g_f < 0:
            raise ValueError("g_f must be non-negative")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    def g_fluor(self, t: float) -> float:
        return self.g_f * math.exp(-self.gamma * t) if self.gamma > 0 else self.g_f


@dataclass(frozen=True)
class DriveEnvelope:
    """Classical pump on the cavity mode: E(t) cos(carrier * t) (b+ + b).

    mode 'trapezoid': linear ramp on [0, t1], hold g_d until t2, then off.
    mode 'sudden': hold g_d on [0, ts), then off.
    """

    g_d: float
    mode: str  # "trapezoid" | "sudden"
    carrier: float
    t1: float = 0.0
    t2: float = 0.0
    ts: float = 0.0

    def __post_init__(self):
        if self.mode not in ("trapezoid", "sudden"):
            raise ValueError(f"unknown drive mode {self.mode!r}")
        if self.g_d < 0:
            raise ValueError("g_d must be non-negative")
        if self.mode == "trapezoid" and not (0 <= self.t1 <= self.t2):
            raise ValueError("trapezoid requires 0 <= t1 <= t2")
        if self.mode == "sudden" and self.ts < 0:
            raise ValueError("sudden requires ts >= 0")

    @property
    def off_time(self) -> float:
        return self.t2 if self.mode == "trapezoid" else self.ts

    def envelope(self, t: float) -> float:
        if t < 0:
            return 0.0
        if self.mode == "trapezoid":
            if t >= self.t2:
                return 0.0
            if t < self.t1:
                return self.g_d * t / self.t1 if self.t1 > 0 else self.g_d
            return self.g_d
        return self.g_d if t < self.ts else 0.0

    def amplitude(self, t: float) -> float:
        """Instantaneous drive amplitude E(t) cos(carrier * t)."""
        e = self.envelope(t)
        return e * math.cos(self.carrier * t) if e else 0.0


@dataclass(frozen=True)
class DimerModel:
    """Two-site, two-electron molecule (4-dim electronic sector)."""

    params: MolecularParams

    @property
    def n_elec(self) -> int:
        return 4


@dataclass(frozen=True)
class TwoLevelModel:
    """Two-level system with levels |0>, |1> separated by `gap`."""

    gap: float

    def __post_init__(self):
        if self.gap <= 0:
            raise ValueError("TLS gap must be positive")

    @property
    def n_elec(self) -> int:
        return 2


ElectronicModel = Union[DimerModel, TwoLevelModel]


# ---------------------------------------------------------------------------
# low-level kernels on 4D tensors (electronic, cavity, fluorescence, grid)
# ---------------------------------------------------------------------------

_ROOT_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _quadrature_root(dim: int, axis: int) -> np.ndarray:
    key = (dim, axis)
    root = _ROOT_CACHE.get(key)
    if root is None:
        shape = [1, 1, 1, 1]
        shape[axis] = dim - 1
        root = np.sqrt(np.arange(1, dim, dtype=float)).reshape(shape)
        _ROOT_CACHE[key] = root
    return root


def _add_quadrature(out: np.ndarray, psi: np.ndarray, axis: int, coeff: complex) -> None:
    """out += coeff * (a+ + a) psi along a bosonic axis, truncated at the cutoff."""
    dim = psi.shape[axis]
    if dim == 1 or coeff == 0:
        return
    root = _quadrature_root(dim, axis)
    lo = [slice(None)] * 4
    hi = [slice(None)] * 4
    lo[axis] = slice(0, dim - 1)
    hi[axis] = slice(1, dim)
    lo, hi = tuple(lo), tuple(hi)
    out[lo] += (coeff * root) * psi[hi]  # annihilation
    out[hi] += (coeff * root) * psi[lo]  # creation


def _apply_elec_matrix(mat: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.tensordot(mat, psi, axes=(1, 0))


def _dipole_tensor(model: ElectronicModel, psi: np.ndarray) -> np.ndarray:
    if isinstance(model, DimerModel):
        return DIPOLE4.reshape(4, 1, 1, 1) * psi
    return psi[::-1]  # level swap


# ---------------------------------------------------------------------------
# operator application on StateVectors
# ---------------------------------------------------------------------------


def _h_mol_tensor(psi: np.ndarray, params: MolecularParams, space: HilbertSpace, out: np.ndarray) -> None:
    n_grid = psi.shape[3]
    u = params.hubbard_u
    if u != 0.0:
        out += (u * DOCC4).reshape(4, 1, 1, 1) * psi
    if n_grid == 1:
        v_eff = float(params.v_eff(params.r_fixed))
        out -= v_eff * _apply_elec_matrix(HOP4, psi)
        return
    x = space.grid
    # hopping with x-dependent attenuation
    vhop = params.v_eff(x)
    out -= _apply_elec_matrix(HOP4, psi * vhop)
    # inter-atomic repulsion C/x^4
    out += (params.repulsion_c / x**4) * psi
    # kinetic p^2 / M (reduced mass M/2) via 3-point stencil, Dirichlet walls
    k = 1.0 / (params.mass * space.dx**2)
    out += (2.0 * k) * psi
    out[..., :-1] -= k * psi[..., 1:]
    out[..., 1:] -= k * psi[..., :-1]


def apply_h_mol(state: StateVector, params: MolecularParams) -> StateVector:
    """Molecular Hamiltonian: kinetic + C/x^4 + U double-occupancy + attenuated hopping.

    For n_grid = 1 the kinetic and C/x^4 terms are omitted and x = r_fixed.
    """
    if state.space.shape.n_elec != 4:
        raise ValueError("apply_h_mol expects the 4-dim dimer electronic sector")
    psi = state.as_tensor()
    out = np.zeros_like(psi)
    _h_mol_tensor(psi, params, state.space, out)
    return StateVector(state.space, out)


def apply_h_rad(state: StateVector, params: RadiationParams) -> StateVector:
    """Photon energies: (omega0 * n + omega_f * m) diagonal map."""
    shape = state.space.shape
    diag = params.omega0 * np.arange(shape.n_cav)[:, None] + params.omega_f * np.arange(shape.n_flu)[None, :]
    out = state.as_tensor() * diag[None, :, :, None]
    return StateVector(state.space, out)


def apply_dipole(state: StateVector, model: ElectronicModel) -> StateVector:
    """Dipole operator: diag(2, 0, 0, -2) for the dimer, level swap for the TLS."""
    if state.space.shape.n_elec != model.n_elec:
        raise ValueError("state electronic dimension does not match the model")
    return StateVector(state.space, _dipole_tensor(model, state.as_tensor()))


def apply_h_int(state: StateVector, t: float, couplings: CouplingParams, model: ElectronicModel) -> StateVector:
    """Light-matter term M x [g_c (b+ + b) + g'(t) (b'+ + b')]."""
    psi = state.as_tensor()
    mpsi = _dipole_tensor(model, psi)
    out = np.zeros_like(psi)
    _add_quadrature(out, mpsi, axis=1, coeff=couplings.g_c)
    _add_quadrature(out, mpsi, axis=2, coeff=couplings.g_fluor(t))
    return StateVector(state.space, out)


def apply_drive(state: StateVector, t: float, envelope: DriveEnvelope) -> StateVector:
    """Classical pump E(t) cos(omega0 t) (b+ + b) on the cavity mode."""
    psi = state.as_tensor()
    out = np.zeros_like(psi)
    _add_quadrature(out, psi, axis=1, coeff=envelope.amplitude(t))
    return StateVector(state.space, out)


def resonance_frequency(u: float, v_eff: float) -> float:
    """Parity- and spin-allowed gap U/2 + sqrt(4 V_eff^2 + (U/2)^2)."""
    if v_eff == 0:
        raise ValueError("v_eff must be nonzero")
    return u / 2.0 + math.sqrt(4.0 * v_eff**2 + (u / 2.0) ** 2)


def electronic_eigs_analytic(t_hop: float, u: float) -> list[dict]:
    """Analytic spectrum of the rigid-dimer electronic block.

    Returns the four levels with parity and spin labels, ordered by energy
    of the generic (t != 0) case: ground singlet, triplet, odd singlet,
    upper singlet.
    """
    root = math.sqrt(4.0 * t_hop**2 + (u / 2.0) ** 2)
    return [
        {"energy": u / 2.0 - root, "parity": "even", "spin": 0, "label": "ground"},
        {"energy": 0.0, "parity": "odd", "spin": 1, "label": "triplet"},
        {"energy": u, "parity": "odd", "spin": 0, "label": "odd-singlet"},
        {"energy": u / 2.0 + root, "parity": "even", "spin": 0, "label": "upper-singlet"},
    ]


def electronic_block(v_eff: float, u: float) -> np.ndarray:
    """Dense 4x4 electronic Hamiltonian -v_eff * HOP4 + U * docc."""
    return -v_eff * HOP4 + u * np.diag(DOCC4)


def spin_squared(state: StateVector) -> StateVector:
    """Total S^2 applied in the dimer electronic sector."""
    if state.space.shape.n_elec != 4:
        raise ValueError("spin_squared expects the 4-dim dimer electronic sector")
    out = _apply_elec_matrix(SPIN2_4, state.as_tensor())
    return StateVector(state.space, out)


def bo_surface(x: np.ndarray, params: MolecularParams) -> np.ndarray:
    """Born-Oppenheimer diagnostic: C/x^4 plus the lowest electronic eigenvalue
    at hopping V exp(-lambda x) for each grid point."""
    x = np.asarray(x, dtype=float)
    v_eff = params.v_eff(x)
    u = params.hubbard_u
    ground = u / 2.0 - np.sqrt(4.0 * v_eff**2 + (u / 2.0) ** 2)
    return params.repulsion_c / x**4 + ground


def antibonding_number_matrix(v_eff: float) -> np.ndarray:
    """Occupation of the higher-energy hybrid orbital, summed over spin.

    The hybrid orbital (c1 + s c2)/sqrt(2) has single-particle energy
    -s * v_eff, so the upper one has s = sign(-v_eff); choosing it by energy
    keeps the observable invariant under the V -> -V gauge relabeling.
    """
    sign = 1.0 if v_eff < 0 else -1.0
    return np.eye(4) + sign * 0.5 * HOP4


# ---------------------------------------------------------------------------
# full system Hamiltonian
# ---------------------------------------------------------------------------


class Hamiltonian:
    """Matrix-free application of H(t) = H_mol + H_rad + H_int(t) [+ drive + bath term].

    The bath enters through a scalar feedback field f(t) multiplying
    -[(b+ + b) + (b'+ + b')]; the caller evaluates f per step.
    """

    def __init__(
        self,
        space: HilbertSpace,
        model: ElectronicModel,
        radiation: RadiationParams,
        couplings: CouplingParams,
        drive: DriveEnvelope | None = None,
    ):
        if space.shape.n_elec != model.n_elec:
            raise ValueError("space electronic dimension does not match the model")
        self.space = space
        self.model = model
        self.radiation = radiation
        self.couplings = couplings
        self.drive = drive
        shape = space.shape
        self._rad_diag = (
            radiation.omega0 * np.arange(shape.n_cav)[:, None]
            + radiation.omega_f * np.arange(shape.n_flu)[None, :]
        )[None, :, :, None]
        if isinstance(model, TwoLevelModel):
            self._elec_diag = np.array([0.0, model.gap]).reshape(2, 1, 1, 1)
        else:
            self._elec_diag = None

    def apply_tensor(self, psi: np.ndarray, t: float, bath_field: float = 0.0) -> np.ndarray:
        out = self._rad_diag * psi
        if isinstance(self.model, DimerModel):
            _h_mol_tensor(psi, self.model.params, self.space, out)
        else:
            out += self._elec_diag * psi
        g_c = self.couplings.g_c
        g_f = self.couplings.g_fluor(t)
        if g_c != 0.0 or g_f != 0.0:
            mpsi = _dipole_tensor(self.model, psi)
            _add_quadrature(out, mpsi, axis=1, coeff=g_c)
            _add_quadrature(out, mpsi, axis=2, coeff=g_f)
        amp = self.drive.amplitude(t) if self.drive is not None else 0.0
        if amp != 0.0:
            _add_quadrature(out, psi, axis=1, coeff=amp)
        if bath_field != 0.0:
            _add_quadrature(out, psi, axis=1, coeff=-bath_field)
            _add_quadrature(out, psi, axis=2, coeff=-bath_field)
        return out

    def matvec(self, t: float, bath_field: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
        """Flat-vector operator with all time-dependent scalars frozen at t."""
        dims = self.space.shape.dims

        def op(v: np.ndarray) -> np.ndarray:
            return self.apply_tensor(v.reshape(dims), t, bath_field).reshape(-1)

        return op

    def apply(self, state: StateVector, t: float, bath_field: float = 0.0) -> StateVector:
        return StateVector(self.space, self.apply_tensor(state.as_tensor(), t, bath_field))

    def expectation(self, state: StateVector, t: float, bath_field: float = 0.0) -> float:
        hpsi = self.apply_tensor(state.as_tensor(), t, bath_field)
        return float(np.vdot(state.amplitudes, hpsi.reshape(-1)).real)
