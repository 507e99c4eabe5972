"""Measured quantities: fluorescence probability, photon numbers, parity,
nuclear density, dissociation fraction and electronic populations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .hilbert import StateVector, marginal_probability
from .model import (
    DimerModel,
    ElectronicModel,
    TwoLevelModel,
    antibonding_number_matrix,
)

_MODE_AXIS = {"cavity": 1, "fluorescence": 2}


def fluorescence_probability(state: StateVector) -> float:
    """Probability of one or more photons in the fluorescence mode.

    Computed as 1 minus the m = 0 marginal, which is algebraically identical
    to summing the m > 0 populations and exactly normalized.
    """
    flu = marginal_probability(state, ["fluorescence"])
    return float(1.0 - flu[0])


def photon_number(state: StateVector, which: str) -> float:
    """<b+ b> ('cavity') or <b'+ b'> ('fluorescence')."""
    if which not in _MODE_AXIS:
        raise ValueError(f"which must be 'cavity' or 'fluorescence', got {which!r}")
    probs = marginal_probability(state, [which])
    return float(np.dot(np.arange(len(probs)), probs))


def quadrature_expectation(state: StateVector, which: str) -> float:
    """<a+ + a> for the chosen photon mode (Ehrenfest bath force input)."""
    axis = _MODE_AXIS[which]
    psi = state.as_tensor()
    dim = psi.shape[axis]
    if dim == 1:
        return 0.0
    root = np.sqrt(np.arange(1, dim, dtype=float))
    shape = [1, 1, 1, 1]
    shape[axis] = dim - 1
    lo = [slice(None)] * 4
    hi = [slice(None)] * 4
    lo[axis] = slice(0, dim - 1)
    hi[axis] = slice(1, dim)
    overlap = np.sum(psi[tuple(lo)].conj() * root.reshape(shape) * psi[tuple(hi)])
    return float(2.0 * overlap.real)


def total_parity(state: StateVector) -> float:
    """TLS joint parity <(-1)^n (n0 - n1) (-1)^m>."""
    shape = state.space.shape
    if shape.n_elec != 2:
        raise ValueError("total_parity is defined on the TLS electronic space")
    prob = np.abs(state.as_tensor()) ** 2
    s_el = np.array([1.0, -1.0]).reshape(2, 1, 1, 1)
    s_n = ((-1.0) ** np.arange(shape.n_cav)).reshape(1, -1, 1, 1)
    s_m = ((-1.0) ** np.arange(shape.n_flu)).reshape(1, 1, -1, 1)
    return float(np.sum(prob * s_el * s_n * s_m))


def nuclear_density(state: StateVector) -> np.ndarray:
    """N(r_j, t): grid marginal normalized to unit sum."""
    if state.space.shape.n_grid <= 1:
        raise ValueError("nuclear_density requires a nuclear grid (n_grid > 1)")
    dens = marginal_probability(state, ["grid"])
    total = dens.sum()
    if total == 0.0:
        raise ValueError("zero-norm state has no nuclear density")
    return dens / total


def dissociation_probability(state: StateVector, r_cut: float) -> float:
    """Probability weight of the nuclear density beyond r_cut."""
    shape = state.space.shape
    if shape.n_grid <= 1:
        raise ValueError("dissociation_probability requires a nuclear grid")
    if not shape.grid_min < r_cut < shape.grid_max:
        raise ValueError(f"r_cut {r_cut} outside the grid window")
    dens = nuclear_density(state)
    return float(dens[state.space.grid > r_cut].sum())


def excited_population(state: StateVector, model: ElectronicModel) -> float:
    """Upper-level population: <n1> (TLS) or the occupation of the
    higher-energy hybrid orbital (dimer)."""
    if isinstance(model, TwoLevelModel):
        return float(marginal_probability(state, ["electronic"])[1])
    v_eff = float(model.params.v_eff(model.params.r_fixed))
    mat = antibonding_number_matrix(v_eff)
    psi = state.as_tensor()
    out = np.tensordot(mat, psi, axes=(1, 0))
    return float(np.sum(psi.conj() * out).real)


@dataclass
class Snapshot:
    """Time-stamped observables of one propagation."""

    t: float
    p_fluor: float
    n_cav: float
    n_flu: float
    n_excited: float
    norm: float
    energy: float
    parity: Optional[float] = None  # TLS runs only
    nuclear_density: Optional[np.ndarray] = None  # grid runs only
    p_diss: Optional[float] = None


def take_snapshot(
    state: StateVector,
    t: float,
    model: ElectronicModel,
    energy: float,
    r_cut: Optional[float] = None,
    with_density: bool = False,
) -> Snapshot:
    shape = state.space.shape
    parity = total_parity(state) if isinstance(model, TwoLevelModel) else None
    dens = None
    p_diss = None
    if shape.n_grid > 1:
        if with_density:
            dens = nuclear_density(state)
        if r_cut is not None:
            p_diss = dissociation_probability(state, r_cut)
    return Snapshot(
        t=t,
        p_fluor=fluorescence_probability(state),
        n_cav=photon_number(state, "cavity"),
        n_flu=photon_number(state, "fluorescence"),
        n_excited=excited_population(state, model),
        norm=state.norm(),
        energy=energy,
        parity=parity,
        nuclear_density=dens,
        p_diss=p_diss,
    )
