"""Semiclassical oscillator bath coupled to both photon quadratures.

The bath is a set of N_B classical harmonic oscillators with unit masses,
frequencies omega_k = k * delta and couplings C_k = A (k delta)^a (the
production convention from the figure captions; the square-root spectral
density derivation is an alternative normalization and is NOT mixed in).
Positions feed back into the quantum Hamiltonian through the scalar
f(t) = sum_k C_k x_k(t) multiplying -[(b+ + b) + (b'+ + b')].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BathParams:
    """Discretized bath: omega_k = k * delta, C_k = amplitude * (k delta)^exponent."""

    n_osc: int = 1000
    amplitude: float = 0.01  # A
    exponent: float = 0.6  # a
    delta: float = 0.01  # frequency spacing

    def __post_init__(self):
        if self.n_osc < 1:
            raise ValueError("n_osc must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    def frequencies(self) -> np.ndarray:
        return self.delta * np.arange(1, self.n_osc + 1)


def coupling_constants(params: BathParams) -> np.ndarray:
    """C_k = A (k delta)^a for k = 1..N_B."""
    return params.amplitude * params.frequencies() ** params.exponent


@dataclass
class BathState:
    """Classical oscillator phase-space coordinates at time t."""

    params: BathParams
    x: np.ndarray
    p: np.ndarray
    t: float = 0.0
    omega: np.ndarray = field(init=False, repr=False)
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.x.shape != (self.params.n_osc,) or self.p.shape != (self.params.n_osc,):
            raise ValueError("x and p must have shape (n_osc,)")
        self.omega = self.params.frequencies()
        self.c = coupling_constants(self.params)

    @classmethod
    def at_rest(cls, params: BathParams) -> "BathState":
        """Zero-temperature start: all oscillators at the origin."""
        n = params.n_osc
        return cls(params, np.zeros(n), np.zeros(n))

    def copy(self) -> "BathState":
        return BathState(self.params, self.x.copy(), self.p.copy(), self.t)

    def energy(self) -> float:
        """Bath-internal energy (1/2) sum_k (p_k^2 + omega_k^2 x_k^2)."""
        return 0.5 * float(np.sum(self.p**2 + (self.omega * self.x) ** 2))


def bath_feedback_term(bath: BathState) -> float:
    """Scalar f(t) = sum_k C_k x_k multiplying -[(b+ + b) + (b'+ + b')]."""
    return float(np.dot(bath.c, bath.x))


def verlet_step(bath: BathState, force_input: float, dt: float) -> BathState:
    """One velocity-Verlet step under x''_k = -omega_k^2 x_k + C_k * force_input.

    force_input is the frozen expectation <b+ + b> + <b'+ + b'> for this step.
    """
    w2 = bath.omega**2
    f0 = -w2 * bath.x + bath.c * force_input
    x_new = bath.x + dt * bath.p + 0.5 * dt**2 * f0
    f1 = -w2 * x_new + bath.c * force_input
    p_new = bath.p + 0.5 * dt * (f0 + f1)
    return BathState(bath.params, x_new, p_new, bath.t + dt)
