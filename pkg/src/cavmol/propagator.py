"""Short-iterative-Lanczos time stepping and ground-state solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .hilbert import HilbertSpace, StateVector

MatVec = Callable[[np.ndarray], np.ndarray]
TimedMatVec = Callable[[np.ndarray, float], np.ndarray]

DENSE_REFERENCE_MAX_DIM = 4096


class KrylovConvergenceError(RuntimeError):
    """Raised when the SIL truncation estimate stays above tolerance at max order."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(message)
        self.error_estimate = error_estimate


class GroundStateConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class KrylovConfig:
    """Parameters of one short-iterative-Lanczos step."""

    dt: float = 0.02
    m: int = 12
    tol: float = 1e-10
    midpoint: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 2 <= self.m <= 40:
            raise ValueError("Krylov dimension m must be in [2, 40]")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class GroundStateResult:
    energy: float
    state: StateVector
    residual: float


def _expm_tridiag(alphas: np.ndarray, betas: np.ndarray, dt: float) -> np.ndarray:
    """First column of exp(-i T dt) for the real symmetric tridiagonal T."""
    if len(alphas) == 1:
        return np.array([np.exp(-1j * alphas[0] * dt)])
    evals, evecs = eigh_tridiagonal(alphas, betas)
    return evecs @ (np.exp(-1j * evals * dt) * evecs[0, :].conj())


def krylov_expm_apply(matvec: MatVec, v: np.ndarray, dt: float, m: int, tol: float) -> np.ndarray:
    """exp(-i H dt) v via a Lanczos subspace grown until the step error estimate
    drops below tol; raises KrylovConvergenceError otherwise.

    Happy breakdown (vanishing recurrence beta) returns the exact result in the
    spanned subspace.
    """
    norm0 = float(np.linalg.norm(v))
    if norm0 == 0.0:
        return v.copy()
    basis = [v / norm0]
    w = matvec(basis[0])
    alphas = [float(np.vdot(basis[0], w).real)]
    betas: list[float] = []
    w = w - alphas[0] * basis[0]
    y = _expm_tridiag(np.asarray(alphas), np.asarray(betas), dt)
    err = np.inf
    converged = False
    while len(basis) < m:
        # full reorthogonalization; the basis is small (m <= 40)
        for q in basis:
            w -= np.vdot(q, w) * q
        beta = float(np.linalg.norm(w))
        if beta < 1e-13:
            converged = True  # happy breakdown: exact in the spanned subspace
            break
        betas.append(beta)
        basis.append(w / beta)
        w = matvec(basis[-1])
        alphas.append(float(np.vdot(basis[-1], w).real))
        w = w - alphas[-1] * basis[-1] - beta * basis[-2]
        y_prev, y = y, _expm_tridiag(np.asarray(alphas), np.asarray(betas), dt)
        err = float(np.linalg.norm(y[:-1] - y_prev)) + abs(y[-1])
        if err < tol:
            converged = True
            break
    if not converged:
        raise KrylovConvergenceError(
            f"SIL step did not converge at m={m}: error estimate {err:.3e} > tol {tol:.3e}",
            err,
        )
    out = np.zeros_like(v)
    for coeff, q in zip(y, basis):
        out += coeff * q
    return norm0 * out


def krylov_step(state: StateVector, apply_h: TimedMatVec, t: float, config: KrylovConfig) -> StateVector:
    """One exp(-i H(t*) dt) step, t* = t + dt/2 when config.midpoint is set."""
    t_star = t + config.dt / 2.0 if config.midpoint else t
    mv = lambda v: apply_h(v, t_star)
    out = krylov_expm_apply(mv, state.amplitudes, config.dt, config.m, config.tol)
    return StateVector(state.space, out)


def ground_state(
    apply_h: MatVec,
    space: HilbertSpace,
    seed: int = 0,
    tol: float = 1e-9,
    maxiter: int | None = None,
    ncv: int | None = None,
) -> GroundStateResult:
    """Lowest eigenpair of the (frozen) Hamiltonian via restarted Lanczos.

    The starting vector is drawn deterministically from `seed`; the residual
    ||H psi - E psi|| is verified against tol.
    """
    n = space.size
    if n == 1:
        amps = np.ones(1, dtype=np.complex128)
        e = float(np.vdot(amps, apply_h(amps)).real)
        return GroundStateResult(e, StateVector(space, amps), 0.0)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    # ARPACK's 'SA' regular mode can miss an eigenvalue sitting exactly at 0;
    # shift the whole spectrum negative first, then shift the energy back.
    op = LinearOperator((n, n), matvec=apply_h, dtype=np.complex128)
    lam_top = eigsh(op, k=1, which="LM", v0=v0, tol=1e-6, return_eigenvectors=False)
    shift = abs(float(lam_top[0])) * 1.05 + 1.0
    shifted = LinearOperator(
        (n, n), matvec=lambda v: apply_h(v) - shift * v, dtype=np.complex128
    )
    try:
        evals, evecs = eigsh(shifted, k=1, which="SA", v0=v0, tol=tol * 1e-3,
                             maxiter=maxiter, ncv=ncv)
        evals = evals + shift
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            vec = exc.eigenvectors[:, 0]
            e = float(exc.eigenvalues[0]) + shift
            res = float(np.linalg.norm(apply_h(vec) - e * vec))
        else:
            res = np.inf
        raise GroundStateConvergenceError(
            f"ground-state Lanczos did not converge (best residual {res:.3e})", res
        ) from exc
    vec = evecs[:, 0].astype(np.complex128)
    vec /= np.linalg.norm(vec)
    energy = float(evals[0])
    residual = float(np.linalg.norm(apply_h(vec) - energy * vec))
    if residual > tol:
        raise GroundStateConvergenceError(
            f"ground-state residual {residual:.3e} exceeds tolerance {tol:.3e}", residual
        )
    return GroundStateResult(energy, StateVector(space, vec), residual)


def dense_expm_reference(h_matrix: np.ndarray, state, dt: float):
    """exp(-i H dt) |state> by dense eigendecomposition; test oracle only."""
    h_matrix = np.asarray(h_matrix)
    n = h_matrix.shape[0]
    if h_matrix.shape != (n, n):
        raise ValueError("h_matrix must be square")
    if n > DENSE_REFERENCE_MAX_DIM:
        raise ValueError(f"dense reference limited to N <= {DENSE_REFERENCE_MAX_DIM}, got {n}")
    evals, evecs = np.linalg.eigh(h_matrix)
    if isinstance(state, StateVector):
        v = state.amplitudes
    else:
        v = np.asarray(state, dtype=np.complex128)
    out = evecs @ (np.exp(-1j * evals * dt) * (evecs.conj().T @ v))
    if isinstance(state, StateVector):
        return StateVector(state.space, out)
    return out


def materialize(matvec: MatVec, n: int) -> np.ndarray:
    """Dense matrix of a linear operator, column by column (small n only)."""
    if n > DENSE_REFERENCE_MAX_DIM:
        raise ValueError(f"refusing to materialize N={n} > {DENSE_REFERENCE_MAX_DIM}")
    cols = np.zeros((n, n), dtype=np.complex128)
    e = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        e[i] = 1.0
        cols[:, i] = matvec(e)
        e[i] = 0.0
    return cols
