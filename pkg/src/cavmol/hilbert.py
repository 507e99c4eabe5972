"""Tensor-product Hilbert space layout, state vectors and marginals.

The composite space is (electronic, cavity, fluorescence, nuclear grid)
with the grid as the fastest-varying axis, so flat storage is C-ordered
over the 4D tensor and grid sweeps are stride-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

AXES = ("electronic", "cavity", "fluorescence", "grid")
_AXIS_INDEX = {name: i for i, name in enumerate(AXES)}


@dataclass(frozen=True)
class SpaceShape:
    """Dimensions of the composite Hilbert space.

    n_elec is 4 for the two-electron dimer sector and 2 for the TLS.
    n_grid = 1 means the nuclear coordinate is frozen (rigid molecule);
    the frozen value itself lives in the molecular parameters.
    """

    n_elec: int
    n_cav: int
    n_flu: int
    n_grid: int = 1
    grid_min: float = 0.3
    grid_max: float = 12.0

    def __post_init__(self):
        for name in ("n_elec", "n_cav", "n_flu", "n_grid"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.n_grid > 1:
            if self.grid_min <= 0:
                raise ValueError(
                    f"grid_min must be > 0 (C/x^4 diverges at x=0), got {self.grid_min}"
                )
            if self.grid_max <= self.grid_min:
                raise ValueError("grid_max must exceed grid_min")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.n_elec, self.n_cav, self.n_flu, self.n_grid)

    @property
    def size(self) -> int:
        return self.n_elec * self.n_cav * self.n_flu * self.n_grid


class HilbertSpace:
    """Index arithmetic and grid coordinates for a SpaceShape."""

    def __init__(self, shape: SpaceShape):
        self.shape = shape
        self.size = shape.size
        if shape.n_grid > 1:
            self.dx = (shape.grid_max - shape.grid_min) / (shape.n_grid - 1)
            self.grid = shape.grid_min + self.dx * np.arange(shape.n_grid)
        else:
            self.dx = 0.0
            self.grid = np.array([shape.grid_min])
        self._strides = (
            shape.n_cav * shape.n_flu * shape.n_grid,
            shape.n_flu * shape.n_grid,
            shape.n_grid,
            1,
        )

    def index(self, lam: int, n: int, m: int, j: int) -> int:
        """Flat index of the basis state |lam, n, m, j>."""
        dims = self.shape.dims
        for v, d, name in zip((lam, n, m, j), dims, AXES):
            if not 0 <= v < d:
                raise IndexError(f"{name} index {v} out of range [0, {d})")
        s = self._strides
        return lam * s[0] + n * s[1] + m * s[2] + j

    def unindex(self, flat: int) -> tuple[int, int, int, int]:
        """Inverse of index(): the (lam, n, m, j) labels of a flat index."""
        if not 0 <= flat < self.size:
            raise IndexError(f"flat index {flat} out of range [0, {self.size})")
        lam, rest = divmod(flat, self._strides[0])
        n, rest = divmod(rest, self._strides[1])
        m, j = divmod(rest, self._strides[2])
        return (lam, n, m, j)


def build_space(config: SpaceShape) -> HilbertSpace:
    """Validate a SpaceShape and return the space handle."""
    return HilbertSpace(config)


class StateVector:
    """Complex amplitude vector over a HilbertSpace."""

    __slots__ = ("space", "amplitudes")

    def __init__(self, space: HilbertSpace, amplitudes: np.ndarray):
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape == space.shape.dims:
            amplitudes = amplitudes.reshape(space.size)
        if amplitudes.shape != (space.size,):
            raise ValueError(
                f"amplitude vector has length {amplitudes.size}, space expects {space.size}"
            )
        self.space = space
        self.amplitudes = amplitudes

    @classmethod
    def zero(cls, space: HilbertSpace) -> "StateVector":
        return cls(space, np.zeros(space.size, dtype=np.complex128))

    @classmethod
    def basis_state(cls, space: HilbertSpace, lam: int, n: int, m: int, j: int = 0) -> "StateVector":
        amps = np.zeros(space.size, dtype=np.complex128)
        amps[space.index(lam, n, m, j)] = 1.0
        return cls(space, amps)

    @classmethod
    def from_product(
        cls,
        space: HilbertSpace,
        elec: np.ndarray,
        cav: np.ndarray,
        flu: np.ndarray,
        grid: np.ndarray | None = None,
    ) -> "StateVector":
        """Product state from per-axis factors (grid factor optional when n_grid=1)."""
        if grid is None:
            grid = np.ones(space.shape.n_grid)
        tensor = (
            np.asarray(elec, dtype=np.complex128)[:, None, None, None]
            * np.asarray(cav, dtype=np.complex128)[None, :, None, None]
            * np.asarray(flu, dtype=np.complex128)[None, None, :, None]
            * np.asarray(grid, dtype=np.complex128)[None, None, None, :]
        )
        return cls(space, tensor)

    def as_tensor(self) -> np.ndarray:
        """View of the amplitudes shaped (n_elec, n_cav, n_flu, n_grid)."""
        return self.amplitudes.reshape(self.space.shape.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def copy(self) -> "StateVector":
        return StateVector(self.space, self.amplitudes.copy())

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.space, self.amplitudes * scalar)

    __rmul__ = __mul__


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the physicist's convention (conjugate-linear in a)."""
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _resolve_axes(keep: Iterable[str | int]) -> tuple[int, ...]:
    out = []
    for k in keep:
        if isinstance(k, str):
            if k not in _AXIS_INDEX:
                raise ValueError(f"unknown axis {k!r}; valid axes: {AXES}")
            out.append(_AXIS_INDEX[k])
        else:
            if not 0 <= int(k) < 4:
                raise ValueError(f"axis index {k} out of range")
            out.append(int(k))
    return tuple(sorted(set(out)))


def marginal_probability(state: StateVector, keep: Sequence[str | int]) -> np.ndarray:
    """Probability marginal over the kept axes.

    Sums |amplitude|^2 over all axes not in `keep`; the result sums to the
    squared norm of the input.
    """
    kept = _resolve_axes(keep)
    prob = np.abs(state.as_tensor()) ** 2
    drop = tuple(ax for ax in range(4) if ax not in kept)
    return prob.sum(axis=drop) if drop else prob
