"""Periodic parameter grids and differentiation on them.

Fields live on arrays whose leading ``k`` axes are the grid axes; any
trailing axes (ambient components, form components) are carried along.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

BACKENDS = ("spectral", "fd2", "fd4", "fd6", "fd8")


@dataclass(frozen=True)
class ParamGrid:
    dims: tuple[int, ...]
    periods: tuple[float, ...] = field(default=None)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("grid needs at least one axis")
        for d in dims:
            if d < 8 or d % 2:
                raise ValueError(f"axis resolution must be even and >= 8, got {d}")
        periods = self.periods
        if periods is None:
            periods = (2 * np.pi,) * len(dims)
        periods = tuple(float(p) for p in periods)
        if len(periods) != len(dims) or min(periods) <= 0:
            raise ValueError("periods must be positive, one per axis")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "periods", periods)

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(p / d for p, d in zip(self.periods, self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def axis_coords(self, a: int) -> np.ndarray:
        return np.arange(self.dims[a]) * self.spacing[a]

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``dims``, one per axis (ij indexing)."""
        return np.meshgrid(*[self.axis_coords(a) for a in range(self.k)], indexing="ij")

    def wavenumbers(self, a: int) -> np.ndarray:
        n = self.dims[a]
        return 2 * np.pi / self.periods[a] * np.fft.fftfreq(n, d=1.0 / n)

    def refined(self, factor: float) -> "ParamGrid":
        return ParamGrid(tuple(int(round(d * factor)) for d in self.dims), self.periods)


@lru_cache(maxsize=None)
def fd_weights(deriv: int, accuracy: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered stencil offsets and weights (unit spacing) for ``d^deriv/dx^deriv``."""
    if accuracy % 2 or accuracy < 2:
        raise ValueError("accuracy must be a positive even integer")
    r = accuracy // 2 + (deriv - 1) // 2
    offsets = np.arange(-r, r + 1)
    V = np.vander(offsets, increasing=True).T.astype(float)
    rhs = np.zeros(len(offsets))
    rhs[deriv] = factorial(deriv)
    return offsets, np.linalg.solve(V, rhs)


class PeriodicDiff:
    """Partial derivatives of periodic grid fields.

    ``backend`` is ``"spectral"`` (Fourier) or ``"fdP"`` for a centered
    finite-difference stencil of accuracy order ``P``.
    """

    def __init__(self, grid: ParamGrid, backend: str = "spectral"):
        if backend not in BACKENDS:
            raise ValueError(f"unknown differentiation backend {backend!r}")
        self.grid = grid
        self.backend = backend

    @property
    def order(self) -> float:
        return np.inf if self.backend == "spectral" else int(self.backend[2:])

    def __call__(self, f: np.ndarray, axis: int, deriv: int = 1) -> np.ndarray:
        if self.backend == "spectral":
            return self._spectral(f, axis, deriv)
        return self._fd(f, axis, deriv)

    def _spectral(self, f, axis, deriv):
        n = self.grid.dims[axis]
        k = self.grid.wavenumbers(axis)
        symbol = (1j * k) ** deriv
        if deriv % 2:
            symbol[n // 2] = 0.0
        shape = [1] * f.ndim
        shape[axis] = n
        out = np.fft.ifft(np.fft.fft(f, axis=axis) * symbol.reshape(shape), axis=axis)
        return out.real if np.isrealobj(f) else out

    def _fd(self, f, axis, deriv):
        offsets, weights = fd_weights(deriv, self.order)
        h = self.grid.spacing[axis]
        out = np.zeros_like(f, dtype=float)
        for o, c in zip(offsets, weights):
            if c != 0.0:
                out += c * np.roll(f, -o, axis=axis)
        return out / h**deriv

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Stack of first partials, shape ``(k, *f.shape)``."""
        return np.stack([self(f, a) for a in range(self.grid.k)])

    def hessian(self, f: np.ndarray) -> np.ndarray:
        """Second partials, shape ``(k, k, *f.shape)``; mixed ones by composition."""
        k = self.grid.k
        out = np.empty((k, k) + f.shape)
        for a in range(k):
            out[a, a] = self(f, a, 2)
            for b in range(a + 1, k):
                out[a, b] = out[b, a] = self(self(f, a), b)
        return out
