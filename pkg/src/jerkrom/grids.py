"""Uniform periodic grids on the unit domain.

All fields in this package live on [0,1)^ndim with periodic boundary
conditions and nx points per axis, x_i = i/nx. Power-of-two nx keeps
every FFT path fast and makes coarse grids exact subsets of fine ones
(i/32 == 4i/128 in floating point), which the super-resolution
consistency checks rely on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: nx points per axis on [0,1)^ndim."""

    nx: int
    ndim: int = 2

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise ConfigError(f"ndim must be 1 or 2, got {self.ndim}", key="ndim")
        if self.nx < 8 or not _is_power_of_two(self.nx):
            raise ConfigError(
                f"nx must be a power of two >= 8, got {self.nx}", key="nx"
            )

    @property
    def shape(self) -> tuple:
        return (self.nx,) * self.ndim

    @property
    def n_points(self) -> int:
        return self.nx**self.ndim

    def axis(self) -> np.ndarray:
        """1D coordinates along one axis, x_i = i/nx (float64)."""
        return np.arange(self.nx, dtype=np.float64) / self.nx

    def coordinates(self) -> np.ndarray:
        """All grid points as an (n_points, ndim) array, row-major order."""
        return grid_coordinates(self.nx, self.ndim)


def grid_coordinates(nx: int, ndim: int) -> np.ndarray:
    """Flattened coordinates of the uniform nx^ndim grid, row-major.

    Matches the memory layout of field arrays: for ndim=2 the point
    (i, j) maps to row i*nx + j with coordinates (i/nx, j/nx).
    """
    ax = np.arange(nx, dtype=np.float64) / nx
    if ndim == 1:
        return ax[:, None]
    xx, yy = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=-1)


def wrap_coordinates(coords: np.ndarray) -> np.ndarray:
    """Wrap arbitrary coordinates into the periodic unit cell [0,1)."""
    coords = np.asarray(coords, dtype=np.float64)
    out = np.mod(coords, 1.0)
    # mod can return 1.0 for tiny negative inputs; fold it back
    out[out >= 1.0] = 0.0
    return out
