"""Forced 2D incompressible Navier-Stokes in vorticity form.

simulate_ns integrates dw/dt + u.grad(w) = nu*Lap(w) + f from a given
initial vorticity and records snapshots every dt_snapshot. The forcing
is amp*(sin(2*pi*(x+y)) + cos(2*pi*(x+y))). Stepping is delegated to a
spectral kernel (compiled FFTW extension when available, numpy
otherwise); see jerkrom._spectral for the scheme.
"""

from dataclasses import dataclass

import numpy as np

from ._spectral import get_stepper
from .data import Trajectory
from .errors import ConfigError, ShapeError, SolverBlowupError
from .grids import GridSpec


@dataclass(frozen=True)
class NSParams:
    """Physical and discretization parameters of one simulation."""

    nu: float = 1e-3
    forcing_amplitude: float = 0.1
    dt_sim: float = 1e-2  # inner solver step
    dt_snapshot: float = 1.0  # snapshot interval
    n_snapshots: int = 50

    def __post_init__(self):
        if not (self.nu > 0):
            raise ConfigError(f"nu must be positive, got {self.nu}", key="nu")
        if not (0 < self.dt_sim <= self.dt_snapshot):
            raise ConfigError("dt_sim must satisfy 0 < dt_sim <= dt_snapshot", key="dt_sim")
        if self.n_snapshots < 4:
            raise ConfigError("n_snapshots must be >= 4", key="snapshots")
        if self.substeps_per_snapshot() is None:
            raise ConfigError(
                f"dt_snapshot={self.dt_snapshot} is not an integer multiple of "
                f"dt_sim={self.dt_sim}",
                key="dt_sim",
            )

    def substeps_per_snapshot(self):
        ratio = self.dt_snapshot / self.dt_sim
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            return None
        return n


def forcing_field(grid: GridSpec, amplitude: float) -> np.ndarray:
    """amp*(sin(2*pi*(x1+x2)) + cos(2*pi*(x1+x2))) on the grid."""
    ax = grid.axis()
    s = ax[:, None] + ax[None, :]
    return amplitude * (np.sin(2.0 * np.pi * s) + np.cos(2.0 * np.pi * s))


def taylor_green_vorticity(grid: GridSpec) -> np.ndarray:
    """w0 = sin(2*pi*x)*sin(2*pi*y); its advection term vanishes, so with
    f=0 the exact solution is w0*exp(-8*pi^2*nu*t)."""
    ax = grid.axis()
    return np.outer(np.sin(2.0 * np.pi * ax), np.sin(2.0 * np.pi * ax))


def simulate_ns(
    w0: np.ndarray,
    params: NSParams,
    grid: GridSpec,
    backend: str = "auto",
) -> Trajectory:
    """Integrate from w0 and return snapshots at t = 0, dt, ..., (n-1)*dt.

    Raises SolverBlowupError naming the failing snapshot step if the
    state becomes non-finite.
    """
    if grid.ndim != 2:
        raise ShapeError("simulate_ns requires a 2D grid")
    w0 = np.asarray(w0, dtype=np.float64)
    if w0.shape != grid.shape:
        raise ShapeError(f"w0 shape {w0.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(w0)):
        raise ShapeError("w0 contains non-finite values")

    forcing = None
    if params.forcing_amplitude != 0.0:
        forcing = forcing_field(grid, params.forcing_amplitude)
    stepper = get_stepper(grid.nx, params.nu, params.dt_sim, forcing, backend=backend)
    substeps = params.substeps_per_snapshot()

    snaps = np.empty((params.n_snapshots,) + grid.shape, dtype=np.float32)
    snaps[0] = w0
    w = w0
    for k in range(1, params.n_snapshots):
        w = stepper.run(w, substeps)
        if not np.all(np.isfinite(w)):
            raise SolverBlowupError(
                f"non-finite vorticity while advancing to snapshot {k} "
                f"(t = {k * params.dt_snapshot:g})",
                step=k,
                time=k * params.dt_snapshot,
            )
        snaps[k] = w
    return Trajectory(snaps, t0=0.0, dt=params.dt_snapshot)
