"""Latent state containers."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass
class LatentTrajectory:
    """A time series of latent vectors.

    values: (T, d_z); times: (T,). Times from the encoder pipeline are
    uniform; integrator output may use arbitrary sorted times, in which
    case dt is undefined and raises.
    """

    values: np.ndarray
    times: np.ndarray
    traj_id: int = -1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.values.ndim != 2:
            raise ShapeError(f"latent values must be (T, d_z), got {self.values.shape}")
        if self.times.shape != (self.values.shape[0],):
            raise ShapeError("times length does not match values")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ShapeError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def d_z(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        diffs = np.diff(self.times)
        if len(diffs) == 0:
            raise ShapeError("dt undefined for a single-snapshot trajectory")
        if not np.allclose(diffs, diffs[0], rtol=1e-9, atol=1e-12):
            raise ShapeError("dt undefined: time grid is not uniform")
        return float(diffs[0])


def stack_latents(latents: list) -> np.ndarray:
    """(n_traj, T, d_z) float32 array from trajectories on one time grid."""
    if not latents:
        raise ShapeError("empty latent list")
    return np.stack([lt.values for lt in latents])
