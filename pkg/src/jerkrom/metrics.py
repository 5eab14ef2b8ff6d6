"""Evaluation metrics: relative RMSE, average jerk, active coordinates."""

import numpy as np

from .errors import ConfigError, MetricUndefinedError, ShapeError
from .latent import LatentTrajectory

# Active-coordinate variance thresholds per latent dimension; unlisted
# dimensions fall back to 1e-4.
ACTIVE_THRESHOLDS = {8: 1e-4, 10: 5e-5, 16: 1e-4, 32: 1e-5, 64: 1e-5}


def active_threshold(d_z: int) -> float:
    return ACTIVE_THRESHOLDS.get(d_z, 1e-4)


def relative_rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """L2-norm ratio ||pred - truth|| / ||truth|| for one snapshot."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    denom = np.linalg.norm(truth.ravel())
    if denom == 0.0:
        raise MetricUndefinedError("relative RMSE undefined for zero-norm truth")
    return float(np.linalg.norm((pred - truth).ravel()) / denom)


def relative_rmse_series(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-snapshot relative RMSE along the first axis."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return np.array([relative_rmse(p, t) for p, t in zip(pred, truth)])


def mse(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def jerk_windows(values: np.ndarray) -> np.ndarray:
    """Per-window jerk of a latent series (T, d_z): for each of the T-3
    four-snapshot windows, the squared third forward difference / d_z."""
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError(f"latent series must be (T, d_z), got {z.shape}")
    if z.shape[0] < 4:
        raise ConfigError(f"need >= 4 snapshots for a jerk window, got {z.shape[0]}",
                          key="snapshots")
    third = z[3:] - 3.0 * z[2:-1] + 3.0 * z[1:-2] - z[:-3]
    return np.sum(third**2, axis=-1) / z.shape[1]


def average_jerk(traj) -> float:
    """Mean per-window jerk over all 4-snapshot windows of a trajectory.

    Accepts a LatentTrajectory or a raw (T, d_z) array. Uses the same
    third-difference formula and 1/d_z convention as the training loss.
    """
    values = traj.values if isinstance(traj, LatentTrajectory) else traj
    return float(np.mean(jerk_windows(values)))


def count_active_coords(latents, threshold: float):
    """Count latent coordinates whose pooled variance reaches threshold.

    latents: list of LatentTrajectory (or arrays), or one (..., d_z)
    array; variance is the population variance pooled over all snapshots
    of all trajectories. Returns (count, per-coordinate variances).
    """
    if threshold <= 0:
        raise ConfigError(f"threshold must be positive, got {threshold}", key="threshold")
    if isinstance(latents, (list, tuple)):
        if len(latents) == 0:
            raise ConfigError("empty latent dataset", key="latents")
        arrays = [
            np.asarray(lt.values if isinstance(lt, LatentTrajectory) else lt, dtype=np.float64)
            for lt in latents
        ]
        pooled = np.concatenate([a.reshape(-1, a.shape[-1]) for a in arrays])
    else:
        arr = np.asarray(latents, dtype=np.float64)
        if arr.size == 0:
            raise ConfigError("empty latent dataset", key="latents")
        pooled = arr.reshape(-1, arr.shape[-1])
    variances = np.var(pooled, axis=0)
    return int(np.sum(variances >= threshold)), variances
