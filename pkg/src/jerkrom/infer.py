"""End-to-end forecasting and rollout evaluation.

predict() runs the full inference path: encode the initial snapshot,
integrate the latent ODE to every query time (which need not lie on the
training time grid), and decode at every query coordinate (which need
not lie on the training grid). evaluate_rollout() applies it to a
dataset's test split and reports error curves plus the latent
smoothness and sparsity metrics.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import DatasetBundle, FieldSnapshot
from .errors import ConfigError, ShapeError
from .grids import grid_coordinates, wrap_coordinates
from .integrate import integrate_latent
from .metrics import (active_threshold, average_jerk, count_active_coords,
                      mse, relative_rmse)
from .nets import ModelState, decode, encode
from .train import encode_dataset


@dataclass(frozen=True)
class QuerySpec:
    """Spatial query coordinates plus requested time stamps.

    Coordinates may have any count and resolution (wrapped into the
    periodic cell); times are sorted ascending and are absolute on the
    same clock as the initial snapshot handed to predict().
    """

    coords: np.ndarray  # (M, ndim)
    times: np.ndarray  # (T,)

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if times.size == 0:
            raise ConfigError("query needs at least one time", key="times")
        if np.any(np.diff(times) < 0):
            raise ConfigError("query times must be sorted ascending", key="times")
        object.__setattr__(self, "coords", wrap_coordinates(coords))
        object.__setattr__(self, "times", times)

    @classmethod
    def grid(cls, nx: int, ndim: int, times) -> "QuerySpec":
        return cls(grid_coordinates(nx, ndim), np.asarray(times, dtype=np.float64))


def predict(
    model: ModelState,
    u0: FieldSnapshot,
    query: QuerySpec,
    method: str = "rk4",
    max_substep: float = None,
) -> np.ndarray:
    """Forecast from one snapshot; returns (n_times, n_coords) physical values.

    The latent state is integrated over the offsets query.times - u0.time,
    so queries may fall between training snapshots or beyond the training
    horizon.
    """
    offsets = query.times - u0.time
    if offsets[0] < 0:
        raise ConfigError(
            f"query times start before the initial snapshot (t={u0.time})", key="times"
        )
    z0 = encode(model, u0)
    zs = integrate_latent(model, z0, offsets, method=method, max_substep=max_substep)
    out = np.empty((len(offsets), query.coords.shape[0]), dtype=np.float64)
    for i, z in enumerate(zs):
        out[i] = decode(model, z, query.coords, denormalize=True)
    return out


@dataclass
class EvalReport:
    """Rollout evaluation summary over a test split."""

    times: list
    rrmse_per_time: list  # mean over test trajectories, per snapshot
    window_interp: list  # [start, stop) indices of the training window
    window_extrap: list
    mse_interp: float
    mse_extrap: float
    rmse_interp: float  # mean relative RMSE over the training window
    rmse_extrap: float
    avg_jerk: float  # mean average-jerk of encoded test trajectories
    active_count: int
    active_threshold: float
    per_coord_variance: list
    d_z: int
    n_test: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path) as fh:
            return cls(**json.load(fh))


def evaluate_rollout(
    model: ModelState,
    bundle: DatasetBundle,
    method: str = "rk4",
    max_substep: float = None,
    oracle_passthrough: bool = False,
) -> EvalReport:
    """Predict every test trajectory from its first training-window
    snapshot across both windows and report error curves and latent
    metrics.

    oracle_passthrough feeds the ground truth back as the prediction
    (harness self-test: all errors must be zero).
    """
    if not bundle.test_idx:
        raise ConfigError("dataset has no test trajectories", key="splits")
    a = bundle.train_window[0]
    b = max(bundle.train_window[1], bundle.extrap_window[1])
    coords = grid_coordinates(bundle.grid.nx, bundle.grid.ndim)
    shape = bundle.grid.shape

    rrmse_rows = []
    mse_rows = []
    times = None
    for ti in bundle.test_idx:
        traj = bundle.trajectories[ti]
        truth = traj.fields[a:b].astype(np.float64)
        times = traj.times[a:b]
        if oracle_passthrough:
            pred = truth
        else:
            query = QuerySpec(coords, times)
            flat = predict(model, traj.snapshot(a), query,
                           method=method, max_substep=max_substep)
            pred = flat.reshape((len(times),) + shape)
        if not np.all(np.isfinite(pred)):
            raise ShapeError(f"non-finite prediction for test trajectory {ti}")
        rrmse_rows.append([relative_rmse(p, t) for p, t in zip(pred, truth)])
        mse_rows.append([mse(p, t) for p, t in zip(pred, truth)])

    rrmse_rows = np.asarray(rrmse_rows)
    mse_rows = np.asarray(mse_rows)
    n_interp = bundle.train_window[1] - bundle.train_window[0]
    rrmse_mean = rrmse_rows.mean(axis=0)
    has_extrap = bundle.extrap_window[1] > bundle.extrap_window[0]

    latents = encode_dataset(model, bundle, split="test", window="full")
    jerks = [average_jerk(lt) for lt in latents]
    threshold = active_threshold(model.d_z)
    active, variances = count_active_coords(latents, threshold)

    return EvalReport(
        times=list(map(float, times)),
        rrmse_per_time=list(map(float, rrmse_mean)),
        window_interp=[0, n_interp],
        window_extrap=[n_interp, len(times)] if has_extrap else [n_interp, n_interp],
        mse_interp=float(mse_rows[:, :n_interp].mean()),
        mse_extrap=float(mse_rows[:, n_interp:].mean()) if has_extrap else 0.0,
        rmse_interp=float(rrmse_rows[:, :n_interp].mean()),
        rmse_extrap=float(rrmse_rows[:, n_interp:].mean()) if has_extrap else 0.0,
        avg_jerk=float(np.mean(jerks)),
        active_count=int(active),
        active_threshold=float(threshold),
        per_coord_variance=list(map(float, variances)),
        d_z=model.d_z,
        n_test=len(bundle.test_idx),
        meta={"oracle_passthrough": bool(oracle_passthrough), "method": method},
    )
