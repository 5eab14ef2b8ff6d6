"""Core data containers: snapshots, trajectories, dataset bundles.

A trajectory stores its snapshots as one packed float32 array plus a
uniform time grid (t0, dt). Dataset bundles add grid metadata, global
normalization statistics computed from the training portion only, and
the trajectory/time-window splits used by training and evaluation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .grids import GridSpec


@dataclass(frozen=True)
class FieldSnapshot:
    """One scalar field on a uniform periodic grid at one time."""

    values: np.ndarray  # float32, shape (nx,) or (nx, nx)
    time: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim not in (1, 2):
            raise ShapeError(f"snapshot must be 1D or 2D, got ndim={v.ndim}")
        if not np.all(np.isfinite(v)):
            raise ShapeError("snapshot contains non-finite values")
        object.__setattr__(self, "values", v)


class Trajectory:
    """Ordered snapshots with a fixed time step.

    fields: (T, nx) or (T, nx, nx) float32; times are t0 + i*dt.
    At least 4 snapshots are required (the segmenting window size).
    """

    def __init__(self, fields: np.ndarray, t0: float, dt: float):
        fields = np.asarray(fields, dtype=np.float32)
        if fields.ndim not in (2, 3):
            raise ShapeError(f"trajectory fields must be (T, nx[, nx]), got {fields.shape}")
        if fields.shape[0] < 4:
            raise ConfigError(
                f"trajectory needs >= 4 snapshots, got {fields.shape[0]}", key="snapshots"
            )
        if dt <= 0:
            raise ConfigError(f"dt must be positive, got {dt}", key="dt")
        self.fields = fields
        self.t0 = float(t0)
        self.dt = float(dt)

    def __len__(self) -> int:
        return self.fields.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self), dtype=np.float64)

    def snapshot(self, i: int) -> FieldSnapshot:
        return FieldSnapshot(self.fields[i], float(self.t0 + i * self.dt))

    def window(self, start: int, stop: int) -> "Trajectory":
        """View of snapshots [start, stop)."""
        if not (0 <= start < stop <= len(self)):
            raise ConfigError(
                f"window [{start}, {stop}) outside trajectory of length {len(self)}",
                key="window",
            )
        return Trajectory(self.fields[start:stop], self.t0 + start * self.dt, self.dt)


@dataclass(frozen=True)
class Normalization:
    """Global scalar (mean, std) normalization of field values."""

    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0):
            raise ConfigError(f"std must be positive, got {self.std}", key="std")

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x) - self.mean) / self.std

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) * self.std + self.mean


def normalize(x: np.ndarray, norm: Normalization) -> np.ndarray:
    return norm.normalize(x)


def denormalize(x: np.ndarray, norm: Normalization) -> np.ndarray:
    return norm.denormalize(x)


@dataclass(frozen=True)
class SplitSpec:
    """How raw trajectories become a training corpus.

    burn_in snapshots are dropped from the front of every trajectory;
    of the remainder, the first train_len snapshots form the training
    window and the next extrap_len the extrapolation window. The first
    n_train trajectories are the training split, the following n_test
    the test split.
    """

    n_train: int
    n_test: int
    train_len: int
    extrap_len: int = 0
    burn_in: int = 0

    def __post_init__(self):
        if self.n_train < 1:
            raise ConfigError("n_train must be >= 1", key="n_train")
        if self.n_test < 0:
            raise ConfigError("n_test must be >= 0", key="n_test")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0", key="burn_in")
        if self.train_len < 4:
            raise ConfigError("train_len must be >= 4 (segment size)", key="train_len")
        if self.extrap_len < 0:
            raise ConfigError("extrap_len must be >= 0", key="extrap_len")


@dataclass
class DatasetBundle:
    """Trajectory corpus with grid metadata, normalization, and splits.

    Windows are index ranges [start, stop) into the stored (post
    burn-in) trajectories; train_window always starts at 0.
    """

    trajectories: list
    grid: GridSpec
    norm: Normalization
    train_idx: list
    test_idx: list
    train_window: tuple  # (start, stop)
    extrap_window: tuple  # (start, stop); start == stop means absent
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.train_idx) & set(self.test_idx):
            raise ConfigError("train/test trajectory splits overlap", key="splits")
        n = len(self.trajectories)
        for i in list(self.train_idx) + list(self.test_idx):
            if not (0 <= i < n):
                raise ConfigError(f"split index {i} out of range", key="splits")
        length = len(self.trajectories[0]) if n else 0
        for t in self.trajectories:
            if len(t) != length:
                raise ShapeError("trajectories have inconsistent lengths")
            if t.fields.shape[1:] != self.grid.shape:
                raise ShapeError(
                    f"trajectory shape {t.fields.shape[1:]} does not match grid {self.grid.shape}"
                )
        for name, (a, b) in (("train_window", self.train_window),
                             ("extrap_window", self.extrap_window)):
            if not (0 <= a <= b <= length):
                raise ConfigError(f"{name} [{a}, {b}) outside trajectory length {length}",
                                  key=name)

    @property
    def dt(self) -> float:
        return self.trajectories[0].dt

    def train_trajectories(self) -> list:
        return [self.trajectories[i] for i in self.train_idx]

    def test_trajectories(self) -> list:
        return [self.trajectories[i] for i in self.test_idx]

    def window_fields(self, split: str, window: str) -> np.ndarray:
        """Packed fields (n_traj, L, ...) for a split ("train"/"test")
        and window ("train"/"extrap"/"full")."""
        idx = self.train_idx if split == "train" else self.test_idx
        if window == "train":
            a, b = self.train_window
        elif window == "extrap":
            a, b = self.extrap_window
        else:
            a, b = self.train_window[0], max(self.train_window[1], self.extrap_window[1])
        return np.stack([self.trajectories[i].fields[a:b] for i in idx])


def build_dataset(trajectories: list, grid: GridSpec, split: SplitSpec) -> DatasetBundle:
    """Assemble a DatasetBundle from raw solver trajectories.

    Drops the burn-in prefix, records windows and the trajectory split,
    and computes normalization statistics from the training trajectories'
    training window only.
    """
    if len(trajectories) != split.n_train + split.n_test:
        raise ConfigError(
            f"got {len(trajectories)} trajectories for a "
            f"{split.n_train}+{split.n_test} split",
            key="n_train",
        )
    raw_len = len(trajectories[0])
    needed = split.burn_in + split.train_len + split.extrap_len
    if needed > raw_len:
        raise ConfigError(
            f"burn_in+train_len+extrap_len = {needed} exceeds trajectory length {raw_len}",
            key="train_len",
        )
    dt0 = trajectories[0].dt
    for t in trajectories:
        if len(t) != raw_len or t.dt != dt0:
            raise ShapeError("all trajectories must share length and dt")

    kept = [t.window(split.burn_in, needed) for t in trajectories]
    train_idx = list(range(split.n_train))
    test_idx = list(range(split.n_train, split.n_train + split.n_test))
    train_window = (0, split.train_len)
    extrap_window = (split.train_len, split.train_len + split.extrap_len)

    stats_fields = np.stack([kept[i].fields[: split.train_len] for i in train_idx])
    mean = float(np.mean(stats_fields, dtype=np.float64))
    std = float(np.std(stats_fields, dtype=np.float64))
    if std == 0.0:
        raise ConfigError("training data has zero variance; cannot normalize", key="std")

    return DatasetBundle(
        trajectories=kept,
        grid=grid,
        norm=Normalization(mean, std),
        train_idx=train_idx,
        test_idx=test_idx,
        train_window=train_window,
        extrap_window=extrap_window,
        meta={"burn_in": split.burn_in},
    )
