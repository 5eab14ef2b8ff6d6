import numpy as np
import pytest

from jerkrom.data import (DatasetBundle, Normalization, SplitSpec, Trajectory,
                          build_dataset, denormalize, normalize)
from jerkrom.errors import ConfigError, ShapeError
from jerkrom.grids import GridSpec
from jerkrom.toy import generate_toy_wave


def toy_trajectories(n, snapshots=50):
    from jerkrom.toy import ToyWaveParams

    grid = GridSpec(32, ndim=1)
    return grid, generate_toy_wave(grid, n, seed=0,
                                   params=ToyWaveParams(n_snapshots=snapshots))


def test_paper_style_windows():
    grid, trajs = toy_trajectories(5)
    split = SplitSpec(n_train=4, n_test=1, train_len=30, extrap_len=10, burn_in=10)
    bundle = build_dataset(trajs, grid, split)
    assert len(bundle.trajectories[0]) == 40
    assert bundle.train_window == (0, 30)
    assert bundle.extrap_window == (30, 40)
    # burn-in removed: first kept snapshot is at t = 10*dt
    assert bundle.trajectories[0].t0 == pytest.approx(10.0)


def test_identity_split():
    grid, trajs = toy_trajectories(3, snapshots=12)
    split = SplitSpec(n_train=3, n_test=0, train_len=12, extrap_len=0, burn_in=0)
    bundle = build_dataset(trajs, grid, split)
    assert bundle.train_window == (0, 12)
    assert bundle.extrap_window == (12, 12)
    assert np.array_equal(bundle.trajectories[0].fields, trajs[0].fields)


def test_split_indices_disjoint_and_covering():
    grid, trajs = toy_trajectories(10)
    split = SplitSpec(n_train=9, n_test=1, train_len=30, extrap_len=10, burn_in=10)
    bundle = build_dataset(trajs, grid, split)
    assert sorted(bundle.train_idx + bundle.test_idx) == list(range(10))
    assert not set(bundle.train_idx) & set(bundle.test_idx)


def test_normalization_statistics_from_training_window_only():
    grid, trajs = toy_trajectories(6)
    split = SplitSpec(n_train=4, n_test=2, train_len=25, extrap_len=10, burn_in=5)
    bundle = build_dataset(trajs, grid, split)
    train_fields = np.stack(
        [bundle.trajectories[i].fields[:25] for i in bundle.train_idx]
    ).astype(np.float64)
    normed = bundle.norm.normalize(train_fields)
    assert abs(normed.mean()) < 1e-5
    assert abs(normed.std() - 1.0) < 1e-4


def test_normalize_denormalize_inverse():
    norm = Normalization(mean=1.5, std=2.5)
    x = np.linspace(-3, 3, 7)
    assert np.allclose(denormalize(normalize(x, norm), norm), x, atol=1e-12)
    assert np.allclose(normalize(np.full(3, 1.5), norm), 0.0)
    ident = Normalization(mean=0.0, std=1.0)
    assert np.array_equal(normalize(x, ident), x)
    with pytest.raises(ConfigError):
        Normalization(mean=0.0, std=0.0)


def test_window_errors():
    grid, trajs = toy_trajectories(2, snapshots=20)
    with pytest.raises(ConfigError):
        build_dataset(trajs, grid,
                      SplitSpec(n_train=1, n_test=1, train_len=30, extrap_len=10, burn_in=10))
    with pytest.raises(ConfigError):
        build_dataset(trajs, grid,
                      SplitSpec(n_train=2, n_test=1, train_len=10))  # count mismatch


def test_trajectory_invariants():
    with pytest.raises(ConfigError):
        Trajectory(np.zeros((3, 8), dtype=np.float32), t0=0.0, dt=1.0)  # < 4 snapshots
    with pytest.raises(ConfigError):
        Trajectory(np.zeros((5, 8), dtype=np.float32), t0=0.0, dt=-1.0)
    t = Trajectory(np.zeros((5, 8), dtype=np.float32), t0=2.0, dt=0.5)
    assert np.allclose(t.times, [2.0, 2.5, 3.0, 3.5, 4.0])
    snap = t.snapshot(2)
    assert snap.time == 3.0
    with pytest.raises(ShapeError):
        DatasetBundle(
            trajectories=[t], grid=GridSpec(16, ndim=1),
            norm=Normalization(0.0, 1.0), train_idx=[0], test_idx=[],
            train_window=(0, 5), extrap_window=(5, 5),
        )
