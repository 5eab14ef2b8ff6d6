import numpy as np
import pytest

from jerkrom.errors import ConfigError, MetricUndefinedError
from jerkrom.latent import LatentTrajectory
from jerkrom.metrics import (ACTIVE_THRESHOLDS, active_threshold, average_jerk,
                             count_active_coords, jerk_windows, mse,
                             relative_rmse, relative_rmse_series)


def test_relative_rmse_trivial_cases():
    truth = np.random.default_rng(0).standard_normal((8, 8))
    assert relative_rmse(truth, truth) == 0.0
    assert relative_rmse(np.zeros_like(truth), truth) == pytest.approx(1.0)
    assert relative_rmse(2.0 * truth, truth) == pytest.approx(1.0)


def test_relative_rmse_zero_norm():
    with pytest.raises(MetricUndefinedError):
        relative_rmse(np.ones((4, 4)), np.zeros((4, 4)))


def test_relative_rmse_series():
    truth = np.random.default_rng(1).standard_normal((5, 8, 8))
    series = relative_rmse_series(2.0 * truth, truth)
    assert series.shape == (5,)
    assert np.allclose(series, 1.0)


def test_average_jerk_constant_zero():
    z = np.tile([0.5, -1.0], (10, 1))
    assert average_jerk(z) == 0.0


def test_average_jerk_quadratic_zero():
    t = np.arange(12.0)
    z = (1.0 + 2.0 * t - 0.7 * t**2)[:, None] * np.array([1.0, -0.5, 2.0])
    assert abs(average_jerk(z)) < 1e-9


def test_average_jerk_cubic_two_windows():
    # z(t) = t^3 on t = 0..4: both 4-point windows have third
    # difference 6, so the average jerk is 36
    t = np.arange(5.0)
    z = (t**3)[:, None]
    windows = jerk_windows(z)
    assert windows.shape == (2,)
    assert np.allclose(windows, 36.0)
    assert average_jerk(z) == pytest.approx(36.0, abs=1e-9)


def test_average_jerk_accepts_latent_trajectory():
    values = np.random.default_rng(2).standard_normal((6, 3)).astype(np.float32)
    traj = LatentTrajectory(values, np.arange(6.0))
    assert average_jerk(traj) == pytest.approx(average_jerk(values.astype(np.float64)),
                                               rel=1e-6)


def test_average_jerk_needs_four_snapshots():
    with pytest.raises(ConfigError):
        average_jerk(np.zeros((3, 2)))


def test_count_active_coords_synthetic():
    # exactly 3 varying coordinates among 8
    rng = np.random.default_rng(3)
    t = np.linspace(0, 1, 50)
    z = np.zeros((50, 8))
    z[:, 1] = 0.3 * np.sin(2 * np.pi * t)
    z[:, 4] = 0.2 * t
    z[:, 6] = 0.5 * np.cos(4 * np.pi * t)
    z[:, 0] = 0.77  # constant offset: zero variance
    count, variances = count_active_coords(z, threshold=1e-6)
    assert count == 3
    assert variances.shape == (8,)
    # any threshold between float noise and the active variance works
    assert count_active_coords(z, threshold=1e-4)[0] == 3


def test_count_active_coords_all_constant():
    z = np.tile([1.0, 2.0, 3.0], (20, 1))
    assert count_active_coords(z, threshold=1e-8)[0] == 0


def test_count_active_coords_pooling_and_permutation():
    rng = np.random.default_rng(4)
    trajs = [rng.standard_normal((10, 5)) for _ in range(4)]
    count_a, var_a = count_active_coords(trajs, threshold=0.5)
    count_b, var_b = count_active_coords(trajs[::-1], threshold=0.5)
    assert count_a == count_b
    assert np.allclose(var_a, var_b)
    perm = [2, 0, 1, 4, 3]
    permuted = [t[:, perm] for t in trajs]
    count_c, var_c = count_active_coords(permuted, threshold=0.5)
    assert count_c == count_a
    assert np.allclose(var_c, var_a[perm])


def test_count_active_coords_validation():
    with pytest.raises(ConfigError):
        count_active_coords([], threshold=1e-5)
    with pytest.raises(ConfigError):
        count_active_coords(np.zeros((5, 3)), threshold=0.0)


def test_threshold_table():
    assert active_threshold(10) == 5e-5
    assert active_threshold(32) == 1e-5
    assert active_threshold(12) == 1e-4  # unlisted dimension falls back
    assert set(ACTIVE_THRESHOLDS) == {8, 10, 16, 32, 64}


def test_mse():
    a = np.ones((4, 4))
    b = np.zeros((4, 4))
    assert mse(a, b) == 1.0
