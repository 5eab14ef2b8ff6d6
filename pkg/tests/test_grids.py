import numpy as np
import pytest

from jerkrom.errors import ConfigError
from jerkrom.grids import GridSpec, grid_coordinates, wrap_coordinates


def test_grid_validation():
    GridSpec(8)
    GridSpec(64, ndim=1)
    with pytest.raises(ConfigError):
        GridSpec(7)
    with pytest.raises(ConfigError):
        GridSpec(48)  # not a power of two
    with pytest.raises(ConfigError):
        GridSpec(4)  # too small
    with pytest.raises(ConfigError):
        GridSpec(16, ndim=3)


def test_coordinates_layout():
    g = GridSpec(8, ndim=2)
    c = g.coordinates()
    assert c.shape == (64, 2)
    # row-major: point (i, j) at row i*nx + j
    assert c[0].tolist() == [0.0, 0.0]
    assert c[1].tolist() == [0.0, 1.0 / 8.0]
    assert c[8].tolist() == [1.0 / 8.0, 0.0]


def test_coarse_grid_is_exact_subset_of_fine():
    c32 = grid_coordinates(32, 1).ravel()
    c128 = grid_coordinates(128, 1).ravel()
    assert np.array_equal(c32, c128[::4])


def test_wrap_coordinates():
    x = np.array([[1.25, -0.25], [0.5, 1.0]])
    w = wrap_coordinates(x)
    assert np.allclose(w, [[0.25, 0.75], [0.5, 0.0]])
    assert np.all((w >= 0.0) & (w < 1.0))
    # tiny negative values must not wrap to exactly 1.0
    assert wrap_coordinates(np.array([[-1e-18]]))[0, 0] < 1.0
