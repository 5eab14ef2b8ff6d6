"""Gaussian random field sampler against the closed-form spectrum.

The covariance operator is diagonal in Fourier space with eigenvalue
lam_k = 7^{3/2} (4 pi^2 |k|^2 + 49)^{-2.5}; empirical mode variances of
a large sample must match it. The k=(0,0) eigenvalue evaluates to
7^{-3.5} ~ 1.1019e-3.
"""

import numpy as np
import pytest

from jerkrom.errors import ShapeError
from jerkrom.grf import (GRFSpec, fourier_coefficients, mode_variance,
                         sample_grf_batch, sample_initial_vorticity)
from jerkrom.grids import GridSpec

N_SAMPLES = 2000


@pytest.fixture(scope="module")
def coeffs():
    fields = sample_grf_batch(GridSpec(64), GRFSpec(seed=7), N_SAMPLES)
    return fourier_coefficients(fields)


def test_mode_variance_formula_at_origin():
    # independent evaluation of the eigenvalue formula
    assert mode_variance(0, 0) == pytest.approx(7.0**1.5 * 49.0**-2.5, rel=1e-12)
    assert mode_variance(0, 0) == pytest.approx(1.1019e-3, rel=1e-3)


def test_zero_mode_empirical_variance(coeffs):
    emp = np.mean(np.abs(coeffs[:, 0, 0]) ** 2)
    assert emp == pytest.approx(mode_variance(0, 0), rel=0.10)


@pytest.mark.parametrize("k", [(1, 0), (0, 1), (-1, 2), (2, 2), (3, -1), (4, 0), (0, 4)])
def test_low_mode_variances(coeffs, k):
    emp = np.mean(np.abs(coeffs[:, k[0], k[1]]) ** 2)
    assert emp == pytest.approx(mode_variance(*k), rel=0.10)


def test_spectrum_chi_square_bound(coeffs):
    # 5 sigma chi-square bound on the variance ratio for every retained
    # low mode (complex modes have 2*N_SAMPLES degrees of freedom)
    bound = 5.0 * np.sqrt(2.0 / (2 * N_SAMPLES))
    for k1 in range(-4, 5):
        for k2 in range(-4, 5):
            if (k1, k2) == (0, 0):
                continue
            emp = np.mean(np.abs(coeffs[:, k1, k2]) ** 2)
            assert abs(emp / mode_variance(k1, k2) - 1.0) < bound, (k1, k2)


def test_ensemble_mean_is_zero():
    fields = sample_grf_batch(GridSpec(32), GRFSpec(seed=11), N_SAMPLES)
    mean = fields.mean(axis=0, dtype=np.float64)
    # pointwise std = sqrt(sum_k lam_k); stderr of the mean over samples
    k = np.fft.fftfreq(32, 1 / 32)
    lam = mode_variance(*np.meshgrid(k, k, indexing="ij"))
    stderr = np.sqrt(lam.sum() / N_SAMPLES)
    assert np.max(np.abs(mean)) < 3.0 * stderr * 3.5  # 3 sigma with a max-over-grid margin


def test_samples_are_real_and_finite():
    f = sample_initial_vorticity(GridSpec(32), GRFSpec(seed=0))
    assert f.dtype == np.float32
    assert f.shape == (32, 32)
    assert np.all(np.isfinite(f))


def test_determinism():
    a = sample_grf_batch(GridSpec(32), GRFSpec(seed=5), 3)
    b = sample_grf_batch(GridSpec(32), GRFSpec(seed=5), 3)
    assert np.array_equal(a, b)
    c = sample_grf_batch(GridSpec(32), GRFSpec(seed=6), 3)
    assert not np.array_equal(a, c)


def test_requires_2d_grid():
    with pytest.raises(ShapeError):
        sample_initial_vorticity(GridSpec(32, ndim=1), GRFSpec(seed=0))
