"""Gaussian random field sampler for initial vorticity.

Samples the zero-mean Gaussian measure whose covariance operator on the
periodic unit square is 7^{3/2} (-Laplacian + 49 I)^{-2.5}. In Fourier
space this is diagonal: the coefficient of integer mode k has variance

    lam_k = 7^{3/2} * (4 pi^2 |k|^2 + 49)^{-2.5}

with the convention w(x) = sum_k w_hat_k exp(2 pi i k.x). Fields are
drawn by spectrally filtering white noise, which enforces Hermitian
symmetry (hence real samples) by construction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .grids import GridSpec

AMPLITUDE = 7.0**1.5
TAU_SQ = 49.0
ALPHA = 2.5


@dataclass(frozen=True)
class GRFSpec:
    """Seeded draw from the spectral covariance measure above."""

    seed: int = 0


def mode_variance(k1, k2) -> np.ndarray:
    """Variance lam_k of the Fourier coefficient at integer mode (k1, k2)."""
    ksq = np.asarray(k1, dtype=np.float64) ** 2 + np.asarray(k2, dtype=np.float64) ** 2
    return AMPLITUDE * (4.0 * np.pi**2 * ksq + TAU_SQ) ** (-ALPHA)


def _sqrt_spectrum(nx: int) -> np.ndarray:
    k = np.fft.fftfreq(nx, d=1.0 / nx)  # integer wavenumbers
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.sqrt(mode_variance(k1, k2))


def sample_initial_vorticity(grid: GridSpec, spec: GRFSpec) -> np.ndarray:
    """Draw one real (nx, nx) float32 vorticity field."""
    return sample_grf_batch(grid, spec, 1)[0]


def sample_grf_batch(grid: GridSpec, spec: GRFSpec, n_samples: int) -> np.ndarray:
    """Draw n_samples i.i.d. fields as an (n_samples, nx, nx) float32 array.

    Deterministic in (grid, spec.seed, n_samples): the same inputs yield
    bit-identical outputs.
    """
    if grid.ndim != 2:
        raise ShapeError("the vorticity sampler requires a 2D grid")
    nx = grid.nx
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal((n_samples, nx, nx))
    # fft of real white noise is Hermitian with E|F_k|^2 = nx^2; scaling by
    # nx*sqrt(lam_k) gives series coefficients w_hat_k of variance lam_k.
    coeff = np.fft.fft2(noise) * (nx * _sqrt_spectrum(nx))
    fields = np.fft.ifft2(coeff).real
    return np.ascontiguousarray(fields, dtype=np.float32)


def fourier_coefficients(fields: np.ndarray) -> np.ndarray:
    """Series coefficients w_hat_k = fft2(w)/nx^2 of a batch of fields."""
    fields = np.asarray(fields, dtype=np.float64)
    nx = fields.shape[-1]
    return np.fft.fft2(fields) / nx**2
