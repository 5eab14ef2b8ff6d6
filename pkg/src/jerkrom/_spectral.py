"""Pseudo-spectral stepping kernels for the 2D vorticity equation.

Both backends advance dw/dt + u.grad(w) = nu*Lap(w) + f on the periodic
unit square with a Crank-Nicolson treatment of the viscous term, Heun
(explicit trapezoidal) treatment of advection and forcing, and 2/3-rule
dealiasing applied to the state after every substep. Velocities come
from the streamfunction: Lap(psi) = -w, u = dpsi/dy, v = -dpsi/dx.

`NumpyStepper` is the reference implementation; `jerkrom._spectral_ext`
provides a compiled FFTW-backed kernel with identical semantics, chosen
at import time by `get_stepper`. Set JERKROM_FORCE_NUMPY=1 to disable
the extension.
"""

import os

import numpy as np

_EXT_IMPORT_ERROR = None
try:
    from . import _spectral_ext
except ImportError as exc:  # extension not built on this install
    _spectral_ext = None
    _EXT_IMPORT_ERROR = exc


def wavenumbers(nx: int):
    """Angular wavenumbers (2*pi*k) for the rfft2 layout, plus helpers.

    Returns (k1, k2, ksq, inv_ksq, dealias_mask) with k1 varying along
    axis 0 (signed) and k2 along the halved axis 1 (non-negative).
    """
    kx = np.fft.fftfreq(nx, d=1.0 / nx)
    ky = np.arange(nx // 2 + 1, dtype=np.float64)
    k1 = 2.0 * np.pi * kx[:, None]
    k2 = 2.0 * np.pi * ky[None, :]
    ksq = k1**2 + k2**2
    inv_ksq = np.zeros_like(ksq)
    inv_ksq[ksq > 0] = 1.0 / ksq[ksq > 0]
    kmax = nx // 3  # keep |k| <= nx//3, truncate the rest
    mask = (np.abs(kx[:, None]) <= kmax) & (np.abs(ky[None, :]) <= kmax)
    return k1, k2, ksq, inv_ksq, mask


class NumpyStepper:
    """Reference numpy implementation of the stepping kernel."""

    backend = "numpy"

    def __init__(self, nx: int, nu: float, dt: float, forcing=None):
        self.nx = nx
        self.nu = nu
        self.dt = dt
        self._k1, self._k2, ksq, self._inv_ksq, self._mask = wavenumbers(nx)
        c = 0.5 * dt * nu * ksq
        self._decay_num = 1.0 - c
        self._decay_den_inv = 1.0 / (1.0 + c)
        if forcing is None:
            self._f_hat = np.zeros((nx, nx // 2 + 1), dtype=np.complex128)
        else:
            self._f_hat = np.fft.rfft2(np.asarray(forcing, dtype=np.float64))

    def _advection(self, w_hat):
        psi_hat = w_hat * self._inv_ksq
        u = np.fft.irfft2(1j * self._k2 * psi_hat, s=(self.nx, self.nx))
        v = np.fft.irfft2(-1j * self._k1 * psi_hat, s=(self.nx, self.nx))
        wx = np.fft.irfft2(1j * self._k1 * w_hat, s=(self.nx, self.nx))
        wy = np.fft.irfft2(1j * self._k2 * w_hat, s=(self.nx, self.nx))
        return np.fft.rfft2(-(u * wx + v * wy)) * self._mask

    def run(self, w: np.ndarray, n_steps: int) -> np.ndarray:
        """Advance the real field w by n_steps substeps of length dt."""
        w_hat = np.fft.rfft2(np.asarray(w, dtype=np.float64)) * self._mask
        dt = self.dt
        for _ in range(n_steps):
            n1 = self._advection(w_hat)
            base = w_hat * self._decay_num
            w_pred = (base + dt * (n1 + self._f_hat)) * self._decay_den_inv * self._mask
            n2 = self._advection(w_pred)
            w_hat = (
                (base + dt * (0.5 * (n1 + n2) + self._f_hat))
                * self._decay_den_inv
                * self._mask
            )
        return np.fft.irfft2(w_hat, s=(self.nx, self.nx))


def extension_available() -> bool:
    return _spectral_ext is not None


def get_stepper(nx: int, nu: float, dt: float, forcing=None, backend: str = "auto"):
    """Instantiate a stepping kernel.

    backend: "auto" (compiled if available), "ext", or "numpy".
    """
    if backend not in ("auto", "ext", "numpy"):
        raise ValueError(f"unknown solver backend {backend!r}")
    if os.environ.get("JERKROM_FORCE_NUMPY") and backend == "auto":
        backend = "numpy"
    if backend == "numpy":
        return NumpyStepper(nx, nu, dt, forcing)
    if _spectral_ext is None:
        if backend == "ext":
            raise ImportError(
                f"compiled stepper requested but not available: {_EXT_IMPORT_ERROR}"
            )
        return NumpyStepper(nx, nu, dt, forcing)
    return _spectral_ext.SpectralStepper(nx, nu, dt, forcing)
