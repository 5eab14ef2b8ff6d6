"""Corpus generation: many Navier-Stokes trajectories from GRF initial
conditions, with per-trajectory seeds derived from one root seed.

Each trajectory is independent (seed = root_seed + index), so the
corpus is reproducible and could be generated in parallel; here the
loop is sequential and each simulate_ns call is single-threaded.
"""

import numpy as np

from .data import SplitSpec, Trajectory, build_dataset
from .grf import GRFSpec, sample_initial_vorticity
from .grids import GridSpec
from .ns2d import NSParams, simulate_ns


def generate_ns_corpus(
    grid: GridSpec,
    params: NSParams,
    n_traj: int,
    seed: int,
    backend: str = "auto",
    oversample: bool = False,
) -> list:
    """Simulate n_traj trajectories; trajectory i uses GRF seed seed+i.

    With oversample=True each trajectory is simulated at 2x resolution
    (spectrally upsampled initial condition) and point-decimated back to
    the target grid, mimicking generate-fine-then-downsample pipelines.
    """
    out = []
    for i in range(n_traj):
        w0 = sample_initial_vorticity(grid, GRFSpec(seed=seed + i))
        if oversample:
            out.append(_simulate_oversampled(w0, params, grid, backend))
        else:
            out.append(simulate_ns(w0, params, grid, backend=backend))
    return out


def _simulate_oversampled(w0, params: NSParams, grid: GridSpec, backend: str) -> Trajectory:
    fine_grid = GridSpec(nx=2 * grid.nx, ndim=2)
    w0_fine = spectral_upsample(np.asarray(w0, dtype=np.float64), fine_grid.nx)
    fine = simulate_ns(w0_fine, params, fine_grid, backend=backend)
    return Trajectory(fine.fields[:, ::2, ::2], t0=fine.t0, dt=fine.dt)


def spectral_upsample(w: np.ndarray, nx_fine: int) -> np.ndarray:
    """Zero-pad the spectrum of w onto a finer grid (trigonometric interp).

    The unpaired Nyquist row/column of the coarse grid is dropped.
    """
    nx = w.shape[0]
    if nx_fine < nx:
        raise ValueError("nx_fine must be >= nx")
    w_hat = np.fft.fft2(w) / nx**2
    pad = np.zeros((nx_fine, nx_fine), dtype=np.complex128)
    h = nx // 2
    pad[:h, :h] = w_hat[:h, :h]
    pad[:h, -h + 1:] = w_hat[:h, -h + 1:]
    pad[-h + 1:, :h] = w_hat[-h + 1:, :h]
    pad[-h + 1:, -h + 1:] = w_hat[-h + 1:, -h + 1:]
    return np.fft.ifft2(pad).real * nx_fine**2


def generate_ns_dataset(
    grid: GridSpec,
    params: NSParams,
    split: SplitSpec,
    seed: int,
    backend: str = "auto",
    oversample: bool = False,
):
    """Generate the corpus and assemble it into a DatasetBundle."""
    trajectories = generate_ns_corpus(
        grid, params, split.n_train + split.n_test, seed,
        backend=backend, oversample=oversample,
    )
    bundle = build_dataset(trajectories, grid, split)
    bundle.meta.update({"seed": seed, "oversample": oversample})
    return bundle
