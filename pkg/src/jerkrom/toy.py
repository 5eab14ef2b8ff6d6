"""Cheap 1D advection-diffusion corpus with a closed-form solution.

u(x, t) = A * exp(-nu*k^2*t) * sin(k*(x - c*t) + phi) solves
du/dt + c*du/dx = nu*d2u/dx2 exactly. Amplitude and phase are randomized
per trajectory; (k, c, nu) are fixed. Useful as a fast stand-in corpus
for pipeline tests.
"""

from dataclasses import dataclass

import numpy as np

from .data import Trajectory
from .errors import ShapeError
from .grids import GridSpec


@dataclass(frozen=True)
class ToyWaveParams:
    mode: int = 1  # integer spatial wavenumber; k = 2*pi*mode
    speed: float = 0.23
    nu: float = 5e-4
    dt: float = 1.0
    n_snapshots: int = 50
    amp_range: tuple = (0.5, 1.5)


def toy_wave_field(x: np.ndarray, t: float, amp: float, phase: float,
                   params: ToyWaveParams) -> np.ndarray:
    k = 2.0 * np.pi * params.mode
    decay = np.exp(-params.nu * k * k * t)
    return amp * decay * np.sin(k * (x - params.speed * t) + phase)


def generate_toy_wave(
    grid: GridSpec,
    n_traj: int,
    seed: int,
    params: ToyWaveParams = ToyWaveParams(),
) -> list:
    """Sample n_traj exact trajectories with randomized (A, phi)."""
    if grid.ndim != 1:
        raise ShapeError("the toy wave corpus is 1D")
    rng = np.random.default_rng(seed)
    x = grid.axis()
    times = params.dt * np.arange(params.n_snapshots)
    out = []
    for _ in range(n_traj):
        amp = rng.uniform(*params.amp_range)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        fields = np.stack(
            [toy_wave_field(x, t, amp, phase, params) for t in times]
        ).astype(np.float32)
        out.append(Trajectory(fields, t0=0.0, dt=params.dt))
    return out
