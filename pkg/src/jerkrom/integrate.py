"""Latent ODE integration.

The default integrator is fixed-step classical RK4: each interval
between consecutive requested times is split into uniform substeps no
longer than max_substep. Substep counts are computed robustly against
float round-off so that splitting a request into two calls reproduces
the one-shot substep sequence exactly. An adaptive embedded method
(scipy's RK45) is available as an option.
"""

import math

import numpy as np
import torch

from .errors import ConfigError, IntegratorBlowupError
from .nets import ModelState


def _as_rhs(odefunc):
    """Normalize the rhs argument to a numpy (d_z,) -> (d_z,) callable."""
    if isinstance(odefunc, ModelState):
        module = odefunc.odefunc
    elif isinstance(odefunc, torch.nn.Module):
        module = odefunc
    else:
        return odefunc
    dtype = next(module.parameters()).dtype

    def rhs(z):
        with torch.no_grad():
            out = module(torch.from_numpy(np.asarray(z)).to(dtype)[None])[0]
        return out.cpu().numpy().astype(np.float64)

    return rhs


def _validate_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    if times.size == 0:
        raise ConfigError("times must be non-empty", key="times")
    if times[0] < 0:
        raise ConfigError("times must be >= 0", key="times")
    if np.any(np.diff(times) < 0):
        raise ConfigError("times must be sorted ascending", key="times")
    return times


def _substeps(delta: float, h_max: float) -> int:
    # guard against ratios like 50.000000000001 producing an extra step
    return max(1, int(math.ceil(delta / h_max - 1e-9)))


def rk4_step(f, z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(f, z0: np.ndarray, times, max_substep: float) -> np.ndarray:
    """Fixed-step RK4 from z(0) = z0 to every requested time."""
    times = _validate_times(times)
    if max_substep <= 0:
        raise ConfigError("max_substep must be positive", key="max_substep")
    z = np.array(z0, dtype=np.float64)
    out = np.empty((times.size, z.size), dtype=np.float64)
    t_prev = 0.0
    for i, t in enumerate(times):
        delta = t - t_prev
        if delta > 0:
            n = _substeps(delta, max_substep)
            h = delta / n
            for k in range(n):
                z_new = rk4_step(f, z, h)
                if not np.all(np.isfinite(z_new)):
                    raise IntegratorBlowupError(
                        f"non-finite latent state at t ~ {t_prev + (k + 1) * h:g}",
                        last_finite_time=t_prev + k * h,
                    )
                z = z_new
            t_prev = t
        out[i] = z
    return out


def integrate_adaptive(f, z0: np.ndarray, times, rtol: float = 1e-5,
                       atol: float = 1e-7) -> np.ndarray:
    """Adaptive embedded RK45 (scipy) under the given tolerances."""
    from scipy.integrate import solve_ivp

    times = _validate_times(times)
    z0 = np.asarray(z0, dtype=np.float64)
    t_end = float(times[-1])
    if t_end == 0.0:
        return np.tile(z0, (times.size, 1))
    sol = solve_ivp(
        lambda t, z: f(z), (0.0, t_end), z0, t_eval=times,
        method="RK45", rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise IntegratorBlowupError(f"adaptive integration failed: {sol.message}",
                                    last_finite_time=sol.t[-1] if sol.t.size else 0.0)
    return sol.y.T.copy()


def default_substep(times) -> float:
    """min(smallest requested gap / 10, 0.1)."""
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    gaps = np.diff(np.concatenate([[0.0], times]))
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        return 0.1
    return float(min(0.1, gaps.min() / 10.0))


def integrate_latent(
    odefunc,
    z0: np.ndarray,
    times,
    method: str = "rk4",
    max_substep: float = None,
    rtol: float = 1e-5,
    atol: float = 1e-7,
) -> np.ndarray:
    """Integrate dz/dt = h(z) from z0 at t=0 to every requested time.

    odefunc may be a ModelState, a torch module, or a plain numpy
    callable. Returns (len(times), d_z); the entry for t=0 is exactly z0.
    """
    f = _as_rhs(odefunc)
    if method == "rk4":
        if max_substep is None:
            max_substep = default_substep(times)
        return integrate_rk4(f, z0, times, max_substep)
    if method == "adaptive":
        return integrate_adaptive(f, z0, times, rtol=rtol, atol=atol)
    raise ConfigError(f"unknown integration method {method!r}", key="method")
