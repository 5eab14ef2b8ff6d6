"""Built-in analytic-oracle suite (the `selftest` CLI command).

Each check compares an implementation against an independent closed
form: jerk third-difference identities, finite-difference gradients,
exponential/rotation ODE solutions with an order-of-convergence check,
Taylor-Green vorticity decay, and the GRF mode-variance formula.
"""

import numpy as np
import torch

from .grf import GRFSpec, fourier_coefficients, mode_variance, sample_grf_batch
from .grids import GridSpec, grid_coordinates
from .integrate import integrate_rk4
from .losses import Segment, SegmentBatch, jerk_loss, stage1_loss
from .metrics import average_jerk
from .nets import DecoderConfig, EncoderConfig, ODEFuncConfig, check_gradients, init_model
from .ns2d import NSParams, simulate_ns, taylor_green_vorticity


def check_jerk_identities():
    t = np.arange(4, dtype=np.float64)
    quad = 0.7 - 0.3 * t + 1.9 * t**2
    z_const = np.tile([1.0, -2.0, 0.5], (4, 1))
    z_quad = np.tile(quad[:, None], (1, 3))
    c = float(average_jerk(np.tile(np.zeros(4)[:, None], (1, 3)) + z_const))
    q = float(average_jerk(z_quad))
    cubic = float(average_jerk((t**3)[:, None]))
    ok = abs(c) < 1e-12 and abs(q) < 1e-12 and abs(cubic - 36.0) < 1e-9
    return ok, f"constant={c:.2e} quadratic={q:.2e} cubic={cubic!r} (expect 36)"


def _tiny_model_and_batch():
    enc = EncoderConfig(nx=8, ndim=2, d_z=3, widths=(4, 8), variant="scaled")
    dec = DecoderConfig(d_z=3, ndim=2, hidden_layers=2, hidden_width=12,
                        fourier_harmonics=1)
    ode = ODEFuncConfig(d_z=3, hidden_layers=1, hidden_width=8)
    model = init_model(enc, dec, ode, seed=0)
    rng = np.random.default_rng(42)
    coords = grid_coordinates(8, 2)
    segments = [
        Segment(rng.standard_normal((4, 8, 8)).astype(np.float32), coords)
        for _ in range(2)
    ]
    return model, SegmentBatch.from_segments(segments)


def check_gradient_correctness():
    model, batch = _tiny_model_and_batch()
    rep_total = check_gradients(model, lambda s: stage1_loss(s, batch, 0.1)[0],
                                tolerance=1e-4)
    rep_jerk = check_gradients(model, lambda s: jerk_loss(s, batch), tolerance=1e-4,
                               samples_per_block=2)
    ok = rep_total.passed and all(
        err <= 1e-4 for name, err in rep_jerk.block_errors.items()
        if name.startswith("encoder")
    )
    return ok, (f"stage1 max rel err {rep_total.max_error:.2e}, "
                f"jerk/encoder max rel err "
                f"{max(v for k, v in rep_jerk.block_errors.items() if k.startswith('encoder')):.2e}")


def check_ode_integrator():
    exp_rhs = lambda z: -z
    z = integrate_rk4(exp_rhs, np.array([1.0]), [1.0], max_substep=1e-2)
    err_exp = abs(z[0, 0] - np.exp(-1.0))

    rot = lambda z: np.array([-z[1], z[0]])
    z = integrate_rk4(rot, np.array([1.0, 0.0]), [np.pi / 2], max_substep=1e-2)
    err_rot = np.max(np.abs(z[0] - [0.0, 1.0]))

    errs = []
    for h in (0.1, 0.05):
        zz = integrate_rk4(exp_rhs, np.array([1.0]), [1.0], max_substep=h)
        errs.append(abs(zz[0, 0] - np.exp(-1.0)))
    factor = errs[0] / errs[1]

    one = integrate_rk4(exp_rhs, np.array([1.0]), [1.0], max_substep=1e-2)[-1]
    half = integrate_rk4(exp_rhs, np.array([1.0]), [0.5], max_substep=1e-2)[-1]
    two = integrate_rk4(exp_rhs, half, [0.5], max_substep=1e-2)[-1]
    seg_diff = np.max(np.abs(one - two))

    ok = err_exp < 1e-6 and err_rot < 1e-6 and factor >= 12.0 and seg_diff < 1e-9
    return ok, (f"exp err {err_exp:.1e}, rot err {err_rot:.1e}, "
                f"halving factor {factor:.1f}, two-segment diff {seg_diff:.1e}")


def check_ns_solver():
    grid = GridSpec(64)
    w0 = taylor_green_vorticity(grid)
    params = NSParams(nu=1e-3, forcing_amplitude=0.0, dt_sim=1e-2,
                      dt_snapshot=1.0, n_snapshots=4)
    traj = simulate_ns(w0, params, grid)
    exact = w0 * np.exp(-8.0 * np.pi**2 * 1e-3)
    err = np.linalg.norm(traj.fields[1].astype(np.float64) - exact) / np.linalg.norm(exact)
    return err < 1e-3, f"Taylor-Green rel err at t=1: {err:.2e} (< 1e-3)"


def check_grf_sampler(n_samples: int = 2000):
    grid = GridSpec(64)
    fields = sample_grf_batch(grid, GRFSpec(seed=7), n_samples)
    coeff = fourier_coefficients(fields)
    worst = 0.0
    for k1 in range(-4, 5):
        for k2 in range(-4, 5):
            if k1 * k1 + k2 * k2 > 16:
                continue
            emp = float(np.mean(np.abs(coeff[:, k1, k2]) ** 2))
            target = float(mode_variance(k1, k2))
            worst = max(worst, abs(emp / target - 1.0))
    return worst < 0.10, f"worst |k|<=4 variance deviation: {worst * 100:.1f}% (< 10%)"


CHECKS = [
    ("jerk-identities", check_jerk_identities),
    ("gradient-correctness", check_gradient_correctness),
    ("ode-integrator", check_ode_integrator),
    ("ns-taylor-green", check_ns_solver),
    ("grf-spectrum", check_grf_sampler),
]


def run_selftest(out=print) -> bool:
    torch.set_num_threads(1)
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    out("selftest " + ("PASSED" if all_ok else "FAILED"))
    return all_ok
