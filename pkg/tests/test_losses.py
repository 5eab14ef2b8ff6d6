"""Loss identities and invariances.

Jerk identities are exercised through the same torch kernel the
training loss uses; encoder-level cases use crafted inputs whose
latent behavior is known exactly (identical snapshots encode to an
exactly constant latent sequence).
"""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from jerkrom.errors import ConfigError, ShapeError
from jerkrom.grids import grid_coordinates
from jerkrom.losses import (Segment, SegmentBatch, _jerk_from_latents, jerk_loss,
                            ode_loss, recon_loss, stage1_loss)
from jerkrom.nets import DecoderConfig, EncoderConfig, ODEFuncConfig, init_model

NX = 8
COORDS = grid_coordinates(NX, 2)


def tiny_model(d_z=3, seed=0):
    return init_model(
        EncoderConfig(nx=NX, ndim=2, d_z=d_z, widths=(4, 8)),
        DecoderConfig(d_z=d_z, ndim=2, hidden_layers=2, hidden_width=16,
                      fourier_harmonics=1),
        ODEFuncConfig(d_z=d_z, hidden_layers=1, hidden_width=8),
        seed=seed,
    )


def make_batch(fields_list):
    return SegmentBatch.from_segments(
        [Segment(np.asarray(f, dtype=np.float32), COORDS) for f in fields_list]
    )


def constant_batch(value, n_segments=2):
    return make_batch([np.full((4, NX, NX), value, dtype=np.float32)] * n_segments)


# ---------------------------------------------------------------------------
# jerk formula identities (the exact kernel used in training)
# ---------------------------------------------------------------------------

def test_jerk_zero_for_constant_sequence():
    z = torch.tensor([[[1.0, -2.0, 0.5]] * 4], dtype=torch.float64)
    assert float(_jerk_from_latents(z)) == 0.0


def test_jerk_zero_for_quadratic_sequence():
    t = torch.arange(4, dtype=torch.float64)
    z = (0.3 + 1.7 * t - 2.2 * t**2)[None, :, None].expand(1, 4, 5).clone()
    assert abs(float(_jerk_from_latents(z))) < 1e-12


def test_jerk_cubic_is_36():
    t = torch.arange(4, dtype=torch.float64)
    z = (t**3)[None, :, None]  # d_z = 1, z(t) = t^3 at t = 0,1,2,3
    assert float(_jerk_from_latents(z)) == pytest.approx(36.0, abs=1e-9)


@given(
    a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3),
    base=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
)
@settings(max_examples=50, deadline=None)
def test_jerk_invariant_to_adding_quadratics(a, b, c, base):
    # adding any per-coordinate quadratic in t leaves the jerk unchanged
    t = torch.arange(4, dtype=torch.float64)
    rng = np.random.default_rng(0)
    z = torch.from_numpy(rng.standard_normal((2, 4, 3)))
    quad = (a + b * t + c * t**2)[None, :, None] + torch.tensor(base)[None, None, :]
    assert float(_jerk_from_latents(z + quad)) == pytest.approx(
        float(_jerk_from_latents(z)), rel=1e-9, abs=1e-12
    )


@given(alpha=st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_jerk_quadratic_scaling(alpha):
    rng = np.random.default_rng(1)
    z = torch.from_numpy(rng.standard_normal((3, 4, 5)))
    assert float(_jerk_from_latents(alpha * z)) == pytest.approx(
        alpha**2 * float(_jerk_from_latents(z)), rel=1e-9
    )


# ---------------------------------------------------------------------------
# encoder-level losses
# ---------------------------------------------------------------------------

def test_jerk_loss_zero_for_identical_snapshots():
    # identical inputs encode to identical latents up to 1-ulp GEMM
    # row effects, so the third difference is zero at round-off scale
    model = tiny_model()
    assert abs(float(jerk_loss(model, constant_batch(0.7)))) < 1e-12


def test_jerk_loss_requires_four_snapshots():
    with pytest.raises(ShapeError):
        Segment(np.zeros((3, NX, NX), dtype=np.float32), COORDS)


def test_recon_zero_for_perfect_reconstruction():
    # bias-only decoder reproducing a constant field exactly
    model = tiny_model()
    value = 0.37
    with torch.no_grad():
        final = model.decoder.net[-1]
        final.weight.zero_()
        final.bias.fill_(value)
    batch = constant_batch(value)
    assert float(recon_loss(model, batch)) == 0.0


def test_recon_constant_offset_is_squared_offset():
    model = tiny_model()
    value, offset = 0.25, 0.6
    with torch.no_grad():
        final = model.decoder.net[-1]
        final.weight.zero_()
        final.bias.fill_(value + offset)
    batch = constant_batch(value, n_segments=3)
    assert float(recon_loss(model, batch)) == pytest.approx(offset**2, rel=1e-6)


def test_recon_invariant_to_segment_permutation():
    model = tiny_model()
    rng = np.random.default_rng(3)
    fields = [rng.standard_normal((4, NX, NX)) for _ in range(5)]
    a = float(recon_loss(model, make_batch(fields)))
    b = float(recon_loss(model, make_batch(fields[::-1])))
    assert a == pytest.approx(b, rel=1e-6)


def test_stage1_composition():
    model = tiny_model()
    rng = np.random.default_rng(4)
    batch = make_batch([rng.standard_normal((4, NX, NX)) for _ in range(2)])
    total, recon, jerk = stage1_loss(model, batch, 0.5)
    assert float(total) == pytest.approx(float(recon) + 0.5 * float(jerk), rel=1e-7)
    total0, recon0, _ = stage1_loss(model, batch, 0.0)
    assert float(total0) == float(recon0)
    assert float(recon0) == pytest.approx(float(recon), rel=1e-7)
    with pytest.raises(ConfigError):
        stage1_loss(model, batch, -0.1)


def test_losses_nonnegative():
    model = tiny_model()
    rng = np.random.default_rng(5)
    batch = make_batch([rng.standard_normal((4, NX, NX)) for _ in range(2)])
    assert float(recon_loss(model, batch)) >= 0.0
    assert float(jerk_loss(model, batch)) >= 0.0


def test_resolution_mismatch_raises():
    model = tiny_model()
    coords16 = grid_coordinates(16, 2)
    seg = Segment(np.zeros((4, 16, 16), dtype=np.float32), coords16)
    with pytest.raises(ShapeError):
        recon_loss(model, SegmentBatch.from_segments([seg]))


# ---------------------------------------------------------------------------
# ode loss
# ---------------------------------------------------------------------------

def test_ode_loss_identical_is_zero():
    z = np.random.default_rng(0).standard_normal((7, 4))
    assert float(ode_loss(z, z.copy())) == 0.0


def test_ode_loss_single_step_arithmetic():
    pred = np.array([[0.3, -0.4]])
    actual = np.zeros((1, 2))
    assert float(ode_loss(pred, actual)) == pytest.approx(0.25, rel=1e-12)


def test_ode_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        ode_loss(np.zeros((3, 2)), np.zeros((4, 2)))
