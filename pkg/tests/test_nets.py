import numpy as np
import pytest
import torch

from jerkrom.data import FieldSnapshot, Normalization
from jerkrom.errors import ConfigError, ShapeError
from jerkrom.grids import grid_coordinates
from jerkrom.losses import Segment, SegmentBatch, jerk_loss, recon_loss, stage1_loss
from jerkrom.nets import (DecoderConfig, EncoderConfig, ModelState, ODEFuncConfig,
                          check_gradients, decode, encode, gradient_participation,
                          init_model, ode_rhs)

torch.set_num_threads(1)


def small_model(d_z=4, nx=16, seed=0, **dec_kw):
    dec = dict(hidden_layers=2, hidden_width=24, fourier_harmonics=2)
    dec.update(dec_kw)
    return init_model(
        EncoderConfig(nx=nx, ndim=2, d_z=d_z, widths=(4, 8)),
        DecoderConfig(d_z=d_z, ndim=2, **dec),
        ODEFuncConfig(d_z=d_z, hidden_layers=2, hidden_width=16),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# init
# ---------------------------------------------------------------------------

def test_init_deterministic():
    a = small_model(seed=3).parameter_arrays()
    b = small_model(seed=3).parameter_arrays()
    c = small_model(seed=4).parameter_arrays()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_inconsistent_d_z_rejected():
    with pytest.raises(ConfigError):
        init_model(
            EncoderConfig(nx=16, d_z=4, widths=(4, 8)),
            DecoderConfig(d_z=5),
            ODEFuncConfig(d_z=4),
        )


def test_desk_scale_default_config():
    model = init_model(
        EncoderConfig(nx=32, ndim=2, d_z=10, widths=(16, 32, 64, 128)),
        DecoderConfig(d_z=10, ndim=2, hidden_layers=3, hidden_width=64),
        ODEFuncConfig(d_z=10, hidden_layers=3, hidden_width=64),
        seed=0,
    )
    z = encode(model, np.random.default_rng(0).standard_normal((32, 32)).astype(np.float32))
    assert z.shape == (10,)
    assert np.all(np.isfinite(z))


def test_paper_scale_resnet50_config():
    model = init_model(
        EncoderConfig(nx=64, ndim=2, d_z=10, variant="resnet50"),
        DecoderConfig(d_z=10, ndim=2, hidden_layers=7, hidden_width=512),
        ODEFuncConfig(d_z=10, hidden_layers=5, hidden_width=512),
        seed=0,
    )
    # final linear reduces 2048 features to d_z
    assert model.encoder.head.in_features == 2048
    z = encode(model, np.zeros((64, 64), dtype=np.float32))
    assert z.shape == (10,)
    assert np.all(np.isfinite(z))


def test_decoder_rejects_nonsmooth_activation():
    with pytest.raises(ConfigError):
        DecoderConfig(activation="relu")


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------

def test_encode_deterministic_and_finite():
    model = small_model()
    field = np.random.default_rng(1).standard_normal((16, 16)).astype(np.float32)
    assert np.array_equal(encode(model, field), encode(model, field))
    z0 = encode(model, np.zeros((16, 16), dtype=np.float32))
    assert np.all(np.isfinite(z0))


def test_encode_resolution_mismatch():
    model = small_model()
    with pytest.raises(ShapeError):
        encode(model, np.zeros((32, 32), dtype=np.float32))


def test_encode_applies_normalization():
    model = small_model()
    field = np.random.default_rng(2).standard_normal((16, 16)).astype(np.float32)
    z_raw = encode(model, field)
    model.norm = Normalization(mean=0.0, std=2.0)
    z_scaled = encode(model, field)
    model.norm = None
    z_half = encode(model, field / 2.0)
    assert np.allclose(z_scaled, z_half, atol=1e-6)
    assert not np.allclose(z_raw, z_scaled)


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------

def test_decode_super_resolution_consistency():
    model = small_model()
    z = np.random.default_rng(3).standard_normal(4)
    coarse = decode(model, z, grid_coordinates(32, 2))
    fine = decode(model, z, grid_coordinates(128, 2)).reshape(128, 128)
    assert np.all(np.isfinite(fine))
    assert np.array_equal(coarse, fine[::4, ::4].ravel())


def test_decode_duplicate_queries_identical():
    model = small_model()
    z = np.random.default_rng(4).standard_normal(4)
    pts = np.array([[0.3, 0.7], [0.3, 0.7], [0.1, 0.2], [0.3, 0.7]])
    out = decode(model, z, pts)
    assert out[0] == out[1] == out[3]


def test_decode_periodic_wrapping():
    model = small_model()
    z = np.random.default_rng(5).standard_normal(4)
    inside = decode(model, z, np.array([[0.25, 0.5]]))
    wrapped = decode(model, z, np.array([[1.25, -0.5]]))
    assert inside[0] == wrapped[0]


def test_decode_local_lipschitz_slope():
    # finite-difference slope bound: a 1e-6 nudge changes the output by
    # about slope * 1e-6
    model = small_model()
    z = np.random.default_rng(6).standard_normal(4)
    x = np.array([[0.313, 0.471]])
    h = 1e-4
    slope = (decode(model, z, x + [[h, 0.0]])[0] - decode(model, z, x - [[h, 0.0]])[0]) / (2 * h)
    delta = decode(model, z, x + [[1e-6, 0.0]])[0] - decode(model, z, x)[0]
    assert abs(delta) <= (abs(slope) + 1.0) * 1e-6 * 5.0


def test_decode_d_z_mismatch():
    model = small_model()
    with pytest.raises(ShapeError):
        decode(model, np.zeros(7), np.array([[0.1, 0.1]]))
    with pytest.raises(ShapeError):
        decode(model, np.zeros(4), np.array([[0.1, 0.1, 0.3]]))


def test_sine_decoder_smooth_and_finite():
    model = small_model(activation="sine")
    z = np.random.default_rng(7).standard_normal(4)
    out = decode(model, z, grid_coordinates(16, 2))
    assert np.all(np.isfinite(out))


# ---------------------------------------------------------------------------
# ode_rhs
# ---------------------------------------------------------------------------

def test_ode_rhs_zero_final_layer():
    model = small_model()
    with torch.no_grad():
        model.odefunc.net[-1].weight.zero_()
        model.odefunc.net[-1].bias.zero_()
    for _ in range(3):
        z = np.random.default_rng(8).standard_normal(4)
        assert np.all(ode_rhs(model, z) == 0.0)


def test_ode_rhs_deterministic_and_shaped():
    model = small_model()
    z = np.random.default_rng(9).standard_normal(4)
    a, b = ode_rhs(model, z), ode_rhs(model, z)
    assert np.array_equal(a, b)
    assert a.shape == (4,)
    with pytest.raises(ShapeError):
        ode_rhs(model, np.zeros(3))


# ---------------------------------------------------------------------------
# gradient checking / participation
# ---------------------------------------------------------------------------

def geometry_batch(nx=16, n=2, seed=0):
    rng = np.random.default_rng(seed)
    coords = grid_coordinates(nx, 2)
    return SegmentBatch.from_segments(
        [Segment(rng.standard_normal((4, nx, nx)).astype(np.float32), coords)
         for _ in range(n)]
    )


def test_check_gradients_passes_for_stage1():
    model = small_model()
    batch = geometry_batch()
    rep = check_gradients(model, lambda s: stage1_loss(s, batch, 0.1)[0],
                          tolerance=1e-4)
    assert rep.passed, rep.summary()
    assert rep.max_error < 1e-4


def test_check_gradients_flags_bad_gradient():
    # a loss whose autograd graph is detached must fail the check
    model = small_model()
    batch = geometry_batch()

    def broken_loss(state):
        good = recon_loss(state, batch)
        rogue = sum((p.detach() * 0.5).sum() * p.sum() for p in state.encoder.parameters())
        return good + 0.1 * rogue * rogue

    rep = check_gradients(model, broken_loss, tolerance=1e-6, samples_per_block=2)
    assert not rep.passed
    assert rep.failed_blocks


def test_check_gradients_zero_loss_region():
    # bias-only decoder reconstructing a constant: loss is exactly zero
    # in a neighborhood, so gradients vanish
    model = small_model()
    with torch.no_grad():
        model.decoder.net[-1].weight.zero_()
        model.decoder.net[-1].bias.fill_(0.5)
    coords = grid_coordinates(16, 2)
    seg = Segment(np.full((4, 16, 16), 0.5, dtype=np.float32), coords)
    batch = SegmentBatch.from_segments([seg])
    state64 = model.to_double()
    loss = recon_loss(state64, batch)
    grads = torch.autograd.grad(loss, list(state64.decoder.parameters()),
                                allow_unused=True)
    assert all(g is None or float(g.abs().max()) < 1e-12 for g in grads)


def test_check_gradients_rejects_large_models():
    model = init_model(
        EncoderConfig(nx=32, d_z=10, widths=(16, 32, 64, 128)),
        DecoderConfig(d_z=10, hidden_layers=3, hidden_width=64),
        ODEFuncConfig(d_z=10, hidden_layers=3, hidden_width=64),
    )
    with pytest.raises(ConfigError):
        check_gradients(model, lambda s: torch.tensor(0.0))


def test_every_parameter_block_participates():
    # dead-block detector: each network's own loss sees every block
    model = small_model()
    batch = geometry_batch(seed=12)

    grads = gradient_participation(model, lambda s: stage1_loss(s, batch, 0.1)[0])
    for name, g in grads.items():
        if name.startswith("odefunc"):
            continue  # stage-I loss does not touch the ode function
        assert g > 0.0, f"dead block {name}"

    z = torch.randn(3, 4, dtype=model.dtype())
    grads = gradient_participation(model, lambda s: (s.odefunc(z) ** 2).sum())
    for name, g in grads.items():
        if name.startswith("odefunc"):
            assert g > 0.0, f"dead block {name}"
