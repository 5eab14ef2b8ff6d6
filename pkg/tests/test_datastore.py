import json
import os

import numpy as np
import pytest

from jerkrom.data import SplitSpec, build_dataset
from jerkrom.datastore import (load_checkpoint, load_dataset, load_latents,
                               save_checkpoint, save_dataset, save_latents)
from jerkrom.errors import CheckpointMismatchError, CorruptDataError, VersionError
from jerkrom.grids import GridSpec
from jerkrom.latent import LatentTrajectory
from jerkrom.nets import DecoderConfig, EncoderConfig, ODEFuncConfig, init_model
from jerkrom.toy import ToyWaveParams, generate_toy_wave


@pytest.fixture
def bundle():
    grid = GridSpec(32, ndim=1)
    trajs = generate_toy_wave(grid, 4, seed=1, params=ToyWaveParams(n_snapshots=12))
    return build_dataset(trajs, grid,
                         SplitSpec(n_train=3, n_test=1, train_len=8, extrap_len=4))


@pytest.fixture
def tiny_model():
    return init_model(
        EncoderConfig(nx=8, ndim=2, d_z=3, widths=(4, 8)),
        DecoderConfig(d_z=3, ndim=2, hidden_layers=2, hidden_width=8),
        ODEFuncConfig(d_z=3, hidden_layers=1, hidden_width=8),
        seed=0,
    )


def test_dataset_round_trip_bit_exact(bundle, tmp_path):
    path = tmp_path / "ds"
    save_dataset(bundle, path)
    loaded = load_dataset(path)
    assert len(loaded.trajectories) == len(bundle.trajectories)
    for a, b in zip(loaded.trajectories, bundle.trajectories):
        assert np.array_equal(a.fields, b.fields)
        assert a.t0 == b.t0 and a.dt == b.dt
    assert loaded.norm == bundle.norm
    assert loaded.train_idx == bundle.train_idx
    assert loaded.test_idx == bundle.test_idx
    assert loaded.train_window == bundle.train_window
    assert loaded.extrap_window == bundle.extrap_window


def test_dataset_refuses_overwrite(bundle, tmp_path):
    path = tmp_path / "ds"
    save_dataset(bundle, path)
    with pytest.raises(FileExistsError):
        save_dataset(bundle, path)


def test_truncated_array_is_corruption_error(bundle, tmp_path):
    path = tmp_path / "ds"
    save_dataset(bundle, path)
    fpath = path / "arrays" / "fields.bin"
    data = fpath.read_bytes()
    fpath.write_bytes(data[:-8])
    with pytest.raises(CorruptDataError):
        load_dataset(path)


def test_manifest_byte_count_contract(tmp_path):
    # a manifest declaring (30, 64, 64) float32 must be accepted exactly
    # when the file holds 30*64*64*4 = 491520 bytes
    from jerkrom.datastore import _read_array

    arr = np.zeros((30, 64, 64), dtype=np.float32)
    (tmp_path / "arrays").mkdir()
    arr.tofile(tmp_path / "arrays" / "fields.bin")
    entry = {"file": "arrays/fields.bin", "dtype": "float32",
             "shape": [30, 64, 64], "byteorder": "little"}
    assert os.path.getsize(tmp_path / "arrays" / "fields.bin") == 491520
    out = _read_array(tmp_path, "fields", entry)
    assert out.shape == (30, 64, 64)


def test_version_mismatch(bundle, tmp_path):
    path = tmp_path / "ds"
    save_dataset(bundle, path)
    manifest = json.loads((path / "manifest.json").read_text())
    manifest["format_version"] = 99
    (path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(VersionError):
        load_dataset(path)


def test_wrong_format(bundle, tmp_path):
    path = tmp_path / "ds"
    save_dataset(bundle, path)
    with pytest.raises(CorruptDataError):
        load_checkpoint(path)


def test_checkpoint_round_trip(tiny_model, tmp_path):
    path = tmp_path / "ckpt"
    save_checkpoint(tiny_model, path, stage="I", train_fingerprint="abc123")
    state, manifest = load_checkpoint(path)
    assert manifest["stage"] == "I"
    assert manifest["train_fingerprint"] == "abc123"
    orig = tiny_model.parameter_arrays()
    restored = state.parameter_arrays()
    assert orig.keys() == restored.keys()
    for k in orig:
        assert np.array_equal(orig[k], restored[k]), k


def test_checkpoint_arch_mismatch(tiny_model, tmp_path):
    path = tmp_path / "ckpt"
    save_checkpoint(tiny_model, path, stage="I")
    wrong = dict(tiny_model.arch_dict())
    wrong["encoder"] = dict(wrong["encoder"], d_z=5)
    with pytest.raises(CheckpointMismatchError, match="d_z"):
        load_checkpoint(path, expect_arch=wrong)
    # override skips the check
    state, _ = load_checkpoint(path, expect_arch=wrong, override=True)
    assert state.d_z == 3


def test_stage1_checkpoint_reusable_for_stage2(tiny_model, bundle, tmp_path):
    # workflow contract: a stage-I checkpoint loads fine and carries an
    # (untrained) ode function ready for stage II
    path = tmp_path / "ckpt"
    tiny_model.norm = bundle.norm
    save_checkpoint(tiny_model, path, stage="I")
    state, manifest = load_checkpoint(path)
    assert manifest["stage"] == "I"
    assert state.norm == bundle.norm
    assert state.odefunc is not None


def test_latents_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    latents = [
        LatentTrajectory(rng.standard_normal((6, 4)).astype(np.float32),
                         np.arange(6.0), traj_id=i)
        for i in range(3)
    ]
    path = tmp_path / "lat"
    save_latents(latents, path, meta={"split": "train"})
    loaded = load_latents(path)
    assert len(loaded) == 3
    for a, b in zip(loaded, latents):
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.times, b.times)
        assert a.traj_id == b.traj_id
