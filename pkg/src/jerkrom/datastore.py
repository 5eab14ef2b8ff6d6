"""On-disk containers: datasets, checkpoints, and latent archives.

Every container is a directory holding a JSON manifest plus raw
little-endian array files, so the layout is language-agnostic and the
manifest diffs cleanly. The manifest records dtype, shape, and byte
order for every array; loading verifies the byte count before reading.
Writes go to a temporary sibling directory and are renamed into place
on completion (single writer, atomic publish).

Manifest keys (documented contract):

  format          "jerkrom-dataset" | "jerkrom-checkpoint" | "jerkrom-latents"
  format_version  integer, currently 1
  arrays          {name: {"file", "dtype", "shape", "byteorder"}}
  ...             format-specific metadata (grid, norm, splits, arch, stage)
"""

import json
import os
import shutil
import tempfile

import numpy as np

from .data import DatasetBundle, Normalization, Trajectory
from .errors import CorruptDataError, VersionError
from .grids import GridSpec

FORMAT_VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8"}


def _write_container(path, manifest: dict, arrays: dict):
    path = os.fspath(path)
    parent = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=os.path.basename(path) + ".tmp-", dir=parent)
    try:
        manifest = dict(manifest)
        manifest["format_version"] = FORMAT_VERSION
        manifest["arrays"] = {}
        os.makedirs(os.path.join(tmp, "arrays"))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            dtype = arr.dtype.name
            if dtype not in _DTYPES:
                raise TypeError(f"unsupported array dtype {dtype} for {name!r}")
            fname = os.path.join("arrays", name.replace("/", "_") + ".bin")
            arr.astype(_DTYPES[dtype]).tofile(os.path.join(tmp, fname))
            manifest["arrays"][name] = {
                "file": fname,
                "dtype": dtype,
                "shape": list(arr.shape),
                "byteorder": "little",
            }
        with open(os.path.join(tmp, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        if os.path.exists(path):
            raise FileExistsError(f"refusing to overwrite existing container {path}")
        os.rename(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _read_manifest(path, expected_format: str) -> dict:
    mpath = os.path.join(os.fspath(path), "manifest.json")
    if not os.path.exists(mpath):
        raise CorruptDataError(f"no manifest.json in {path}")
    with open(mpath) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != expected_format:
        raise CorruptDataError(
            f"{path} holds format {manifest.get('format')!r}, expected {expected_format!r}"
        )
    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionError(
            f"{path} was written with format_version {manifest.get('format_version')}, "
            f"this build reads {FORMAT_VERSION}"
        )
    return manifest


def _read_array(path, name: str, entry: dict) -> np.ndarray:
    fpath = os.path.join(os.fspath(path), entry["file"])
    shape = tuple(entry["shape"])
    if entry["dtype"] not in _DTYPES:
        raise CorruptDataError(f"array {name!r} has unknown dtype {entry['dtype']}")
    if entry.get("byteorder", "little") != "little":
        raise CorruptDataError(f"array {name!r} is not little-endian")
    dtype = np.dtype(_DTYPES[entry["dtype"]])
    expected_bytes = int(np.prod(shape)) * dtype.itemsize if shape else dtype.itemsize
    actual = os.path.getsize(fpath) if os.path.exists(fpath) else -1
    if actual != expected_bytes:
        raise CorruptDataError(
            f"array {name!r}: file {entry['file']} holds {actual} bytes, "
            f"manifest shape {shape} requires {expected_bytes}"
        )
    return np.fromfile(fpath, dtype=dtype).reshape(shape).astype(entry["dtype"], copy=False)


def read_container(path, expected_format: str):
    """Return (manifest, {name: array}) after validating every entry."""
    manifest = _read_manifest(path, expected_format)
    arrays = {
        name: _read_array(path, name, entry)
        for name, entry in manifest.get("arrays", {}).items()
    }
    return manifest, arrays


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def save_dataset(bundle: DatasetBundle, path) -> None:
    fields = np.stack([t.fields for t in bundle.trajectories])
    manifest = {
        "format": "jerkrom-dataset",
        "grid": {"nx": bundle.grid.nx, "ndim": bundle.grid.ndim},
        "t0": bundle.trajectories[0].t0,
        "dt": bundle.dt,
        "norm": {"mean": bundle.norm.mean, "std": bundle.norm.std},
        "splits": {
            "train_idx": list(map(int, bundle.train_idx)),
            "test_idx": list(map(int, bundle.test_idx)),
            "train_window": list(bundle.train_window),
            "extrap_window": list(bundle.extrap_window),
        },
        "meta": bundle.meta,
    }
    _write_container(path, manifest, {"fields": fields})


def load_dataset(path) -> DatasetBundle:
    manifest, arrays = read_container(path, "jerkrom-dataset")
    fields = arrays["fields"]
    grid = GridSpec(**manifest["grid"])
    t0, dt = manifest["t0"], manifest["dt"]
    splits = manifest["splits"]
    return DatasetBundle(
        trajectories=[Trajectory(f, t0=t0, dt=dt) for f in fields],
        grid=grid,
        norm=Normalization(**manifest["norm"]),
        train_idx=list(splits["train_idx"]),
        test_idx=list(splits["test_idx"]),
        train_window=tuple(splits["train_window"]),
        extrap_window=tuple(splits["extrap_window"]),
        meta=manifest.get("meta", {}),
    )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(state, path, stage: str, train_fingerprint: str = "") -> None:
    """Persist a ModelState. stage is "I" (autoencoder) or "II" (+ode)."""
    if stage not in ("I", "II"):
        raise ValueError(f"stage must be 'I' or 'II', got {stage!r}")
    manifest = {
        "format": "jerkrom-checkpoint",
        "stage": stage,
        "arch": state.arch_dict(),
        "data_norm": {"mean": state.norm.mean, "std": state.norm.std} if state.norm else None,
        "train_fingerprint": train_fingerprint,
    }
    _write_container(path, manifest, state.parameter_arrays())


def load_checkpoint(path, expect_arch: dict = None, override: bool = False):
    """Rebuild a ModelState from disk.

    If expect_arch is given it must match the stored architecture unless
    override=True. Returns (state, manifest).
    """
    from .nets import ModelState  # local import to avoid a cycle

    manifest, arrays = read_container(path, "jerkrom-checkpoint")
    if expect_arch is not None and not override:
        stored = manifest["arch"]
        for section, cfg in stored.items():
            for key, val in cfg.items():
                got = expect_arch.get(section, {}).get(key)
                if got != val:
                    from .errors import CheckpointMismatchError

                    raise CheckpointMismatchError(
                        f"checkpoint {section}.{key}={val!r} does not match "
                        f"requested {got!r} (pass override=True to force)"
                    )
    state = ModelState.from_arch_dict(manifest["arch"])
    if manifest.get("data_norm"):
        state.norm = Normalization(**manifest["data_norm"])
    state.load_parameter_arrays(arrays)
    return state, manifest


# ---------------------------------------------------------------------------
# latent archives
# ---------------------------------------------------------------------------

def save_latents(latents: list, path, meta: dict = None) -> None:
    """Persist a list of LatentTrajectory with a shared time grid."""
    values = np.stack([lt.values for lt in latents]).astype(np.float32)
    times = np.asarray(latents[0].times, dtype=np.float64)
    ids = np.asarray([lt.traj_id for lt in latents], dtype=np.int64)
    manifest = {"format": "jerkrom-latents", "meta": meta or {}}
    _write_container(path, manifest, {"values": values, "times": times, "ids": ids})


def load_latents(path) -> list:
    from .latent import LatentTrajectory  # local import to avoid a cycle

    manifest, arrays = read_container(path, "jerkrom-latents")
    values, times, ids = arrays["values"], arrays["times"], arrays["ids"]
    return [
        LatentTrajectory(values=v, times=times, traj_id=int(i))
        for v, i in zip(values, ids)
    ]
