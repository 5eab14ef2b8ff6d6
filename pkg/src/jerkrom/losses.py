"""Training losses: reconstruction, jerk regularization, and the
stage-I/stage-II objectives.

Conventions (fixed throughout the package):

  recon(batch)  = mean over all 4|S| snapshots and N grid points of the
                  squared reconstruction residual, i.e. the
                  (1/(4|S|)) * (1/N) * sum form.
  jerk(batch)   = (1/|S|) * (1/d_z) * sum over segments of
                  || z(t+3dt) - 3 z(t+2dt) + 3 z(t+dt) - z(t) ||^2,
                  the squared third forward difference of the encoded
                  latents. The 1/d_z factor is always included, so the
                  jerk coefficient keeps its meaning across latent
                  dimensions.
  stage1        = recon + lam * jerk.
  ode           = sum over time of || z_pred(t) - z(t) ||^2.
"""

from dataclasses import dataclass

import numpy as np
import torch

from .errors import ConfigError, ShapeError
from .nets import ModelState


@dataclass(frozen=True)
class Segment:
    """Four consecutive snapshots of one trajectory plus grid coordinates."""

    fields: np.ndarray  # (4, nx[, nx]) float32
    coords: np.ndarray  # (N, ndim) float64 grid coordinates
    traj_id: int = -1
    start: int = 0

    def __post_init__(self):
        if self.fields.shape[0] != 4:
            raise ShapeError(f"a segment holds 4 snapshots, got {self.fields.shape[0]}")


class SegmentBatch:
    """A batch of segments packed into torch tensors.

    All segments must share one coordinate set (one grid). Coordinate
    features for the decoder are cached on first use.
    """

    def __init__(self, fields: torch.Tensor, coords: torch.Tensor):
        if fields.ndim < 3 or fields.shape[1] != 4:
            raise ShapeError(f"batch fields must be (B, 4, spatial...), got {tuple(fields.shape)}")
        if fields.shape[0] < 1:
            raise ShapeError("batch must hold at least one segment")
        self.fields = fields
        self.coords = coords
        self._feats = None
        self._feats_key = None

    @classmethod
    def from_segments(cls, segments: list) -> "SegmentBatch":
        if not segments:
            raise ShapeError("cannot build a batch from zero segments")
        ref = segments[0].coords
        for s in segments[1:]:
            if s.coords.shape != ref.shape or not np.array_equal(s.coords, ref):
                raise ShapeError("all segments in a batch must share grid coordinates")
        fields = torch.from_numpy(np.stack([s.fields for s in segments]))
        coords = torch.from_numpy(np.ascontiguousarray(ref))
        return cls(fields, coords)

    def __len__(self) -> int:
        return self.fields.shape[0]

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    def decoder_features(self, decoder, dtype) -> torch.Tensor:
        key = (id(decoder.cfg), dtype)
        if self._feats_key != key:
            with torch.no_grad():
                self._feats = decoder.coord_features(self.coords.to(dtype))
            self._feats_key = key
        return self._feats


def _encode_segments(state: ModelState, batch: SegmentBatch) -> torch.Tensor:
    """Encode all snapshots of the batch: returns (B, 4, d_z)."""
    dtype = state.dtype()
    fields = batch.fields.to(dtype)
    b = fields.shape[0]
    spatial = fields.shape[2:]
    expect = (state.encoder_cfg.nx,) * state.encoder_cfg.ndim
    if tuple(spatial) != expect:
        raise ShapeError(f"segment resolution {tuple(spatial)} != encoder input {expect}")
    flat = fields.reshape(b * 4, 1, *spatial)
    return state.encoder(flat).reshape(b, 4, -1)


def _recon_from_latents(state, batch, z_flat: torch.Tensor) -> torch.Tensor:
    dtype = state.dtype()
    feats = batch.decoder_features(state.decoder, dtype)
    preds = state.decoder(z_flat, feats)  # (4B, N)
    truth = batch.fields.to(dtype).reshape(z_flat.shape[0], -1)
    if truth.shape[1] != preds.shape[1]:
        raise ShapeError(
            f"grid has {truth.shape[1]} points but decoder saw {preds.shape[1]} queries"
        )
    return torch.mean((preds - truth) ** 2)


def _jerk_from_latents(z: torch.Tensor) -> torch.Tensor:
    d_z = z.shape[-1]
    third = z[:, 3] - 3.0 * z[:, 2] + 3.0 * z[:, 1] - z[:, 0]
    return torch.mean(torch.sum(third**2, dim=-1)) / d_z


def recon_loss(state: ModelState, batch: SegmentBatch) -> torch.Tensor:
    """Mean squared reconstruction error over all snapshots of the batch."""
    z = _encode_segments(state, batch)
    return _recon_from_latents(state, batch, z.reshape(-1, z.shape[-1]))


def jerk_loss(state: ModelState, batch: SegmentBatch) -> torch.Tensor:
    """Mean (over segments) squared third difference of encoded latents, / d_z."""
    z = _encode_segments(state, batch)
    return _jerk_from_latents(z)


def stage1_loss(state: ModelState, batch: SegmentBatch, lam: float):
    """Total stage-I objective. Returns (total, recon, jerk) scalars."""
    if lam < 0:
        raise ConfigError(f"jerk coefficient must be >= 0, got {lam}", key="lam")
    z = _encode_segments(state, batch)
    recon = _recon_from_latents(state, batch, z.reshape(-1, z.shape[-1]))
    jerk = _jerk_from_latents(z)
    return recon + lam * jerk, recon, jerk


def ode_loss(predicted, actual) -> torch.Tensor:
    """Sum over time of squared latent residuals."""
    pred = predicted if torch.is_tensor(predicted) else torch.as_tensor(np.asarray(predicted))
    act = actual if torch.is_tensor(actual) else torch.as_tensor(np.asarray(actual))
    if pred.shape != act.shape:
        raise ShapeError(f"latent trajectory shapes differ: {tuple(pred.shape)} vs {tuple(act.shape)}")
    return torch.sum((pred - act.to(pred.dtype)) ** 2)
