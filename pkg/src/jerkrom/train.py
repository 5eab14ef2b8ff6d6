"""Two-stage training: jerk-regularized autoencoder, then latent ODE.

Stage I optimizes encoder+decoder on shuffled 4-snapshot segments with
the combined reconstruction + jerk objective. The trained encoder then
converts every trajectory into a latent trajectory, and stage II fits
the ODE function by integrating each trajectory from its initial latent
state across the training time grid and matching all snapshots. The
stages are isolated: stage I never touches the ODE function, stage II
never updates encoder or decoder.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import DatasetBundle
from .errors import ConfigError, TrainingDivergedError
from .grids import grid_coordinates
from .latent import LatentTrajectory, stack_latents
from .losses import Segment, SegmentBatch, _encode_segments, _jerk_from_latents, \
    _recon_from_latents
from .nets import ModelState


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.1  # jerk coefficient
    lr_stage1: float = 1e-3
    lr_stage2: float = 1e-3
    lr_schedule: str = "cosine"  # "cosine" | "constant"
    batch_size: int = 16  # segments per stage-I batch
    batch_trajectories: int = 16  # trajectories per stage-II batch
    epochs_stage1: int = 20
    epochs_stage2: int = 300
    points_per_iter: int = 0  # decoder queries sampled per step; 0 = full grid
    grad_clip: float = 1.0
    rk4_substeps: int = 1  # substeps per data interval in stage II
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}", key="lam")
        if self.lr_stage1 <= 0 or self.lr_stage2 <= 0:
            raise ConfigError("learning rates must be positive", key="lr")
        if self.batch_size < 1 or self.batch_trajectories < 1:
            raise ConfigError("batch sizes must be >= 1", key="batch_size")
        if self.epochs_stage1 < 1 or self.epochs_stage2 < 1:
            raise ConfigError("epoch counts must be >= 1", key="epochs")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ConfigError(f"unknown lr schedule {self.lr_schedule!r}", key="lr_schedule")
        if self.rk4_substeps < 1:
            raise ConfigError("rk4_substeps must be >= 1", key="rk4_substeps")
        if self.points_per_iter < 0:
            raise ConfigError("points_per_iter must be >= 0", key="points_per_iter")


@dataclass
class TrainHistory:
    """Per-iteration and per-epoch training records."""

    iterations: list = field(default_factory=list)  # dicts
    epochs: list = field(default_factory=list)  # dicts

    def to_csv(self, path) -> None:
        rows = self.iterations
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["iter"])
            writer.writeheader()
            writer.writerows(rows)

    def epochs_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=list(self.epochs[0].keys()) if self.epochs else ["epoch"]
            )
            writer.writeheader()
            writer.writerows(self.epochs)


def make_segments(bundle: DatasetBundle, split: str = "train") -> list:
    """All overlapping 4-snapshot windows of the given split's training
    window, as normalized segments: L-3 per trajectory of window length L."""
    a, b = bundle.train_window
    length = b - a
    if length < 4:
        raise ConfigError(
            f"training window has {length} snapshots; need >= 4", key="train_len"
        )
    idx = bundle.train_idx if split == "train" else bundle.test_idx
    coords = grid_coordinates(bundle.grid.nx, bundle.grid.ndim)
    segments = []
    for ti in idx:
        fields = bundle.norm.normalize(
            bundle.trajectories[ti].fields[a:b]
        ).astype(np.float32)
        for s in range(length - 3):
            segments.append(Segment(fields[s : s + 4], coords, traj_id=ti, start=s))
    return segments


def _lr_factor(schedule: str, it: int, total: int) -> float:
    if schedule == "constant":
        return 1.0
    return 0.5 * (1.0 + np.cos(np.pi * it / max(1, total)))


def evaluate_stage1_losses(model: ModelState, segments: list, batch_size: int = 64):
    """Mean (recon, jerk) over all given segments, without gradients."""
    if not segments:
        return float("nan"), float("nan")
    recon_sum = jerk_sum = 0.0
    n = 0
    with torch.no_grad():
        for lo in range(0, len(segments), batch_size):
            batch = SegmentBatch.from_segments(segments[lo : lo + batch_size])
            z = _encode_segments(model, batch)
            recon = _recon_from_latents(model, batch, z.reshape(-1, z.shape[-1]))
            jerk = _jerk_from_latents(z)
            recon_sum += float(recon) * len(batch)
            jerk_sum += float(jerk) * len(batch)
            n += len(batch)
    return recon_sum / n, jerk_sum / n


def train_stage1(bundle: DatasetBundle, model: ModelState, cfg: TrainConfig):
    """Optimize encoder+decoder on the training segments.

    Returns (model, history). Every segment appears exactly once per
    epoch (shuffled). When cfg.points_per_iter > 0 the reconstruction
    term of each step is a random subsample of grid points (the exact
    full-grid losses are still what per-epoch records report). Aborts
    with TrainingDivergedError (carrying the last finite losses, lam,
    and lr) if the loss becomes non-finite.
    """
    model.norm = bundle.norm
    a, b = bundle.train_window
    window = b - a
    if window < 4:
        raise ConfigError(f"training window has {window} snapshots; need >= 4",
                          key="train_len")
    dtype = model.dtype()
    fields = torch.from_numpy(
        bundle.norm.normalize(bundle.window_fields("train", "train")).astype(np.float32)
    ).to(dtype)
    n_traj = fields.shape[0]
    spatial = fields.shape[2:]
    n_points = int(np.prod(spatial))
    segs_per_traj = window - 3
    seg_traj = np.repeat(np.arange(n_traj), segs_per_traj)
    seg_start = np.tile(np.arange(segs_per_traj), n_traj)
    n_segments = seg_traj.size

    coords = grid_coordinates(bundle.grid.nx, bundle.grid.ndim)
    with torch.no_grad():
        feats_full = model.decoder.coord_features(
            torch.from_numpy(coords).to(dtype)
        )
    test_segments = make_segments(bundle, "test") if bundle.test_idx else []

    params = list(model.encoder.parameters()) + list(model.decoder.parameters())
    opt = torch.optim.Adam(params, lr=cfg.lr_stage1)
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    offsets = torch.arange(4)
    n_batches = (n_segments + cfg.batch_size - 1) // cfg.batch_size
    total_iters = cfg.epochs_stage1 * n_batches
    history = TrainHistory()
    last_finite = {"recon": None, "jerk": None}
    it = 0
    for epoch in range(cfg.epochs_stage1):
        order = rng.permutation(n_segments)
        for lo in range(0, n_segments, cfg.batch_size):
            pick = order[lo : lo + cfg.batch_size]
            rows = torch.from_numpy(seg_traj[pick])
            starts = torch.from_numpy(seg_start[pick])
            batch = fields[rows[:, None], starts[:, None] + offsets]  # (B, 4, spatial)
            bsz = batch.shape[0]
            lr = cfg.lr_stage1 * _lr_factor(cfg.lr_schedule, it, total_iters)
            for group in opt.param_groups:
                group["lr"] = lr

            z = model.encoder(batch.reshape(bsz * 4, 1, *spatial)).reshape(bsz, 4, -1)
            truth = batch.reshape(bsz * 4, n_points)
            if 0 < cfg.points_per_iter < n_points:
                pidx = torch.from_numpy(
                    rng.choice(n_points, size=cfg.points_per_iter, replace=False)
                )
                feats = feats_full[pidx]
                truth = truth[:, pidx]
            else:
                feats = feats_full
            preds = model.decoder(z.reshape(bsz * 4, -1), feats)
            recon = torch.mean((preds - truth) ** 2)
            jerk = _jerk_from_latents(z)
            total = recon + cfg.lam * jerk
            if not torch.isfinite(total):
                raise TrainingDivergedError(
                    "stage-I loss became non-finite",
                    diagnostics={**last_finite, "lam": cfg.lam, "lr": lr,
                                 "iteration": it, "epoch": epoch},
                )
            opt.zero_grad()
            total.backward()
            if cfg.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
            opt.step()

            last_finite = {"recon": recon.item(), "jerk": jerk.item()}
            history.iterations.append(
                {"iter": it, "epoch": epoch, "recon": recon.item(),
                 "jerk": jerk.item(), "total": total.item(), "lr": lr}
            )
            it += 1
        test_recon, test_jerk = evaluate_stage1_losses(model, test_segments)
        iters = history.iterations[-n_batches:]
        history.epochs.append(
            {"epoch": epoch,
             "train_recon": float(np.mean([r["recon"] for r in iters])),
             "train_jerk": float(np.mean([r["jerk"] for r in iters])),
             "test_recon": test_recon, "test_jerk": test_jerk}
        )
    return model, history


def encode_dataset(
    model: ModelState,
    bundle: DatasetBundle,
    split: str = "train",
    window: str = "train",
    batch_size: int = 64,
) -> list:
    """Encode every snapshot of each trajectory in the split.

    window: "train" for the training window only, "full" to include the
    extrapolation window as well. Returns one LatentTrajectory per
    source trajectory.
    """
    idx = bundle.train_idx if split == "train" else bundle.test_idx
    if not idx:
        return []
    a = bundle.train_window[0]
    b = bundle.train_window[1] if window == "train" else max(
        bundle.train_window[1], bundle.extrap_window[1]
    )
    dtype = model.dtype()
    out = []
    with torch.no_grad():
        for ti in idx:
            traj = bundle.trajectories[ti]
            fields = bundle.norm.normalize(traj.fields[a:b]).astype(np.float32)
            zs = []
            for lo in range(0, fields.shape[0], batch_size):
                x = torch.from_numpy(fields[lo : lo + batch_size]).to(dtype)[:, None]
                zs.append(model.encoder(x).cpu().numpy())
            times = traj.times[a:b]
            out.append(LatentTrajectory(np.concatenate(zs), times, traj_id=ti))
    return out


def rk4_rollout(odefunc, z0: torch.Tensor, n_steps: int, dt: float,
                substeps: int = 1) -> torch.Tensor:
    """Differentiable fixed-step RK4 rollout on a uniform grid.

    z0: (B, d_z). Returns (B, n_steps+1, d_z) including the initial state.
    """
    h = dt / substeps
    out = [z0]
    z = z0
    for _ in range(n_steps):
        for _ in range(substeps):
            k1 = odefunc(z)
            k2 = odefunc(z + 0.5 * h * k1)
            k3 = odefunc(z + 0.5 * h * k2)
            k4 = odefunc(z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(z)
    return torch.stack(out, dim=1)


def train_stage2(latents: list, model: ModelState, cfg: TrainConfig):
    """Fit the ODE function to the latent dataset.

    Batches are whole trajectories (shuffled at the trajectory level);
    each is integrated from its initial latent state across the full
    time grid and matched against all snapshots. Returns (model, history).
    """
    if not latents:
        raise ConfigError("latent dataset is empty", key="latents")
    values = torch.from_numpy(stack_latents(latents)).to(model.dtype())
    dt = latents[0].dt
    n_traj, n_time, _ = values.shape

    opt = torch.optim.Adam(model.odefunc.parameters(), lr=cfg.lr_stage2)
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    history = TrainHistory()
    last_finite = None
    total_iters = cfg.epochs_stage2 * (
        (n_traj + cfg.batch_trajectories - 1) // cfg.batch_trajectories
    )
    it = 0
    for epoch in range(cfg.epochs_stage2):
        order = rng.permutation(n_traj)
        epoch_loss = 0.0
        for lo in range(0, n_traj, cfg.batch_trajectories):
            idx = torch.from_numpy(order[lo : lo + cfg.batch_trajectories].copy())
            actual = values[idx]
            lr = cfg.lr_stage2 * _lr_factor(cfg.lr_schedule, it, total_iters)
            for group in opt.param_groups:
                group["lr"] = lr
            pred = rk4_rollout(model.odefunc, actual[:, 0], n_time - 1, dt,
                               cfg.rk4_substeps)
            # mean over trajectories of the summed per-trajectory residual
            loss = torch.sum((pred - actual) ** 2) / idx.shape[0]
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    "stage-II loss became non-finite (integrator blow-up?)",
                    diagnostics={"last_finite": last_finite, "lr": lr,
                                 "iteration": it, "epoch": epoch},
                )
            opt.zero_grad()
            loss.backward()
            if cfg.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.odefunc.parameters(), cfg.grad_clip)
            opt.step()
            last_finite = loss.item()
            epoch_loss += last_finite * idx.shape[0]
            history.iterations.append({"iter": it, "epoch": epoch,
                                       "ode_loss": last_finite, "lr": lr})
            it += 1
        history.epochs.append({"epoch": epoch, "ode_loss": epoch_loss / n_traj})
    return model, history


def sweep_lambda(
    bundle: DatasetBundle,
    lambdas,
    cfg: TrainConfig,
    arch,
    init_seed: int = 0,
):
    """Train stage I once per jerk coefficient on shared data and seed.

    arch: (EncoderConfig, DecoderConfig, ODEFuncConfig). Returns a list
    of rows {lam, test_recon, test_jerk, error}; failures are recorded
    per row and the sweep continues.
    """
    from dataclasses import replace

    from .nets import init_model

    rows = []
    for lam in lambdas:
        if lam < 0:
            raise ConfigError(f"lam must be >= 0, got {lam}", key="lam")
        row = {"lam": float(lam), "test_recon": float("nan"),
               "test_jerk": float("nan"), "error": ""}
        try:
            model = init_model(*arch, seed=init_seed)
            run_cfg = replace(cfg, lam=float(lam))
            model, _ = train_stage1(bundle, model, run_cfg)
            test_segments = make_segments(bundle, "test")
            row["test_recon"], row["test_jerk"] = evaluate_stage1_losses(
                model, test_segments
            )
        except Exception as exc:  # keep sweeping the remaining coefficients
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def sweep_to_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["lam", "test_recon", "test_jerk", "error"])
        writer.writeheader()
        writer.writerows(rows)
