"""jerkrom: jerk-regularized latent dynamics for spatiotemporal forecasting.

A reduced-order modeling toolkit: a CNN encoder compresses field
snapshots into a low-dimensional latent vector, a conditional INR
decoder reconstructs fields at arbitrary spatial resolution, and a
neural ODE evolves the latent state continuously in time. Training the
autoencoder with a jerk (third time derivative) penalty keeps latent
trajectories smooth and sparse, which improves extrapolation and makes
the latent dynamics easy to fit. A pseudo-spectral Navier-Stokes
generator and an evaluation/ablation harness are included.
"""

__version__ = "0.1.0"

from .data import (DatasetBundle, FieldSnapshot, Normalization, SplitSpec,
                   Trajectory, build_dataset, denormalize, normalize)
from .datagen import generate_ns_corpus, generate_ns_dataset
from .datastore import (load_checkpoint, load_dataset, load_latents,
                        save_checkpoint, save_dataset, save_latents)
from .grf import GRFSpec, sample_grf_batch, sample_initial_vorticity
from .grids import GridSpec
from .infer import EvalReport, QuerySpec, evaluate_rollout, predict
from .integrate import integrate_latent
from .latent import LatentTrajectory
from .losses import Segment, SegmentBatch, jerk_loss, ode_loss, recon_loss, stage1_loss
from .metrics import average_jerk, count_active_coords, relative_rmse
from .nets import (DecoderConfig, EncoderConfig, ModelState, ODEFuncConfig,
                   check_gradients, decode, encode, init_model, ode_rhs)
from .ns2d import NSParams, simulate_ns
from .toy import generate_toy_wave
from .train import (TrainConfig, encode_dataset, make_segments, sweep_lambda,
                    train_stage1, train_stage2)
