"""Learnable components: CNN encoder, conditional INR decoder, latent
ODE function.

All three are pure functions of (parameters, inputs) with no hidden
state. The encoder maps a fixed-resolution field to a d_z vector; the
decoder maps (z, spatial coordinate) to one scalar and is smooth in
both arguments (SiLU or sine activations only); the ODE function maps
z to dz/dt and is autonomous.

The encoder/decoder operate in the normalized field domain; ModelState
optionally carries the dataset Normalization so the public encode /
decode helpers can move between physical and normalized values.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from torch import nn

from .data import FieldSnapshot, Normalization
from .errors import ConfigError, ShapeError
from .grids import wrap_coordinates

DECODE_CHUNK = 16384  # query points per decoder evaluation chunk


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncoderConfig:
    nx: int = 64
    ndim: int = 2
    d_z: int = 10
    widths: tuple = (16, 32, 64, 128)
    blocks_per_stage: int = 1
    variant: str = "scaled"  # "scaled" | "resnet50"
    head: str = "flatten"  # "flatten" | "avg"; resnet50 always global-avg-pools

    def __post_init__(self):
        if self.variant not in ("scaled", "resnet50"):
            raise ConfigError(f"unknown encoder variant {self.variant!r}", key="variant")
        if self.head not in ("flatten", "avg"):
            raise ConfigError(f"unknown encoder head {self.head!r}", key="head")
        if self.d_z < 1:
            raise ConfigError("d_z must be >= 1", key="d_z")
        object.__setattr__(self, "widths", tuple(self.widths))


@dataclass(frozen=True)
class DecoderConfig:
    d_z: int = 10
    ndim: int = 2
    hidden_layers: int = 7
    hidden_width: int = 512
    activation: str = "silu"  # "silu" | "sine"
    fourier_harmonics: int = 0  # extra sin/cos(2*pi*m*x) features per axis

    def __post_init__(self):
        if self.activation not in ("silu", "sine"):
            raise ConfigError(
                f"decoder activation must be smooth (silu or sine), got {self.activation!r}",
                key="activation",
            )
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ConfigError("decoder needs >= 1 hidden layer of width >= 1", key="hidden")

    @property
    def coord_features(self) -> int:
        return self.ndim * (1 + 2 * self.fourier_harmonics)

    @property
    def in_features(self) -> int:
        return self.d_z + self.coord_features


@dataclass(frozen=True)
class ODEFuncConfig:
    d_z: int = 10
    hidden_layers: int = 5
    hidden_width: int = 512
    activation: str = "silu"

    def __post_init__(self):
        if self.activation != "silu":
            raise ConfigError("ode function activation must be silu", key="activation")


# ---------------------------------------------------------------------------
# modules
# ---------------------------------------------------------------------------

def _conv(ndim):
    return nn.Conv2d if ndim == 2 else nn.Conv1d


def _groups(channels: int) -> int:
    # keep >= 2 channels per group so per-channel conv biases would not
    # be exactly cancelled by the normalization (convs feeding a norm
    # are bias-free anyway)
    g = min(8, max(1, channels // 2))
    while channels % g:
        g -= 1
    return g


class ResidualBlock(nn.Module):
    def __init__(self, c_in, c_out, stride, ndim):
        super().__init__()
        Conv = _conv(ndim)
        self.conv1 = Conv(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.norm1 = nn.GroupNorm(_groups(c_out), c_out)
        self.conv2 = Conv(c_out, c_out, 3, padding=1, bias=False)
        self.norm2 = nn.GroupNorm(_groups(c_out), c_out)
        self.act = nn.ReLU()
        if stride != 1 or c_in != c_out:
            self.skip = Conv(c_in, c_out, 1, stride=stride)
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        h = self.act(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return self.act(h + self.skip(x))


class BottleneckBlock(nn.Module):
    expansion = 4

    def __init__(self, c_in, width, stride, ndim):
        super().__init__()
        Conv = _conv(ndim)
        c_out = width * self.expansion
        self.conv1 = Conv(c_in, width, 1, bias=False)
        self.norm1 = nn.GroupNorm(_groups(width), width)
        self.conv2 = Conv(width, width, 3, stride=stride, padding=1, bias=False)
        self.norm2 = nn.GroupNorm(_groups(width), width)
        self.conv3 = Conv(width, c_out, 1, bias=False)
        self.norm3 = nn.GroupNorm(_groups(c_out), c_out)
        self.act = nn.ReLU()
        if stride != 1 or c_in != c_out:
            self.skip = Conv(c_in, c_out, 1, stride=stride)
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        h = self.act(self.norm1(self.conv1(x)))
        h = self.act(self.norm2(self.conv2(h)))
        h = self.norm3(self.conv3(h))
        return self.act(h + self.skip(x))


class Encoder(nn.Module):
    """Residual CNN mapping one (batch, 1, spatial...) field to (batch, d_z)."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        Conv = _conv(cfg.ndim)
        if cfg.variant == "resnet50":
            self._build_resnet50(cfg, Conv)
        else:
            self._build_scaled(cfg, Conv)

    def _build_scaled(self, cfg, Conv):
        widths = cfg.widths
        self.stem = nn.Sequential(
            Conv(1, widths[0], 3, padding=1, bias=False),
            nn.GroupNorm(_groups(widths[0]), widths[0]),
            nn.ReLU(),
        )
        blocks = []
        c_in = widths[0]
        for i, w in enumerate(widths):
            stride = 1 if i == 0 else 2
            blocks.append(ResidualBlock(c_in, w, stride, cfg.ndim))
            for _ in range(cfg.blocks_per_stage - 1):
                blocks.append(ResidualBlock(w, w, 1, cfg.ndim))
            c_in = w
        self.blocks = nn.Sequential(*blocks)
        if cfg.head == "avg":
            self.pool = nn.AdaptiveAvgPool2d(1) if cfg.ndim == 2 else nn.AdaptiveAvgPool1d(1)
            feat = c_in
        else:
            self.pool = nn.Identity()
            res = cfg.nx // 2 ** (len(widths) - 1)
            feat = c_in * res**cfg.ndim
        self.head = nn.Linear(feat, cfg.d_z)

    def _build_resnet50(self, cfg, Conv):
        # ResNet50 layout adapted to a single input channel: bottleneck
        # stages [3, 4, 6, 3], final features 2048 -> d_z.
        self.stem = nn.Sequential(
            Conv(1, 64, 7, stride=2, padding=3, bias=False),
            nn.GroupNorm(_groups(64), 64),
            nn.ReLU(),
            (nn.MaxPool2d if cfg.ndim == 2 else nn.MaxPool1d)(3, stride=2, padding=1),
        )
        stage_widths = (64, 128, 256, 512)
        stage_blocks = (3, 4, 6, 3)
        blocks = []
        c_in = 64
        for i, (w, n) in enumerate(zip(stage_widths, stage_blocks)):
            stride = 1 if i == 0 else 2
            blocks.append(BottleneckBlock(c_in, w, stride, cfg.ndim))
            c_in = w * BottleneckBlock.expansion
            for _ in range(n - 1):
                blocks.append(BottleneckBlock(c_in, w, 1, cfg.ndim))
        self.blocks = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool2d(1) if cfg.ndim == 2 else nn.AdaptiveAvgPool1d(1)
        self.head = nn.Linear(c_in, cfg.d_z)

    def forward(self, x):
        if x.shape[2:] != (self.cfg.nx,) * self.cfg.ndim:
            raise ShapeError(
                f"encoder expects spatial shape {(self.cfg.nx,) * self.cfg.ndim}, "
                f"got {tuple(x.shape[2:])}"
            )
        h = self.blocks(self.stem(x))
        return self.head(self.pool(h).flatten(1))


class Sine(nn.Module):
    def __init__(self, w0: float = 1.0):
        super().__init__()
        self.w0 = w0

    def forward(self, x):
        return torch.sin(self.w0 * x)


class Decoder(nn.Module):
    """Conditional INR: (z, coordinate features) -> scalar field value.

    Coordinates arrive in [0,1); they are affinely mapped to [-1,1] and
    optionally augmented with harmonic sin/cos features, which keeps the
    feature map exactly periodic on the unit cell.
    """

    SIREN_W0 = 30.0

    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.cfg = cfg
        act = (lambda: Sine(self.SIREN_W0)) if cfg.activation == "sine" else nn.SiLU
        layers = [nn.Linear(cfg.in_features, cfg.hidden_width), act()]
        for _ in range(cfg.hidden_layers - 1):
            layers += [nn.Linear(cfg.hidden_width, cfg.hidden_width), act()]
        layers.append(nn.Linear(cfg.hidden_width, 1))
        self.net = nn.Sequential(*layers)
        if cfg.activation == "sine":
            self._siren_init()

    def _siren_init(self):
        with torch.no_grad():
            first = True
            for m in self.net:
                if not isinstance(m, nn.Linear):
                    continue
                fan_in = m.weight.shape[1]
                if first:
                    bound = 1.0 / fan_in
                    first = False
                else:
                    bound = math.sqrt(6.0 / fan_in) / self.SIREN_W0
                m.weight.uniform_(-bound, bound)
                m.bias.uniform_(-bound, bound)

    def coord_features(self, coords: torch.Tensor) -> torch.Tensor:
        """(M, ndim) raw coordinates in [0,1) -> (M, coord_features)."""
        feats = [2.0 * coords - 1.0]
        for m in range(1, self.cfg.fourier_harmonics + 1):
            ang = 2.0 * math.pi * m * coords
            feats += [torch.sin(ang), torch.cos(ang)]
        return torch.cat(feats, dim=-1)

    def forward(self, z: torch.Tensor, feats: torch.Tensor) -> torch.Tensor:
        """z: (B, d_z); feats: (M, F) precomputed coordinate features.
        Returns (B, M) decoded values."""
        B, M = z.shape[0], feats.shape[0]
        zz = z[:, None, :].expand(B, M, z.shape[1])
        ff = feats[None, :, :].expand(B, M, feats.shape[1])
        out = self.net(torch.cat([zz, ff], dim=-1))
        return out.squeeze(-1)

    def at_coords(self, z: torch.Tensor, coords: torch.Tensor) -> torch.Tensor:
        return self(z, self.coord_features(coords))


class ODEFunc(nn.Module):
    """Autonomous latent vector field dz/dt = h(z)."""

    def __init__(self, cfg: ODEFuncConfig):
        super().__init__()
        self.cfg = cfg
        layers = [nn.Linear(cfg.d_z, cfg.hidden_width), nn.SiLU()]
        for _ in range(cfg.hidden_layers - 1):
            layers += [nn.Linear(cfg.hidden_width, cfg.hidden_width), nn.SiLU()]
        layers.append(nn.Linear(cfg.hidden_width, cfg.d_z))
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        return self.net(z)


# ---------------------------------------------------------------------------
# model state
# ---------------------------------------------------------------------------

@dataclass
class ModelState:
    """The three networks plus their configs and the data normalization."""

    encoder: Encoder
    decoder: Decoder
    odefunc: ODEFunc
    encoder_cfg: EncoderConfig
    decoder_cfg: DecoderConfig
    odefunc_cfg: ODEFuncConfig
    norm: Normalization = None
    meta: dict = field(default_factory=dict)

    @property
    def d_z(self) -> int:
        return self.encoder_cfg.d_z

    def modules(self) -> dict:
        return {"encoder": self.encoder, "decoder": self.decoder, "odefunc": self.odefunc}

    def arch_dict(self) -> dict:
        return {
            "encoder": asdict(self.encoder_cfg),
            "decoder": asdict(self.decoder_cfg),
            "odefunc": asdict(self.odefunc_cfg),
        }

    @classmethod
    def from_arch_dict(cls, arch: dict) -> "ModelState":
        enc = dict(arch["encoder"])
        enc["widths"] = tuple(enc.get("widths", ()))
        return init_model(
            EncoderConfig(**enc),
            DecoderConfig(**arch["decoder"]),
            ODEFuncConfig(**arch["odefunc"]),
            seed=0,
        )

    def parameter_arrays(self) -> dict:
        out = {}
        for prefix, module in self.modules().items():
            for name, p in module.state_dict().items():
                out[f"{prefix}.{name}"] = p.detach().cpu().numpy().astype(np.float32)
        return out

    def load_parameter_arrays(self, arrays: dict) -> None:
        for prefix, module in self.modules().items():
            sd = module.state_dict()
            new = {}
            for name, p in sd.items():
                key = f"{prefix}.{name}"
                if key not in arrays:
                    raise ShapeError(f"checkpoint is missing parameter {key}")
                arr = arrays[key]
                if tuple(arr.shape) != tuple(p.shape):
                    raise ShapeError(
                        f"parameter {key}: checkpoint shape {tuple(arr.shape)} "
                        f"vs model shape {tuple(p.shape)}"
                    )
                new[name] = torch.from_numpy(np.ascontiguousarray(arr)).to(p.dtype)
            module.load_state_dict(new)

    def to_double(self) -> "ModelState":
        """Deep float64 copy (used by the gradient checker)."""
        clone = ModelState.from_arch_dict(self.arch_dict())
        clone.load_parameter_arrays(self.parameter_arrays())
        for m in clone.modules().values():
            m.double()
        clone.norm = self.norm
        clone.meta = dict(self.meta)
        return clone

    def dtype(self) -> torch.dtype:
        return next(self.encoder.parameters()).dtype


def init_model(
    encoder_cfg: EncoderConfig,
    decoder_cfg: DecoderConfig,
    odefunc_cfg: ODEFuncConfig,
    seed: int = 0,
) -> ModelState:
    """Build a ModelState with deterministic, seed-controlled weights.

    Encoder weights use Kaiming-normal (fan-in, ReLU) initialization;
    decoder and ODE function keep the standard fan-in-scaled defaults
    (SIREN initialization for the sine decoder).
    """
    if not (encoder_cfg.d_z == decoder_cfg.d_z == odefunc_cfg.d_z):
        raise ConfigError(
            f"inconsistent d_z: encoder {encoder_cfg.d_z}, decoder {decoder_cfg.d_z}, "
            f"odefunc {odefunc_cfg.d_z}",
            key="d_z",
        )
    if encoder_cfg.ndim != decoder_cfg.ndim:
        raise ConfigError("encoder and decoder ndim differ", key="ndim")
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        encoder = Encoder(encoder_cfg)
        for m in encoder.modules():
            if isinstance(m, (nn.Conv1d, nn.Conv2d, nn.Linear)):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
        decoder = Decoder(decoder_cfg)
        odefunc = ODEFunc(odefunc_cfg)
    return ModelState(encoder, decoder, odefunc, encoder_cfg, decoder_cfg, odefunc_cfg)


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

def _field_tensor(state: ModelState, values: np.ndarray) -> torch.Tensor:
    arr = np.asarray(values, dtype=np.float64)
    if state.norm is not None:
        arr = state.norm.normalize(arr)
    t = torch.from_numpy(np.ascontiguousarray(arr)).to(state.dtype())
    return t[None, None]  # (1, 1, spatial...)


def encode(state: ModelState, field) -> np.ndarray:
    """Encode one snapshot (FieldSnapshot or raw array) to a d_z vector.

    Physical values are normalized first when the model carries dataset
    statistics. The field resolution must match the encoder input.
    """
    values = field.values if isinstance(field, FieldSnapshot) else field
    with torch.no_grad():
        z = state.encoder(_field_tensor(state, values))
    return z[0].cpu().numpy().astype(np.float64)


def decode(
    state: ModelState,
    z: np.ndarray,
    coords: np.ndarray,
    denormalize: bool = False,
) -> np.ndarray:
    """Evaluate the decoder at arbitrary query coordinates.

    coords: (M, ndim); values outside [0,1) are wrapped periodically.
    Returns (M,) values in the normalized domain unless denormalize=True.
    Evaluation is chunked but chunking never changes results (row-wise
    deterministic kernels), so coarse-grid queries match the same points
    inside a fine-grid query bit for bit.
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != state.decoder_cfg.d_z:
        raise ShapeError(f"latent length {z.shape[0]} != d_z {state.decoder_cfg.d_z}")
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    if coords.shape[1] != state.decoder_cfg.ndim:
        raise ShapeError(
            f"queries have dimension {coords.shape[1]}, decoder expects "
            f"{state.decoder_cfg.ndim}"
        )
    coords = wrap_coordinates(coords)
    dtype = state.dtype()
    zt = torch.from_numpy(z).to(dtype)[None]
    out = np.empty(coords.shape[0], dtype=np.float64)
    with torch.no_grad():
        for lo in range(0, coords.shape[0], DECODE_CHUNK):
            chunk = torch.from_numpy(coords[lo : lo + DECODE_CHUNK]).to(dtype)
            vals = state.decoder.at_coords(zt, chunk)[0]
            out[lo : lo + DECODE_CHUNK] = vals.cpu().numpy()
    if denormalize and state.norm is not None:
        out = state.norm.denormalize(out)
    return out


def ode_rhs(state: ModelState, z: np.ndarray) -> np.ndarray:
    """dz/dt at z (autonomous; no explicit time input)."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != state.odefunc_cfg.d_z:
        raise ShapeError(f"latent length {z.shape[0]} != d_z {state.odefunc_cfg.d_z}")
    with torch.no_grad():
        out = state.odefunc(torch.from_numpy(z).to(state.dtype())[None])[0]
    return out.cpu().numpy().astype(np.float64)


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradCheckReport:
    tolerance: float
    block_errors: dict  # parameter block name -> max relative error
    failed_blocks: list

    @property
    def max_error(self) -> float:
        return max(self.block_errors.values()) if self.block_errors else 0.0

    @property
    def passed(self) -> bool:
        return not self.failed_blocks

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max(self.block_errors, key=self.block_errors.get) if self.block_errors else "-"
        lines = [f"gradient check {status}: max rel error {self.max_error:.3e} "
                 f"(tolerance {self.tolerance:.1e}, worst block {worst})"]
        for name in self.failed_blocks:
            lines.append(f"  FAILED block {name}: {self.block_errors[name]:.3e}")
        return "\n".join(lines)


def check_gradients(
    state: ModelState,
    loss_fn,
    tolerance: float = 1e-4,
    samples_per_block: int = 4,
    step: float = 1e-6,
    seed: int = 0,
) -> GradCheckReport:
    """Compare autograd gradients against central finite differences.

    loss_fn maps a (float64) ModelState to a scalar torch loss. A random
    subset of entries of every parameter tensor is probed; the relative
    error uses max(|analytic|, |numeric|, 1e-5) as denominator so that
    near-zero gradients are compared absolutely at the noise floor.
    """
    state64 = state.to_double()
    n_params = sum(p.numel() for m in state64.modules().values() for p in m.parameters())
    if n_params > 10_000:
        raise ConfigError(
            f"gradient checks are for tiny models (<= 1e4 parameters), got {n_params}",
            key="model",
        )
    loss = loss_fn(state64)
    params = [
        (f"{prefix}.{name}", p)
        for prefix, module in state64.modules().items()
        for name, p in module.named_parameters()
    ]
    grads = torch.autograd.grad(loss, [p for _, p in params], allow_unused=True)

    rng = np.random.default_rng(seed)
    block_errors = {}
    failed = []
    for (name, p), g in zip(params, grads):
        flat = p.detach().reshape(-1)
        n = flat.numel()
        idxs = rng.choice(n, size=min(samples_per_block, n), replace=False)
        worst = 0.0
        for i in idxs:
            i = int(i)
            orig = flat[i].item()
            with torch.no_grad():
                flat[i] = orig + step
                up = float(loss_fn(state64))
                flat[i] = orig - step
                dn = float(loss_fn(state64))
                flat[i] = orig
            numeric = (up - dn) / (2.0 * step)
            analytic = 0.0 if g is None else g.reshape(-1)[i].item()
            denom = max(abs(analytic), abs(numeric), 1e-5)
            worst = max(worst, abs(analytic - numeric) / denom)
        block_errors[name] = worst
        if worst > tolerance:
            failed.append(name)
    return GradCheckReport(tolerance=tolerance, block_errors=block_errors, failed_blocks=failed)


def gradient_participation(state: ModelState, loss_fn) -> dict:
    """Gradient norm of every parameter block (dead-block detector)."""
    loss = loss_fn(state)
    params = [
        (f"{prefix}.{name}", p)
        for prefix, module in state.modules().items()
        for name, p in module.named_parameters()
    ]
    grads = torch.autograd.grad(loss, [p for _, p in params], allow_unused=True)
    return {
        name: 0.0 if g is None else float(g.norm())
        for (name, _), g in zip(params, grads)
    }
