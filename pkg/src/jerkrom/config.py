"""Run configuration: YAML loading, validation, fingerprinting.

A RunConfig has four sections (data, model, train, eval). Unknown keys
are rejected with the offending key named, every run directory stores
the fully resolved config, and the fingerprint ties artifacts to the
configuration that produced them.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .data import SplitSpec
from .errors import ConfigError
from .grids import GridSpec
from .nets import DecoderConfig, EncoderConfig, ODEFuncConfig
from .ns2d import NSParams
from .train import TrainConfig


@dataclass(frozen=True)
class DataConfig:
    kind: str = "ns2d"  # "ns2d" | "toy"
    nx: int = 32
    nu: float = 1e-3
    forcing_amplitude: float = 0.1
    dt_sim: float = 1e-2
    dt: float = 1.0
    snapshots: int = 50
    burn_in: int = 10
    train_len: int = 30
    extrap_len: int = 10
    n_train: int = 64
    n_test: int = 16
    seed: int = 0
    backend: str = "auto"  # "auto" | "ext" | "numpy"
    oversample: bool = False

    def __post_init__(self):
        if self.kind not in ("ns2d", "toy"):
            raise ConfigError(f"data.kind must be ns2d or toy, got {self.kind!r}",
                              key="data.kind")
        if self.backend not in ("auto", "ext", "numpy"):
            raise ConfigError(f"unknown solver backend {self.backend!r}",
                              key="data.backend")

    @property
    def ndim(self) -> int:
        return 1 if self.kind == "toy" else 2

    def grid(self) -> GridSpec:
        return GridSpec(nx=self.nx, ndim=self.ndim)

    def ns_params(self) -> NSParams:
        return NSParams(nu=self.nu, forcing_amplitude=self.forcing_amplitude,
                        dt_sim=self.dt_sim, dt_snapshot=self.dt,
                        n_snapshots=self.snapshots)

    def split(self) -> SplitSpec:
        return SplitSpec(n_train=self.n_train, n_test=self.n_test,
                         train_len=self.train_len, extrap_len=self.extrap_len,
                         burn_in=self.burn_in)


@dataclass(frozen=True)
class ModelConfig:
    d_z: int = 10
    seed: int = 0
    encoder_variant: str = "scaled"
    encoder_widths: tuple = (8, 16, 32, 64)
    encoder_blocks_per_stage: int = 1
    decoder_hidden_layers: int = 3
    decoder_hidden_width: int = 64
    decoder_activation: str = "silu"
    decoder_fourier_harmonics: int = 4
    odefunc_hidden_layers: int = 3
    odefunc_hidden_width: int = 64

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))

    def encoder(self, nx: int, ndim: int) -> EncoderConfig:
        return EncoderConfig(nx=nx, ndim=ndim, d_z=self.d_z,
                             widths=self.encoder_widths,
                             blocks_per_stage=self.encoder_blocks_per_stage,
                             variant=self.encoder_variant)

    def decoder(self, ndim: int) -> DecoderConfig:
        return DecoderConfig(d_z=self.d_z, ndim=ndim,
                             hidden_layers=self.decoder_hidden_layers,
                             hidden_width=self.decoder_hidden_width,
                             activation=self.decoder_activation,
                             fourier_harmonics=self.decoder_fourier_harmonics)

    def odefunc(self) -> ODEFuncConfig:
        return ODEFuncConfig(d_z=self.d_z,
                             hidden_layers=self.odefunc_hidden_layers,
                             hidden_width=self.odefunc_hidden_width)


@dataclass(frozen=True)
class EvalConfig:
    method: str = "rk4"  # "rk4" | "adaptive"
    max_substep: float = 0.1
    rtol: float = 1e-5
    atol: float = 1e-7

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ConfigError(f"unknown eval method {self.method!r}", key="eval.method")


_SECTIONS = {"data": DataConfig, "model": ModelConfig, "train": TrainConfig,
             "eval": EvalConfig}


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    source: str = "<defaults>"

    @classmethod
    def from_dict(cls, raw: dict, source: str = "<dict>") -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping", key="<root>")
        sections = {}
        for name, value in raw.items():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown config section {name!r}", key=name)
            cls_ = _SECTIONS[name]
            if not isinstance(value, dict):
                raise ConfigError(f"section {name!r} must be a mapping", key=name)
            known = {f.name for f in fields(cls_)}
            for key in value:
                if key not in known:
                    raise ConfigError(f"unknown config key {name}.{key}", key=f"{name}.{key}")
            try:
                sections[name] = cls_(**value)
            except ConfigError as exc:
                if exc.key and "." not in str(exc.key):
                    raise ConfigError(str(exc), key=f"{name}.{exc.key}") from exc
                raise
        return cls(**sections, source=source)

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        path = os.fspath(path)
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}", key=path)
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}", key=path) from exc
        return cls.from_dict(raw, source=path)

    def to_dict(self) -> dict:
        out = {name: asdict(getattr(self, name)) for name in _SECTIONS}
        out["data"] = dict(out["data"])
        return out

    def to_yaml(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)

    def fingerprint(self) -> str:
        """Stable short hash of the resolved configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **train_overrides) -> "RunConfig":
        return RunConfig(data=self.data, model=self.model,
                         train=replace(self.train, **train_overrides),
                         eval=self.eval, source=self.source)
