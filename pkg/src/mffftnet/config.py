"""Layered run configuration: defaults <- named profile <- config file
<- command-line flags. Keys are flat and dotted; the fully resolved
mapping is serialized into every checkpoint and report."""

from __future__ import annotations

import os

from .augment import AugmentConfig
from .ctcm import CtcmConfig
from .encoder import BackboneConfig
from .errors import ConfigurationError
from .facm import FacmConfig
from .model import ModelConfig
from .training import AblationFlags, TrainConfig

DEFAULTS: dict[str, object] = {
    "seed": 0,
    "window.length": 201,
    "window.stride": 1,
    "augment.alpha": 0.5,
    "augment.beta": 0.1,
    "backbone.hidden_dim": 32,
    "backbone.output_dim": 320,
    "backbone.num_blocks": 8,
    "backbone.kernel_size": 3,
    "backbone.dropout": 0.0,
    "backbone.activation": "silu",
    "facm.mask_ratio": 0.4,
    "facm.lambda": 0.5,
    "facm.dropout": 0.1,
    "ctcm.kernels": "1,2,4,8,16,32,64,128",
    "ctcm.msff_hidden": 96,
    "train.gamma1": 1.0,
    "train.gamma2": 1.0,
    "train.learning_rate": 1e-3,
    "train.momentum": 0.9,
    "train.weight_decay": 1e-4,
    "train.epochs": 600,
    "train.batch_size": 128,
    "eval.horizons": "24,48,168,336,720",
    "eval.mode": "multivariate",
    "eval.ridge_alphas": "0.01,0.1,1,10,100",
}

PROFILES: dict[str, dict[str, object]] = {
    # Small dimensions and short windows: every structural contract holds
    # but a full train/eval cycle runs in minutes.
    "desk": {
        "window.length": 64,
        "window.stride": 4,
        "backbone.hidden_dim": 16,
        "backbone.output_dim": 32,
        "backbone.num_blocks": 4,
        "ctcm.kernels": "1,2,4,8,16",
        "ctcm.msff_hidden": 16,
        "train.epochs": 50,
        "train.batch_size": 8,
        # Contrastive logits are raw dot products summed over time, so the
        # loss surface is steep at this scale; 1e-7 keeps SGD+momentum stable.
        "train.learning_rate": 1e-7,
        "eval.horizons": "24",
    },
    "paper-ett-multivariate": {
        "backbone.hidden_dim": 32,
        "backbone.num_blocks": 8,
        "ctcm.msff_hidden": 96,
        "train.weight_decay": 1e-4,
        "eval.mode": "multivariate",
    },
    "paper-ett-univariate": {
        "backbone.hidden_dim": 96,
        "backbone.num_blocks": 10,
        "ctcm.msff_hidden": 48,
        "train.weight_decay": 1e-5,
        "eval.mode": "univariate",
    },
    "paper-wth-multivariate": {
        "backbone.hidden_dim": 64,
        "backbone.num_blocks": 8,
        "ctcm.msff_hidden": 96,
        "train.weight_decay": 1e-4,
        "eval.mode": "multivariate",
    },
    "paper-wth-univariate": {
        "backbone.hidden_dim": 64,
        "backbone.num_blocks": 8,
        "ctcm.msff_hidden": 96,
        "train.weight_decay": 1e-4,
        "eval.mode": "univariate",
    },
}
PROFILES["paper"] = PROFILES["paper-ett-multivariate"]

_TYPES = {key: type(value) for key, value in DEFAULTS.items()}


def _coerce(key: str, raw) -> object:
    if key not in _TYPES:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    want = _TYPES[key]
    if isinstance(raw, want) and not (want is int and isinstance(raw, bool)):
        return raw
    try:
        if want is int:
            return int(str(raw))
        if want is float:
            return float(str(raw))
        return str(raw)
    except ValueError:
        raise ConfigurationError(f"bad value {raw!r} for key {key!r}") from None


def parse_config_file(path) -> dict[str, object]:
    """Flat ``key = value`` lines; blank lines and # comments ignored."""
    overrides: dict[str, object] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigurationError(
                        f"{path}:{lineno}: expected 'key = value', got {line!r}"
                    )
                key, _, value = line.partition("=")
                overrides[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    return overrides


class RunConfig:
    def __init__(self, values: dict[str, object]):
        self.values = values

    @classmethod
    def resolve(
        cls,
        profile: str | None = None,
        file_overrides: dict[str, object] | None = None,
        flag_overrides: dict[str, object] | None = None,
    ) -> "RunConfig":
        if profile is None:
            profile = os.environ.get("MFF_PROFILE") or "desk"
        if profile not in PROFILES:
            raise ConfigurationError(
                f"unknown profile {profile!r}; choose from {sorted(PROFILES)}"
            )
        merged = dict(DEFAULTS)
        merged.update(PROFILES[profile])
        for layer in (file_overrides or {}), (flag_overrides or {}):
            for key, raw in layer.items():
                merged[key] = _coerce(key, raw)
        merged["profile"] = profile
        return cls(merged)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def int_list(self, key) -> list[int]:
        return [int(tok) for tok in str(self.values[key]).split(",") if tok.strip()]

    def float_list(self, key) -> list[float]:
        return [float(tok) for tok in str(self.values[key]).split(",") if tok.strip()]

    def to_canonical_text(self) -> str:
        lines = [f"{key} = {self.values[key]}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def snapshot(self) -> dict[str, object]:
        return dict(sorted(self.values.items()))

    # -- builders ----------------------------------------------------------
    def model_config(self, input_dim: int) -> ModelConfig:
        backbone = BackboneConfig(
            input_dim=input_dim,
            hidden_dim=int(self["backbone.hidden_dim"]),
            output_dim=int(self["backbone.output_dim"]),
            num_blocks=int(self["backbone.num_blocks"]),
            kernel_size=int(self["backbone.kernel_size"]),
            dropout_rate=float(self["backbone.dropout"]),
            activation=str(self["backbone.activation"]),
        )
        facm = FacmConfig(
            mask_ratio=float(self["facm.mask_ratio"]),
            lam=float(self["facm.lambda"]),
            dropout_rate=float(self["facm.dropout"]),
        )
        ctcm = CtcmConfig(
            kernels=tuple(self.int_list("ctcm.kernels")),
            msff_hidden=int(self["ctcm.msff_hidden"]),
        )
        return ModelConfig(
            window_length=int(self["window.length"]),
            backbone=backbone,
            facm=facm,
            ctcm=ctcm,
        )

    def train_config(self, ablation: AblationFlags | None = None) -> TrainConfig:
        return TrainConfig(
            gamma1=float(self["train.gamma1"]),
            gamma2=float(self["train.gamma2"]),
            learning_rate=float(self["train.learning_rate"]),
            momentum=float(self["train.momentum"]),
            weight_decay=float(self["train.weight_decay"]),
            epochs=int(self["train.epochs"]),
            batch_size=int(self["train.batch_size"]),
            seed=int(self["seed"]),
            ablation=ablation or AblationFlags(),
        )

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(
            alpha=float(self["augment.alpha"]),
            beta=float(self["augment.beta"]),
            seed=int(self["seed"]),
        )
