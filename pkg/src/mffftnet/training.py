"""Joint training: the weighted two-term loss, SGD with momentum and weight
decay, the epoch loop, binary checkpoints, and the fine-tune path."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import ctcm as ctcm_mod
from . import facm as facm_mod
from .augment import AugmentConfig, augment_view
from .errors import ConfigurationError, NumericError
from .model import Model
from .tensor import Parameter, Tensor


@dataclass
class AblationFlags:
    disable_augmentation: bool = False
    disable_facm: bool = False  # drops the frequency branch and its loss
    disable_ctcm: bool = False  # drops the time branch and its loss
    activation_gelu: bool = False  # applied at model build time


@dataclass
class TrainConfig:
    gamma1: float = 1.0
    gamma2: float = 1.0
    learning_rate: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 1e-4
    epochs: int = 50
    batch_size: int = 8
    seed: int = 0
    ablation: AblationFlags = field(default_factory=AblationFlags)

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ConfigurationError("loss weights must be non-negative")
        if self.batch_size < 2:
            raise ConfigurationError(
                "batch_size must be >= 2: the contrastive losses need negatives"
            )


def total_loss(
    batch: np.ndarray,
    model: Model,
    cfg: TrainConfig,
    aug_cfg: AugmentConfig,
    step: int = 0,
    training: bool = True,
) -> tuple[Tensor, Tensor, Tensor]:
    """(L_total, L_time, L_freq) for one B x T x D batch of windows.

    The two views share every parameter; ablation flags replace a branch's
    output with zeros and drop its loss term.
    """
    flags = cfg.ablation
    if flags.disable_augmentation:
        v1 = v2 = batch
    else:
        base = 2 * step * len(batch)
        v1 = np.stack(
            [augment_view(w, aug_cfg, base + 2 * i) for i, w in enumerate(batch)]
        )
        v2 = np.stack(
            [augment_view(w, aug_cfg, base + 2 * i + 1) for i, w in enumerate(batch)]
        )
    r1 = model.encode(Tensor(v1), training, rng_seed=2 * step)
    r2 = model.encode(Tensor(v2), training, rng_seed=2 * step + 1)

    half = model.config.backbone.output_dim // 2
    if flags.disable_facm:
        l_freq = Tensor(0.0)
        h_hat1 = Tensor(np.zeros(r1.shape[:-1] + (half,)))
        h_hat2 = Tensor(np.zeros(r2.shape[:-1] + (half,)))
    else:
        h_hat1, s1 = model.facm(r1, training, rng_seed=2 * step)
        h_hat2, s2 = model.facm(r2, training, rng_seed=2 * step + 1)
        _, _, l_freq = facm_mod.freq_contrastive_loss(s1, s2, model.config.facm.lam)

    if flags.disable_ctcm:
        l_time = Tensor(0.0)
    else:
        h1 = model.fuse(model.ctcm(r1), h_hat1)
        h2 = model.fuse(model.ctcm(r2), h_hat2)
        l_time = (
            ctcm_mod.time_contrastive_loss(r1, h1)
            + ctcm_mod.time_contrastive_loss(r2, h2)
        ) * 0.5

    l_total = l_time * cfg.gamma1 + l_freq * cfg.gamma2
    return l_total, l_time, l_freq


def sgd_step(
    params: list[Parameter],
    velocities: dict[str, np.ndarray],
    lr: float,
    momentum: float,
    weight_decay: float,
) -> None:
    """v <- momentum*v + grad + W*param; param <- param - lr*v.
    Decay-exempt parameters skip the W term."""
    for p in params:
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if weight_decay and not p.weight_decay_exempt:
            g = g + weight_decay * p.data
        v = velocities.get(p.name)
        v = g if v is None else momentum * v + g
        velocities[p.name] = v
        p.data = p.data - lr * v


def fit(
    train_windows: np.ndarray,
    model: Model,
    cfg: TrainConfig,
    aug_cfg: AugmentConfig,
    start_step: int = 0,
) -> list[dict]:
    """Epoch loop over shuffled mini-batches; returns per-epoch loss history."""
    if len(train_windows) < cfg.batch_size:
        raise ConfigurationError(
            f"need at least batch_size={cfg.batch_size} training windows, "
            f"got {len(train_windows)}"
        )
    velocities: dict[str, np.ndarray] = {}
    history: list[dict] = []
    step = start_step
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, 1000 + epoch])
        order = rng.permutation(len(train_windows))
        totals, times, freqs = [], [], []
        for lo in range(0, len(order) - cfg.batch_size + 1, cfg.batch_size):
            batch = train_windows[order[lo : lo + cfg.batch_size]]
            l_total, l_time, l_freq = total_loss(
                batch, model, cfg, aug_cfg, step=step, training=True
            )
            if not np.isfinite(l_total.item()):
                raise NumericError(f"non-finite loss at epoch {epoch}, step {step}")
            model.zero_grad()
            l_total.backward()
            sgd_step(
                model.parameters(),
                velocities,
                cfg.learning_rate,
                cfg.momentum,
                cfg.weight_decay,
            )
            totals.append(l_total.item())
            times.append(l_time.item())
            freqs.append(l_freq.item())
            step += 1
        history.append(
            {
                "epoch": epoch,
                "loss_total": float(np.mean(totals)),
                "loss_time": float(np.mean(times)),
                "loss_freq": float(np.mean(freqs)),
            }
        )
    return history


# -- checkpoints -----------------------------------------------------------

_MAGIC = b"MFFCKPT\x00"
_VERSION = 1


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    exempt: set[str]
    config_text: str
    epoch: int
    step: int


def save_checkpoint(
    path, model: Model, config_text: str, epoch: int = 0, step: int = 0
) -> None:
    """Versioned binary container: magic, version, config text, named
    little-endian float64 parameter blobs."""
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _VERSION))
    cfg_bytes = config_text.encode("utf-8")
    buf.write(struct.pack("<I", len(cfg_bytes)))
    buf.write(cfg_bytes)
    buf.write(struct.pack("<QQ", epoch, step))
    items = sorted(model.params.items())
    buf.write(struct.pack("<I", len(items)))
    for name, p in items:
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", p.data.ndim))
        for dim in p.data.shape:
            buf.write(struct.pack("<I", dim))
        buf.write(struct.pack("<B", int(p.weight_decay_exempt)))
        buf.write(p.data.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    if buf.read(len(_MAGIC)) != _MAGIC:
        raise ConfigurationError(f"{path} is not a checkpoint file")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != _VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", buf.read(4))
    config_text = buf.read(cfg_len).decode("utf-8")
    epoch, step = struct.unpack("<QQ", buf.read(16))
    (count,) = struct.unpack("<I", buf.read(4))
    params: dict[str, np.ndarray] = {}
    exempt: set[str] = set()
    for _ in range(count):
        (nlen,) = struct.unpack("<H", buf.read(2))
        name = buf.read(nlen).decode("utf-8")
        (rank,) = struct.unpack("<B", buf.read(1))
        shape = tuple(struct.unpack("<I", buf.read(4))[0] for _ in range(rank))
        (is_exempt,) = struct.unpack("<B", buf.read(1))
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(buf.read(8 * size), dtype="<f8").reshape(shape).copy()
        params[name] = arr
        if is_exempt:
            exempt.add(name)
    return Checkpoint(params, exempt, config_text, epoch, step)


def fine_tune(
    checkpoint: Checkpoint,
    model: Model,
    train_windows: np.ndarray,
    cfg: TrainConfig,
    aug_cfg: AugmentConfig,
    reinit_input: bool = False,
) -> list[dict]:
    """Load pretrained parameters into ``model`` and continue fitting.

    A feature-count mismatch only touches the input linear layer; with
    ``reinit_input`` that layer keeps its fresh initialization and
    everything else is restored.
    """
    state = dict(checkpoint.params)
    lin_keys = ("backbone.lin.w", "backbone.lin.b")
    mismatch = any(
        k in state and state[k].shape != model.params[k].data.shape for k in lin_keys
    )
    if mismatch:
        if not reinit_input:
            raise ConfigurationError(
                "checkpoint input layer was trained for a different feature "
                "count; pass --reinit-input to re-initialize the input linear "
                "layer and transfer the rest"
            )
        for k in lin_keys:
            state[k] = model.params[k].data.copy()
    model.load_state(state)
    if cfg.epochs == 0:
        return []
    return fit(train_windows, model, cfg, aug_cfg, start_step=checkpoint.step)
