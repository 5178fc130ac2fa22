"""Backbone encoder: linear lift, residual dilated-convolution blocks,
per-timestep projection to the K-dimensional latent space.

Block i computes y = x + conv2(act(conv1(x))) with both convolutions
causal at dilation 2^i, so the stack's receptive field doubles per block
while output length stays T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from . import tensor as tn
from .tensor import Parameter, Tensor


@dataclass
class BackboneConfig:
    input_dim: int
    hidden_dim: int = 32
    output_dim: int = 320
    num_blocks: int = 8
    kernel_size: int = 3
    dropout_rate: float = 0.0
    activation: str = "silu"  # "gelu" is the ablation switch

    def __post_init__(self):
        if self.output_dim % 2 != 0:
            raise ConfigurationError("backbone output dimension must be even")
        if self.num_blocks < 1 or self.kernel_size < 1:
            raise ConfigurationError("num_blocks and kernel_size must be >= 1")
        if self.activation not in ("silu", "gelu"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")


def _kaiming_uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def make_backbone(cfg: BackboneConfig, init_seed: int = 0) -> dict[str, Parameter]:
    """Kaiming-uniform weights, zero biases; names enumerate the blocks."""
    rng = np.random.default_rng(init_seed)
    D, H, K, k = cfg.input_dim, cfg.hidden_dim, cfg.output_dim, cfg.kernel_size
    params: dict[str, Parameter] = {}

    def add(name, data, exempt=False):
        params[name] = Parameter(data, name=name, weight_decay_exempt=exempt)

    add("backbone.lin.w", _kaiming_uniform(rng, (D, H), D))
    add("backbone.lin.b", np.zeros(H), exempt=True)
    for i in range(cfg.num_blocks):
        for conv in ("conv1", "conv2"):
            add(f"backbone.block{i}.{conv}.w", _kaiming_uniform(rng, (k, H, H), k * H))
            add(f"backbone.block{i}.{conv}.b", np.zeros(H), exempt=True)
    add("backbone.proj.w", _kaiming_uniform(rng, (H, K), H))
    add("backbone.proj.b", np.zeros(K), exempt=True)
    return params


def encode(
    x: Tensor,
    params: dict[str, Parameter],
    cfg: BackboneConfig,
    training: bool = False,
    rng_seed: int = 0,
) -> Tensor:
    """Map (..., T, D) inputs to (..., T, K) representations."""
    if x.shape[-1] != cfg.input_dim:
        raise DimensionError(
            f"encoder expects {cfg.input_dim} features, got {x.shape[-1]}"
        )
    act = tn.silu if cfg.activation == "silu" else tn.gelu
    h = tn.matmul(x, params["backbone.lin.w"]) + params["backbone.lin.b"]
    for i in range(cfg.num_blocks):
        dilation = 2**i
        z = tn.causal_conv1d(h, params[f"backbone.block{i}.conv1.w"], dilation)
        z = act(z + params[f"backbone.block{i}.conv1.b"])
        if cfg.dropout_rate > 0:
            z = tn.dropout(z, cfg.dropout_rate, [rng_seed, 17, i], training)
        z = tn.causal_conv1d(z, params[f"backbone.block{i}.conv2.w"], dilation)
        h = h + z + params[f"backbone.block{i}.conv2.b"]
    return tn.matmul(h, params["backbone.proj.w"]) + params["backbone.proj.b"]
