"""Complementary time-domain contrastive module.

Parallel causal 1-D convolutions at several kernel sizes produce a
K x n x T stack; the multi-scale feature fusion (MSFF) block — 3x3 2-D
convolution, SiLU, average pooling over the scale axis, 1x1 2-D
convolution — collapses it to T x K/2. Fusion concatenates the time- and
frequency-domain halves and projects back to K; the time contrastive loss
ties each fused timestep to its backbone representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, ParameterError
from . import tensor as tn
from .tensor import Parameter, Tensor

DEFAULT_KERNELS = (1, 2, 4, 8, 16, 32, 64, 128)


@dataclass
class CtcmConfig:
    kernels: tuple[int, ...] = DEFAULT_KERNELS
    msff_hidden: int = 96

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        if not self.kernels:
            raise ConfigurationError("kernel list must be non-empty")
        if any(b <= a for a, b in zip(self.kernels, self.kernels[1:])):
            raise ConfigurationError(f"kernels must be strictly increasing: {self.kernels}")
        if self.kernels[0] < 1:
            raise ConfigurationError("kernel sizes must be >= 1")


def make_ctcm_params(
    K: int, cfg: CtcmConfig, init_seed: int = 0
) -> dict[str, Parameter]:
    rng = np.random.default_rng(init_seed)
    half = K // 2
    H = cfg.msff_hidden
    params: dict[str, Parameter] = {}

    def add(name, data, exempt=False):
        params[name] = Parameter(data, name=name, weight_decay_exempt=exempt)

    def kaiming(shape, fan_in):
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    for kj in cfg.kernels:
        add(f"ctcm.scale{kj}.w", kaiming((kj, K, K), kj * K))
        add(f"ctcm.scale{kj}.b", np.zeros(K), exempt=True)
    add("ctcm.msff.conv1.w", kaiming((3, 3, K, H), 9 * K))
    add("ctcm.msff.conv1.b", np.zeros((H, 1, 1)), exempt=True)
    add("ctcm.msff.conv2.w", kaiming((1, 1, H, half), H))
    add("ctcm.msff.conv2.b", np.zeros((half, 1, 1)), exempt=True)
    add("ctcm.proj.w", kaiming((half, half), half))
    add("ctcm.proj.b", np.zeros(half), exempt=True)
    add("fuse.w", kaiming((K, K), K))
    add("fuse.b", np.zeros(K), exempt=True)
    return params


def multiscale_conv(
    r: Tensor, params: dict[str, Parameter], kernels: tuple[int, ...]
) -> Tensor:
    """Stack causal depth-preserving convolutions: (..., T, K) -> (..., K, n, T)."""
    T = r.shape[-2]
    for kj in kernels:
        if kj > T:
            raise ParameterError(f"kernel {kj} exceeds window length {T}")
    scales = []
    axes = (*range(r.ndim - 2), r.ndim - 1, r.ndim - 2)  # swap (T, K) -> (K, T)
    for kj in kernels:
        y = tn.causal_conv1d(r, params[f"ctcm.scale{kj}.w"]) + params[f"ctcm.scale{kj}.b"]
        y = tn.transpose(y, axes)
        scales.append(tn.reshape(y, y.shape[:-1] + (1, y.shape[-1])))
    return tn.concat(scales, axis=-2)


def msff(h_d: Tensor, params: dict[str, Parameter]) -> Tensor:
    """(..., K, n, T) -> (..., K/2, 1, T) via conv / SiLU / pool / conv."""
    n = h_d.shape[-2]
    z = tn.conv2d(h_d, params["ctcm.msff.conv1.w"], padding="same")
    z = tn.silu(z + params["ctcm.msff.conv1.b"])
    z = tn.avg_pool2d(z, (n, 1))
    z = tn.conv2d(z, params["ctcm.msff.conv2.w"], padding="same")
    return z + params["ctcm.msff.conv2.b"]


def ctcm_forward(
    r: Tensor, cfg: CtcmConfig, params: dict[str, Parameter]
) -> Tensor:
    """(..., T, K) -> (..., T, K/2): multi-scale stack, MSFF, flatten, project."""
    h2d = msff(multiscale_conv(r, params, cfg.kernels), params)
    flat = tn.reshape(h2d, h2d.shape[:-2] + (h2d.shape[-1],))  # drop collapsed axis
    axes = (*range(flat.ndim - 2), flat.ndim - 1, flat.ndim - 2)
    h_t = tn.transpose(flat, axes)
    return tn.matmul(h_t, params["ctcm.proj.w"]) + params["ctcm.proj.b"]


def fuse(h_time: Tensor, h_freq: Tensor, params: dict[str, Parameter]) -> Tensor:
    """Concatenate the two K/2 halves and project back to K per timestep."""
    if h_time.shape[:-1] != h_freq.shape[:-1]:
        raise ContractError(
            f"fusion length mismatch: {h_time.shape} vs {h_freq.shape}"
        )
    h = tn.concat([h_time, h_freq], axis=-1)
    return tn.matmul(h, params["fuse.w"]) + params["fuse.b"]


def time_contrastive_loss(r: Tensor, h: Tensor) -> Tensor:
    """Per-timestep InfoNCE between the backbone representation and the
    fused representation; summed over time, averaged over the batch."""
    if r.shape != h.shape:
        raise ContractError(f"shape mismatch: {r.shape} vs {h.shape}")
    axes = (*range(h.ndim - 2), h.ndim - 1, h.ndim - 2)
    logits = tn.matmul(r, tn.transpose(h, axes))
    per_t = tn.logsumexp(logits, axis=-1) - tn.diagonal(logits)
    return tn.tmean(tn.tsum(per_t, axis=-1))
