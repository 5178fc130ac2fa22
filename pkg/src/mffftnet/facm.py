"""Frequency-aware contrastive module.

Pipeline per window: FFT of the representation over time, hard top-k
masking of low-amplitude bins, complex linear reweighting (learnable
complex weight matrix plus per-bin complex bias), inverse FFT, dropout.
The dual contrastive loss compares the amplitude and phase rows of the
two views' reweighted spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError
from . import tensor as tn
from .fourier import ComplexSpectrum, amp_phase, irfft, rfft
from .tensor import Parameter, Tensor


@dataclass
class FacmConfig:
    mask_ratio: float = 0.4
    lam: float = 0.5  # amplitude/phase balance in the frequency loss
    dropout_rate: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.mask_ratio <= 1.0:
            raise ConfigurationError(f"mask_ratio must be in (0,1], got {self.mask_ratio}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lambda must be in [0,1], got {self.lam}")


def make_facm_params(
    K: int, window_length: int, init_seed: int = 0
) -> dict[str, Parameter]:
    """Complex weight (K x K/2) and per-bin complex bias (c x K/2), stored
    as real/imaginary parameter pairs so both take part in autodiff."""
    rng = np.random.default_rng(init_seed)
    c = window_length // 2 + 1
    half = K // 2
    scale = 1.0 / np.sqrt(K)
    params = {}

    def add(name, data, exempt=False):
        params[name] = Parameter(data, name=name, weight_decay_exempt=exempt)

    add("facm.omega.re", rng.normal(0.0, scale, size=(K, half)))
    add("facm.omega.im", rng.normal(0.0, scale, size=(K, half)))
    add("facm.beta.re", np.zeros((c, half)), exempt=True)
    add("facm.beta.im", np.zeros((c, half)), exempt=True)
    return params


def mean_amplitude(s: ComplexSpectrum) -> np.ndarray:
    """Per-bin modulus averaged over the feature channels, (..., c)."""
    return np.abs(s.values).mean(axis=-1)


def topk_count(c: int, mask_ratio: float) -> int:
    return max(1, int(np.floor(c * mask_ratio)))


def select_topk(A: np.ndarray, mask_ratio: float) -> np.ndarray:
    """Indices of the k = max(1, floor(c*mask_ratio)) largest amplitudes,
    ties broken toward the lower index; returned sorted ascending."""
    A = np.asarray(A)
    k = topk_count(A.shape[-1], mask_ratio)
    order = np.argsort(-A, axis=-1, kind="stable")
    return np.sort(order[..., :k], axis=-1)


def _topk_mask(A: np.ndarray, mask_ratio: float) -> np.ndarray:
    idx = select_topk(A, mask_ratio)
    mask = np.zeros(A.shape, dtype=np.float64)
    np.put_along_axis(mask, idx, 1.0, axis=-1)
    return mask


def facm_apply(
    r: Tensor,
    params: dict[str, Parameter],
    cfg: FacmConfig,
    training: bool = False,
    rng_seed: int = 0,
) -> tuple[Tensor, ComplexSpectrum]:
    """Returns both the time-domain output (..., T, K/2) and the
    post-masking, post-reweighting spectrum the frequency loss consumes."""
    K = r.shape[-1]
    if params["facm.omega.re"].shape[0] != K:
        raise ContractError(
            f"FACM weights built for K={params['facm.omega.re'].shape[0]}, got K={K}"
        )
    spec = rfft(r)
    mask = _topk_mask(mean_amplitude(spec), cfg.mask_ratio)[..., None]
    mask_t = Tensor(mask)
    re_m = spec.re * mask_t
    im_m = spec.im * mask_t
    w_re, w_im = params["facm.omega.re"], params["facm.omega.im"]
    b_re, b_im = params["facm.beta.re"], params["facm.beta.im"]
    out_re = tn.matmul(re_m, w_re) - tn.matmul(im_m, w_im) + b_re
    out_im = tn.matmul(re_m, w_im) + tn.matmul(im_m, w_re) + b_im
    weighted = ComplexSpectrum(re=out_re, im=out_im, origin_length=spec.origin_length)
    h_hat = irfft(weighted)
    h_hat = tn.dropout(h_hat, cfg.dropout_rate, [rng_seed, 29], training)
    return h_hat, weighted


def facm_forward(
    r: Tensor,
    params: dict[str, Parameter],
    cfg: FacmConfig,
    training: bool = False,
    rng_seed: int = 0,
) -> Tensor:
    return facm_apply(r, params, cfg, training, rng_seed)[0]


def _info_nce_rows(f1: Tensor, f2: Tensor) -> Tensor:
    """Row-wise InfoNCE over the trailing (rows, dim) block: positives are
    matching rows of the two views, negatives the other rows of view 2.
    Averaged over rows and any leading batch axes."""
    if f1.shape != f2.shape:
        raise ContractError(f"view shapes differ: {f1.shape} vs {f2.shape}")
    logits = tn.matmul(f1, tn.transpose(f2, (*range(f2.ndim - 2), f2.ndim - 1, f2.ndim - 2)))
    per_row = tn.logsumexp(logits, axis=-1) - tn.diagonal(logits)
    return tn.tmean(per_row)


def freq_contrastive_loss(
    s1: ComplexSpectrum, s2: ComplexSpectrum, lam: float
) -> tuple[Tensor, Tensor, Tensor]:
    """(L_amp, L_phase, L_freq) with L_freq = lam*L_amp + (1-lam)*L_phase."""
    a1, a2 = amp_phase(s1), amp_phase(s2)
    l_amp = _info_nce_rows(a1.amplitude, a2.amplitude)
    l_phase = _info_nce_rows(a1.phase, a2.phase)
    l_freq = l_amp * lam + l_phase * (1.0 - lam)
    return l_amp, l_phase, l_freq
