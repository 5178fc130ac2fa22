"""Dense float64 tensors with reverse-mode automatic differentiation.

Every tensor op records its inputs and a backward rule on an implicit tape
(the parent links of the output). ``backward`` on a scalar walks the graph
in reverse topological order and accumulates gradients with ``+=`` so
parameters shared between branches (e.g. the two augmented views) receive
contributions from both.

Ops are batch-agnostic: the documented shapes are the trailing axes and any
leading axes are treated as batch dimensions.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NumericError, ParameterError

_grad_enabled = True
_finite_checks = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def set_finite_checks(enabled: bool) -> None:
    """Toggle the per-op finiteness assertion (on by default)."""
    global _finite_checks
    _finite_checks = enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor; ``self`` must be scalar."""
        if self.data.size != 1:
            raise DimensionError(
                f"backward requires a scalar loss, got shape {self.shape}"
            )
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other):
        return add(_as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ParameterError("tensor/tensor division is not supported")
        return mul(self, _as_tensor(1.0 / float(other)))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """Named trainable tensor; ``weight_decay_exempt`` marks biases and the like."""

    __slots__ = ("name", "weight_decay_exempt")

    def __init__(self, data, name: str, weight_decay_exempt: bool = False):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.weight_decay_exempt = weight_decay_exempt

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward_fn) -> Tensor:
    if _finite_checks and not np.all(np.isfinite(data)):
        raise NumericError("non-finite value produced by a tensor operation")
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# -- arithmetic ------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: _accum(a, -g))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul needs >=2-D operands, got {a.shape} and {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.shape} x {b.shape}"
        )

    def bw(g):
        _accum(a, _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        _accum(b, _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return _make(np.matmul(a.data, b.data), (a, b), bw)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def bw(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.shape).copy())
            return
        gg = g if keepdims else np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(gg, a.shape).copy())

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def texp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    return _make(out_data, (a,), lambda g: _accum(a, g * out_data))


def tlog(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: _accum(a, g / a.data))


def tsqrt(a: Tensor) -> Tensor:
    out_data = np.sqrt(a.data)

    def bw(g):
        # guarded at zero so masked-to-zero amplitudes don't blow up
        _accum(a, g * 0.5 / np.maximum(out_data, 1e-12))

    return _make(out_data, (a,), bw)


def ttanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)
    return _make(out_data, (a,), lambda g: _accum(a, g * (1.0 - out_data**2)))


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data))
    return _make(s, (a,), lambda g: _accum(a, g * s * (1.0 - s)))


def silu(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data))

    def bw(g):
        _accum(a, g * s * (1.0 + a.data * (1.0 - s)))

    return _make(a.data * s, (a,), bw)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a: Tensor) -> Tensor:
    """tanh-approximation GELU, available as the backbone ablation activation."""
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)

    def bw(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        _accum(a, g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * dinner))

    return _make(0.5 * x * (1.0 + t), (a,), bw)


def atan2(y: Tensor, x: Tensor) -> Tensor:
    def bw(g):
        denom = x.data**2 + y.data**2
        denom = np.maximum(denom, 1e-24)
        _accum(y, _unbroadcast(g * x.data / denom, y.shape))
        _accum(x, _unbroadcast(-g * y.data / denom, x.shape))

    return _make(np.arctan2(y.data, x.data), (y, x), bw)


def logsumexp(a: Tensor, axis: int = -1) -> Tensor:
    m = a.data.max(axis=axis, keepdims=True)
    e = np.exp(a.data - m)
    s = e.sum(axis=axis, keepdims=True)
    out_data = np.squeeze(m + np.log(s), axis=axis)

    def bw(g):
        _accum(a, np.expand_dims(g, axis) * (e / s))

    return _make(out_data, (a,), bw)


# -- shape ops -------------------------------------------------------------

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    return _make(
        a.data.reshape(shape), (a,), lambda g: _accum(a, g.reshape(a.shape))
    )


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(
        a.data.transpose(axes), (a,), lambda g: _accum(a, g.transpose(inv))
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tensors, bw)


def diagonal(a: Tensor) -> Tensor:
    """Diagonal of the last two axes; used by the contrastive losses."""
    if a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"diagonal needs a square trailing block, got {a.shape}")

    def bw(g):
        gg = np.zeros_like(a.data)
        idx = np.arange(a.shape[-1])
        gg[..., idx, idx] = g
        _accum(a, gg)

    return _make(np.diagonal(a.data, axis1=-2, axis2=-1).copy(), (a,), bw)


# -- neural primitives -----------------------------------------------------

def causal_conv1d(x: Tensor, w: Tensor, dilation: int = 1) -> Tensor:
    """Causal 1-D convolution: x (..., T, Cin), w (k, Cin, Cout) -> (..., T, Cout).

    The input is left-padded with (k-1)*dilation zeros so the output keeps
    length T and position t never sees inputs later than t.
    """
    k = w.shape[0]
    if k < 1 or dilation < 1:
        raise ParameterError(
            f"kernel size and dilation must be >= 1, got k={k}, dilation={dilation}"
        )
    if x.shape[-1] != w.shape[1]:
        raise DimensionError(
            f"conv1d channel mismatch: input {x.shape} vs kernel {w.shape}"
        )
    T = x.shape[-2]
    pad = (k - 1) * dilation
    pad_spec = [(0, 0)] * (x.ndim - 2) + [(pad, 0), (0, 0)]
    xp = np.pad(x.data, pad_spec)
    out_data = np.zeros(x.shape[:-1] + (w.shape[2],))
    taps = [xp[..., i * dilation : i * dilation + T, :] for i in range(k)]
    for i in range(k):
        out_data += np.matmul(taps[i], w.data[i])

    def bw(g):
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(w.data)
        for i in range(k):
            gxp[..., i * dilation : i * dilation + T, :] += np.matmul(
                g, w.data[i].T
            )
            gw[i] = np.tensordot(taps[i], g, axes=(range(g.ndim - 1), range(g.ndim - 1)))
        _accum(x, gxp[..., pad:, :])
        _accum(w, gw)

    return _make(out_data, (x, w), bw)


def conv2d(x: Tensor, w: Tensor, padding: str = "none") -> Tensor:
    """2-D cross-correlation: x (..., Cin, H, W), w (kh, kw, Cin, Cout).

    padding="same" keeps H and W via symmetric zero padding; "none" is valid
    convolution and requires the kernel to fit the input.
    """
    kh, kw, cin, cout = w.shape
    if x.shape[-3] != cin:
        raise DimensionError(
            f"conv2d channel mismatch: input {x.shape} vs kernel {w.shape}"
        )
    H, W = x.shape[-2], x.shape[-1]
    if padding == "same":
        pt, pl = (kh - 1) // 2, (kw - 1) // 2
        pb, pr = kh - 1 - pt, kw - 1 - pl
    elif padding == "none":
        pt = pb = pl = pr = 0
        if kh > H or kw > W:
            raise ParameterError(
                f"kernel {kh}x{kw} larger than input {H}x{W} with padding=none"
            )
    else:
        raise ParameterError(f"unknown padding mode {padding!r}")
    pad_spec = [(0, 0)] * (x.ndim - 2) + [(pt, pb), (pl, pr)]
    xp = np.pad(x.data, pad_spec)
    Ho = xp.shape[-2] - kh + 1
    Wo = xp.shape[-1] - kw + 1
    out_data = np.zeros(x.shape[:-3] + (cout, Ho, Wo))
    for a in range(kh):
        for b in range(kw):
            patch = xp[..., a : a + Ho, b : b + Wo]
            out_data += np.einsum("...chw,co->...ohw", patch, w.data[a, b])

    def bw(g):
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(w.data)
        for a in range(kh):
            for b in range(kw):
                patch = xp[..., a : a + Ho, b : b + Wo]
                gxp[..., a : a + Ho, b : b + Wo] += np.einsum(
                    "...ohw,co->...chw", g, w.data[a, b]
                )
                contrib = np.einsum("...chw,...ohw->...co", patch, g)
                gw[a, b] = contrib.reshape(-1, cin, cout).sum(axis=0)
        if pt or pb or pl or pr:
            sl = [slice(None)] * (x.ndim - 2)
            sl += [slice(pt, gxp.shape[-2] - pb), slice(pl, gxp.shape[-1] - pr)]
            gxp = gxp[tuple(sl)]
        _accum(x, gxp)
        _accum(w, gw)

    return _make(out_data, (x, w), bw)


def avg_pool2d(x: Tensor, window: tuple[int, int]) -> Tensor:
    """Non-overlapping window means over the trailing H, W axes."""
    ph, pw = window
    H, W = x.shape[-2], x.shape[-1]
    if ph < 1 or pw < 1 or ph > H or pw > W:
        raise ParameterError(f"pool window {window} invalid for input {H}x{W}")
    Ho, Wo = H // ph, W // pw
    lead = x.shape[:-2]
    trimmed = x.data[..., : Ho * ph, : Wo * pw]
    blocks = trimmed.reshape(lead + (Ho, ph, Wo, pw))
    out_data = blocks.mean(axis=(-3, -1))

    def bw(g):
        gx = np.zeros_like(x.data)
        expanded = np.repeat(np.repeat(g, ph, axis=-2), pw, axis=-1) / (ph * pw)
        gx[..., : Ho * ph, : Wo * pw] = expanded
        _accum(x, gx)

    return _make(out_data, (x,), bw)


def dropout(x: Tensor, rate: float, rng_seed, training: bool) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate) so eval is identity."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return _make(x.data.copy(), (x,), lambda g: _accum(x, g))
    rng = np.random.default_rng(rng_seed)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _make(x.data * mask, (x,), lambda g: _accum(x, g * mask))


# -- gradient oracle -------------------------------------------------------

def finite_diff_check(
    f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-5
) -> float:
    """Max relative error between the analytic gradient of f at x and
    central finite differences; f must be deterministic."""
    probe = Tensor(x.data.copy(), requires_grad=True)
    loss = f(probe)
    loss.backward()
    analytic = probe.grad if probe.grad is not None else np.zeros_like(probe.data)

    flat = x.data.copy().ravel()
    numeric = np.zeros_like(flat)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f(Tensor(flat.reshape(x.shape))).item()
            flat[i] = orig - step
            lo = f(Tensor(flat.reshape(x.shape))).item()
            flat[i] = orig
            numeric[i] = (hi - lo) / (2.0 * step)
    err = np.abs(analytic.ravel() - numeric) / (np.abs(analytic.ravel()) + 1e-8)
    return float(err.max()) if err.size else 0.0


def parameters_of(params: Iterable[Parameter]) -> list[Parameter]:
    return list(params)
