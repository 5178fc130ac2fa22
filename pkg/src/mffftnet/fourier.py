"""Real-input FFT / inverse FFT over the time axis, with autodiff support.

Convention: unnormalized forward transform X[j] = sum_t x[t] e^{-2 pi i j t / T},
inverse with 1/T. Power-of-two lengths take an iterative radix-2 path; every
other length goes through the Bluestein chirp-z algorithm, so any window
length is exact (no padding).

Transforms act along axis -2 of a (..., T, F) array: one DFT per feature
column, batched over leading axes. The forward/inverse maps are linear, so
their backward rules are the corresponding adjoint transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParameterError
from .tensor import Tensor, _accum, _make, atan2, tsqrt

# -- raw complex FFT (numpy arrays, no autodiff) ---------------------------


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2(a: np.ndarray) -> np.ndarray:
    """In-order iterative radix-2 FFT along the last axis (length 2^p)."""
    n = a.shape[-1]
    if n == 1:
        return a.astype(np.complex128, copy=True)
    a = a[..., _bit_reverse_indices(n)].astype(np.complex128)
    m = 2
    while m <= n:
        half = m // 2
        w = np.exp(-2j * np.pi * np.arange(half) / m)
        b = a.reshape(a.shape[:-1] + (n // m, m))
        even = b[..., :half]
        odd = b[..., half:] * w
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(a.shape)
        m *= 2
    return a


def _ifft_pow2(a: np.ndarray) -> np.ndarray:
    return np.conj(_fft_pow2(np.conj(a))) / a.shape[-1]


def _fft_bluestein(a: np.ndarray) -> np.ndarray:
    """Arbitrary-length FFT along the last axis via chirp-z convolution."""
    n = a.shape[-1]
    t = np.arange(n)
    # t^2 mod 2n keeps the chirp phase accurate for long inputs
    chirp = np.exp(-1j * np.pi * ((t * t) % (2 * n)) / n)
    m = 1
    while m < 2 * n - 1:
        m *= 2
    A = np.zeros(a.shape[:-1] + (m,), dtype=np.complex128)
    A[..., :n] = a * chirp
    B = np.zeros(m, dtype=np.complex128)
    B[:n] = np.conj(chirp)
    B[m - n + 1 :] = np.conj(chirp)[1:][::-1]
    conv = _ifft_pow2(_fft_pow2(A) * _fft_pow2(B))
    return chirp * conv[..., :n]


def _cfft_last(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    if n & (n - 1) == 0:
        return _fft_pow2(a)
    return _fft_bluestein(a)


def cfft(a: np.ndarray, axis: int = -2) -> np.ndarray:
    """Unnormalized complex DFT along ``axis``."""
    moved = np.moveaxis(np.asarray(a, dtype=np.complex128), axis, -1)
    return np.moveaxis(_cfft_last(moved), -1, axis)


def icfft(a: np.ndarray, axis: int = -2) -> np.ndarray:
    """Inverse complex DFT (1/T normalization) along ``axis``."""
    n = np.asarray(a).shape[axis]
    return np.conj(cfft(np.conj(a), axis=axis)) / n


# -- spectrum containers ---------------------------------------------------


@dataclass
class ComplexSpectrum:
    """Non-redundant half spectrum of a real signal: c = floor(T/2)+1 bins."""

    re: Tensor
    im: Tensor
    origin_length: int

    @property
    def num_bins(self) -> int:
        return self.re.shape[-2]

    @property
    def values(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def validate(self) -> None:
        T = self.origin_length
        c = T // 2 + 1
        if self.re.shape != self.im.shape or self.re.shape[-2] != c:
            raise ContractError(
                f"spectrum shape {self.re.shape} inconsistent with origin length {T}"
            )

    def check_real_signal(self, tol: float = 1e-9) -> None:
        """Assert the endpoint bins are real, as they must be for the
        transform of a real signal. Reweighted spectra need not satisfy
        this; the inverse transform takes the real part either way."""
        self.validate()
        scale = max(1.0, float(np.abs(self.values).max(initial=0.0)))
        if np.abs(self.im.data[..., 0, :]).max(initial=0.0) > tol * scale:
            raise ContractError("DC bin of a real-signal spectrum must be real")
        if self.origin_length % 2 == 0 and np.abs(
            self.im.data[..., -1, :]
        ).max(initial=0.0) > tol * scale:
            raise ContractError("Nyquist bin of an even-length spectrum must be real")


@dataclass
class AmpPhase:
    amplitude: Tensor
    phase: Tensor


# -- autodiff transforms ---------------------------------------------------


def rfft(x: Tensor) -> ComplexSpectrum:
    """Half-spectrum DFT of a real (..., T, F) tensor along the time axis."""
    T = x.shape[-2]
    if T < 2:
        raise ParameterError(f"rfft needs T >= 2, got T={T}")
    c = T // 2 + 1
    full = cfft(x.data, axis=-2)
    bins = full[..., :c, :]

    def _adjoint_into_x(g_complex: np.ndarray) -> np.ndarray:
        gpad = np.zeros(x.shape[:-2] + (T,) + x.shape[-1:], dtype=np.complex128)
        gpad[..., :c, :] = g_complex
        return np.real(T * icfft(gpad, axis=-2))

    def bw_re(g):
        _accum(x, _adjoint_into_x(g.astype(np.complex128)))

    def bw_im(g):
        _accum(x, _adjoint_into_x(1j * g))

    re = _make(np.ascontiguousarray(bins.real), (x,), bw_re)
    im = _make(np.ascontiguousarray(bins.imag), (x,), bw_im)
    return ComplexSpectrum(re=re, im=im, origin_length=T)


def irfft(s: ComplexSpectrum) -> Tensor:
    """Inverse transform back to a real (..., T, F) tensor; irfft(rfft(x)) == x."""
    s.validate()
    T = s.origin_length
    c = T // 2 + 1
    bins = s.re.data + 1j * s.im.data
    full = np.zeros(bins.shape[:-2] + (T,) + bins.shape[-1:], dtype=np.complex128)
    full[..., :c, :] = bins
    if T > c:
        full[..., c:, :] = np.conj(bins[..., T - c : 0 : -1, :])
    out_data = np.real(icfft(full, axis=-2))

    def bw(g):
        gs = cfft(g.astype(np.complex128), axis=-2) / T
        g_re = np.ascontiguousarray(gs.real[..., :c, :])
        g_im = np.ascontiguousarray(gs.imag[..., :c, :])
        if T > c:
            g_re[..., 1 : T - c + 1, :] += gs.real[..., : c - 1 : -1, :]
            g_im[..., 1 : T - c + 1, :] -= gs.imag[..., : c - 1 : -1, :]
        _accum(s.re, g_re)
        _accum(s.im, g_im)

    return _make(out_data, (s.re, s.im), bw)


def amp_phase(s: ComplexSpectrum) -> AmpPhase:
    """Polar decomposition per bin; the phase of an exactly-zero bin is 0."""
    amplitude = tsqrt(s.re * s.re + s.im * s.im)
    phase = atan2(s.im, s.re)
    return AmpPhase(amplitude=amplitude, phase=phase)


# -- O(T^2) oracle ---------------------------------------------------------


def naive_dft(x) -> ComplexSpectrum:
    """Direct-summation DFT with the same convention as rfft; test oracle."""
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    T = data.shape[-2]
    c = T // 2 + 1
    j = np.arange(c)[:, None]
    t = np.arange(T)[None, :]
    E = np.exp(-2j * np.pi * j * t / T)
    bins = np.einsum("jt,...tf->...jf", E, data)
    return ComplexSpectrum(
        re=Tensor(bins.real), im=Tensor(bins.imag), origin_length=T
    )
