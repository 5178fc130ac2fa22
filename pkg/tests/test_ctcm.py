"""Time-domain module: multi-scale causal stack, MSFF collapse, fusion,
and the per-timestep contrastive loss."""

import numpy as np
import pytest

from mffftnet import tensor as tn
from mffftnet.ctcm import (
    CtcmConfig,
    ctcm_forward,
    fuse,
    make_ctcm_params,
    msff,
    multiscale_conv,
    time_contrastive_loss,
)
from mffftnet.errors import ConfigurationError, ContractError, ParameterError
from mffftnet.tensor import Tensor


def small_setup(K=8, kernels=(1, 2, 4), msff_hidden=4, seed=0):
    cfg = CtcmConfig(kernels=kernels, msff_hidden=msff_hidden)
    return cfg, make_ctcm_params(K, cfg, seed)


# -- multiscale_conv ---------------------------------------------------------


def test_kernel1_identity_weights(rng):
    K = 4
    cfg, params = small_setup(K=K, kernels=(1,))
    params["ctcm.scale1.w"].data = np.eye(K)[None]
    params["ctcm.scale1.b"].data[:] = 0.0
    r = rng.normal(size=(10, K))
    h_d = multiscale_conv(Tensor(r), params, cfg.kernels)
    np.testing.assert_allclose(h_d.data[:, 0, :], r.T, atol=1e-12)


def test_default_kernel_list_has_eight_scales(rng):
    K = 4
    cfg = CtcmConfig()
    assert cfg.kernels == (1, 2, 4, 8, 16, 32, 64, 128)
    params = make_ctcm_params(K, cfg, 0)
    h_d = multiscale_conv(Tensor(rng.normal(size=(128, K))), params, cfg.kernels)
    assert h_d.shape == (K, 8, 128)


def test_multiscale_causality(rng):
    K = 4
    cfg, params = small_setup(K=K)
    r = rng.normal(size=(12, K))
    base = multiscale_conv(Tensor(r), params, cfg.kernels).data
    t = 5
    r2 = r.copy()
    r2[t] += 1.0
    out = multiscale_conv(Tensor(r2), params, cfg.kernels).data
    assert np.allclose(out[..., :t], base[..., :t], atol=1e-12)
    assert not np.allclose(out[..., t:], base[..., t:])


def test_kernel_longer_than_window(rng):
    cfg, params = small_setup(kernels=(1, 16))
    with pytest.raises(ParameterError, match="16"):
        multiscale_conv(Tensor(rng.normal(size=(8, 8))), params, cfg.kernels)


# -- msff --------------------------------------------------------------------


def test_msff_zero_input_zero_output():
    cfg, params = small_setup()
    h_d = Tensor(np.zeros((8, 3, 10)))
    out = msff(h_d, params)
    np.testing.assert_array_equal(out.data, np.zeros((4, 1, 10)))


def test_msff_full_scale_shape(rng):
    cfg = CtcmConfig(msff_hidden=96)
    params = make_ctcm_params(320, cfg, 0)
    out = msff(Tensor(rng.normal(size=(320, 8, 48)) * 0.1), params)
    assert out.shape == (160, 1, 48)


def test_msff_gradient(rng):
    cfg, params = small_setup(K=4, msff_hidden=3)
    weight = Tensor(rng.normal(size=(2, 1, 6)))

    def f(h_d):
        return tn.tsum(msff(h_d, params) * weight)

    from mffftnet.tensor import finite_diff_check

    err = finite_diff_check(f, Tensor(rng.normal(size=(4, 3, 6))))
    assert err < 1e-4


# -- ctcm_forward ------------------------------------------------------------


def test_forward_shape(rng):
    cfg, params = small_setup(K=8)
    out = ctcm_forward(Tensor(rng.normal(size=(16, 8))), cfg, params)
    assert out.shape == (16, 4)


def test_kernel_removal_is_pure_config_change(rng):
    K = 8
    r = Tensor(rng.normal(size=(16, K)))
    for kernels in ((1, 2, 4), (1, 2), (1, 4)):
        cfg, params = small_setup(K=K, kernels=kernels)
        out = ctcm_forward(r, cfg, params)
        assert out.shape == (16, K // 2)


def test_forward_deterministic(rng):
    cfg, params = small_setup()
    r = Tensor(rng.normal(size=(12, 8)))
    a = ctcm_forward(r, cfg, params).data
    b = ctcm_forward(r, cfg, params).data
    np.testing.assert_array_equal(a, b)


# -- fuse --------------------------------------------------------------------


def test_fuse_identity_weights(rng):
    K = 8
    cfg, params = small_setup(K=K)
    params["fuse.w"].data = np.eye(K)
    params["fuse.b"].data[:] = 0.0
    a = rng.normal(size=(6, K // 2))
    b = rng.normal(size=(6, K // 2))
    out = fuse(Tensor(a), Tensor(b), params)
    np.testing.assert_allclose(out.data, np.concatenate([a, b], axis=-1), atol=1e-12)


def test_fuse_full_scale_shape(rng):
    cfg = CtcmConfig(msff_hidden=96)
    params = make_ctcm_params(320, cfg, 0)
    out = fuse(
        Tensor(rng.normal(size=(48, 160))), Tensor(rng.normal(size=(48, 160))), params
    )
    assert out.shape == (48, 320)


def test_fuse_gradient_reaches_both_inputs(rng):
    cfg, params = small_setup()
    a = Tensor(rng.normal(size=(6, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(6, 4)), requires_grad=True)
    tn.tsum(fuse(a, b, params)).backward()
    assert np.linalg.norm(a.grad) > 0 and np.linalg.norm(b.grad) > 0


def test_fuse_length_mismatch(rng):
    cfg, params = small_setup()
    with pytest.raises(ContractError):
        fuse(Tensor(np.zeros((6, 4))), Tensor(np.zeros((5, 4))), params)


# -- time contrastive loss ---------------------------------------------------


def brute_force_time_loss(r: np.ndarray, h: np.ndarray) -> float:
    T = r.shape[0]
    total = 0.0
    for t in range(T):
        pos = np.exp(r[t] @ h[t])
        denom = sum(np.exp(r[t] @ h[u]) for u in range(T))
        total += -np.log(pos / denom)
    return total


def test_time_loss_single_timestep_is_zero(rng):
    r = Tensor(rng.normal(size=(1, 4)))
    h = Tensor(rng.normal(size=(1, 4)))
    assert abs(time_contrastive_loss(r, h).item()) < 1e-12


def test_time_loss_matches_brute_force(rng):
    r = rng.normal(size=(3, 4))
    h = rng.normal(size=(3, 4))
    got = time_contrastive_loss(Tensor(r), Tensor(h)).item()
    assert abs(got - brute_force_time_loss(r, h)) < 1e-12


def test_time_loss_time_swap_invariance(rng):
    r = rng.normal(size=(5, 4))
    h = rng.normal(size=(5, 4))
    a = time_contrastive_loss(Tensor(r), Tensor(h)).item()
    perm = [1, 0, 2, 4, 3]
    b = time_contrastive_loss(Tensor(r[perm]), Tensor(h[perm])).item()
    assert abs(a - b) < 1e-12


def test_time_loss_nonnegative(rng):
    for _ in range(5):
        r = Tensor(rng.normal(size=(6, 3)))
        h = Tensor(rng.normal(size=(6, 3)))
        assert time_contrastive_loss(r, h).item() >= 0.0


def test_time_loss_batch_mean(rng):
    r = rng.normal(size=(2, 4, 3))
    h = rng.normal(size=(2, 4, 3))
    batched = time_contrastive_loss(Tensor(r), Tensor(h)).item()
    singles = [brute_force_time_loss(r[b], h[b]) for b in range(2)]
    assert abs(batched - np.mean(singles)) < 1e-12


def test_time_loss_shape_mismatch(rng):
    with pytest.raises(ContractError):
        time_contrastive_loss(Tensor(np.zeros((3, 2))), Tensor(np.zeros((4, 2))))


# -- config ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigurationError):
        CtcmConfig(kernels=())
    with pytest.raises(ConfigurationError):
        CtcmConfig(kernels=(2, 2))
    with pytest.raises(ConfigurationError):
        CtcmConfig(kernels=(0, 1))
