"""Covariance/information filter duality and the multi-step closed form."""

from __future__ import annotations

import numpy as np
import pytest

from cislunar_tasker.errors import ConditioningError, ConditioningWarning
from cislunar_tasker.filters import (
    eif_predict_noiseless,
    eif_predict_noisy,
    eif_update,
    ekf_predict,
    ekf_update,
    propagate_info_multistep,
    state_update,
    symmetrize,
    woodbury_inverse,
)


def _spd(rng, n=6, spread=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = rng.uniform(1.0 / spread, spread, n)
    return q @ np.diag(vals) @ q.T


def _near_identity(rng, n=6, eps=0.2):
    return np.eye(n) + eps * rng.standard_normal((n, n))


def test_symmetrize():
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    s = symmetrize(a)
    np.testing.assert_array_equal(s, s.T)
    np.testing.assert_allclose(s, [[1.0, 1.0], [1.0, 3.0]])


def test_ekf_predict_formula():
    rng = np.random.default_rng(0)
    p = _spd(rng)
    phi = _near_identity(rng)
    q = 0.01 * _spd(rng)
    np.testing.assert_allclose(ekf_predict(p, phi, q),
                               symmetrize(phi @ p @ phi.T + q), rtol=1e-14)


def test_ekf_update_gain():
    rng = np.random.default_rng(1)
    p = _spd(rng)
    h = rng.standard_normal((4, 6))
    r = _spd(rng, 4)
    post, gain = ekf_update(p, h, r)
    expect = p @ h.T @ np.linalg.inv(h @ p @ h.T + r)
    np.testing.assert_allclose(gain, expect, rtol=1e-9)
    np.testing.assert_allclose(post, symmetrize((np.eye(6) - gain @ h) @ p),
                               rtol=1e-9)
    # updating can only shrink the covariance
    assert np.linalg.eigvalsh(p - post).min() > -1e-12


def test_state_update():
    x = np.arange(6.0)
    gain = np.eye(6)[:, :2]
    np.testing.assert_array_equal(state_update(x, gain, [1.0, -1.0]),
                                  x + np.array([1.0, -1.0, 0, 0, 0, 0]))


def test_eif_update_is_additive():
    rng = np.random.default_rng(2)
    lam = _spd(rng)
    h = rng.standard_normal((6, 6))
    r = np.diag(rng.uniform(0.5, 2.0, 6))
    gained = eif_update(lam, h, r) - lam
    np.testing.assert_allclose(gained, h.T @ np.linalg.solve(r, h), rtol=1e-10)


def test_covariance_information_duality():
    """EKF and noiseless EIF stay exact inverses through predict/update cycles."""
    rng = np.random.default_rng(3)
    p = _spd(rng)
    lam = np.linalg.inv(p)
    for _ in range(10):
        phi = _near_identity(rng)
        h = rng.standard_normal((3, 6))
        r = np.diag(rng.uniform(0.5, 2.0, 3))
        p = ekf_predict(p, phi, np.zeros((6, 6)))
        p, _ = ekf_update(p, h, r)
        lam = eif_predict_noiseless(lam, np.linalg.inv(phi))
        lam = eif_update(lam, h, r)
        np.testing.assert_allclose(lam @ p, np.eye(6), atol=1e-9)


def test_noisy_prediction_matches_covariance_form():
    rng = np.random.default_rng(4)
    lam = _spd(rng)
    phi = _near_identity(rng)
    q = 0.1 * _spd(rng)
    lam_pred = eif_predict_noisy(lam, np.linalg.inv(phi), q)
    p_pred = phi @ np.linalg.inv(lam) @ phi.T + q
    np.testing.assert_allclose(lam_pred, np.linalg.inv(p_pred), rtol=1e-9,
                               atol=1e-12)


def test_noisy_prediction_handles_zero_information():
    q = np.diag(np.full(6, 0.5))
    out = eif_predict_noisy(np.zeros((6, 6)), np.eye(6), q)
    np.testing.assert_allclose(out, np.zeros((6, 6)), atol=1e-14)


def test_process_noise_never_adds_information():
    rng = np.random.default_rng(5)
    for _ in range(5):
        lam = _spd(rng)
        phi = _near_identity(rng)
        q = 0.05 * _spd(rng)
        clean = eif_predict_noiseless(lam, np.linalg.inv(phi))
        noisy = eif_predict_noisy(lam, np.linalg.inv(phi), q)
        assert np.linalg.eigvalsh(clean - noisy).min() > -1e-10


def test_woodbury_matches_dense():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a = _spd(rng)
        u = rng.standard_normal((6, 3))
        c = _spd(rng, 3)
        v = rng.standard_normal((3, 6))
        got = woodbury_inverse(np.linalg.inv(a), u, c, v)
        want = np.linalg.inv(a + u @ c @ v)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-11)


def test_woodbury_rejects_singular_c():
    with pytest.raises(ConditioningError):
        woodbury_inverse(np.eye(6), np.eye(6), np.zeros((6, 6)), np.eye(6))


def test_conditioning_warning():
    p = np.diag([1.0, 1e-14, 1.0, 1.0, 1.0, 1.0])
    with pytest.warns(ConditioningWarning):
        ekf_update(p, np.eye(6), 1e-20 * np.eye(6))


def test_multistep_matches_recursion():
    """The closed-form horizon information equals step-recursive filtering."""
    rng = np.random.default_rng(7)
    for _ in range(10):
        steps = 8
        lam0 = _spd(rng)
        fwd = [_near_identity(rng, eps=0.1) for _ in range(steps)]
        hs = [rng.standard_normal((6, 6)) for _ in range(steps)]
        rs = [np.diag(rng.uniform(0.5, 2.0, 6)) for _ in range(steps)]

        lam = lam0.copy()
        for f, h, r in zip(fwd, hs, rs):
            lam = eif_predict_noiseless(lam, np.linalg.inv(f))
            lam = eif_update(lam, h, r)

        # phi_k pulls a horizon variation back to measurement epoch k
        measurements = []
        for k in range(steps):
            phi_k = np.eye(6)
            for f in fwd[k + 1:]:
                phi_k = f @ phi_k
            measurements.append((np.linalg.inv(phi_k), hs[k], rs[k]))
        phi_total = np.eye(6)
        for f in fwd:
            phi_total = f @ phi_total
        result = propagate_info_multistep(lam0, measurements,
                                          np.linalg.inv(phi_total))
        np.testing.assert_allclose(result.total, lam, rtol=1e-9, atol=1e-9)
        assert len(result.contributions) == steps
        np.testing.assert_allclose(
            result.prior + sum(result.contributions), result.total,
            rtol=1e-12, atol=1e-12)


def test_multistep_empty_measurements():
    rng = np.random.default_rng(8)
    lam0 = _spd(rng)
    phi = _near_identity(rng)
    out = propagate_info_multistep(lam0, [], phi)
    np.testing.assert_allclose(out.total, symmetrize(phi.T @ lam0 @ phi),
                               rtol=1e-14)
    assert out.contributions == []
