"""Kalman filtering in covariance and information form.

Everything here operates on plain matrices (state transition Phi,
measurement Jacobian H, noise covariances Q and R); no dynamics are
propagated.  The information form is the workhorse for tasking: with no
process noise the prediction is a congruence by the backward STM and the
update is additive, which makes multi-measurement information a plain sum
(see propagate_info_multistep).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ConditioningWarning

COND_WARN = 1e12


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Average away floating-point asymmetry."""
    return 0.5 * (m + m.T)


def _warn_conditioning(m: np.ndarray, label: str) -> None:
    c = np.linalg.cond(m)
    if c > COND_WARN:
        warnings.warn(
            f"{label} condition number {c:.2e} exceeds {COND_WARN:.0e}",
            ConditioningWarning,
            stacklevel=3,
        )


def ekf_predict(p: np.ndarray, phi: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Prior covariance Phi P Phi^T + Q."""
    return symmetrize(phi @ p @ phi.T + q)


def ekf_update(p_bar: np.ndarray, h: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Measurement update; returns (posterior covariance, Kalman gain)."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    innov = h @ p_bar @ h.T + r
    _warn_conditioning(innov, "innovation covariance")
    try:
        gain = np.linalg.solve(innov.T, h @ p_bar.T).T
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular innovation covariance: {exc}") from exc
    p = symmetrize((np.eye(p_bar.shape[0]) - gain @ h) @ p_bar)
    return p, gain


def state_update(x_bar: np.ndarray, gain: np.ndarray, innovation: np.ndarray) -> np.ndarray:
    """Mean update x_bar + K nu, for simulation use."""
    return np.asarray(x_bar, dtype=float) + gain @ np.asarray(innovation, dtype=float)


def eif_predict_noiseless(lam: np.ndarray, phi_back: np.ndarray) -> np.ndarray:
    """Prior information with no process noise.

    phi_back is the backward map Phi(t_prev, t_now); the prior information
    is the congruence Phi_back^T Lambda Phi_back, the exact inverse of the
    covariance prediction with Q = 0.
    """
    return symmetrize(phi_back.T @ lam @ phi_back)


def eif_predict_noisy(lam: np.ndarray, phi_back: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Prior information with process noise, without inverting Lambda.

    Uses M - M (Q^-1 + M)^-1 M with M the noiselessly predicted
    information, so a singular (e.g. zero) Lambda stays representable.
    """
    m = phi_back.T @ lam @ phi_back
    try:
        q_inv = np.linalg.inv(q)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"process noise not invertible: {exc}") from exc
    inner = q_inv + m
    _warn_conditioning(inner, "information prediction inner matrix")
    try:
        correction = m @ np.linalg.solve(inner, m)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular prediction inner matrix: {exc}") from exc
    return symmetrize(m - correction)


def eif_update(lam_bar: np.ndarray, h: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Additive information update Lambda_bar + H^T R^-1 H."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    return symmetrize(lam_bar + h.T @ np.linalg.solve(r, h))


def woodbury_inverse(a_inv: np.ndarray, u: np.ndarray, c: np.ndarray,
                     v: np.ndarray) -> np.ndarray:
    """(A + U C V)^-1 from A^-1 without forming the full sum."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    try:
        inner = np.linalg.inv(c) + v @ a_inv @ u
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"C not invertible in Woodbury identity: {exc}") from exc
    _warn_conditioning(inner, "Woodbury inner matrix")
    try:
        return a_inv - a_inv @ u @ np.linalg.solve(inner, v @ a_inv)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular Woodbury inner matrix: {exc}") from exc


@dataclass(frozen=True)
class MultiStepInfo:
    """Closed-form information at the horizon and its decomposition."""

    total: np.ndarray
    prior: np.ndarray
    contributions: list[np.ndarray]


def propagate_info_multistep(
    lam0: np.ndarray,
    measurements: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    phi_total: np.ndarray,
) -> MultiStepInfo:
    """Noiseless information at the horizon, summed in closed form.

    measurements is a list of (phi_k, H_k, R_k) where phi_k maps a state
    variation at the horizon t_L to one at the measurement epoch t_k (the
    backward STM); phi_total maps the horizon to the initial epoch the
    prior refers to.  With no process noise each congruence-mapped
    information gain simply adds.
    """
    prior = symmetrize(phi_total.T @ lam0 @ phi_total)
    contributions = []
    total = prior.copy()
    for phi_k, h_k, r_k in measurements:
        h_k = np.atleast_2d(np.asarray(h_k, dtype=float))
        gain = h_k.T @ np.linalg.solve(r_k, h_k)
        term = symmetrize(phi_k.T @ gain @ phi_k)
        contributions.append(term)
        total = total + term
    return MultiStepInfo(total=symmetrize(total), prior=prior,
                         contributions=contributions)
