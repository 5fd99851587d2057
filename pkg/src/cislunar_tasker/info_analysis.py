"""Uncertainty deformation and information alignment analysis.

The left Cauchy-Green tensor Phi Phi^T of a state transition matrix
measures how the flow stretches an isotropic uncertainty cloud; its top
eigenvector is the most-deformed direction.  How much of that deformation
a sensor actually captures depends on the alignment between that
direction and the eigenvectors of the measurement information gain
H^T R^-1 H, which the sandwich bounds in theorem1_bounds quantify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, propagate_ensemble
from .filters import symmetrize
from .measurement import MeasJacobian, NoiseModel


def _h_matrix(h) -> np.ndarray:
    if isinstance(h, MeasJacobian):
        return h.H
    return np.asarray(h, dtype=float)


def _r_matrix(r) -> np.ndarray:
    if isinstance(r, NoiseModel):
        return r.R
    return np.asarray(r, dtype=float)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip so the first significant component is positive (reproducible)."""
    thresh = 1e-12 * np.abs(vec).max()
    for c in vec:
        if abs(c) > thresh:
            return vec if c > 0.0 else -vec
    return vec


def _eig_desc(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, descending, signs fixed."""
    vals, vecs = np.linalg.eigh(symmetrize(m))
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        vecs[:, k] = _fix_sign(vecs[:, k])
    return vals, vecs


@dataclass(frozen=True)
class CgtReport:
    """Spectral summary of a left Cauchy-Green tensor Phi Phi^T."""

    cgt: np.ndarray
    sigma_max: float
    v_cgt: np.ndarray
    spectrum: np.ndarray
    vectors: np.ndarray


def left_cgt(phi: np.ndarray) -> CgtReport:
    phi = np.asarray(phi, dtype=float)
    cgt = symmetrize(phi @ phi.T)
    vals, vecs = _eig_desc(cgt)
    vals = np.clip(vals, 0.0, None)
    return CgtReport(cgt=cgt, sigma_max=float(vals[0]), v_cgt=vecs[:, 0],
                     spectrum=vals, vectors=vecs)


def info_gain_matrix(h, r) -> np.ndarray:
    """H^T R^-1 H as a plain symmetric matrix."""
    hm = _h_matrix(h)
    rm = _r_matrix(r)
    return symmetrize(hm.T @ np.linalg.solve(rm, hm))


def propagated_info(h, r, phi_back: np.ndarray) -> np.ndarray:
    """Information gain mapped to the horizon through the backward STM."""
    phi_back = np.asarray(phi_back, dtype=float)
    return symmetrize(phi_back.T @ info_gain_matrix(h, r) @ phi_back)


def alignment_coefficients(h, r, v_cgt: np.ndarray) -> np.ndarray:
    """Projections of the top deformation direction onto the gain eigenbasis.

    Returns the six coefficients alpha_i = <v_i, v_cgt>, where v_i are the
    eigenvectors of H^T R^-1 H in descending eigenvalue order.  Their
    squares sum to one; only the four informative directions can carry
    weight into the lower bound.
    """
    _, vecs = _eig_desc(info_gain_matrix(h, r))
    return vecs.T @ np.asarray(v_cgt, dtype=float)


@dataclass(frozen=True)
class BoundsReport:
    """Sandwich bounds on the deformed information's largest eigenvalue."""

    actual: float
    lower: float
    upper: float
    alphas: np.ndarray
    cgt_sigma_max: float


def theorem1_bounds(h, r, phi: np.ndarray) -> BoundsReport:
    """Bounds on sigma_max(Phi^T H^T R^-1 H Phi) from deformation/alignment.

    lower = sigma_max(Phi Phi^T) * sum_i alpha_i^2 sigma_i(H^T R^-1 H)
    upper = sigma_max(Phi Phi^T) * sigma_max(H^T R^-1 H)

    The lower bound is the Rayleigh quotient of the deformed gain at
    Phi^-1 v_cgt, so it can never exceed the true maximum; the upper bound
    is submultiplicativity.
    """
    phi = np.asarray(phi, dtype=float)
    m = info_gain_matrix(h, r)
    gvals, gvecs = _eig_desc(m)
    report = left_cgt(phi)
    alphas = gvecs.T @ report.v_cgt
    lower = report.sigma_max * float(np.sum(alphas**2 * gvals))
    upper = report.sigma_max * float(gvals[0])
    deformed = symmetrize(phi.T @ m @ phi)
    actual = float(np.linalg.eigvalsh(deformed)[-1])
    return BoundsReport(actual=actual, lower=lower, upper=upper,
                        alphas=alphas[:4], cgt_sigma_max=report.sigma_max)


@dataclass(frozen=True)
class PerturbationStudy:
    """Monte Carlo check of linear deformation predictions."""

    deviations: np.ndarray
    projections: np.ndarray
    sample_std: np.ndarray
    predicted_std: np.ndarray
    cgt: CgtReport


def backward_perturbation_samples(
    nominal: Trajectory,
    t_ref: float,
    t_back: float,
    n: int = 1000,
    scale: float = 1e-8,
    rng: np.random.Generator | None = None,
) -> PerturbationStudy:
    """Sample isotropic perturbations at t_ref and watch them deform.

    Each of the n samples is offset from the nominal state at t_ref by an
    isotropic Gaussian of standard deviation scale, propagated to t_back,
    and differenced against the nominal there.  The deviations are
    projected onto the first two eigenvectors of the left CGT of the
    t_ref -> t_back map; in the linear regime the sample standard
    deviation along eigenvector i approaches scale * sqrt(spectrum[i]).
    """
    if n < 2:
        raise ValueError("need at least two samples")
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    x_ref = nominal.state_at(t_ref)
    x_back = nominal.state_at(t_back)
    phi = nominal.stm_between(t_ref, t_back)
    report = left_cgt(phi)
    samples = x_ref + scale * rng.standard_normal((n, 6))
    arrived = propagate_ensemble(samples, t_ref, t_back, nominal.params,
                                 nominal.opts)
    deviations = arrived - x_back
    proj = deviations @ report.vectors[:, :2]
    sample_std = proj.std(axis=0, ddof=1)
    predicted = scale * np.sqrt(report.spectrum[:2])
    return PerturbationStudy(deviations=deviations, projections=proj,
                             sample_std=sample_std, predicted_std=predicted,
                             cgt=report)


def deformation_timeseries(nominal: Trajectory, t_ref: float,
                           grid) -> np.ndarray:
    """sigma_max of the left CGT of the t_ref -> t map, per grid time.

    Returns an array of rows (t, sigma_max).  Values start at 1 when the
    grid touches t_ref and are bounded below by trace/6.
    """
    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(grid), 2))
    for k, t in enumerate(grid):
        phi = nominal.stm_between(t_ref, t)
        out[k, 0] = t
        out[k, 1] = left_cgt(phi).sigma_max
    return out
