"""Directional-cosine measurement model and its information geometry.

An observer i looking at a target j measures the unit line-of-sight vector
and its time derivative.  Both are functions of the relative state alone,
so the model, its Jacobians, the measurement-noise covariance, and the
per-measurement information gain H^T R^-1 H all live here as pure
functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import StateVector
from .errors import GeometryError, ValidationError

# below this separation the line of sight is undefined
ZERO_RANGE = 1e-12


def _as_state(x) -> np.ndarray:
    if isinstance(x, StateVector):
        return x.to_array()
    return np.asarray(x, dtype=float).reshape(6)


@dataclass(frozen=True)
class RelativeState:
    """Target state relative to an observer, with the range cached."""

    r: np.ndarray
    v: np.ndarray
    range: float

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        if not self.range > ZERO_RANGE:
            raise GeometryError(
                f"relative range {self.range:.3e} is below {ZERO_RANGE:.0e}"
            )


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    y_dot: np.ndarray


def relative_state(observer, target) -> RelativeState:
    """Relative position/velocity of target with respect to observer."""
    xo = _as_state(observer)
    xt = _as_state(target)
    dr = xt[:3] - xo[:3]
    dv = xt[3:] - xo[3:]
    return RelativeState(dr, dv, float(np.linalg.norm(dr)))


def observe(rel: RelativeState) -> Observation:
    """Directional cosine vector and its rate for a relative state."""
    r, v, rho = rel.r, rel.v, rel.range
    y = r / rho
    y_dot = v / rho - (r @ v) * r / rho**3
    return Observation(y, y_dot)


@dataclass(frozen=True)
class MeasJacobian:
    """Measurement Jacobian with its 3x3 blocks exposed.

    H is 6x6 (sensitivity to the target state) or 6x12 (observer state
    stacked before target state); the blocks always refer to the target
    partition, for which H = [[H11, 0], [H21, H22]].
    """

    H: np.ndarray
    H11: np.ndarray
    H21: np.ndarray
    H22: np.ndarray


def _jacobian_blocks(rel: RelativeState) -> tuple[np.ndarray, np.ndarray]:
    r, v, rho = rel.r, rel.v, rel.range
    eye = np.eye(3)
    h11 = eye / rho - np.outer(r, r) / rho**3
    rv = float(r @ v)
    h21 = (
        -np.outer(v, r) / rho**3
        - (np.outer(r, v) + rv * eye) / rho**3
        + 3.0 * rv * np.outer(r, r) / rho**5
    )
    return h11, h21


def jacobian_target(rel: RelativeState) -> MeasJacobian:
    """6x6 Jacobian of (y, y_dot) with respect to the target state."""
    h11, h21 = _jacobian_blocks(rel)
    h = np.zeros((6, 6))
    h[:3, :3] = h11
    h[3:, :3] = h21
    h[3:, 3:] = h11
    return MeasJacobian(H=h, H11=h11, H21=h21, H22=h11)


def jacobian_augmented(rel: RelativeState) -> MeasJacobian:
    """6x12 Jacobian over the stacked (observer, target) state.

    The measurement depends on the states only through their difference,
    so the observer block is the exact negation of the target block.
    """
    tgt = jacobian_target(rel)
    h = np.hstack([-tgt.H, tgt.H])
    return MeasJacobian(H=h, H11=tgt.H11, H21=tgt.H21, H22=tgt.H22)


@dataclass(frozen=True)
class NoiseModel:
    """Angle-noise level, exposure time, and the 6x6 covariance they imply.

    R defaults to sigma^2 * blockdiag(I, (2/dt^2) I): the rate channel is a
    two-point difference over the exposure, so its variance carries 2/dt^2.
    A custom R may be supplied to study alternative weightings.
    """

    sigma: float
    delta_t: float
    R: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not self.delta_t > 0.0:
            raise ValidationError(f"delta_t must be positive, got {self.delta_t}")
        if self.R is None:
            r = self.sigma**2 * np.diag([1.0, 1.0, 1.0] + [2.0 / self.delta_t**2] * 3)
        else:
            r = np.asarray(self.R, dtype=float)
            if r.shape != (6, 6):
                raise ValidationError(f"R must be 6x6, got {r.shape}")
        object.__setattr__(self, "R", r)

    @property
    def R_inv(self) -> np.ndarray:
        return np.linalg.inv(self.R)


def noise_covariance(sigma: float, delta_t: float) -> NoiseModel:
    return NoiseModel(sigma=sigma, delta_t=delta_t)


def null_space_basis(rel: RelativeState) -> tuple[np.ndarray, np.ndarray]:
    """The two state directions a single look cannot sense.

    Scaling the relative state (v1) changes neither the line of sight nor
    its rate, and a velocity change along the line of sight (v2) changes
    no direction either.
    """
    v1 = np.concatenate([rel.r, rel.v])
    v2 = np.concatenate([np.zeros(3), rel.r])
    return v1, v2


def info_gain(jac: MeasJacobian | np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Fisher information H^T R^-1 H contributed by one measurement.

    R is diagonal in its default form, so the weighting is applied row-wise
    rather than through a solve.  The result is symmetrized to the floating
    point level.
    """
    h = jac.H if isinstance(jac, MeasJacobian) else np.asarray(jac, dtype=float)
    r = noise.R
    if not np.count_nonzero(r - np.diag(np.diagonal(r))):
        weighted = h / np.diagonal(r)[:, None]
    else:
        weighted = np.linalg.solve(r, h)
    m = h.T @ weighted
    return 0.5 * (m + m.T)
