"""Circular restricted three-body dynamics in the rotating frame.

Everything is nondimensional: the primary separation is the length unit,
the inverse mean motion the time unit, so the frame rotates at unit rate
about +z and the primaries sit at (-mu, 0, 0) and (1 - mu, 0, 0).  The
state convention is [x, y, z, vx, vy, vz] with velocities taken in the
rotating frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import PropagationError, SingularityError

# Exclusion radius around each primary, nondimensional.  Inside this the
# potential is effectively singular and the integrator would grind to a
# halt producing garbage, so we abort instead.
SINGULARITY_RADIUS = 1e-12


@dataclass(frozen=True)
class Cr3bpParams:
    """Mass ratio and unit scales of a circular restricted three-body system.

    Parameters
    ----------
    mu : float
        Mass ratio m2 / (m1 + m2), in (0, 0.5).
    lu_km : float
        Length unit in kilometers (primary separation).
    tu_s : float
        Time unit in seconds (inverse mean motion).
    """

    mu: float
    lu_km: float
    tu_s: float

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mass ratio must lie in (0, 0.5), got {self.mu}")
        if self.lu_km <= 0.0 or self.tu_s <= 0.0:
            raise ValueError("unit scales must be positive")

    @property
    def primary_position(self) -> np.ndarray:
        return np.array([-self.mu, 0.0, 0.0])

    @property
    def secondary_position(self) -> np.ndarray:
        return np.array([1.0 - self.mu, 0.0, 0.0])


#: Earth-Moon system constants (DE-derived values commonly used for
#: libration-point orbit work).
EARTH_MOON = Cr3bpParams(
    mu=0.01215058560962404,
    lu_km=389703.264829278,
    tu_s=382981.289129055,
)


@dataclass(frozen=True)
class IntegratorOptions:
    """Settings for the adaptive Runge-Kutta propagator."""

    rtol: float = 1e-12
    atol: float = 1e-12
    method: str = "DOP853"
    max_step: float = np.inf


DEFAULT_OPTIONS = IntegratorOptions()


@dataclass(frozen=True)
class StateVector:
    """Position and rotating-frame velocity, nondimensional."""

    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.shape != (3,) or v.shape != (3,):
            raise ValueError("position and velocity must be 3-vectors")
        if not (np.isfinite(r).all() and np.isfinite(v).all()):
            raise ValueError("state components must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_array(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float).reshape(6)
        return cls(x[:3].copy(), x[3:].copy())

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])


@dataclass(frozen=True)
class Stm:
    """State transition matrix Phi(t1, t0) mapping deviations at t0 to t1."""

    matrix: np.ndarray
    t0: float
    t1: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError("STM must be 6x6")
        object.__setattr__(self, "matrix", m)

    def compose(self, earlier: "Stm") -> "Stm":
        """Phi(t1, s0) from Phi(t1, t0) and Phi(t0, s0)."""
        if abs(earlier.t1 - self.t0) > 1e-12:
            raise ValueError("STM epochs do not chain")
        return Stm(self.matrix @ earlier.matrix, earlier.t0, self.t1)

    def inverse(self) -> "Stm":
        return Stm(np.linalg.inv(self.matrix), self.t1, self.t0)


def _distances(x: float, y: float, z: float, mu: float) -> tuple[float, float]:
    d1 = math.sqrt((x + mu) ** 2 + y * y + z * z)
    d2 = math.sqrt((x - 1.0 + mu) ** 2 + y * y + z * z)
    if d1 < SINGULARITY_RADIUS or d2 < SINGULARITY_RADIUS:
        raise SingularityError(
            f"state within {SINGULARITY_RADIUS} of a primary (d1={d1:.3e}, d2={d2:.3e})"
        )
    return d1, d2


def potential(r, params: Cr3bpParams) -> float:
    """Effective potential U = (x^2 + y^2)/2 + (1-mu)/d1 + mu/d2."""
    x, y, z = np.asarray(r, dtype=float).reshape(3)
    mu = params.mu
    d1, d2 = _distances(x, y, z, mu)
    return 0.5 * (x * x + y * y) + (1.0 - mu) / d1 + mu / d2


def grad_potential(r, params: Cr3bpParams) -> np.ndarray:
    """Gradient of the effective potential."""
    x, y, z = np.asarray(r, dtype=float).reshape(3)
    mu = params.mu
    d1, d2 = _distances(x, y, z, mu)
    c1 = (1.0 - mu) / d1**3
    c2 = mu / d2**3
    return np.array(
        [
            x - c1 * (x + mu) - c2 * (x - 1.0 + mu),
            y - c1 * y - c2 * y,
            -c1 * z - c2 * z,
        ]
    )


def hessian_potential(r, params: Cr3bpParams) -> np.ndarray:
    """Second derivatives of the effective potential, symmetric 3x3."""
    x, y, z = np.asarray(r, dtype=float).reshape(3)
    mu = params.mu
    d1, d2 = _distances(x, y, z, mu)
    c1 = (1.0 - mu) / d1**3
    c2 = mu / d2**3
    q1 = 3.0 * (1.0 - mu) / d1**5
    q2 = 3.0 * mu / d2**5
    x1 = x + mu
    x2 = x - 1.0 + mu
    uxx = 1.0 - c1 - c2 + q1 * x1 * x1 + q2 * x2 * x2
    uyy = 1.0 - c1 - c2 + q1 * y * y + q2 * y * y
    uzz = -c1 - c2 + q1 * z * z + q2 * z * z
    uxy = q1 * x1 * y + q2 * x2 * y
    uxz = q1 * x1 * z + q2 * x2 * z
    uyz = q1 * y * z + q2 * y * z
    return np.array([[uxx, uxy, uxz], [uxy, uyy, uyz], [uxz, uyz, uzz]])


def eom(state, params: Cr3bpParams) -> np.ndarray:
    """Time derivative of the 6-state: [v; grad U - 2 w x v] with w = +z."""
    s = np.asarray(state, dtype=float).reshape(6)
    gx, gy, gz = grad_potential(s[:3], params)
    return np.array([s[3], s[4], s[5], gx + 2.0 * s[4], gy - 2.0 * s[3], gz])


def variational_rhs(state, phi, params: Cr3bpParams) -> np.ndarray:
    """Derivative of the STM along a trajectory: A(t) Phi."""
    phi = np.asarray(phi, dtype=float).reshape(6, 6)
    uxx = hessian_potential(np.asarray(state, dtype=float).reshape(6)[:3], params)
    dphi = np.empty((6, 6))
    dphi[0:3] = phi[3:6]
    dphi[3:6] = uxx @ phi[0:3]
    dphi[3] += 2.0 * phi[4]
    dphi[4] -= 2.0 * phi[3]
    return dphi


def jacobi_constant(state, params: Cr3bpParams) -> float:
    """Jacobi integral C = 2U - |v|^2, conserved along trajectories."""
    s = np.asarray(state, dtype=float).reshape(6)
    return 2.0 * potential(s[:3], params) - float(s[3:] @ s[3:])


def _rhs42(t, y, mu):
    # Joint state + STM right-hand side.  Scalar math on the 6-state keeps
    # this hot path cheap; the STM block is one 3x6 matmul.
    x, yy, z, vx, vy, vz = y[0], y[1], y[2], y[3], y[4], y[5]
    d1sq = (x + mu) ** 2 + yy * yy + z * z
    d2sq = (x - 1.0 + mu) ** 2 + yy * yy + z * z
    d1 = math.sqrt(d1sq)
    d2 = math.sqrt(d2sq)
    if d1 < SINGULARITY_RADIUS or d2 < SINGULARITY_RADIUS:
        raise SingularityError(f"trajectory hit a primary at t={t:.6f}")
    c1 = (1.0 - mu) / (d1sq * d1)
    c2 = mu / (d2sq * d2)
    q1 = 3.0 * (1.0 - mu) / (d1sq * d1sq * d1)
    q2 = 3.0 * mu / (d2sq * d2sq * d2)
    x1 = x + mu
    x2 = x - 1.0 + mu

    out = np.empty(42)
    out[0] = vx
    out[1] = vy
    out[2] = vz
    out[3] = x - c1 * x1 - c2 * x2 + 2.0 * vy
    out[4] = yy - c1 * yy - c2 * yy - 2.0 * vx
    out[5] = -c1 * z - c2 * z

    uxx = np.array(
        [
            [1.0 - c1 - c2 + q1 * x1 * x1 + q2 * x2 * x2,
             q1 * x1 * yy + q2 * x2 * yy,
             q1 * x1 * z + q2 * x2 * z],
            [q1 * x1 * yy + q2 * x2 * yy,
             1.0 - c1 - c2 + q1 * yy * yy + q2 * yy * yy,
             q1 * yy * z + q2 * yy * z],
            [q1 * x1 * z + q2 * x2 * z,
             q1 * yy * z + q2 * yy * z,
             -c1 - c2 + q1 * z * z + q2 * z * z],
        ]
    )
    phi = y[6:].reshape(6, 6)
    dphi = out[6:].reshape(6, 6)
    dphi[0:3] = phi[3:6]
    dphi[3:6] = uxx @ phi[0:3]
    dphi[3] += 2.0 * phi[4]
    dphi[4] -= 2.0 * phi[3]
    return out


def _rhs6(t, y, mu):
    x, yy, z, vx, vy, vz = y[0], y[1], y[2], y[3], y[4], y[5]
    d1sq = (x + mu) ** 2 + yy * yy + z * z
    d2sq = (x - 1.0 + mu) ** 2 + yy * yy + z * z
    d1 = math.sqrt(d1sq)
    d2 = math.sqrt(d2sq)
    if d1 < SINGULARITY_RADIUS or d2 < SINGULARITY_RADIUS:
        raise SingularityError(f"trajectory hit a primary at t={t:.6f}")
    c1 = (1.0 - mu) / (d1sq * d1)
    c2 = mu / (d2sq * d2)
    return np.array(
        [
            vx,
            vy,
            vz,
            x - c1 * (x + mu) - c2 * (x - 1.0 + mu) + 2.0 * vy,
            yy - c1 * yy - c2 * yy - 2.0 * vx,
            -c1 * z - c2 * z,
        ]
    )


def _check_solution(sol, what: str):
    if not sol.success:
        raise PropagationError(f"{what} failed: {sol.message}")
    if not np.isfinite(sol.y).all():
        raise PropagationError(f"{what} produced non-finite values")


def propagate(
    state,
    t0: float,
    t1: float,
    params: Cr3bpParams = EARTH_MOON,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> tuple[StateVector, Stm]:
    """Propagate a state and its STM from t0 to t1 (either direction).

    Returns
    -------
    (StateVector, Stm)
        Final state and Phi(t1, t0).
    """
    x0 = np.asarray(state, dtype=float).reshape(6)
    if t1 == t0:
        return StateVector.from_array(x0), Stm(np.eye(6), t0, t1)
    y0 = np.concatenate([x0, np.eye(6).ravel()])
    sol = solve_ivp(
        _rhs42,
        (t0, t1),
        y0,
        method=opts.method,
        rtol=opts.rtol,
        atol=opts.atol,
        max_step=opts.max_step,
        args=(params.mu,),
        dense_output=False,
    )
    _check_solution(sol, "propagation")
    yf = sol.y[:, -1]
    return StateVector.from_array(yf[:6]), Stm(yf[6:].reshape(6, 6), t0, t1)


def propagate_state(
    state,
    t0: float,
    t1: float,
    params: Cr3bpParams = EARTH_MOON,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """State-only propagation, skipping the variational block."""
    x0 = np.asarray(state, dtype=float).reshape(6)
    if t1 == t0:
        return x0.copy()
    sol = solve_ivp(
        _rhs6,
        (t0, t1),
        x0,
        method=opts.method,
        rtol=opts.rtol,
        atol=opts.atol,
        max_step=opts.max_step,
        args=(params.mu,),
    )
    _check_solution(sol, "propagation")
    return sol.y[:, -1].copy()


def sample_states(
    state,
    t0: float,
    epochs,
    params: Cr3bpParams = EARTH_MOON,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """States at monotone epochs on one side of t0, no STM, shape (n, 6).

    Epochs must be sorted away from t0 (ascending for forward integration,
    descending for backward); results come back in that same order.
    """
    x0 = np.asarray(state, dtype=float).reshape(6)
    req = np.asarray(epochs, dtype=float)
    if len(req) == 0:
        return np.empty((0, 6))
    diffs = np.diff(req)
    if len(diffs) and not ((diffs > 0).all() or (diffs < 0).all()):
        raise ValueError("epochs must be strictly monotone")
    out = np.empty((len(req), 6))
    mask = np.abs(req - t0) < 1e-15
    inner = req[~mask]
    if len(inner):
        sol = solve_ivp(
            _rhs6,
            (t0, inner[-1]),
            x0,
            method=opts.method,
            rtol=opts.rtol,
            atol=opts.atol,
            max_step=opts.max_step,
            t_eval=inner,
            args=(params.mu,),
        )
        _check_solution(sol, "state sampling")
        out[~mask] = sol.y.T
    out[mask] = x0
    return out


def _rhs_ensemble(t, y, mu):
    s = y.reshape(-1, 6)
    r = s[:, :3]
    v = s[:, 3:]
    dx1 = r[:, 0] + mu
    dx2 = r[:, 0] - 1.0 + mu
    ysq = r[:, 1] ** 2 + r[:, 2] ** 2
    d1 = np.sqrt(dx1 * dx1 + ysq)
    d2 = np.sqrt(dx2 * dx2 + ysq)
    if d1.min() < SINGULARITY_RADIUS or d2.min() < SINGULARITY_RADIUS:
        raise SingularityError(f"ensemble member hit a primary at t={t:.6f}")
    c1 = (1.0 - mu) / d1**3
    c2 = mu / d2**3
    acc = np.empty_like(r)
    acc[:, 0] = r[:, 0] - c1 * dx1 - c2 * dx2 + 2.0 * v[:, 1]
    acc[:, 1] = r[:, 1] * (1.0 - c1 - c2) - 2.0 * v[:, 0]
    acc[:, 2] = -r[:, 2] * (c1 + c2)
    return np.concatenate([v, acc], axis=1).ravel()


def propagate_ensemble(
    states,
    t0: float,
    t1: float,
    params: Cr3bpParams = EARTH_MOON,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """Propagate a batch of states (n, 6) jointly.

    All members share the adaptive step sequence, which is fine for
    perturbation clouds around a common nominal and much faster than a
    Python loop over members.
    """
    s0 = np.asarray(states, dtype=float)
    if s0.ndim != 2 or s0.shape[1] != 6:
        raise ValueError("states must have shape (n, 6)")
    if t1 == t0:
        return s0.copy()
    sol = solve_ivp(
        _rhs_ensemble,
        (t0, t1),
        s0.ravel(),
        method=opts.method,
        rtol=opts.rtol,
        atol=opts.atol,
        args=(params.mu,),
    )
    _check_solution(sol, "ensemble propagation")
    return sol.y[:, -1].reshape(-1, 6)


@dataclass
class Trajectory:
    """A propagated nominal with STMs referenced to its start epoch.

    epochs are stored ascending; stms[k] is Phi(epochs[k], t0).  Queries
    off the stored grid re-integrate from the nearest node rather than
    interpolating, so accuracy is set by the integrator tolerance alone.
    """

    t0: float
    epochs: np.ndarray
    states: np.ndarray
    stms: np.ndarray
    params: Cr3bpParams = EARTH_MOON
    opts: IntegratorOptions = DEFAULT_OPTIONS
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.epochs = np.asarray(self.epochs, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.stms = np.asarray(self.stms, dtype=float)
        if not (len(self.epochs) == len(self.states) == len(self.stms)):
            raise ValueError("epoch/state/stm lengths disagree")
        self._index = {round(float(t), 15): k for k, t in enumerate(self.epochs)}

    def _lookup(self, t: float):
        k = self._index.get(round(float(t), 15))
        if k is not None:
            return k
        hits = np.nonzero(np.abs(self.epochs - t) <= 1e-13)[0]
        return int(hits[0]) if len(hits) else None

    def state_at(self, t: float) -> np.ndarray:
        k = self._lookup(t)
        if k is not None:
            return self.states[k].copy()
        j = int(np.argmin(np.abs(self.epochs - t)))
        return propagate_state(self.states[j], self.epochs[j], t, self.params, self.opts)

    def stm_from_start(self, t: float) -> np.ndarray:
        """Phi(t, t0)."""
        k = self._lookup(t)
        if k is not None:
            return self.stms[k].copy()
        j = int(np.argmin(np.abs(self.epochs - t)))
        _, leg = propagate(self.states[j], self.epochs[j], t, self.params, self.opts)
        return leg.matrix @ self.stms[j]

    def stm_between(self, ta: float, tb: float) -> np.ndarray:
        """Phi(tb, ta) = Phi(tb, t0) Phi(ta, t0)^-1."""
        phi_a = self.stm_from_start(ta)
        phi_b = self.stm_from_start(tb)
        return np.linalg.solve(phi_a.T, phi_b.T).T


def propagate_trajectory(
    state,
    t0: float,
    epochs,
    params: Cr3bpParams = EARTH_MOON,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> Trajectory:
    """Propagate from (state, t0) and sample state + STM at the given epochs.

    Epochs may lie on either side of t0; forward and backward legs are
    integrated separately and merged in ascending order.  t0 itself is
    always included.
    """
    x0 = np.asarray(state, dtype=float).reshape(6)
    req = np.unique(np.asarray(epochs, dtype=float))
    times = [t0]
    states = [x0.copy()]
    stms = [np.eye(6)]
    y0 = np.concatenate([x0, np.eye(6).ravel()])
    for side in (req[req > t0], req[req < t0][::-1]):
        if len(side) == 0:
            continue
        sol = solve_ivp(
            _rhs42,
            (t0, side[-1]),
            y0,
            method=opts.method,
            rtol=opts.rtol,
            atol=opts.atol,
            max_step=opts.max_step,
            t_eval=side,
            args=(params.mu,),
        )
        _check_solution(sol, "trajectory sampling")
        for col, t in zip(sol.y.T, sol.t):
            times.append(float(t))
            states.append(col[:6].copy())
            stms.append(col[6:].reshape(6, 6).copy())
    order = np.argsort(times)
    return Trajectory(
        t0,
        np.asarray(times)[order],
        np.asarray(states)[order],
        np.asarray(stms)[order],
        params,
        opts,
    )


def libration_point(params: Cr3bpParams, which: str) -> np.ndarray:
    """Position of a collinear equilibrium, found by bracketed root solve."""
    mu = params.mu

    def fx(x):
        return (
            x
            - (1.0 - mu) * (x + mu) / abs(x + mu) ** 3
            - mu * (x - 1.0 + mu) / abs(x - 1.0 + mu) ** 3
        )

    brackets = {
        "L1": (mu + 1e-6, 1.0 - mu - 1e-6),
        "L2": (1.0 - mu + 1e-6, 2.0),
        "L3": (-2.0, -mu - 1e-6),
    }
    try:
        lo, hi = brackets[which.upper()]
    except KeyError:
        raise ValueError(f"unknown libration point {which!r}") from None
    x = brentq(fx, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return np.array([x, 0.0, 0.0])
