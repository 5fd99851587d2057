"""Periodic orbit generation, correction, and catalog handling.

Halo and vertical-axis orbits are corrected by single shooting on the
perpendicular crossing condition: start on the x-z plane with in-plane
perpendicular velocity, integrate to the next crossing, and drive the
velocity residuals to zero with Newton steps built from the state
transition matrix.  Planar retrograde orbits use the same scheme with
the out-of-plane rows dropped.
"""

from __future__ import annotations

import functools
import importlib.resources
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .dynamics import (
    DEFAULT_OPTIONS,
    EARTH_MOON,
    Cr3bpParams,
    IntegratorOptions,
    eom,
    libration_point,
    propagate,
    propagate_state,
    sample_states,
)
from .errors import CorrectionError, PropagationError, SingularityError, ValidationError


class OrbitFamily(str, Enum):
    L1_HALO_NORTH = "L1HaloN"
    L1_HALO_SOUTH = "L1HaloS"
    L2_HALO_NORTH = "L2HaloN"
    L2_HALO_SOUTH = "L2HaloS"
    DRO = "DRO"
    DRAGONFLY = "Dragonfly"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class PeriodicOrbit:
    """A corrected periodic orbit pinned by its initial state and period."""

    name: str
    family: OrbitFamily
    x0: np.ndarray
    period: float
    stability_index: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(6)
        object.__setattr__(self, "x0", x0)
        if self.period <= 0.0:
            raise ValidationError(f"orbit {self.name!r} has non-positive period")
        if self.stability_index is not None and self.stability_index < 1.0 - 1e-9:
            raise ValidationError(
                f"orbit {self.name!r} stability index {self.stability_index} below 1"
            )


# index of each state component, for the corrector's bookkeeping
_COMP = {"x": 0, "y": 1, "z": 2, "vx": 3, "vy": 4, "vz": 5}


def correct_perpendicular(
    seed,
    half_period: float,
    params: Cr3bpParams = EARTH_MOON,
    free=("x", "vy"),
    planar: bool = False,
    tol: float = 1e-12,
    max_iter: int = 30,
    max_delta: float = math.inf,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> tuple[np.ndarray, float]:
    """Newton-correct a perpendicular x-z plane crossing into a periodic orbit.

    The half period is a free variable alongside the listed initial-state
    components, and the residual is the crossing condition itself
    [y, vx, vz] (or [y, vx] for planar orbits), so no event detection is
    needed.  max_delta caps the infinity norm of each Newton step, which
    keeps a good seed from jumping into a neighboring family's basin.
    Returns the corrected initial state and the full period.

    Raises
    ------
    CorrectionError
        If the residual norm does not fall below 1e-10 within max_iter.
    """
    x = np.asarray(seed, dtype=float).reshape(6).copy()
    th = float(half_period)
    res_rows = [1, 3] if planar else [1, 3, 5]
    free_idx = [_COMP[c] for c in free]
    if len(free_idx) != len(res_rows) - 1:
        raise ValueError("need one fewer free component than residual rows")

    def residual(xi, ti):
        state_f, stm = propagate(xi, 0.0, ti, params, opts)
        xf = state_f.to_array()
        return xf[res_rows], xf, stm.matrix

    res, xf, phi = residual(x, th)
    norm = np.abs(res).max()
    for _ in range(max_iter):
        if norm < tol:
            return x, 2.0 * th
        jac = np.empty((len(res_rows), len(res_rows)))
        jac[:, :-1] = phi[np.ix_(res_rows, free_idx)]
        jac[:, -1] = eom(xf, params)[res_rows]
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise CorrectionError(f"singular correction Jacobian: {exc}") from exc
        big = np.abs(delta).max()
        if big > max_delta:
            delta = delta * (max_delta / big)
        # damped Newton: halve the step until the residual actually drops
        accepted = False
        for alpha in (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125):
            x_try = x.copy()
            x_try[free_idx] += alpha * delta[:-1]
            th_try = th + alpha * delta[-1]
            if th_try <= 0.0:
                continue
            try:
                res_try, xf_try, phi_try = residual(x_try, th_try)
            except (PropagationError, SingularityError):
                continue
            norm_try = np.abs(res_try).max()
            if norm_try < norm or norm < tol * 10.0:
                x, th, res, xf, phi, norm = x_try, th_try, res_try, xf_try, phi_try, norm_try
                accepted = True
                break
        if not accepted:
            raise CorrectionError(
                f"perpendicular correction stalled at residual {norm:.3e}"
            )
    if norm < 1e-10:
        return x, 2.0 * th
    raise CorrectionError(
        f"perpendicular correction did not converge (residual {norm:.3e})"
    )


# ---------------------------------------------------------------------------
# analytic seeds


def _richardson_constants(point: str, params: Cr3bpParams):
    mu = params.mu
    xl = libration_point(params, point)[0]
    if point.upper() == "L1":
        gamma = (1.0 - mu) - xl

        def c(n):
            return (mu + (-1.0) ** n * (1.0 - mu) * gamma ** (n + 1) / (1.0 - gamma) ** (n + 1)) / gamma**3

    elif point.upper() == "L2":
        gamma = xl - (1.0 - mu)

        def c(n):
            return ((-1.0) ** n * (mu + (1.0 - mu) * gamma ** (n + 1) / (1.0 + gamma) ** (n + 1))) / gamma**3

    else:
        raise ValueError("halo seeds are implemented for L1 and L2 only")
    return xl, gamma, c(2), c(3), c(4)


def halo_seed(point: str, az: float, params: Cr3bpParams = EARTH_MOON) -> tuple[np.ndarray, float]:
    """Third-order analytic halo guess at out-of-plane amplitude az.

    az is nondimensional in primary-separation units; its sign selects the
    z hemisphere of the returned crossing state.  The guess feeds the
    differential corrector, which owns final accuracy.
    """
    sign = 1.0 if az >= 0.0 else -1.0
    az_g = abs(az)
    xl, gamma, c2, c3, c4 = _richardson_constants(point, params)
    az_g = az_g / gamma  # Richardson units are scaled by gamma

    lam2 = (-(c2 - 2.0) + math.sqrt((c2 - 2.0) ** 2 + 4.0 * (c2 - 1.0) * (1.0 + 2.0 * c2))) / 2.0
    lam = math.sqrt(lam2)
    k = 2.0 * lam / (lam2 + 1.0 - c2)
    delta = lam2 - c2

    d1 = (3.0 * lam2 / k) * (k * (6.0 * lam2 - 1.0) - 2.0 * lam)
    d2 = (8.0 * lam2 / k) * (k * (11.0 * lam2 - 1.0) - 2.0 * lam)

    a21 = 3.0 * c3 * (k**2 - 2.0) / (4.0 * (1.0 + 2.0 * c2))
    a22 = 3.0 * c3 / (4.0 * (1.0 + 2.0 * c2))
    a23 = -3.0 * c3 * lam / (4.0 * k * d1) * (3.0 * k**3 * lam - 6.0 * k * (k - lam) + 4.0)
    a24 = -3.0 * c3 * lam / (4.0 * k * d1) * (2.0 + 3.0 * k * lam)
    b21 = -3.0 * c3 * lam / (2.0 * d1) * (3.0 * k * lam - 4.0)
    b22 = 3.0 * c3 * lam / d1
    d21 = -c3 / (2.0 * lam2)

    a31 = (
        -9.0 * lam / (4.0 * d2) * (4.0 * c3 * (k * a23 - b21) + k * c4 * (4.0 + k**2))
        + (9.0 * lam2 + 1.0 - c2) / (2.0 * d2) * (3.0 * c3 * (2.0 * a23 - k * b21) + c4 * (2.0 + 3.0 * k**2))
    )
    a32 = -(
        9.0 * lam / 4.0 * (4.0 * c3 * (k * a24 - b22) + k * c4)
        + 1.5 * (9.0 * lam2 + 1.0 - c2) * (c3 * (k * b22 + d21 - 2.0 * a24) - c4)
    ) / d2
    b31 = (
        3.0 / (8.0 * d2)
    ) * (
        8.0 * lam * (3.0 * c3 * (k * b21 - 2.0 * a23) - c4 * (2.0 + 3.0 * k**2))
        + (9.0 * lam2 + 1.0 + 2.0 * c2) * (4.0 * c3 * (k * a23 - b21) + k * c4 * (4.0 + k**2))
    )
    b32 = (
        9.0 * lam * (c3 * (k * b22 + d21 - 2.0 * a24) - c4)
        + 0.375 * (9.0 * lam2 + 1.0 + 2.0 * c2) * (4.0 * c3 * (k * a24 - b22) + k * c4)
    ) / d2
    d31 = 3.0 / (64.0 * lam2) * (4.0 * c3 * a24 + c4)
    d32 = 3.0 / (64.0 * lam2) * (4.0 * c3 * (a23 - d21) + c4 * (4.0 + k**2))

    denom = 2.0 * lam * (lam * (1.0 + k**2) - 2.0 * k)
    s1 = (
        1.5 * c3 * (2.0 * a21 * (k**2 - 2.0) - a23 * (k**2 + 2.0) - 2.0 * k * b21)
        - 0.375 * c4 * (3.0 * k**4 - 8.0 * k**2 + 8.0)
    ) / denom
    s2 = (
        1.5 * c3 * (2.0 * a22 * (k**2 - 2.0) + a24 * (k**2 + 2.0) + 2.0 * k * b22 + 5.0 * d21)
        + 0.375 * c4 * (12.0 - k**2)
    ) / denom
    l1 = -1.5 * c3 * (2.0 * a21 + a23 + 5.0 * d21) - 0.375 * c4 * (12.0 - k**2) + 2.0 * lam2 * s1
    l2 = 1.5 * c3 * (a24 - 2.0 * a22) + 1.125 * c4 + 2.0 * lam2 * s2

    ax2 = (-delta - l2 * az_g**2) / l1
    if ax2 <= 0.0:
        raise CorrectionError(
            f"no third-order halo at az={az} about {point} (amplitude constraint)"
        )
    ax = math.sqrt(ax2)
    nu = 1.0 + s1 * ax2 + s2 * az_g**2
    period = 2.0 * math.pi / (lam * nu)

    # series evaluated at phase zero: a perpendicular x-z crossing
    x_r = a21 * ax2 + a22 * az_g**2 - ax + a23 * ax2 - a24 * az_g**2 + a31 * ax**3 - a32 * ax * az_g**2
    z_r = az_g - 2.0 * d21 * ax * az_g + d32 * az_g * ax2 - d31 * az_g**3
    vy_r = lam * nu * (
        k * ax + 2.0 * (b21 * ax2 - b22 * az_g**2) + 3.0 * (b31 * ax**3 - b32 * ax * az_g**2)
    )

    state = np.array([xl + gamma * x_r, 0.0, sign * gamma * z_r, 0.0, gamma * vy_r, 0.0])
    return state, period / 2.0


def dro_seed(radius: float, params: Cr3bpParams = EARTH_MOON) -> tuple[np.ndarray, float]:
    """Planar retrograde orbit guess from two-body motion about the secondary.

    Seeded at the crossing between the primaries; the rotating-frame y
    velocity is the relative circular speed plus the frame transport term.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    mu = params.mu
    vy = math.sqrt(mu / radius) + radius
    state = np.array([1.0 - mu - radius, 0.0, 0.0, 0.0, vy, 0.0])
    half_period = math.pi / (math.sqrt(mu / radius**3) + 1.0)
    return state, half_period


def vertical_seed(point: str, az: float, params: Cr3bpParams = EARTH_MOON) -> tuple[np.ndarray, float]:
    """Vertical-axis orbit guess: linear out-of-plane mode at a collinear point.

    The seed sits at the top of the figure-eight (maximum z, a perpendicular
    crossing); the corrector supplies the in-plane offset and velocity the
    nonlinear coupling requires.
    """
    xl, gamma, c2, _, _ = _richardson_constants(point, params)
    half_period = math.pi / math.sqrt(c2)
    state = np.array([xl, 0.0, az, 0.0, 0.0, 0.0])
    return state, half_period


# ---------------------------------------------------------------------------
# stability


def monodromy(x0, period: float, params: Cr3bpParams = EARTH_MOON,
              opts: IntegratorOptions = DEFAULT_OPTIONS) -> np.ndarray:
    _, stm = propagate(np.asarray(x0, dtype=float), 0.0, period, params, opts)
    return stm.matrix


def stability_index_from_monodromy(m: np.ndarray) -> float:
    """Largest reciprocal-pair index (|lam| + 1/|lam|)/2 of a monodromy matrix."""
    lams = np.linalg.eigvals(np.asarray(m, dtype=float))
    mags = np.abs(lams)
    mags = np.clip(mags, 1e-300, None)
    return float(np.max((mags + 1.0 / mags) / 2.0))


def stability_index(x0, period: float, params: Cr3bpParams = EARTH_MOON) -> float:
    return stability_index_from_monodromy(monodromy(x0, period, params))


def periodicity_residual(orbit: PeriodicOrbit, params: Cr3bpParams = EARTH_MOON,
                         opts: IntegratorOptions = DEFAULT_OPTIONS) -> float:
    xf = propagate_state(orbit.x0, 0.0, orbit.period, params, opts)
    return float(np.linalg.norm(xf - orbit.x0))


def state_at_phase(orbit: PeriodicOrbit, phase: float,
                   params: Cr3bpParams = EARTH_MOON,
                   opts: IntegratorOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """State reached from x0 after phase * period, phase taken mod 1."""
    frac = float(phase) % 1.0
    if frac == 0.0:
        return orbit.x0.copy()
    return propagate_state(orbit.x0, 0.0, frac * orbit.period, params, opts)


def mirror_z(x0: np.ndarray) -> np.ndarray:
    """Reflect a state through the x-y plane; maps halos to the other hemisphere."""
    out = np.asarray(x0, dtype=float).reshape(6).copy()
    out[2] = -out[2]
    out[5] = -out[5]
    return out


def _hemisphere(x0: np.ndarray, period: float, params: Cr3bpParams) -> float:
    """Sign of the dominant z excursion over one period (+1 north, -1 south)."""
    grid = np.linspace(0.0, period, 201)
    z = sample_states(x0, 0.0, grid, params)[:, 2]
    return 1.0 if z.max() + z.min() >= 0.0 else -1.0


# ---------------------------------------------------------------------------
# family continuation

_HALO_FAMILIES = (OrbitFamily.L1_HALO_NORTH, OrbitFamily.L1_HALO_SOUTH,
                  OrbitFamily.L2_HALO_NORTH, OrbitFamily.L2_HALO_SOUTH)


def _sym_system(u: np.ndarray, params: Cr3bpParams, planar: bool,
                opts: IntegratorOptions = DEFAULT_OPTIONS):
    """Residual and Jacobian of the perpendicular-crossing system.

    Unknowns are (x0, z0, vy0, th) for spatial orbits, (x0, vy0, th) for
    planar ones; the residual is the crossing condition at th.
    """
    if planar:
        state = np.array([u[0], 0.0, 0.0, 0.0, u[1], 0.0])
        rows, cols = [1, 3], [0, 4]
        th = u[2]
    else:
        state = np.array([u[0], 0.0, u[1], 0.0, u[2], 0.0])
        rows, cols = [1, 3, 5], [0, 2, 4]
        th = u[3]
    state_f, stm = propagate(state, 0.0, th, params, opts)
    xf = state_f.to_array()
    res = xf[rows]
    jac = np.empty((len(rows), len(rows) + 1))
    jac[:, :-1] = stm.matrix[np.ix_(rows, cols)]
    jac[:, -1] = eom(xf, params)[rows]
    return res, jac


def _family_tangent(u: np.ndarray, params: Cr3bpParams, planar: bool,
                    prev: np.ndarray | None = None) -> np.ndarray:
    _, jac = _sym_system(u, params, planar)
    _, _, vt = np.linalg.svd(jac)
    tang = vt[-1]
    if prev is not None and tang @ prev < 0.0:
        tang = -tang
    return tang


def _arclength_step(u: np.ndarray, tang: np.ndarray, ds: float,
                    params: Cr3bpParams, planar: bool,
                    tol: float = 1e-12, max_iter: int = 14) -> np.ndarray:
    """One pseudo-arclength step along the family from u."""
    u_pred = u + ds * tang
    ui = u_pred.copy()
    for _ in range(max_iter):
        res, jac = _sym_system(ui, params, planar)
        g = np.concatenate([res, [(ui - u_pred) @ tang]])
        if np.abs(g[:-1]).max() < tol and abs(g[-1]) < 1e-10:
            if ui[-1] <= 0.0:
                raise CorrectionError("arclength step collapsed the half period")
            return ui
        full = np.vstack([jac, tang])
        try:
            delta = np.linalg.solve(full, -g)
        except np.linalg.LinAlgError as exc:
            raise CorrectionError(f"singular arclength system: {exc}") from exc
        ui = ui + delta
    raise CorrectionError(
        f"arclength step did not converge (residual {np.abs(g[:-1]).max():.3e})"
    )


def _member_state(u: np.ndarray, planar: bool) -> tuple[np.ndarray, float]:
    if planar:
        return np.array([u[0], 0.0, 0.0, 0.0, u[1], 0.0]), 2.0 * u[2]
    return np.array([u[0], 0.0, u[1], 0.0, u[2], 0.0]), 2.0 * u[3]


def _doubling_indicator(u: np.ndarray, params: Cr3bpParams) -> float:
    """Signed distance of the most negative real monodromy eigenvalue from -1.

    Changes sign where an eigenvalue passes through -1, the signature of a
    period-doubling bifurcation along the family.
    """
    x0, t = _member_state(u, False)
    lams = np.linalg.eigvals(monodromy(x0, t, params))
    neg = [lam.real for lam in lams if abs(lam.imag) < 1e-6 and lam.real < 0.0]
    return min(neg) + 1.0 if neg else 1.0


@functools.lru_cache(maxsize=4)
def _dragonfly_first_member(params: Cr3bpParams) -> tuple[float, ...]:
    """First member of the period-doubled branch off the L2 halo family.

    Walks the halo family until a monodromy eigenvalue crosses -1, bisects
    the bifurcation on arclength, restates the orbit over twice its period
    (where the crossing system gains a second nullspace direction), and
    steps off along the component of that nullspace transverse to the halo
    family tangent.  Returns the corrected (x0, z0, vy0, th) as a tuple so
    the result can be cached per parameter set.
    """
    prev = None
    hit = None
    for u, period in walk_family(OrbitFamily.L2_HALO_SOUTH, params):
        ind = _doubling_indicator(u, params)
        if prev is not None and (prev[1] < 0.0) != (ind < 0.0) and 2.0 < period < 3.2:
            hit = (prev[0], prev[1], u)
            break
        prev = (u.copy(), ind)
    if hit is None:
        raise CorrectionError("halo family walk found no period-doubling point")
    ua, ind_a, ub = hit
    tang = _family_tangent(ua, params, False, ub - ua)
    lo, hi = 0.0, float(np.linalg.norm(ub - ua))
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        um = _arclength_step(ua, tang, mid, params, False) if mid > 0.0 else ua
        if (ind_a < 0.0) != (_doubling_indicator(um, params) < 0.0):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-10:
            break
    u_bif = _arclength_step(ua, tang, 0.5 * (lo + hi), params, False)

    u_star = np.array([u_bif[0], u_bif[1], u_bif[2], 2.0 * u_bif[3]])
    _, jac = _sym_system(u_star, params, False)
    _, _, vt = np.linalg.svd(jac)
    null2 = vt[-2:]
    v_fam = np.array([tang[0], tang[1], tang[2], 2.0 * tang[3]])
    v_fam /= np.linalg.norm(v_fam)
    coeff = null2 @ v_fam
    # unit vector in the nullspace plane orthogonal to the family direction;
    # its overall sign is pinned so both wings are reachable reproducibly
    v_b = null2[0] * (-coeff[1]) + null2[1] * coeff[0]
    v_b /= np.linalg.norm(v_b)
    if v_b[2] > 0.0:
        v_b = -v_b
    u_first = _arclength_step(u_star, v_b, 0.003, params, False, max_iter=30)
    return tuple(u_first)


def _first_member(family: OrbitFamily, params: Cr3bpParams) -> tuple[np.ndarray, bool]:
    """Seed and correct the walk's starting member; returns (u, planar)."""
    if family in _HALO_FAMILIES:
        point = "L1" if family.value.startswith("L1") else "L2"
        seed, th = halo_seed(point, 0.03, params)
        x0, period = correct_perpendicular(seed, th, params, free=("x", "vy"))
        if x0[2] < 0.0:
            x0 = mirror_z(x0)
        return np.array([x0[0], x0[2], x0[4], period / 2.0]), False
    if family is OrbitFamily.DRO:
        seed, th = dro_seed(0.05, params)
        x0, period = correct_perpendicular(seed, th, params, free=("vy",), planar=True)
        return np.array([x0[0], x0[4], period / 2.0]), True
    if family is OrbitFamily.DRAGONFLY:
        return np.array(_dragonfly_first_member(params)), False
    raise ValueError(f"no generation recipe for family {family}")


def _initial_direction(family: OrbitFamily, tang: np.ndarray, planar: bool) -> np.ndarray:
    # spatial families grow in z amplitude; DROs grow outward (crossing x
    # decreases toward the interior primary)
    if planar:
        return -tang if tang[0] > 0.0 else tang
    return -tang if tang[1] < 0.0 else tang


# continuation step sizes per family; the doubled branch needs short steps
# to avoid sliding back onto its parent near the bifurcation
_WALK_STEPS = {OrbitFamily.DRAGONFLY: (0.004, 0.02)}


def walk_family(family: OrbitFamily, params: Cr3bpParams = EARTH_MOON,
                ds0: float | None = None, ds_max: float | None = None,
                max_members: int = 2000):
    """Generate family members by pseudo-arclength continuation.

    Yields (u, period) pairs walking away from the family's seed member.
    Stops silently when the walk leaves its validity box (close approach to
    a primary, period out of range) or cannot take further steps.
    """
    d0, dm = _WALK_STEPS.get(family, (0.012, 0.05))
    ds0 = d0 if ds0 is None else ds0
    ds_max = dm if ds_max is None else ds_max
    u, planar = _first_member(family, params)
    tang = _initial_direction(family, _family_tangent(u, params, planar), planar)
    yield u.copy(), 2.0 * u[-1]
    ds = ds0
    fails = 0
    for _ in range(max_members):
        try:
            u_new = _arclength_step(u, tang, ds, params, planar)
        except (CorrectionError, PropagationError, SingularityError):
            ds /= 2.0
            fails += 1
            if fails > 40:
                return
            continue
        fails = 0
        period = 2.0 * u_new[-1]
        state, _ = _member_state(u_new, planar)
        r1 = np.linalg.norm(state[:3] - params.primary_position)
        r2 = np.linalg.norm(state[:3] - params.secondary_position)
        if not 0.45 < period < 9.0 or r2 < 0.0045 or r1 < 0.02:
            return
        if family in _HALO_FAMILIES and abs(u_new[1]) > 0.6:
            return
        yield u_new.copy(), period
        tang = _family_tangent(u_new, params, planar, tang)
        u = u_new
        ds = min(ds * 1.3, ds_max)


def orbit_with_period(
    family: OrbitFamily,
    period: float,
    params: Cr3bpParams = EARTH_MOON,
    name: str | None = None,
    period_tol: float = 1e-6,
    meta: dict | None = None,
) -> PeriodicOrbit:
    """Walk a family by pseudo-arclength continuation until it hits a period.

    Consecutive members bracketing the requested period are refined by
    bisecting the arclength step.  Raises CorrectionError if the walked
    stretch of the family never brackets the period.
    """
    planar = family is OrbitFamily.DRO
    south = family in (OrbitFamily.L1_HALO_SOUTH, OrbitFamily.L2_HALO_SOUTH)

    prev = None
    bracket = None
    periods_seen = []
    for u, t in walk_family(family, params):
        periods_seen.append(t)
        if prev is not None and (prev[1] - period) * (t - period) <= 0.0:
            bracket = (prev, (u, t))
            break
        prev = (u, t)
    if bracket is None:
        raise CorrectionError(
            f"family {family.value} walk spanned periods "
            f"[{min(periods_seen):.4f}, {max(periods_seen):.4f}] without "
            f"bracketing {period}"
        )

    (ua, ta), (ub, tb) = bracket
    # refine by bisection on the arclength between the bracketing members
    tang = _family_tangent(ua, params, planar, ub - ua)
    span = float(np.linalg.norm(ub - ua))
    lo_s, hi_s = 0.0, span
    t_lo = ta
    u_best, t_best = (ub, tb) if abs(tb - period) < abs(ta - period) else (ua, ta)
    for _ in range(80):
        if abs(t_best - period) < period_tol:
            break
        mid = 0.5 * (lo_s + hi_s)
        u_mid = _arclength_step(ua, tang, mid, params, planar) if mid > 0 else ua
        t_mid = 2.0 * u_mid[-1]
        if abs(t_mid - period) < abs(t_best - period):
            u_best, t_best = u_mid, t_mid
        if (t_lo - period) * (t_mid - period) <= 0.0:
            hi_s = mid
        else:
            lo_s, t_lo = mid, t_mid
        if hi_s - lo_s < 1e-14:
            break
    if abs(t_best - period) > period_tol:
        raise CorrectionError(
            f"period refinement for {family.value} stalled at T={t_best:.9f}"
        )

    x0, t = _member_state(u_best, planar)
    t = t_best
    if family in _HALO_FAMILIES and south != (_hemisphere(x0, t, params) < 0.0):
        x0 = mirror_z(x0)
    elif family is OrbitFamily.DRAGONFLY and _hemisphere(x0, t, params) < 0.0:
        # the doubled branch is labelled by its dominant z excursion; keep north
        x0 = mirror_z(x0)
    si = stability_index(x0, t, params)
    return PeriodicOrbit(
        name=name or f"{family.value.lower()}-{period:.2f}",
        family=family,
        x0=x0,
        period=t,
        stability_index=si,
        meta=meta or {},
    )


# ---------------------------------------------------------------------------
# catalog I/O


def save_catalog(orbits: list[PeriodicOrbit], path) -> None:
    """Write a catalog as a JSON array, full double precision."""
    rows = []
    for o in orbits:
        row = {
            "name": o.name,
            "family": o.family.value,
            "x0": [float(v) for v in o.x0],
            "period": float(o.period),
        }
        if o.stability_index is not None:
            row["stability_index"] = float(o.stability_index)
        if o.meta:
            row["meta"] = o.meta
        rows.append(row)
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


def _orbit_from_row(row: dict) -> PeriodicOrbit:
    try:
        fam = OrbitFamily(row["family"])
        x0 = row["x0"]
        period = row["period"]
        name = row["name"]
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad catalog row {row.get('name', '?')!r}: {exc}") from exc
    if len(x0) != 6:
        raise ValidationError(f"catalog row {name!r}: x0 must have 6 components")
    return PeriodicOrbit(
        name=name,
        family=fam,
        x0=np.asarray(x0, dtype=float),
        period=float(period),
        stability_index=row.get("stability_index"),
        meta=row.get("meta", {}),
    )


def load_catalog(path) -> list[PeriodicOrbit]:
    try:
        rows = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"catalog {path} is not valid JSON: {exc}") from exc
    if not isinstance(rows, list):
        raise ValidationError(f"catalog {path} must be a JSON array")
    orbits = [_orbit_from_row(r) for r in rows]
    names = [o.name for o in orbits]
    if len(set(names)) != len(names):
        raise ValidationError("catalog contains duplicate orbit names")
    return orbits


def validate_catalog(orbits: list[PeriodicOrbit], params: Cr3bpParams = EARTH_MOON,
                     tol: float = 1e-8) -> None:
    """Check the periodicity of every entry by direct propagation."""
    for o in orbits:
        res = periodicity_residual(o, params)
        if res > tol:
            raise ValidationError(
                f"orbit {o.name!r} periodicity residual {res:.3e} exceeds {tol:.1e}"
            )


def find_orbit(orbits: list[PeriodicOrbit], name: str) -> PeriodicOrbit:
    for o in orbits:
        if o.name == name:
            return o
    raise ValidationError(f"orbit {name!r} not in catalog")


def bundled_catalog_path() -> Path:
    return Path(importlib.resources.files("cislunar_tasker") / "data" / "orbit_catalog.json")


def bundled_catalog() -> list[PeriodicOrbit]:
    return load_catalog(bundled_catalog_path())


# name, family, period (TU), synodic resonance
DEFAULT_ROSTER = (
    ("l2-halo-south-2.66", OrbitFamily.L2_HALO_SOUTH, 2.66, "5:2"),
    ("l1-halo-north-1.90", OrbitFamily.L1_HALO_NORTH, 1.90, "7:2"),
    ("dro-3.33", OrbitFamily.DRO, 3.33, "2:1"),
    ("l2-halo-south-3.33", OrbitFamily.L2_HALO_SOUTH, 3.33, "2:1"),
    ("l2-halo-south-1.48", OrbitFamily.L2_HALO_SOUTH, 1.48, "9:2"),
    ("l2-halo-north-2.22", OrbitFamily.L2_HALO_NORTH, 2.22, "3:1"),
    ("l1-halo-north-2.22", OrbitFamily.L1_HALO_NORTH, 2.22, "3:1"),
    ("l1-halo-south-2.00", OrbitFamily.L1_HALO_SOUTH, 2.00, "10:3"),
    ("dro-2.22", OrbitFamily.DRO, 2.22, "3:1"),
    ("dragonfly-5.55", OrbitFamily.DRAGONFLY, 5.55, "1:1"),
)


def build_default_catalog(params: Cr3bpParams = EARTH_MOON,
                          progress=None) -> list[PeriodicOrbit]:
    """Regenerate the bundled ten-orbit catalog by period-targeted continuation.

    Takes tens of seconds; the bundled JSON ships precomputed so normal use
    never pays this cost.  progress, if given, is called with each finished
    PeriodicOrbit.
    """
    out = []
    for name, family, period, resonance in DEFAULT_ROSTER:
        orbit = orbit_with_period(
            family, period, params, name=name,
            meta={"synodic_resonance": resonance},
        )
        out.append(orbit)
        if progress is not None:
            progress(orbit)
    return out
