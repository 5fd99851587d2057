"""Propagator, state transition matrices, and rotating-frame invariants."""

from __future__ import annotations

import numpy as np
import pytest

from cislunar_tasker.dynamics import (
    EARTH_MOON,
    Cr3bpParams,
    StateVector,
    Stm,
    eom,
    grad_potential,
    hessian_potential,
    jacobi_constant,
    libration_point,
    potential,
    propagate,
    propagate_ensemble,
    propagate_state,
    propagate_trajectory,
    sample_states,
)
from cislunar_tasker.errors import SingularityError


def test_params_validation():
    with pytest.raises(ValueError):
        Cr3bpParams(mu=0.7, lu_km=1.0, tu_s=1.0)
    with pytest.raises(ValueError):
        Cr3bpParams(mu=0.01, lu_km=-1.0, tu_s=1.0)
    assert EARTH_MOON.primary_position[0] == -EARTH_MOON.mu
    assert EARTH_MOON.secondary_position[0] == 1.0 - EARTH_MOON.mu


def test_state_vector_roundtrip():
    x = np.arange(6.0)
    sv = StateVector.from_array(x)
    np.testing.assert_array_equal(sv.to_array(), x)
    with pytest.raises(ValueError):
        StateVector(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        StateVector(np.full(3, np.nan), np.zeros(3))


def test_gradient_matches_potential():
    rng = np.random.default_rng(3)
    r = np.array([0.5, 0.2, 0.1]) + 0.1 * rng.standard_normal(3)
    h = 1e-7
    for i in range(3):
        dr = np.zeros(3)
        dr[i] = h
        fd = (potential(r + dr, EARTH_MOON) - potential(r - dr, EARTH_MOON)) / (2 * h)
        assert abs(fd - grad_potential(r, EARTH_MOON)[i]) < 1e-6


def test_hessian_matches_gradient():
    r = np.array([0.82, 0.05, 0.12])
    h = 1e-6
    hess = hessian_potential(r, EARTH_MOON)
    for i in range(3):
        dr = np.zeros(3)
        dr[i] = h
        fd = (grad_potential(r + dr, EARTH_MOON)
              - grad_potential(r - dr, EARTH_MOON)) / (2 * h)
        np.testing.assert_allclose(fd, hess[:, i], atol=1e-6)


def test_equilibrium_at_libration_points():
    for which in ("L1", "L2", "L3"):
        xl = libration_point(EARTH_MOON, which)
        state = np.concatenate([xl, np.zeros(3)])
        np.testing.assert_allclose(eom(state, EARTH_MOON), np.zeros(6), atol=1e-12)
    with pytest.raises(ValueError):
        libration_point(EARTH_MOON, "L9")


def test_l1_l2_bracket_the_moon():
    l1 = libration_point(EARTH_MOON, "L1")[0]
    l2 = libration_point(EARTH_MOON, "L2")[0]
    moon = 1.0 - EARTH_MOON.mu
    assert l1 < moon < l2


def test_jacobi_definition():
    x = np.array([0.5, 0.1, 0.05, 0.01, -0.02, 0.005])
    c = jacobi_constant(x, EARTH_MOON)
    expected = 2.0 * potential(x[:3], EARTH_MOON) - x[3:] @ x[3:]
    assert c == pytest.approx(expected, rel=1e-15)


def test_jacobi_conserved(halo):
    grid = np.linspace(0.0, halo.period, 9)
    states = sample_states(halo.x0, 0.0, grid)
    c = np.array([jacobi_constant(s, EARTH_MOON) for s in states])
    assert np.abs(c - c[0]).max() / abs(c[0]) < 1e-10


def test_propagation_roundtrip(halo):
    xf = propagate_state(halo.x0, 0.0, 0.7)
    back = propagate_state(xf, 0.7, 0.0)
    np.testing.assert_allclose(back, halo.x0, atol=1e-9)


def test_zero_interval_propagation():
    x = np.array([0.8, 0.0, 0.1, 0.0, 0.3, 0.0])
    sv, stm = propagate(x, 1.5, 1.5)
    np.testing.assert_array_equal(sv.to_array(), x)
    np.testing.assert_array_equal(stm.matrix, np.eye(6))


def test_stm_matches_finite_differences(halo):
    t1 = 0.4
    _, stm = propagate(halo.x0, 0.0, t1)
    h = 1e-6
    fd = np.empty((6, 6))
    for i in range(6):
        dx = np.zeros(6)
        dx[i] = h
        fp = propagate_state(halo.x0 + dx, 0.0, t1)
        fm = propagate_state(halo.x0 - dx, 0.0, t1)
        fd[:, i] = (fp - fm) / (2 * h)
    err = np.linalg.norm(fd - stm.matrix) / np.linalg.norm(stm.matrix)
    assert err < 1e-5


def test_stm_composition(halo):
    _, full = propagate(halo.x0, 0.0, 0.6)
    xm, first = propagate(halo.x0, 0.0, 0.25)
    _, second = propagate(xm.to_array(), 0.25, 0.6)
    np.testing.assert_allclose(second.compose(first).matrix, full.matrix,
                               rtol=1e-9, atol=1e-9)
    with pytest.raises(ValueError):
        second.compose(second)


def test_stm_inverse(halo):
    _, stm = propagate(halo.x0, 0.0, 0.3)
    np.testing.assert_allclose(stm.inverse().matrix @ stm.matrix, np.eye(6),
                               atol=1e-9)


def test_stm_symplectic(halo):
    """The variational flow preserves the Hamiltonian two-form."""
    _, stm = propagate(halo.x0, 0.0, 1.0)
    # in velocity coordinates the form picks up the Coriolis block
    j = np.zeros((6, 6))
    j[:3, 3:] = np.eye(3)
    j[3:, :3] = -np.eye(3)
    j[0, 1] = -2.0
    j[1, 0] = 2.0
    phi = stm.matrix
    np.testing.assert_allclose(phi.T @ j @ phi, j, atol=1e-8)


def test_sample_states_requires_monotone():
    x = np.array([0.8, 0.0, 0.1, 0.0, 0.3, 0.0])
    with pytest.raises(ValueError):
        sample_states(x, 0.0, [0.1, 0.3, 0.2])
    out = sample_states(x, 0.0, [])
    assert out.shape == (0, 6)


def test_sample_states_includes_t0(halo):
    out = sample_states(halo.x0, 0.0, [0.0, 0.1])
    np.testing.assert_array_equal(out[0], halo.x0)
    np.testing.assert_allclose(out[1], propagate_state(halo.x0, 0.0, 0.1),
                               rtol=1e-12, atol=1e-12)


def test_ensemble_matches_individual(halo):
    rng = np.random.default_rng(11)
    starts = halo.x0 + 1e-5 * rng.standard_normal((4, 6))
    batch = propagate_ensemble(starts, 0.0, 0.5)
    for k in range(4):
        single = propagate_state(starts[k], 0.0, 0.5)
        np.testing.assert_allclose(batch[k], single, rtol=1e-9, atol=1e-10)
    with pytest.raises(ValueError):
        propagate_ensemble(np.zeros((2, 5)), 0.0, 1.0)


def test_singularity_guard():
    at_moon = np.array([1.0 - EARTH_MOON.mu, 0.0, 0.0, 0.0, 0.0, 0.0])
    with pytest.raises(SingularityError):
        potential(at_moon[:3], EARTH_MOON)
    with pytest.raises(SingularityError):
        propagate_state(at_moon, 0.0, 0.1)


def test_trajectory_grid_lookup(halo_trajectory, halo):
    traj = halo_trajectory
    assert traj.epochs[0] == 0.0
    np.testing.assert_array_equal(traj.state_at(0.0), halo.x0)
    np.testing.assert_array_equal(traj.stm_from_start(0.0), np.eye(6))
    t = traj.epochs[4]
    np.testing.assert_array_equal(traj.state_at(t), traj.states[4])


def test_trajectory_off_grid_query(halo_trajectory):
    traj = halo_trajectory
    t = 0.5 * (traj.epochs[2] + traj.epochs[3])
    direct = propagate_state(traj.states[0], traj.epochs[0], t)
    np.testing.assert_allclose(traj.state_at(t), direct, rtol=1e-10, atol=1e-10)


def test_stm_between_chains(halo_trajectory):
    traj = halo_trajectory
    ta, tb, tc = traj.epochs[1], traj.epochs[4], traj.epochs[7]
    chained = traj.stm_between(tb, tc) @ traj.stm_between(ta, tb)
    np.testing.assert_allclose(chained, traj.stm_between(ta, tc),
                               rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(traj.stm_between(ta, ta), np.eye(6), atol=1e-12)


def test_stm_between_direction(halo_trajectory):
    """stm_between(ta, tb) maps deviations at ta to deviations at tb."""
    traj = halo_trajectory
    ta, tb = traj.epochs[2], traj.epochs[5]
    dx = 1e-7 * np.array([1.0, -0.5, 0.3, 0.2, 0.1, -0.4])
    pushed = propagate_state(traj.states[2] + dx, ta, tb)
    linear = traj.states[5] + traj.stm_between(ta, tb) @ dx
    np.testing.assert_allclose(pushed, linear, atol=1e-11)


def test_propagate_trajectory_two_sided(halo):
    traj = propagate_trajectory(halo.x0, 0.0, [-0.2, 0.3])
    np.testing.assert_array_equal(np.sort(traj.epochs), traj.epochs)
    assert set(np.round(traj.epochs, 12)) == {-0.2, 0.0, 0.3}
    back = propagate_state(halo.x0, 0.0, -0.2)
    np.testing.assert_allclose(traj.state_at(-0.2), back, rtol=1e-12, atol=1e-12)
