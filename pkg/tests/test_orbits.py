"""Orbit correction, the bundled catalog, and catalog I/O."""

from __future__ import annotations

import json

import numpy as np
import pytest

from cislunar_tasker.dynamics import propagate_state
from cislunar_tasker.errors import ValidationError
from cislunar_tasker.orbits import (
    DEFAULT_ROSTER,
    OrbitFamily,
    PeriodicOrbit,
    correct_perpendicular,
    dro_seed,
    find_orbit,
    halo_seed,
    load_catalog,
    mirror_z,
    monodromy,
    orbit_with_period,
    periodicity_residual,
    save_catalog,
    stability_index_from_monodromy,
    state_at_phase,
    validate_catalog,
)


def test_roster_matches_catalog(catalog):
    assert len(catalog) == len(DEFAULT_ROSTER)
    by_name = {o.name: o for o in catalog}
    for name, family, period, resonance in DEFAULT_ROSTER:
        orbit = by_name[name]
        assert orbit.family is family
        assert abs(orbit.period - period) < 1e-5
        assert orbit.meta["synodic_resonance"] == resonance


def test_catalog_periodicity(catalog):
    validate_catalog(catalog, tol=1e-8)


def test_catalog_stability_indices(catalog):
    for orbit in catalog:
        assert orbit.stability_index >= 1.0 - 1e-9
    dragonfly = find_orbit(catalog, "dragonfly-5.55")
    assert dragonfly.stability_index > 10.0
    dro = find_orbit(catalog, "dro-2.22")
    assert dro.stability_index < 2.0


def test_halo_correction_converges():
    seed, th = halo_seed("L1", 0.05)
    x0, period = correct_perpendicular(seed, th)
    orbit = PeriodicOrbit("probe", OrbitFamily.L1_HALO_NORTH, x0, period)
    assert periodicity_residual(orbit) < 1e-9
    # perpendicular crossing: y, vx, vz all zero at departure
    assert abs(x0[1]) < 1e-14 and abs(x0[3]) < 1e-14 and abs(x0[5]) < 1e-14


def test_dro_correction_stays_planar():
    seed, th = dro_seed(0.08)
    x0, period = correct_perpendicular(seed, th, free=("vy",), planar=True)
    xf = propagate_state(x0, 0.0, period)
    assert np.linalg.norm(xf - x0) < 1e-10
    midway = propagate_state(x0, 0.0, 0.37 * period)
    assert abs(midway[2]) < 1e-14


def test_continuation_hits_requested_period():
    orbit = orbit_with_period(OrbitFamily.DRO, 2.9)
    assert abs(orbit.period - 2.9) < 1e-6
    assert periodicity_residual(orbit) < 1e-9


def test_state_at_phase(halo):
    np.testing.assert_array_equal(state_at_phase(halo, 0.0), halo.x0)
    np.testing.assert_array_equal(state_at_phase(halo, 1.0), halo.x0)
    quarter = state_at_phase(halo, 0.25)
    np.testing.assert_allclose(state_at_phase(halo, 1.25), quarter,
                               rtol=1e-12, atol=1e-12)
    direct = propagate_state(halo.x0, 0.0, 0.25 * halo.period)
    np.testing.assert_array_equal(quarter, direct)


def test_hemisphere_labels(catalog):
    """Southern halos dip further below the plane than above, and vice versa."""
    for orbit in catalog:
        if orbit.family not in (OrbitFamily.L1_HALO_NORTH, OrbitFamily.L1_HALO_SOUTH,
                                OrbitFamily.L2_HALO_NORTH, OrbitFamily.L2_HALO_SOUTH):
            continue
        grid = np.linspace(0.0, orbit.period, 101)
        z = np.array([propagate_state(orbit.x0, 0.0, t)[2] if t else orbit.x0[2]
                      for t in grid[::20]])
        south = orbit.family.value.endswith("S")
        assert (z.max() + z.min() < 0.0) == south


def test_mirror_z_involution(halo):
    np.testing.assert_array_equal(mirror_z(mirror_z(halo.x0)), halo.x0)
    flipped = mirror_z(halo.x0)
    assert flipped[2] == -halo.x0[2] and flipped[5] == -halo.x0[5]


def test_stability_index_identity():
    assert stability_index_from_monodromy(np.eye(6)) == 1.0


def test_monodromy_unit_determinant(halo):
    m = monodromy(halo.x0, halo.period)
    assert abs(np.linalg.det(m) - 1.0) < 1e-6
    si = stability_index_from_monodromy(m)
    assert si == pytest.approx(halo.stability_index, rel=1e-4)


def test_find_orbit_missing(catalog):
    with pytest.raises(ValidationError):
        find_orbit(catalog, "no-such-orbit")


def test_catalog_roundtrip(catalog, tmp_path):
    path = tmp_path / "cat.json"
    save_catalog(catalog, path)
    again = load_catalog(path)
    assert [o.name for o in again] == [o.name for o in catalog]
    for a, b in zip(again, catalog):
        np.testing.assert_array_equal(a.x0, b.x0)
        assert a.period == b.period
        assert a.stability_index == b.stability_index
        assert a.meta == b.meta


def test_load_catalog_rejects_bad_input(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    with pytest.raises(ValidationError):
        load_catalog(bad_json)

    not_list = tmp_path / "obj.json"
    not_list.write_text("{}")
    with pytest.raises(ValidationError):
        load_catalog(not_list)

    row = {"name": "a", "family": "DRO", "x0": [1, 0, 0, 0, 1, 0], "period": 2.0}
    dupes = tmp_path / "dupes.json"
    dupes.write_text(json.dumps([row, row]))
    with pytest.raises(ValidationError):
        load_catalog(dupes)

    short = dict(row, x0=[1.0, 0.0])
    short_path = tmp_path / "short.json"
    short_path.write_text(json.dumps([short]))
    with pytest.raises(ValidationError):
        load_catalog(short_path)


def test_periodic_orbit_validation():
    with pytest.raises(ValidationError):
        PeriodicOrbit("bad", OrbitFamily.DRO, np.zeros(6), period=-1.0)
    with pytest.raises(ValidationError):
        PeriodicOrbit("bad", OrbitFamily.DRO, np.zeros(6), period=1.0,
                      stability_index=0.2)
