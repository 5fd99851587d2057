"""Shared fixtures: the bundled orbit catalog and a short halo trajectory."""

from __future__ import annotations

import numpy as np
import pytest

from cislunar_tasker import bundled_catalog, find_orbit, propagate_trajectory


@pytest.fixture(scope="session")
def catalog():
    return bundled_catalog()


@pytest.fixture(scope="session")
def halo(catalog):
    return find_orbit(catalog, "l2-halo-south-2.66")


@pytest.fixture(scope="session")
def halo_trajectory(halo):
    """The reference halo sampled at eleven epochs over one period."""
    grid = np.linspace(0.0, halo.period, 11)
    return propagate_trajectory(halo.x0, 0.0, grid)
