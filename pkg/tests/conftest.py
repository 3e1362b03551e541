"""Pytest configuration and fixtures."""

import pytest

from dsii_scattering.config import SolverConfig
from dsii_scattering.initial_data import gaussian
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.toolkit import self_dual_grid


@pytest.fixture
def small_grid():
    """Coarse self-dual box for whole-lattice transforms."""
    return self_dual_grid(32)


@pytest.fixture
def medium_grid():
    """Box for operator identities."""
    return GridSpec(n=64, L=8.0)


@pytest.fixture
def solver_cfg():
    """Single-threaded solver policy with the default tolerance."""
    return SolverConfig(workers=1)


@pytest.fixture
def unit_gaussian(medium_grid):
    """exp(-|z|^2) on the medium grid."""
    return gaussian(medium_grid)


@pytest.fixture
def weak_gaussian(small_grid):
    """0.5 exp(-|z|^2) on the small grid."""
    return gaussian(small_grid, amplitude=0.5)
