"""Shared fixtures: the calibrated grids and scale machineries.

The heavy objects (wide-window norm grid, high-bandwidth atoms grid, and
their transform plans) are session-scoped so the acceptance suite builds
each once.
"""

import pytest

from dunkl_lab import (
    HeatLadder,
    RootData,
    WeightedGrid,
    band_function,
    build_ati,
    build_partition,
    reference_family,
)


@pytest.fixture(scope="session")
def rd1():
    return RootData((1.0,))


@pytest.fixture(scope="session")
def norm_grid(rd1):
    # wide window + moderate bandwidth: the Gaussian-ring reference family
    # has both spectral band-edge tails and window leak below ~1e-9 here
    return WeightedGrid(rd1, 44.0, 1408, freq_radius=4.0)


@pytest.fixture(scope="session")
def partition():
    return build_partition(2.0, (-4, 3))


@pytest.fixture(scope="session")
def ati(norm_grid):
    return build_ati(norm_grid, 2.0, -2, 1)


@pytest.fixture(scope="session")
def heat_ladder():
    return HeatLadder(0.02, 40.0)


@pytest.fixture(scope="session")
def family(norm_grid):
    return reference_family(norm_grid)


@pytest.fixture(scope="session")
def atoms_grid(rd1):
    # high bandwidth leaves headroom for the smooth cube cutoffs
    return WeightedGrid(rd1, 32.0, 3968, freq_radius=23.0)


@pytest.fixture(scope="session")
def atoms_partition():
    return build_partition(2.0, (-2, 1))


@pytest.fixture(scope="session")
def atom_packet(atoms_grid):
    return band_function(atoms_grid, 0.9, 1.0, sigma=6.7)


@pytest.fixture(scope="session")
def small_grid(rd1):
    # cheap wide-bandwidth grid for transform/calculus unit tests
    return WeightedGrid(rd1, 12.0, 1024, freq_radius=16.0)


@pytest.fixture(scope="session")
def k0_grid():
    return WeightedGrid(RootData((0.0,)), 12.0, 1024, freq_radius=16.0)
