import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunkl_lab import (
    GridFunction,
    RootData,
    WeightedGrid,
    ball_volume,
    maximal_function,
    orbit_distance,
    weight_at,
)


def test_weight_hand_values():
    rd = RootData((1.0,))
    assert weight_at(rd, np.array([2.0])) == pytest.approx(8.0, rel=1e-12)
    rd2 = RootData((1.0, 0.0))
    assert weight_at(rd2, np.array([1.0, 5.0])) == pytest.approx(2.0,
                                                                rel=1e-12)


def test_homogeneous_dimension():
    assert RootData((1.0,)).homogeneous_dimension == pytest.approx(3.0)
    assert RootData((0.5, 1.5)).homogeneous_dimension == pytest.approx(6.0)


def test_orbit_distance_hand_value():
    rd = RootData((1.0, 1.0))
    d = orbit_distance(rd, np.array([1.0, 2.0]), np.array([-1.0, -3.0]))
    assert d == pytest.approx(1.0, abs=1e-12)


def test_orbit_vs_euclidean_order():
    rd = RootData((1.0,))
    x = np.array([2.0])
    y = np.array([-2.0])
    assert orbit_distance(rd, x, y) == pytest.approx(0.0, abs=1e-14)
    assert np.linalg.norm(x - y) == 4.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_orbit_distance_metric_axioms(xs, ys, zs):
    rd = RootData((0.7, 1.3))
    x, y, z = (np.array(v) for v in (xs, ys, zs))
    dxy = orbit_distance(rd, x, y)
    assert dxy == pytest.approx(orbit_distance(rd, y, x), abs=1e-12)
    assert dxy <= orbit_distance(rd, x, z) + orbit_distance(rd, z, y) + 1e-12
    assert orbit_distance(rd, x, x) == pytest.approx(0.0, abs=1e-12)


def test_ball_volume_doubling():
    rd = RootData((1.0,))
    for x in (0.0, 0.5, 2.0):
        for r in (0.25, 1.0):
            v1 = ball_volume(rd, np.array([x]), r)
            v2 = ball_volume(rd, np.array([x]), 2 * r)
            assert v2 >= v1
            # doubling with the known volume-growth exponent
            assert v2 <= 2.0 ** rd.homogeneous_dimension * v1 * (1 + 1e-10)


def test_ball_volume_k0_is_length():
    rd = RootData((0.0,))
    v = ball_volume(rd, np.array([3.0]), 0.5)
    assert v == pytest.approx(1.0, rel=1e-10)


def test_grid_weights_integrate_gaussian(small_grid):
    x = small_grid.flat_nodes()[:, 0]
    total = small_grid.integrate(np.exp(-x ** 2 / 2.0))
    # int e^{-x^2/2} 2|x|^2 dx = 2 sqrt(2 pi)
    assert total == pytest.approx(2.0 * math.sqrt(2.0 * math.pi), rel=1e-10)


def test_grid_function_rejects_nonfinite(small_grid):
    vals = np.zeros(small_grid.shape)
    vals_bad = vals.copy()
    vals_bad.ravel()[0] = np.inf
    GridFunction(small_grid, vals)
    with pytest.raises(ValueError):
        GridFunction(small_grid, vals_bad)


def test_maximal_function_orbit_even_symmetry():
    rd = RootData((1.0,))
    g = WeightedGrid(rd, 6.0, 256, freq_radius=4.0)
    x = g.flat_nodes()[:, 0]
    f = GridFunction(g, np.exp(-x ** 2))
    mo = maximal_function(f, metric="orbit", radii=(0.5, 1.0))
    # orbit balls are reflection-invariant, so even data gives even output
    assert np.max(np.abs(mo.values - mo.values[::-1])) \
        <= 1e-10 * np.max(mo.values)
    me = maximal_function(f, metric="euclidean", radii=(0.5, 1.0))
    assert np.all(np.isfinite(me.values)) and np.all(me.values > 0)


def test_maximal_dominates_function():
    rd = RootData((0.5,))
    g = WeightedGrid(rd, 6.0, 256, freq_radius=4.0)
    x = g.flat_nodes()[:, 0]
    f = GridFunction(g, 1.0 / (1.0 + x ** 2))
    m = maximal_function(f, radii=(0.25, 0.5, 1.0))
    assert np.all(np.isfinite(m.values))
    assert np.max(m.values) <= np.max(np.abs(f.values)) * (1 + 1e-8)
