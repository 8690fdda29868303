import math

import numpy as np
import pytest

from dunkl_lab import (
    EvenSymbol,
    GridFunction,
    RootData,
    WeightedGrid,
    functional_calculus,
    heat_apply,
    heat_kernel,
    kernel_of_calculus,
    lusin_square_function,
    propagation_bump,
)
from dunkl_lab.calculus import HEAT


def _gaussian(grid, s=1.0):
    x = grid.flat_nodes()[:, 0]
    return GridFunction(grid, np.exp(-x ** 2 / (2.0 * s ** 2)))


def test_heat_mass_conservation(small_grid):
    f = _gaussian(small_grid)
    m0 = float(np.real(f.integral()))
    for t, tol in ((0.1, 1e-10), (0.5, 1e-9), (2.0, 1e-5)):
        # larger t spreads mass toward the window edge; truncation grows
        g = heat_apply(t, f)
        m = float(np.real(g.integral()))
        assert abs(m - m0) / abs(m0) <= tol


def test_heat_semigroup_property(small_grid):
    f = _gaussian(small_grid)
    one = heat_apply(0.8, f)
    two = heat_apply(0.5, heat_apply(0.3, f))
    assert np.max(np.abs(one.values - two.values)) \
        <= 1e-12 * np.max(np.abs(one.values))


def test_heat_kernel_route_agreement(small_grid):
    # transform-side kernel slice vs the explicit product formula
    t = 0.3
    ker = kernel_of_calculus(HEAT, math.sqrt(t), np.array([0.5]),
                             small_grid).values.ravel()
    x = small_grid.flat_nodes()[:, 0]
    direct = np.array([heat_kernel(small_grid.root_data, t, np.array([0.5]),
                                   np.array([xi])) for xi in x[::53]])
    err = np.max(np.abs(ker[::53] - direct)) / np.max(np.abs(direct))
    assert err <= 1e-10


def test_heat_kernel_positive(small_grid):
    ker = kernel_of_calculus(HEAT, 1.0, np.array([1.0]), small_grid)
    assert np.min(ker.values) >= -1e-12 * np.max(ker.values)


def test_k0_heat_kernel_classical(k0_grid):
    # at k=0 the kernel is the classical Gaussian
    t = 0.4
    x, y = 0.3, -0.9
    h = heat_kernel(k0_grid.root_data, t, np.array([x]), np.array([y]))
    classical = math.exp(-(x - y) ** 2 / (4 * t)) / math.sqrt(4 * math.pi * t)
    assert h == pytest.approx(classical, rel=1e-3)


def test_functional_calculus_identity(small_grid):
    f = _gaussian(small_grid, 1.2)
    one = EvenSymbol(lambda lam: np.ones_like(lam), name="one")
    g = functional_calculus(one, 1.0, f, check_tail=False)
    assert np.max(np.abs(g.values - f.values)) \
        <= 1e-11 * np.max(np.abs(f.values))


def test_propagation_bump_mass():
    phi, Phi = propagation_bump()
    # int phi = 2 pi by construction, so Phi(0) = 2 pi
    assert Phi(np.zeros(1))[0] == pytest.approx(2.0 * math.pi, rel=1e-8)


def test_lusin_square_function_finite(small_grid):
    f = _gaussian(small_grid)
    t_ladder = np.exp(np.linspace(math.log(0.2), math.log(2.0), 8))
    s = lusin_square_function(f, t_ladder)
    assert np.all(np.isfinite(s.values))
    assert np.max(s.values) > 0
