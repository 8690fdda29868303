import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunkl_lab import (
    GridFunction,
    RootData,
    dunkl_convolution,
    dunkl_kernel,
    dunkl_transform,
    dunkl_translation,
    inverse_transform,
)
from dunkl_lab.transform import KernelSeries1D


def _l2(g):
    return math.sqrt(float(np.sum(np.abs(g.values) ** 2 * g.grid.weights)))


def test_gaussian_fixed_point(small_grid):
    x = small_grid.flat_nodes()[:, 0]
    f = GridFunction(small_grid, np.exp(-x ** 2 / 2.0))
    Ff = dunkl_transform(f)
    xi = Ff.grid.flat_nodes()[:, 0]
    target = np.exp(-xi ** 2 / 2.0)
    err = np.max(np.abs(Ff.values.ravel() - target)) / np.max(target)
    assert err <= 1e-12


def test_round_trip(small_grid):
    x = small_grid.flat_nodes()[:, 0]
    f = GridFunction(small_grid, x * np.exp(-x ** 2 / 2.0))
    back = inverse_transform(dunkl_transform(f))
    assert np.max(np.abs(back.values - f.values)) \
        <= 1e-11 * np.max(np.abs(f.values))


def test_plancherel_small(small_grid):
    x = small_grid.flat_nodes()[:, 0]
    f = GridFunction(small_grid, (1 + x ** 2) * np.exp(-x ** 2 / 1.7))
    assert _l2(dunkl_transform(f)) == pytest.approx(_l2(f), rel=1e-10)


def test_k0_reduces_to_classical_fourier(k0_grid):
    x = k0_grid.flat_nodes()[:, 0]
    f = GridFunction(k0_grid, np.exp(-x ** 2))
    Ff = dunkl_transform(f)
    xi = Ff.grid.flat_nodes()[:, 0]
    # F[e^{-x^2}] = e^{-xi^2/4}/sqrt(2) in the unitary convention
    target = np.exp(-xi ** 2 / 4.0) / math.sqrt(2.0)
    assert np.max(np.abs(Ff.values.ravel() - target)) <= 1e-10


def test_k0_translation_is_shift(k0_grid):
    x = k0_grid.flat_nodes()[:, 0]
    f = GridFunction(k0_grid, np.exp(-x ** 2))
    shifted = dunkl_translation(np.array([0.7]), f)
    inner = np.abs(x) < 6.0
    target = np.exp(-(x + 0.7) ** 2)
    err = np.max(np.abs(shifted.values.ravel()[inner] - target[inner]))
    assert err <= 1e-4


def test_kernel_series_hand_value():
    # E_k at k=0 is exp(u) on products u = x*y
    ser = KernelSeries1D(0.0)
    assert ser.evaluate(0.33) == pytest.approx(math.exp(0.33), rel=1e-12)


def test_kernel_eigen_equation_residual():
    # T_x E(x, y) = y E(x, y) with T the 1-D Dunkl operator
    ser = KernelSeries1D(1.0)
    y = 0.8
    for x in (0.4, 1.3):
        tx = ser.dunkl_operator(lambda xs: ser.evaluate(xs * y),
                                np.array([x]))[0]
        e_0 = float(ser.evaluate(x * y))
        assert tx == pytest.approx(y * e_0, rel=1e-7)


def test_kernel_imaginary_bounded():
    rd = RootData((1.5,))
    for x in (0.5, 2.0, 5.0):
        v = dunkl_kernel(rd, np.array([x]), 1j * np.array([2.0]))
        assert abs(v) <= 1.0 + 1e-12


def test_convolution_commutes(small_grid):
    x = small_grid.flat_nodes()[:, 0]
    f = GridFunction(small_grid, np.exp(-x ** 2))
    g = GridFunction(small_grid, x ** 2 * np.exp(-x ** 2 / 1.3))
    fg = dunkl_convolution(f, g)
    gf = dunkl_convolution(g, f)
    assert np.max(np.abs(fg.values - gf.values)) \
        <= 1e-12 * np.max(np.abs(fg.values))


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_transform_linearity(a, b):
    from dunkl_lab import WeightedGrid
    grid = _LIN_GRID
    x = grid.flat_nodes()[:, 0]
    f = GridFunction(grid, np.exp(-x ** 2))
    g = GridFunction(grid, x * np.exp(-x ** 2))
    lhs = dunkl_transform(GridFunction(grid, a * f.values + b * g.values))
    rhs = a * dunkl_transform(f).values + b * dunkl_transform(g).values
    scale = max(np.max(np.abs(rhs)), 1e-12)
    assert np.max(np.abs(lhs.values - rhs)) <= 1e-11 * scale


from dunkl_lab import WeightedGrid  # noqa: E402

_LIN_GRID = WeightedGrid(RootData((1.0,)), 8.0, 256, freq_radius=8.0)
