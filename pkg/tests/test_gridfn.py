import math

import numpy as np
import pytest

from diracutils.errors import InvalidArgumentError, UnsupportedOperationError
from diracutils.gridfn import (
    Grid,
    GridFunction,
    WeightedGridFunction,
    aligned_grid_size,
    conv_power,
    convolve,
    extend_by_zero,
    integrate,
    l2_norm,
    reflect,
    restrict,
)


def test_grid_rejects_bad_intervals():
    with pytest.raises(InvalidArgumentError):
        Grid(0.0, 1.0, 1)
    with pytest.raises(InvalidArgumentError):
        Grid(1.0, 0.5, 4)
    with pytest.raises(InvalidArgumentError):
        Grid(0.0, 4.0, 4)


def test_subgrid_alignment():
    grid = Grid.full(13)
    sub = grid.subgrid(math.pi / 3, math.pi)
    assert sub.n_points == 9
    assert sub.ends_at_pi
    assert not sub.starts_at_zero
    assert grid.slice_of(sub) == slice(4, 13)
    with pytest.raises(InvalidArgumentError):
        grid.subgrid(1.0, math.pi)


def test_aligned_grid_size():
    assert aligned_grid_size(513, 2) == 513
    assert aligned_grid_size(513, 3) == 514
    assert aligned_grid_size(769, 3) == 769
    assert (aligned_grid_size(100, 7) - 1) % 7 == 0


def test_grid_function_is_immutable():
    f = GridFunction.constant(Grid.full(5), 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_grid_function_rejects_wrong_shape_and_nan():
    grid = Grid.full(5)
    with pytest.raises(InvalidArgumentError):
        GridFunction(grid, np.zeros(4))
    with pytest.raises(InvalidArgumentError):
        GridFunction(grid, np.array([0, 1, np.nan, 0, 0]))


def test_grid_mismatch():
    f = GridFunction.zeros(Grid.full(5))
    g = GridFunction.zeros(Grid.full(7))
    with pytest.raises(InvalidArgumentError):
        f + g


def test_integrate_and_norm():
    grid = Grid.full(1025)
    f = GridFunction.from_callable(grid, np.sin)
    assert integrate(f) == pytest.approx(2.0, abs=1e-5)
    assert l2_norm(f) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-5)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_convolve_polynomials(method):
    grid = Grid.full(65)
    one = GridFunction.constant(grid, 1.0)
    t = GridFunction.from_callable(grid, lambda x: x)
    np.testing.assert_allclose(convolve(one, one, method).values, grid.nodes, atol=1e-12)
    np.testing.assert_allclose(
        convolve(t, one, method).values, grid.nodes**2 / 2, atol=1e-12
    )


def test_convolve_is_causal_and_symmetric():
    grid = Grid.full(257)
    rng = np.random.default_rng(3)
    f = GridFunction(grid, rng.standard_normal(257) + 1j * rng.standard_normal(257))
    g = GridFunction(grid, rng.standard_normal(257))
    fg = convolve(f, g, "direct")
    np.testing.assert_allclose(fg.values, convolve(g, f, "direct").values, atol=1e-12)
    np.testing.assert_allclose(fg.values, convolve(f, g, "fft").values, atol=1e-10)
    assert fg.values[0] == 0
    # changing f after node 100 must not change the first 101 values
    late = f.with_values(np.where(np.arange(257) > 100, 0.0, f.values))
    np.testing.assert_allclose(
        convolve(late, g, "direct").values[:101], fg.values[:101], atol=1e-12
    )


def test_convolve_needs_origin():
    grid = Grid.full(9).subgrid(math.pi / 2, math.pi)
    f = GridFunction.zeros(grid)
    with pytest.raises(InvalidArgumentError):
        convolve(f, f)


def test_conv_power():
    grid = Grid.full(129)
    one = GridFunction.constant(grid, 1.0)
    np.testing.assert_allclose(
        conv_power(one, 3).values, grid.nodes**2 / 2, atol=1e-3
    )
    assert conv_power(one, 1) is one
    with pytest.raises(UnsupportedOperationError):
        conv_power(one, 0)
    with pytest.raises(InvalidArgumentError):
        conv_power(one, -1)


def _random_function(grid, rng, vanish_at_origin=False):
    values = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    if vanish_at_origin:
        values[0] = 0.0
    return GridFunction(grid, values)


@pytest.mark.parametrize("seed", range(5))
def test_convolve_norm_bound(seed):
    grid = Grid.full(256)
    rng = np.random.default_rng(seed)
    f, g = _random_function(grid, rng), _random_function(grid, rng)
    assert l2_norm(convolve(f, g)) <= math.pi * l2_norm(f) * l2_norm(g)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_convolve_commutes_and_associates(method):
    grid = Grid.full(256)
    rng = np.random.default_rng(11)
    f = _random_function(grid, rng)
    # the trapezoid rule associates exactly when the middle factor vanishes at 0
    g = _random_function(grid, rng, vanish_at_origin=True)
    h = _random_function(grid, rng)
    fg = convolve(f, g, method)
    assert l2_norm(fg - convolve(g, f, method)) <= 1e-10 * l2_norm(fg)
    left = convolve(fg, h, method)
    right = convolve(f, convolve(g, h, method), method)
    assert l2_norm(left - right) <= 1e-10 * l2_norm(left)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_conv_power_norm_bound(n):
    grid = Grid.full(256)
    f = _random_function(grid, np.random.default_rng(n))
    assert l2_norm(conv_power(f, n)) <= math.pi ** (n - 1) * l2_norm(f) ** n


def test_restrict_extend_reflect():
    grid = Grid.full(9)
    f = GridFunction.from_callable(grid, lambda x: x + 1.0)
    sub = grid.subgrid(grid.node(4), math.pi)
    head = restrict(f, sub)
    np.testing.assert_array_equal(head.values, f.values[4:])
    back = extend_by_zero(head, grid)
    np.testing.assert_array_equal(back.values[:4], 0)
    np.testing.assert_array_equal(back.values[4:], f.values[4:])
    mirrored = reflect(head)
    assert mirrored.grid.starts_at_zero
    np.testing.assert_array_equal(mirrored.values, f.values[4:][::-1])


def test_weighted_round_trip():
    grid = Grid.full(9)
    f = GridFunction.from_callable(grid, np.cos)
    weighted = WeightedGridFunction.from_unweighted(f)
    assert weighted.values[-1] == 0
    back = weighted.to_unweighted()
    assert back.grid.n_points == 8
    np.testing.assert_allclose(back.values, f.values[:-1], atol=1e-14)
