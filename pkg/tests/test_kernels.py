import math

import numpy as np
import pytest

from diracutils.errors import InvalidArgumentError
from diracutils.gridfn import Grid
from diracutils.kernels import (
    KERNEL_FAMILIES,
    default_roundtrip_kernel,
    make_kernel,
    pwlinear,
    random,
    trig,
)


@pytest.fixture
def grid():
    return Grid.full(65)


@pytest.mark.parametrize("name", sorted(KERNEL_FAMILIES))
def test_every_family_builds(grid, name):
    kernel = make_kernel(name, grid)
    assert kernel.grid == grid
    assert np.all(np.isfinite(kernel.p.values))


def test_make_kernel_rejects_unknown_family(grid):
    with pytest.raises(InvalidArgumentError, match="Unknown kernel family"):
        make_kernel("bessel", grid)


def test_make_kernel_rejects_bad_parameters(grid):
    with pytest.raises(InvalidArgumentError, match="Bad parameters"):
        make_kernel("trig", grid, {"r_coefficients": [1.0]})


def test_trig(grid):
    kernel = trig(grid, (0.1, 0.2j), (0.0,))
    t = grid.nodes
    np.testing.assert_allclose(kernel.p.values, 0.1 + 0.2j * np.cos(t))
    np.testing.assert_array_equal(kernel.q.values, 0)


def test_pwlinear(grid):
    kernel = pwlinear(grid, ((math.pi, 1.0), (0.0, 0.0)), ((0.0, 2.0), (math.pi, 2.0)))
    np.testing.assert_allclose(kernel.p.values, grid.nodes / math.pi)
    np.testing.assert_allclose(kernel.q.values, 2.0)


def test_random_is_seeded(grid):
    first = make_kernel("random", grid, seed=7)
    second = random(grid, seed=7)
    np.testing.assert_array_equal(first.p.values, second.p.values)
    other = random(grid, seed=8)
    assert not np.array_equal(first.p.values, other.p.values)
    real = random(grid, seed=7, complex_valued=False)
    np.testing.assert_array_equal(real.q.values.imag, 0)


def test_explicit_seed_parameter_wins(grid):
    first = make_kernel("random", grid, {"seed": 3}, seed=7)
    np.testing.assert_array_equal(first.p.values, random(grid, seed=3).p.values)


@pytest.mark.parametrize(("m", "n"), [(2, 513), (3, 769)])
def test_roundtrip_kernel_vanishes_at_split_and_end(m, n):
    grid = Grid.full(n)
    a = math.pi - math.pi / m
    kernel = default_roundtrip_kernel(grid, a)
    ia = grid.index_of(a)
    for values in (kernel.p.values, kernel.q.values):
        assert abs(values[ia]) < 1e-8
        assert abs(values[-1]) < 1e-8
        assert np.max(np.abs(values[ia:])) > 0.05
        assert np.max(np.abs(values[:ia])) > 0.05
