import math

import numpy as np
import pytest

from diracutils.basis import (
    Subspectrum,
    boundary_pair,
    build_basis,
    completeness_score,
    gram,
    reconstruct_w_head,
)
from diracutils.errors import ConditioningError, InconsistentDataError, InvalidArgumentError
from diracutils.forward import Spectrum
from diracutils.gridfn import Grid, GridFunction
from diracutils.wtransform import WPair, moment_values


@pytest.fixture
def head_grid():
    return Grid.full(257).subgrid(0.0, math.pi / 2)


def test_progression():
    sub = Subspectrum.progression(3, 2, kappa=[0.1, 0, 0, 0, 0.1j])
    assert sub.indices == (-6, -3, 0, 3, 6)
    assert sub.values[0] == pytest.approx(-5.9)
    assert sub.value_at(6) == pytest.approx(6 + 0.1j)
    with pytest.raises(InvalidArgumentError):
        sub.value_at(1)
    assert len(sub) == 5
    with pytest.raises(InvalidArgumentError):
        Subspectrum.progression(2, 2, kappa=[0.1])


def test_from_values_merges_multiple_values():
    sub = Subspectrum.from_values([2, 0, 1], [1.5, 0.25, 0.25])
    assert sub.indices == (0, 1, 2)
    assert sub.values == (0.25, 1.5)
    assert sub.multiplicities == (2, 1)
    assert sub.points == [(0.25, 2), (1.5, 1)]
    assert sub.value_at(1) == 0.25
    assert sub.value_at(2) == 1.5


def test_subspectrum_validation():
    with pytest.raises(InvalidArgumentError):
        Subspectrum((0, 0), (1.0, 2.0), (1, 1))
    with pytest.raises(InvalidArgumentError):
        Subspectrum((0, 1), (1.0,), (1,))
    with pytest.raises(InvalidArgumentError):
        Subspectrum.from_values([0, 1], [1.0])


def test_from_spectrum():
    spectrum = Spectrum.from_values([k + 0.01 * k for k in range(-4, 5)], first_index=-4)
    sub = Subspectrum.from_spectrum(spectrum, 2, 2)
    assert sub.indices == (-4, -2, 0, 2, 4)
    assert sub.value_at(4) == pytest.approx(4.04)


def test_build_basis_vectors(head_grid):
    basis = build_basis([(1.5, 2)], head_grid)
    t = head_grid.nodes
    assert len(basis) == 2
    assert basis.labels == ((1.5, 0), (1.5, 1))
    assert basis.b == pytest.approx(math.pi / 2)
    np.testing.assert_allclose(basis.vectors[0, 0], np.sin(1.5 * t))
    # lambda-derivatives of (sin, cos)
    np.testing.assert_allclose(basis.vectors[1, 0], t * np.cos(1.5 * t), atol=1e-14)
    np.testing.assert_allclose(basis.vectors[1, 1], -t * np.sin(1.5 * t), atol=1e-14)
    assert isinstance(basis.vector(1), WPair)


def test_build_basis_needs_origin():
    grid = Grid.full(9).subgrid(math.pi / 2, math.pi)
    with pytest.raises(InvalidArgumentError):
        build_basis([(0.0, 1)], grid)
    with pytest.raises(InvalidArgumentError):
        build_basis([], Grid.full(9))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_unperturbed_gram_is_b_identity(m):
    grid = Grid.full(385)
    b = math.pi / m
    basis = build_basis(Subspectrum.progression(m, 16), grid.subgrid(0.0, b))
    report = gram(basis)
    np.testing.assert_allclose(report.matrix, b * np.eye(33), atol=1e-10)
    assert report.condition == pytest.approx(1.0)
    assert completeness_score(basis) == pytest.approx(math.sqrt(b), rel=1e-10)


def test_completeness_drops_for_duplicate_vectors(head_grid):
    basis = build_basis([(0.0, 1), (0.0, 1), (2.0, 1)], head_grid)
    assert completeness_score(basis) < 1e-8


def test_perturbed_gram_stays_conditioned(head_grid):
    s = np.arange(-8, 9)
    sub = Subspectrum.progression(2, 8, kappa=0.2 / (1 + np.abs(s)))
    report = gram(build_basis(sub, head_grid))
    assert report.condition < 100
    np.testing.assert_allclose(report.matrix, report.matrix.conj().T, atol=1e-12)


@pytest.mark.parametrize("window", [16, 32])
def test_head_round_trip(window):
    head_grid = Grid.full(513).subgrid(0.0, math.pi / 2)
    size = 2 * window + 1
    s = np.arange(-window, window + 1)
    rng = np.random.default_rng(5)
    kappa = 0.1 * rng.standard_normal(size) / (1 + np.abs(s))
    sub = Subspectrum.progression(2, window, kappa=kappa)
    basis = build_basis(sub, head_grid)
    coefficients = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / (1 + np.abs(s))
    values = np.tensordot(coefficients, basis.vectors, axes=1)
    head = WPair(GridFunction(head_grid, values[0]), GridFunction(head_grid, values[1]))
    e = moment_values(sub.points, head)
    result = reconstruct_w_head(basis, e)
    np.testing.assert_allclose(result.coefficients, coefficients, atol=1e-6)
    assert result.residual < 1e-8
    assert (result.w - head).norm() <= 1e-6 * head.norm()


@pytest.fixture(scope="module")
def smooth_pair():
    grid = Grid.full(513)
    b = math.pi / 2
    w = WPair(
        GridFunction.from_callable(grid, lambda t: 0.5 * np.sin(t) + 0.1 * t**3),
        GridFunction.from_callable(grid, lambda t: 0.3 * np.cos(t)),
    )
    return w.restrict(grid.subgrid(0.0, b)), w.restrict(grid.subgrid(b, math.pi))


def test_boundary_pair_matches_edge_data(smooth_pair):
    head, tail = smooth_pair
    b = math.pi / 2
    phi = boundary_pair(head.grid, tail)
    assert phi.w1.values[0] == 0
    assert phi.w2.values[0] == 0
    assert phi.w1.values[-1] == pytest.approx(0.5 + 0.1 * b**3)
    # phi2'(b) = phi2(b) * 2 / b
    assert 2 * phi.w2.values[-1] / b == pytest.approx(-0.3, abs=1e-5)


def test_boundary_pair_validation(smooth_pair):
    head, tail = smooth_pair
    with pytest.raises(InvalidArgumentError):
        boundary_pair(head.grid, head)
    with pytest.raises(InvalidArgumentError):
        boundary_pair(tail.grid, tail)


def test_head_anchored_at_boundary(smooth_pair):
    head, tail = smooth_pair
    sub = Subspectrum.progression(2, 32)
    basis = build_basis(sub, head.grid)
    e = moment_values(sub.points, head)
    plain = reconstruct_w_head(basis, e)
    anchored = reconstruct_w_head(basis, e, anchor=boundary_pair(head.grid, tail))
    # the sine series alone cannot follow w1(b) != 0
    assert (plain.w - head).norm() > 1e-2 * head.norm()
    assert (anchored.w - head).norm() <= 1e-6 * head.norm()
    with pytest.raises(InvalidArgumentError):
        reconstruct_w_head(basis, e, anchor=tail)


def test_head_with_multiple_value(head_grid):
    points = [(0.0, 1), (2.0 + 0.05j, 2), (-2.0, 1)]
    basis = build_basis(points, head_grid)
    coefficients = np.array([0.3, -0.2j, 0.1, 0.05])
    values = np.tensordot(coefficients, basis.vectors, axes=1)
    head = WPair(GridFunction(head_grid, values[0]), GridFunction(head_grid, values[1]))
    result = reconstruct_w_head(basis, moment_values(points, head))
    np.testing.assert_allclose(result.coefficients, coefficients, atol=1e-6)


def test_head_rejects_near_duplicates(head_grid):
    points = [(0.0, 1), (2e-6, 1)]
    basis = build_basis(points, head_grid)
    e = moment_values(points, WPair.zeros(head_grid))
    with pytest.raises(ConditioningError) as info:
        reconstruct_w_head(basis, e)
    assert info.value.condition > 1e10


def test_head_rejects_unmatched_values(head_grid):
    basis = build_basis(Subspectrum.progression(2, 2), head_grid)
    e = moment_values(Subspectrum.progression(2, 1).points, WPair.zeros(head_grid))
    with pytest.raises(InvalidArgumentError):
        reconstruct_w_head(basis, e)


def test_head_reports_inconsistent_residual(head_grid):
    sub = Subspectrum.progression(2, 2)
    basis = build_basis(sub, head_grid)
    e = moment_values(sub.points, basis.vector(0))
    with pytest.raises(InconsistentDataError) as info:
        reconstruct_w_head(basis, e, reg=1.0)
    assert info.value.residual > 1e-6
