"""
Dense reference solver for the spectrum, used to cross-check the forward march.

The system is discretized on a staggered grid: ``y1`` at the interior integer
nodes (the Dirichlet conditions remove both ends) and ``y2`` at the half nodes.
Derivatives are centered differences between the two grids and convolutions
use cell rules matched to where each component lives, which yields a standard
eigenproblem of size ``2 n - 3`` whose free eigenvalues are ``(2/h) sin(k h/2)``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from diracutils.errors import InvalidArgumentError, NumericRangeError
from diracutils.forward import DEFAULT_IM_BOUND, KernelPair, Spectrum
from diracutils.gridfn import ComplexArray, Grid, GridFunction

LOGGER = logging.getLogger(__name__)

MAX_POINTS = 1024


@dataclass(frozen=True, eq=False)
class DenseDiscretization:
    """The operator matrix acting on ``(y1 at nodes 1..n-2, y2 at nodes 1/2..n-3/2)``."""

    grid: Grid
    matrix: ComplexArray

    @property
    def n_points(self) -> int:
        return self.grid.n_points


def discretize(kernel: KernelPair) -> DenseDiscretization:
    grid = kernel.grid
    n = grid.n_points
    if n > MAX_POINTS:
        err = f"The dense oracle handles at most {MAX_POINTS} points, got {n}"
        raise InvalidArgumentError(err)
    if n < 4:
        err = f"The dense oracle needs at least 4 points, got {n}"
        raise InvalidArgumentError(err)
    h = grid.step
    p = kernel.p.values
    q = kernel.q.values
    q_half = 0.5 * (q[:-1] + q[1:])

    n1 = n - 2
    size = 2 * n - 3
    matrix = np.zeros((size, size), dtype=np.complex128)

    def u1(i: int) -> int:
        return i - 1

    def u2(i: int) -> int:
        return n1 + i

    # rows for y1 at integer nodes i = 1..n-2
    for i in range(1, n - 1):
        row = u1(i)
        matrix[row, u2(i)] += 1.0 / h
        matrix[row, u2(i - 1)] -= 1.0 / h
        j = np.arange(1, i + 1)
        weights = np.full(i, h, dtype=float)
        weights[-1] = 0.5 * h
        matrix[row, j - 1] += weights * p[i - j]
        j = np.arange(0, i)
        matrix[row, n1 + j] += h * q_half[i - j - 1]

    # rows for y2 at half nodes i + 1/2, i = 0..n-2
    for i in range(0, n - 1):
        row = u2(i)
        if i + 1 <= n - 2:
            matrix[row, u1(i + 1)] -= 1.0 / h
        if i >= 1:
            matrix[row, u1(i)] += 1.0 / h
        j = np.arange(1, i + 1)
        matrix[row, j - 1] -= h * q_half[i - j]
        j = np.arange(0, i + 1)
        weights = np.full(i + 1, h, dtype=float)
        weights[-1] = 0.5 * h
        matrix[row, n1 + j] += weights * p[i - j]

    return DenseDiscretization(grid, matrix)


def _window_values(kernel: KernelPair, window: int, im_bound: float) -> ComplexArray:
    try:
        values = linalg.eigvals(discretize(kernel).matrix)
    except linalg.LinAlgError as err:
        msg = f"Dense eigen-solver failed: {err}"
        raise NumericRangeError(msg) from err
    keep = (np.abs(values.real) <= window + 0.5) & (np.abs(values.imag) <= im_bound)
    return np.sort_complex(values[keep])


def _coarsen(kernel: KernelPair) -> KernelPair:
    grid = kernel.grid
    if (grid.n_points - 1) % 2:
        err = f"Richardson extrapolation needs an even panel count, got {grid}"
        raise InvalidArgumentError(err)
    coarse = Grid(grid.x_start, grid.x_end, (grid.n_points - 1) // 2 + 1)
    return KernelPair(
        GridFunction(coarse, kernel.p.values[::2]),
        GridFunction(coarse, kernel.q.values[::2]),
    )


def _numbered(values: ComplexArray, window: int) -> Spectrum:
    first_index = -window if values.size == 2 * window + 1 else None
    if first_index is None:
        LOGGER.warning(
            "Oracle found %d eigenvalues in a window expecting %d", values.size, 2 * window + 1
        )
    return Spectrum.from_values(values.tolist(), first_index=first_index)


def oracle_eigenvalues(
    kernel: KernelPair,
    window: int,
    im_bound: float = DEFAULT_IM_BOUND,
    extrapolate: bool = False,
) -> Spectrum:
    """
    Eigenvalues of the dense discretization with ``|Re lambda| <= window + 1/2``.

    With ``extrapolate`` the values are combined with those of the grid using
    every other node, ``(4 lambda_h - lambda_2h) / 3``.
    """
    if window < 1:
        err = f"Spectrum window must be at least 1, got {window}"
        raise InvalidArgumentError(err)
    fine = _numbered(_window_values(kernel, window, im_bound), window)
    if not extrapolate:
        return fine
    coarse = _numbered(_window_values(_coarsen(kernel), window, im_bound), window)
    fine_values = fine.expanded()
    coarse_values = coarse.expanded()
    shared = sorted(set(fine_values) & set(coarse_values))
    LOGGER.debug("Richardson extrapolation over %d indices", len(shared))
    combined = [(4 * fine_values[k] - coarse_values[k]) / 3 for k in shared]
    return Spectrum.from_values(combined, first_index=shared[0] if shared else None)


def free_eigenvalue(k: int, grid: Grid) -> float:
    """
    Eigenvalue of the staggered discretization for the zero kernel.

    >>> round(free_eigenvalue(0, Grid.full(5)), 12)
    0.0
    """
    h = grid.step
    return 2.0 / h * math.sin(k * h / 2)
