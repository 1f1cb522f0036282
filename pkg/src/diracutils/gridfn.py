"""
Complex-valued functions sampled on uniform grids over subintervals of [0, pi].

Every other module stores kernels, transform pairs and reconstructed pieces
as :class:`GridFunction` objects. Quadrature is the trapezoidal rule on the
grid and convolutions use the matching product-trapezoidal weights, so a
convolution value at a node only depends on samples at or before that node.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import signal
from typing_extensions import Self

from diracutils.errors import InvalidArgumentError, UnsupportedOperationError

LOGGER = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
FloatArray = NDArray[np.float64]
ConvolutionMethod = Literal["auto", "direct", "fft"]

# Grids with at least this many points use the FFT path in convolve(method="auto").
FFT_THRESHOLD = 128

_ALIGN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Uniform grid with ``n_points`` nodes on ``[x_start, x_end]`` inside [0, pi].

    >>> Grid(0.0, 1.0, 5).step
    0.25
    >>> Grid.full(5).subgrid(math.pi / 2, math.pi).n_points
    3
    """

    x_start: float
    x_end: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 2:
            err = f"A grid needs at least 2 points, got {self.n_points}"
            raise InvalidArgumentError(err)
        if not (-1e-12 <= self.x_start < self.x_end <= math.pi + 1e-12):
            err = (
                f"Grid interval [{self.x_start}, {self.x_end}] must satisfy "
                "0 <= x_start < x_end <= pi"
            )
            raise InvalidArgumentError(err)

    @classmethod
    def full(cls, n_points: int) -> "Grid":
        """Grid over the whole interval [0, pi]."""
        return cls(0.0, math.pi, n_points)

    @property
    def step(self) -> float:
        return (self.x_end - self.x_start) / (self.n_points - 1)

    @property
    def nodes(self) -> FloatArray:
        return np.linspace(self.x_start, self.x_end, self.n_points)

    @property
    def weights(self) -> FloatArray:
        """Trapezoidal quadrature weights."""
        w = np.full(self.n_points, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    @property
    def starts_at_zero(self) -> bool:
        return abs(self.x_start) <= _ALIGN_TOL * self.step

    @property
    def ends_at_pi(self) -> bool:
        return abs(self.x_end - math.pi) <= _ALIGN_TOL * self.step

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        tol = _ALIGN_TOL * min(self.step, other.step)
        return (
            self.n_points == other.n_points
            and abs(self.x_start - other.x_start) <= tol
            and abs(self.x_end - other.x_end) <= tol
        )

    def __hash__(self) -> int:
        return hash(("Grid", self.n_points))

    def index_of(self, x: float) -> int:
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        i = round((x - self.x_start) / self.step)
        if not 0 <= i < self.n_points or abs(
            self.x_start + i * self.step - x
        ) > _ALIGN_TOL * max(1.0, self.step):
            err = f"{x} is not a node of {self}"
            raise InvalidArgumentError(err)
        return int(i)

    def node(self, i: int) -> float:
        return float(self.nodes[i])

    def subgrid(self, x_start: float, x_end: float) -> "Grid":
        """Aligned sub-grid between two nodes of this grid."""
        i0 = self.index_of(x_start)
        i1 = self.index_of(x_end)
        if i1 <= i0:
            err = f"Empty sub-grid [{x_start}, {x_end}] of {self}"
            raise InvalidArgumentError(err)
        nodes = self.nodes
        return Grid(float(nodes[i0]), float(nodes[i1]), i1 - i0 + 1)

    def slice_of(self, sub: "Grid") -> slice:
        """Index range of an aligned sub-grid within this grid."""
        if abs(sub.step - self.step) > _ALIGN_TOL * self.step:
            err = f"{sub} is not aligned with {self}: different step"
            raise InvalidArgumentError(err)
        i0 = self.index_of(sub.x_start)
        if i0 + sub.n_points > self.n_points:
            err = f"{sub} extends beyond {self}"
            raise InvalidArgumentError(err)
        return slice(i0, i0 + sub.n_points)

    def __str__(self) -> str:
        return f"Grid([{self.x_start:.6g}, {self.x_end:.6g}], n={self.n_points})"


def aligned_grid_size(n_points: int, m: int) -> int:
    """Smallest grid size >= ``n_points`` whose panel count is divisible by ``m``."""
    panels = max(n_points - 1, m)
    return int(math.ceil(panels / m) * m) + 1


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a complex function on a :class:`Grid`; immutable."""

    grid: Grid
    values: ComplexArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n_points,):
            err = (
                f"{type(self).__name__} expects {self.grid.n_points} samples, "
                f"got shape {values.shape}"
            )
            raise InvalidArgumentError(err)
        if not np.all(np.isfinite(values)):
            err = f"{type(self).__name__} samples must be finite"
            raise InvalidArgumentError(err)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> Self:
        return cls(grid, np.zeros(grid.n_points, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: Grid, value: complex) -> Self:
        return cls(grid, np.full(grid.n_points, value, dtype=np.complex128))

    @classmethod
    def from_callable(cls, grid: Grid, func: Callable[[FloatArray], ArrayLike]) -> Self:
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.n_points,)))

    @property
    def nodes(self) -> FloatArray:
        return self.grid.nodes

    def with_values(self, values: ArrayLike) -> Self:
        return type(self)(self.grid, np.asarray(values))

    def _operand(self, other: Any) -> Any:
        if isinstance(other, GridFunction):
            if type(other) is not type(self):
                err = f"Cannot combine {type(self).__name__} with {type(other).__name__}"
                raise InvalidArgumentError(err)
            require_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other: Any) -> Self:
        return self.with_values(self.values + self._operand(other))

    def __sub__(self, other: Any) -> Self:
        return self.with_values(self.values - self._operand(other))

    def __mul__(self, other: Any) -> Self:
        return self.with_values(self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self) -> Self:
        return self.with_values(-self.values)


class WeightedGridFunction(GridFunction):
    """Samples of ``(pi - t) f(t)``, the weighted form of an element of L_{2,pi}."""

    @classmethod
    def from_unweighted(cls, f: GridFunction) -> "WeightedGridFunction":
        return cls(f.grid, (math.pi - f.nodes) * f.values)

    def to_unweighted(self) -> GridFunction:
        """
        Divide by the weight ``pi - t``.

        If the grid reaches ``t = pi`` that node is dropped from the result,
        since the weight vanishes there.
        """
        values = self.values
        nodes = self.nodes
        grid = self.grid
        if grid.ends_at_pi:
            if grid.n_points < 3:
                err = "Cannot unweight a grid function whose only interior node is pi"
                raise InvalidArgumentError(err)
            grid = Grid(grid.x_start, float(nodes[-2]), grid.n_points - 1)
            values, nodes = values[:-1], nodes[:-1]
        return GridFunction(grid, values / (math.pi - nodes))


def require_same_grid(*functions: GridFunction) -> Grid:
    grid = functions[0].grid
    for f in functions[1:]:
        if f.grid != grid:
            err = f"Grid mismatch: {f.grid} != {grid}"
            raise InvalidArgumentError(err)
    return grid


def integrate(f: GridFunction) -> complex:
    """Trapezoidal integral of ``f`` over its grid."""
    return complex(f.grid.weights @ f.values)


def l2_norm(f: GridFunction) -> float:
    return math.sqrt(float(f.grid.weights @ np.abs(f.values) ** 2))


def convolve(
    f: GridFunction, g: GridFunction, method: ConvolutionMethod = "auto"
) -> GridFunction:
    """
    Product-trapezoidal approximation of ``(f * g)(x) = int_0^x f(t) g(x - t) dt``.

    Both operands must live on the same grid starting at 0. The direct path
    sums both operand orders so the result is exactly symmetric in f and g.
    """
    grid = require_same_grid(f, g)
    if not grid.starts_at_zero:
        err = f"Convolution needs a grid starting at 0, got {grid}"
        raise InvalidArgumentError(err)
    n = grid.n_points
    if method == "auto":
        method = "fft" if n >= FFT_THRESHOLD else "direct"
    fv, gv = f.values, g.values
    if method == "direct":
        raw = 0.5 * (np.convolve(fv, gv)[:n] + np.convolve(gv, fv)[:n])
    elif method == "fft":
        raw = signal.fftconvolve(fv, gv)[:n]
    else:
        err = f"Unknown convolution method: {method}"
        raise InvalidArgumentError(err)
    values = grid.step * (raw - 0.5 * (fv[0] * gv + gv[0] * fv))
    values[0] = 0.0
    return type(f)(grid, values)


def conv_power(
    f: GridFunction, n: int, method: ConvolutionMethod = "auto"
) -> GridFunction:
    """n-fold convolution power ``f^{*n}`` for ``n >= 1``."""
    if n == 0:
        err = (
            "f^{*0} is the delta distribution and has no grid representation; "
            "special-case the convolution identity instead"
        )
        raise UnsupportedOperationError(err)
    if n < 0:
        err = f"Convolution power must be non-negative, got {n}"
        raise InvalidArgumentError(err)
    result = f
    for _ in range(n - 1):
        result = convolve(result, f, method=method)
    return result


def restrict(f: GridFunction, sub: Grid) -> GridFunction:
    """Restriction of ``f`` to an aligned sub-grid."""
    return type(f)(sub, f.values[f.grid.slice_of(sub)])


def extend_by_zero(f: GridFunction, grid: Grid) -> GridFunction:
    """Embed ``f`` into a larger aligned grid, zero outside its own interval."""
    values = np.zeros(grid.n_points, dtype=np.complex128)
    values[grid.slice_of(f.grid)] = f.values
    return type(f)(grid, values)


def reflect(f: GridFunction) -> GridFunction:
    """The function ``t -> f(pi - t)`` on the mirrored grid."""
    grid = f.grid
    mirrored = Grid(max(0.0, math.pi - grid.x_end), math.pi - grid.x_start, grid.n_points)
    return type(f)(mirrored, f.values[::-1])
