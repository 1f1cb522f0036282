"""Analytic kernel families for experiments and tests."""

import math
from collections.abc import Callable, Mapping, Sequence
from typing import Any

import numpy as np

from diracutils.errors import InvalidArgumentError
from diracutils.forward import KernelPair
from diracutils.gridfn import FloatArray, Grid, GridFunction

KernelFactory = Callable[..., KernelPair]


def _pair(grid: Grid, p: FloatArray | np.ndarray, q: FloatArray | np.ndarray) -> KernelPair:
    return KernelPair(GridFunction(grid, p), GridFunction(grid, q))


def zero(grid: Grid) -> KernelPair:
    return KernelPair.zero(grid)


def trig(
    grid: Grid,
    p_coefficients: Sequence[complex] = (0.1,),
    q_coefficients: Sequence[complex] = (0.05,),
) -> KernelPair:
    """Trigonometric polynomials ``sum_k c_k cos(k t)``, starting at ``k = 0``."""
    t = grid.nodes

    def series(coefficients: Sequence[complex]) -> np.ndarray:
        return sum(
            (complex(c) * np.cos(k * t) for k, c in enumerate(coefficients)),
            start=np.zeros_like(t, dtype=np.complex128),
        )

    return _pair(grid, series(p_coefficients), series(q_coefficients))


def gauss(
    grid: Grid,
    p_bumps: Sequence[Sequence[float]] = ((0.2, 1.0, 0.3),),
    q_bumps: Sequence[Sequence[float]] = ((0.1, 2.0, 0.3),),
) -> KernelPair:
    """Sums of Gaussian bumps given as ``(amplitude, center, width)`` triples."""
    t = grid.nodes

    def bumps(spec: Sequence[Sequence[float]]) -> np.ndarray:
        values = np.zeros_like(t, dtype=np.complex128)
        for amplitude, center, width in spec:
            values += amplitude * np.exp(-(((t - center) / width) ** 2))
        return values

    return _pair(grid, bumps(p_bumps), bumps(q_bumps))


def pwlinear(
    grid: Grid,
    p_points: Sequence[Sequence[float]] = ((0.0, 0.1), (math.pi, 0.0)),
    q_points: Sequence[Sequence[float]] = ((0.0, 0.0), (math.pi, 0.1)),
) -> KernelPair:
    """Piecewise-linear interpolation of ``(t, value)`` break points."""
    t = grid.nodes

    def interpolate(points: Sequence[Sequence[float]]) -> np.ndarray:
        xs, ys = zip(*sorted(points))
        return np.interp(t, xs, ys)

    return _pair(grid, interpolate(p_points), interpolate(q_points))


def random(
    grid: Grid,
    seed: int = 0,
    amplitude: float = 0.2,
    modes: int = 4,
    complex_valued: bool = True,
) -> KernelPair:
    """
    Random smooth kernel: a few cosine modes with decaying random coefficients.

    The ``seed`` fully determines the kernel.
    """
    rng = np.random.default_rng(seed)
    decay = 1.0 / (1.0 + np.arange(modes)) ** 2

    def coefficients() -> np.ndarray:
        c = rng.standard_normal(modes)
        if complex_valued:
            c = c + 1j * rng.standard_normal(modes)
        return amplitude * decay * c / math.sqrt(2 if complex_valued else 1)

    return trig(grid, coefficients().tolist(), coefficients().tolist())


def default_roundtrip_kernel(grid: Grid, a: float, amplitude: float = 0.2) -> KernelPair:
    """
    Smooth kernel for reconstruction experiments.

    Gaussian bumps sit inside (0, a) and inside (a, pi), narrow enough to
    vanish near ``a`` and ``pi``.
    """
    width = (math.pi - a) / 10
    middle = 0.5 * (a + math.pi)
    return gauss(
        grid,
        p_bumps=((amplitude, a / 2, width), (0.5 * amplitude, middle, width)),
        q_bumps=((0.5 * amplitude, a / 3, width), (-amplitude, middle, width)),
    )


KERNEL_FAMILIES: dict[str, KernelFactory] = {
    "zero": zero,
    "trig": trig,
    "gauss": gauss,
    "pwlinear": pwlinear,
    "random": random,
}


def make_kernel(
    name: str, grid: Grid, params: Mapping[str, Any] | None = None, seed: int | None = None
) -> KernelPair:
    """
    Build a kernel from a family name and its parameters.

    >>> make_kernel("zero", Grid.full(5)).p.values.tolist()
    [0j, 0j, 0j, 0j, 0j]
    """
    if name not in KERNEL_FAMILIES:
        err = f"Unknown kernel family {name!r}; choose from {sorted(KERNEL_FAMILIES)}"
        raise InvalidArgumentError(err)
    kwargs = dict(params or {})
    if name == "random" and seed is not None:
        kwargs.setdefault("seed", seed)
    try:
        return KERNEL_FAMILIES[name](grid, **kwargs)
    except TypeError as err:
        msg = f"Bad parameters for kernel family {name!r}: {err}"
        raise InvalidArgumentError(msg) from err
