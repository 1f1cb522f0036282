"""
The transform pair (w1, w2) of the characteristic function and the E-function.

``Delta(lambda) = sin(lambda pi) + int_0^pi (w1(t) sin(lambda t) + w2(t) cos(lambda t)) dt``

The pair is recovered from samples of Delta on the lattice ``(1/2) Z``: the
odd part in lambda only sees ``w1`` and the even part only sees ``w2``. The
first-order part of the pair is known in closed form from the kernel and is
subtracted before fitting.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from diracutils.errors import ConditioningError, InvalidArgumentError
from diracutils.forward import KernelPair, char_fn
from diracutils.gridfn import (
    ComplexArray,
    FloatArray,
    Grid,
    GridFunction,
    l2_norm,
    reflect,
    require_same_grid,
    restrict,
)

LOGGER = logging.getLogger(__name__)

REGULARIZATION = 1e-10
CONDITION_LIMIT = 1e12
FIT_TOL = 1e-4
MAX_EXTRACTION_WINDOW = 128


@dataclass(frozen=True, eq=False)
class WPair:
    """Transform densities ``(w1, w2)`` on a common grid."""

    w1: GridFunction
    w2: GridFunction

    def __post_init__(self) -> None:
        require_same_grid(self.w1, self.w2)

    @classmethod
    def zeros(cls, grid: Grid) -> "WPair":
        return cls(GridFunction.zeros(grid), GridFunction.zeros(grid))

    @property
    def grid(self) -> Grid:
        return self.w1.grid

    def restrict(self, sub: Grid) -> "WPair":
        return WPair(restrict(self.w1, sub), restrict(self.w2, sub))

    def norm(self) -> float:
        """L2 norm of the pair, ``sqrt(|w1|^2 + |w2|^2)``."""
        return math.hypot(l2_norm(self.w1), l2_norm(self.w2))

    def __add__(self, other: "WPair") -> "WPair":
        return WPair(self.w1 + other.w1, self.w2 + other.w2)

    def __sub__(self, other: "WPair") -> "WPair":
        return WPair(self.w1 - other.w1, self.w2 - other.w2)


@dataclass(frozen=True)
class EValue:
    lam: complex
    derivatives: tuple[complex, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.derivatives)


@dataclass(frozen=True)
class EValues:
    """λ-derivatives ``E^(j)(lambda_k)``, ``j < m_k``, for every distinct subspectrum value."""

    entries: tuple[EValue, ...]

    def __post_init__(self) -> None:
        for entry in self.entries:
            if not entry.derivatives:
                err = f"E-values at {entry.lam} need at least one derivative"
                raise InvalidArgumentError(err)

    def __len__(self) -> int:
        return sum(entry.multiplicity for entry in self.entries)

    def flat(self) -> ComplexArray:
        """All values ordered by entry, then derivative order."""
        return np.array(
            [d for entry in self.entries for d in entry.derivatives], dtype=np.complex128
        )


@dataclass(frozen=True)
class WFit:
    """Result of a w-extraction."""

    w: WPair
    residual: float
    condition: float
    window: int
    tol: float = FIT_TOL

    @property
    def within_tolerance(self) -> bool:
        return self.residual <= self.tol

    def print(self, *args: Any, **kwargs: Any) -> None:
        verdict = "" if self.within_tolerance else f" (above tolerance {self.tol:.1e})"
        print(
            f"  w-extraction: window {self.window}, residual {self.residual:.3e}{verdict}, "
            f"condition {self.condition:.3e}, |w| {self.w.norm():.6e}",
            *args,
            **kwargs,
        )


def half_integer_samples(window: int) -> FloatArray:
    """
    The symmetric lattice ``-N - 1/2, -N, ..., N, N + 1/2``.

    >>> half_integer_samples(1).tolist()
    [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]
    """
    if window < 0:
        err = f"Extraction window must be non-negative, got {window}"
        raise InvalidArgumentError(err)
    return np.arange(-2 * window - 1, 2 * window + 2) / 2.0


def default_extraction_window(grid: Grid) -> int:
    return min(MAX_EXTRACTION_WINDOW, (grid.n_points - 1) // 4)


def _quadrature(w: WPair, lam: ArrayLike, j: int = 0) -> ComplexArray:
    """``int (w1 t^j sin(lam t + j pi/2) + w2 t^j cos(lam t + j pi/2)) dt`` over the pair's grid."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=np.complex128))
    t = w.grid.nodes
    weights = w.grid.weights * t**j
    phase = np.outer(lam_arr, t) + j * math.pi / 2
    return np.sin(phase) @ (weights * w.w1.values) + np.cos(phase) @ (
        weights * w.w2.values
    )


def linear_w(kernel: KernelPair) -> WPair:
    """
    First-order part of the transform pair.

    To first order in the kernel ``w1(t) = -t q(pi - t)`` and ``w2(t) = -t p(pi - t)``.
    """
    t = kernel.grid.nodes
    return WPair(
        reflect(kernel.q) * -t,
        reflect(kernel.p) * -t,
    )


def synthesize_delta(w: WPair, lam: Any) -> Any:
    """Right side of the Delta representation for a pair on (0, pi)."""
    if not (w.grid.starts_at_zero and w.grid.ends_at_pi):
        err = f"Delta synthesis needs a pair on (0, pi), got {w.grid}"
        raise InvalidArgumentError(err)
    scalar = np.ndim(lam) == 0
    lam_arr = np.asarray(lam, dtype=np.complex128)
    values = np.sin(lam_arr.ravel() * math.pi) + _quadrature(w, lam_arr.ravel())
    if scalar:
        return complex(values[0])
    return values.reshape(lam_arr.shape)


def _check_lattice(lams: FloatArray) -> int:
    """Validate a symmetric half-integer sample set; return its window N."""
    doubled = np.rint(2 * lams).astype(int)
    if np.any(np.abs(2 * lams - doubled) > 1e-12):
        err = "Extraction samples must lie on the half-integer lattice"
        raise InvalidArgumentError(err)
    present = set(doubled.tolist())
    if any(-d not in present for d in present):
        err = "Extraction samples must be symmetric about 0"
        raise InvalidArgumentError(err)
    top = max(present)
    missing = [d for d in range(0, top + 1) if d not in present]
    if top < 1 or missing:
        err = f"Extraction samples must cover [-N - 1/2, N + 1/2] with spacing 1/2; missing {missing}"
        raise InvalidArgumentError(err)
    return top


def _cosine_fit(
    design: ComplexArray, basis: FloatArray, data: ComplexArray, reg: float
) -> tuple[ComplexArray, float]:
    """Tikhonov least squares for cosine coefficients; returns samples and cond(design)."""
    condition = float(np.linalg.cond(design))
    if not math.isfinite(condition) or condition > CONDITION_LIMIT:
        err = f"Extraction system is ill-conditioned: cond = {condition:.3e}"
        raise ConditioningError(err, condition=condition)
    modes = design.shape[1]
    scale = math.sqrt(reg) * np.linalg.norm(design, 2)
    augmented = np.vstack([design, scale * np.eye(modes)])
    padded = np.concatenate([data, np.zeros(modes, dtype=np.complex128)])
    coefficients = linalg.lstsq(augmented, padded, lapack_driver="gelsy")[0]
    return coefficients @ basis, condition


def fit_w(
    grid: Grid,
    lams: ArrayLike,
    remainder: ArrayLike,
    reg: float = REGULARIZATION,
) -> WFit:
    """
    Fit ``remainder(lam) = int_0^pi (w1 sin(lam t) + w2 cos(lam t)) dt`` on a symmetric lattice.

    Both components are modelled as cosine series ``sum_{k <= N} c_k cos(k t)``,
    which need no boundary values. The odd part of the samples determines
    ``w1`` and the even part ``w2``. ``residual`` is the largest misfit over all
    samples.
    """
    lam_arr = np.asarray(lams, dtype=float).ravel()
    data = np.asarray(remainder, dtype=np.complex128).ravel()
    if lam_arr.shape != data.shape:
        err = f"Got {lam_arr.size} samples but {data.size} values"
        raise InvalidArgumentError(err)
    top = _check_lattice(lam_arr)
    window = top // 2
    lookup = {round(2 * lam): value for lam, value in zip(lam_arr, data)}

    t = grid.nodes
    basis = np.cos(np.outer(np.arange(window + 1), t))
    weighted_basis = (basis * grid.weights).T
    positive = np.arange(1, top + 1) / 2
    odd = np.array([0.5 * (lookup[d] - lookup[-d]) for d in range(1, top + 1)])
    nonnegative = np.arange(0, top + 1) / 2
    even = np.array([0.5 * (lookup[d] + lookup[-d]) for d in range(0, top + 1)])

    w1, cond1 = _cosine_fit(
        np.sin(np.outer(positive, t)) @ weighted_basis, basis, odd, reg
    )
    w2, cond2 = _cosine_fit(
        np.cos(np.outer(nonnegative, t)) @ weighted_basis, basis, even, reg
    )
    w = WPair(GridFunction(grid, w1), GridFunction(grid, w2))
    residual = float(np.max(np.abs(data - _quadrature(w, lam_arr))))
    return WFit(w, residual, max(cond1, cond2), window)


def extract_w_fit(
    kernel: KernelPair,
    lam_samples: ArrayLike | None = None,
    window: int | None = None,
    tol: float = FIT_TOL,
) -> WFit:
    """
    Transform pair of ``kernel`` from sampled Delta.

    The first-order part is known in closed form, so only the remainder
    ``Delta - sin - Q[linear_w]`` is fitted.
    """
    if lam_samples is None:
        if window is None:
            window = default_extraction_window(kernel.grid)
        lam_samples = half_integer_samples(window)
    lams = np.asarray(lam_samples, dtype=float).ravel()
    linear = linear_w(kernel)
    remainder = char_fn(kernel, lams) - np.sin(lams * math.pi) - _quadrature(linear, lams)
    fit = fit_w(kernel.grid, lams, remainder)
    result = WFit(linear + fit.w, fit.residual, fit.condition, fit.window, tol)
    LOGGER.debug(
        "w-extraction on %s: window %d, residual %.3e, cond %.3e",
        kernel.grid,
        result.window,
        result.residual,
        result.condition,
    )
    if not result.within_tolerance:
        LOGGER.warning(
            "w-extraction residual %.3e exceeds tolerance %.1e", result.residual, tol
        )
    return result


def extract_w(
    kernel: KernelPair,
    lam_samples: ArrayLike | None = None,
    window: int | None = None,
) -> WPair:
    return extract_w_fit(kernel, lam_samples, window).w


def E_target(lam: complex, j: int, w_tail: WPair) -> complex:
    """
    ``d^j/dlam^j E(lam)``: minus the free part, minus the tail integral over (b, pi).
    """
    if j < 0:
        err = f"Derivative order must be non-negative, got {j}"
        raise InvalidArgumentError(err)
    if not w_tail.grid.ends_at_pi:
        err = f"The w-tail must end at pi, got {w_tail.grid}"
        raise InvalidArgumentError(err)
    free = math.pi**j * np.sin(complex(lam) * math.pi + j * math.pi / 2)
    return complex(-free - _quadrature(w_tail, lam, j)[0])


def E_moment(lam: complex, j: int, w_head: WPair) -> complex:
    """Bilinear pairing of the head on (0, b) with the j-th λ-derivative of (sin, cos)."""
    if j < 0:
        err = f"Derivative order must be non-negative, got {j}"
        raise InvalidArgumentError(err)
    if not w_head.grid.starts_at_zero:
        err = f"The w-head must start at 0, got {w_head.grid}"
        raise InvalidArgumentError(err)
    return complex(_quadrature(w_head, lam, j)[0])


def target_values(points: Iterable[tuple[complex, int]], w_tail: WPair) -> EValues:
    """``E_target`` for every (value, multiplicity) pair, derivatives ``j < m``."""
    return EValues(
        tuple(
            EValue(lam, tuple(E_target(lam, j, w_tail) for j in range(mult)))
            for lam, mult in points
        )
    )


def moment_values(points: Iterable[tuple[complex, int]], w_head: WPair) -> EValues:
    return EValues(
        tuple(
            EValue(lam, tuple(E_moment(lam, j, w_head) for j in range(mult)))
            for lam, mult in points
        )
    )
