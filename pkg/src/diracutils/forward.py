"""
Forward problem for the integro-differential Dirac system.

The system ``B y' + int_0^x M(x - t) y(t) dt = lambda y`` on (0, pi) is
marched from ``y(0) = (0, 1)`` and the characteristic function is
``Delta(lambda) = -y_1(pi, lambda)``, which equals ``sin(lambda pi)`` for the
zero kernel. Eigenvalues of the boundary value problem ``y_1(0) = y_1(pi) = 0``
are the zeros of Delta.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any, overload

import numpy as np
from numpy.typing import ArrayLike

from diracutils.errors import (
    EigenvalueSearchError,
    InvalidArgumentError,
    NumericRangeError,
    UnsupportedOperationError,
)
from diracutils.gridfn import ComplexArray, Grid, GridFunction, require_same_grid

LOGGER = logging.getLogger(__name__)

DEFAULT_IM_BOUND = 2.0
MERGE_TOL = 1e-6

# exp(600) is still far from the float overflow threshold after a full march.
_MAX_EXPONENT = 600.0
# Number of spectral parameters marched together; bounds the history arrays.
_CHUNK = 1024

# Central difference stencils: order -> (offsets, coefficients), step scaled per order.
_FD_STENCILS: dict[int, tuple[tuple[int, ...], tuple[float, ...]]] = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}
_FD_STEPS = {1: 1e-4, 2: 1e-3, 3: 5e-3, 4: 1e-2}


@dataclass(frozen=True, eq=False)
class KernelPair:
    """The pair (p, q) defining ``M(x) = [[p, q], [-q, p]]`` on the full grid of (0, pi)."""

    p: GridFunction
    q: GridFunction

    def __post_init__(self) -> None:
        grid = require_same_grid(self.p, self.q)
        if not (grid.starts_at_zero and grid.ends_at_pi):
            err = f"A kernel pair lives on the full interval (0, pi), got {grid}"
            raise InvalidArgumentError(err)

    @classmethod
    def zero(cls, grid: Grid) -> "KernelPair":
        return cls(GridFunction.zeros(grid), GridFunction.zeros(grid))

    @property
    def grid(self) -> Grid:
        return self.p.grid

    def scaled(self, factor: complex) -> "KernelPair":
        return KernelPair(factor * self.p, factor * self.q)

    def __add__(self, other: "KernelPair") -> "KernelPair":
        return KernelPair(self.p + other.p, self.q + other.q)


@dataclass(frozen=True)
class StateVector:
    y1: complex
    y2: complex


def _march(kernel: KernelPair, lambdas: ArrayLike) -> tuple[ComplexArray, ComplexArray]:
    """y(pi) for every spectral parameter in ``lambdas`` (flattened)."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=np.complex128)).ravel()
    growth = np.abs(lam.imag) * math.pi
    if lam.size and np.max(growth) > _MAX_EXPONENT:
        bad = complex(lam[np.argmax(growth)])
        msg = f"|Im lambda| too large for the forward march: lambda = {bad}"
        raise NumericRangeError(msg, lam=bad)
    if lam.size > _CHUNK:
        parts = [_march(kernel, lam[i : i + _CHUNK]) for i in range(0, lam.size, _CHUNK)]
        return (
            np.concatenate([part[0] for part in parts]),
            np.concatenate([part[1] for part in parts]),
        )

    grid = kernel.grid
    h = grid.step
    half_h = 0.5 * h
    n = grid.n_points
    p = kernel.p.values
    q = kernel.q.values

    y1 = np.zeros((lam.size, n), dtype=np.complex128)
    y2 = np.zeros((lam.size, n), dtype=np.complex128)
    y2[:, 0] = 1.0
    cos_h = np.cos(lam * h)
    sin_h = np.sin(lam * h)
    # f = B (M * y) at the current node; the memory term vanishes at x = 0
    f1 = np.zeros(lam.size, dtype=np.complex128)
    f2 = np.zeros(lam.size, dtype=np.complex128)

    for k in range(n - 1):
        # The lambda part is integrated exactly by the rotation exp(-lambda B h).
        r1 = cos_h * y1[:, k] - sin_h * y2[:, k]
        r2 = sin_h * y1[:, k] + cos_h * y2[:, k]
        g1 = cos_h * f1 - sin_h * f2
        g2 = sin_h * f1 + cos_h * f2

        # history part of (M * y)(x_{k+1}) over the nodes 0..k
        wp = p[k + 1 : 0 : -1].copy()
        wq = q[k + 1 : 0 : -1].copy()
        wp[0] *= 0.5
        wq[0] *= 0.5
        hist1 = h * (y1[:, : k + 1] @ wp + y2[:, : k + 1] @ wq)
        hist2 = h * (y2[:, : k + 1] @ wp - y1[:, : k + 1] @ wq)

        # predictor
        u1 = r1 + h * g1
        u2 = r2 + h * g2
        m1 = hist1 + half_h * (p[0] * u1 + q[0] * u2)
        m2 = hist2 + half_h * (p[0] * u2 - q[0] * u1)
        # corrector
        u1 = r1 + half_h * (g1 + m2)
        u2 = r2 + half_h * (g2 - m1)
        m1 = hist1 + half_h * (p[0] * u1 + q[0] * u2)
        m2 = hist2 + half_h * (p[0] * u2 - q[0] * u1)

        y1[:, k + 1] = u1
        y2[:, k + 1] = u2
        f1, f2 = m2, -m1

    end1, end2 = y1[:, -1], y2[:, -1]
    if not (np.all(np.isfinite(end1)) and np.all(np.isfinite(end2))):
        bad_index = int(np.flatnonzero(~np.isfinite(end1 + end2))[0])
        bad = complex(lam[bad_index])
        msg = f"Forward march overflowed at lambda = {bad}"
        raise NumericRangeError(msg, lam=bad)
    return end1, end2


def solve_ivp(kernel: KernelPair, lam: complex) -> StateVector:
    """Value at ``x = pi`` of the solution with ``y(0) = (0, 1)``."""
    y1, y2 = _march(kernel, [lam])
    return StateVector(complex(y1[0]), complex(y2[0]))


@overload
def char_fn(kernel: KernelPair, lam: complex) -> complex: ...
@overload
def char_fn(kernel: KernelPair, lam: Sequence[complex] | np.ndarray) -> ComplexArray: ...
def char_fn(kernel: KernelPair, lam: Any) -> Any:
    """Characteristic function ``Delta(lambda) = -y_1(pi, lambda)``; vectorized."""
    scalar = np.ndim(lam) == 0
    lam_arr = np.asarray(lam, dtype=np.complex128)
    values = -_march(kernel, lam_arr)[0]
    if scalar:
        return complex(values[0])
    return values.reshape(lam_arr.shape)


def char_fn_derivative(kernel: KernelPair, lam: Any, order: int) -> Any:
    """
    ``order``-th lambda-derivative of Delta by central finite differences.

    The step is ``c_j (1 + |lambda|)`` with ``c_j`` growing with the order.
    """
    if order < 0:
        err = f"Derivative order must be non-negative, got {order}"
        raise InvalidArgumentError(err)
    if order == 0:
        return char_fn(kernel, lam)
    if order > 4:
        err = f"Derivatives of Delta are supported up to order 4, got {order}"
        raise UnsupportedOperationError(err)
    scalar = np.ndim(lam) == 0
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=np.complex128))
    offsets, coefficients = _FD_STENCILS[order]
    step = _FD_STEPS[order] * (1.0 + np.abs(lam_arr))
    points = lam_arr[..., None] + np.asarray(offsets) * step[..., None]
    values = char_fn(kernel, points)
    result = (values @ np.asarray(coefficients)) / step**order
    if scalar:
        return complex(result[0])
    return result.reshape(np.shape(lam))


@dataclass(frozen=True)
class SpectrumEntry:
    index: int
    value: complex
    multiplicity: int = 1


@dataclass(frozen=True)
class Spectrum:
    """
    Eigenvalues numbered ``lambda_k = k + kappa_k``.

    An entry of multiplicity ``m`` occupies the indices ``index .. index + m - 1``.
    """

    entries: tuple[SpectrumEntry, ...]

    def __post_init__(self) -> None:
        for entry in self.entries:
            if entry.multiplicity < 1:
                err = f"Multiplicity must be positive, got {entry}"
                raise InvalidArgumentError(err)
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.index < prev.index + prev.multiplicity:
                err = f"Spectrum indices must increase: {prev} then {cur}"
                raise InvalidArgumentError(err)

    @classmethod
    def from_values(
        cls,
        values: Iterable[complex],
        first_index: int | None = None,
        merge_tol: float = MERGE_TOL,
    ) -> "Spectrum":
        """
        Number a list of eigenvalues (repetitions allowed) in ascending order.

        Values closer than ``merge_tol`` are merged into one entry. Without
        ``first_index`` the first value gets the integer nearest to its real part.
        """
        ordered = sorted((complex(v) for v in values), key=lambda v: (v.real, v.imag))
        if not ordered:
            return cls(())
        groups: list[list[complex]] = [[ordered[0]]]
        for value in ordered[1:]:
            if abs(value - groups[-1][0]) <= merge_tol:
                groups[-1].append(value)
            else:
                groups.append([value])
        index = round(ordered[0].real) if first_index is None else first_index
        entries = []
        for group in groups:
            entries.append(SpectrumEntry(index, complex(np.mean(group)), len(group)))
            index += len(group)
        return cls(tuple(entries))

    def __len__(self) -> int:
        return sum(entry.multiplicity for entry in self.entries)

    @property
    def values(self) -> ComplexArray:
        return np.array([entry.value for entry in self.entries], dtype=np.complex128)

    def expanded(self) -> dict[int, complex]:
        """Index -> eigenvalue with multiplicities spelled out."""
        return {
            entry.index + i: entry.value
            for entry in self.entries
            for i in range(entry.multiplicity)
        }

    def value_at(self, index: int) -> complex:
        expanded = self.expanded()
        if index not in expanded:
            err = f"No eigenvalue with index {index} in this spectrum"
            raise InvalidArgumentError(err)
        return expanded[index]

    def kappa(self) -> dict[int, complex]:
        return {k: value - k for k, value in self.expanded().items()}

    def kappa_sq_cumulative(self) -> dict[int, float]:
        """``sum_{|j| <= |k|} |kappa_j|^2`` for every index k."""
        sq = {k: abs(v) ** 2 for k, v in self.kappa().items()}
        return {k: sum(v for j, v in sq.items() if abs(j) <= abs(k)) for k in sq}

    def subspectrum(self, indices: Iterable[int]) -> "Spectrum":
        expanded = self.expanded()
        wanted = sorted(set(indices))
        missing = [k for k in wanted if k not in expanded]
        if missing:
            err = f"Indices {missing} are not covered by this spectrum"
            raise InvalidArgumentError(err)
        entries: list[SpectrumEntry] = []
        for k in wanted:
            last = entries[-1] if entries else None
            if (
                last is not None
                and last.index + last.multiplicity == k
                and expanded[k] == last.value
            ):
                entries[-1] = SpectrumEntry(last.index, last.value, last.multiplicity + 1)
            else:
                entries.append(SpectrumEntry(k, expanded[k]))
        return Spectrum(tuple(entries))

    def print(self, *args: Any, **kwargs: Any) -> None:
        lines = [f"  {'k':>5} {'Re lambda':>22} {'Im lambda':>22} {'mult':>4}"]
        lines.extend(
            f"  {e.index:>5} {e.value.real:>22.15e} {e.value.imag:>22.15e} {e.multiplicity:>4}"
            for e in self.entries
        )
        print("\n".join(lines), *args, **kwargs)


def _box_contour(k: int, im_bound: float, per_side: int) -> ComplexArray:
    """Counter-clockwise closed polyline around [k - 1/2, k + 1/2] x [-Y, Y]."""
    left, right = k - 0.5, k + 0.5
    s = np.linspace(0.0, 1.0, per_side, endpoint=False)
    bottom = left + s * (right - left) - 1j * im_bound
    rising = right + 1j * (-im_bound + s * 2 * im_bound)
    top = right - s * (right - left) + 1j * im_bound
    falling = left + 1j * (im_bound - s * 2 * im_bound)
    return np.concatenate([bottom, rising, top, falling])


def _winding(values: ComplexArray) -> tuple[int, float]:
    """Winding number of a sampled closed curve and the largest phase increment."""
    closed = np.append(values, values[0])
    increments = np.angle(closed[1:] / closed[:-1])
    return round(float(np.sum(increments)) / (2 * math.pi)), float(
        np.max(np.abs(increments))
    )


def count_zeros(
    kernel: KernelPair,
    ks: Sequence[int],
    im_bound: float = DEFAULT_IM_BOUND,
    per_side: int = 8,
    max_per_side: int = 1024,
) -> dict[int, int]:
    """
    Number of zeros of Delta in every box ``[k - 1/2, k + 1/2] x [-Y, Y]``.

    A box whose sampled boundary satisfies ``|Delta - sin| < |sin| / 2`` holds
    exactly one zero (Rouche); the remaining boxes are counted by unwrapping
    the phase of Delta on a contour refined until no increment exceeds pi/4.
    """
    ks = list(ks)
    contours = np.stack([_box_contour(k, im_bound, per_side) for k in ks])
    values = char_fn(kernel, contours)
    free = np.sin(contours * math.pi)
    if np.any(values == 0):
        err = "Delta vanishes on a box boundary; change the imaginary search bound"
        raise EigenvalueSearchError(err, box=(ks[0] - 0.5, ks[-1] + 0.5, -im_bound, im_bound))
    rouche = np.max(np.abs(values - free), axis=1) < 0.5 * np.min(np.abs(free), axis=1)

    counts: dict[int, int] = {}
    for k, by_rouche in zip(ks, rouche):
        if by_rouche:
            counts[k] = 1
            continue
        points = 4 * per_side
        while True:
            points *= 2
            contour = _box_contour(k, im_bound, points)
            winding, largest = _winding(char_fn(kernel, contour))
            if largest < math.pi / 4 or points >= max_per_side:
                break
        if largest >= math.pi / 4:
            LOGGER.warning(
                "Phase of Delta still jumps by %.3f on box %d at %d points per side",
                largest,
                k,
                points,
            )
        counts[k] = winding
    return counts


def _newton(
    kernel: KernelPair, seeds: ArrayLike, tol: float, max_iter: int
) -> tuple[ComplexArray, np.ndarray]:
    lam = np.array(seeds, dtype=np.complex128)
    active = np.ones(lam.size, dtype=bool)
    for iteration in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d0 = char_fn(kernel, lam[idx])
        d1 = char_fn_derivative(kernel, lam[idx], 1)
        d1 = np.where(d1 == 0, 1.0, d1)
        step = d0 / d1
        lam[idx] -= step
        done = np.abs(step) <= tol * (1.0 + np.abs(lam[idx]))
        active[idx[done]] = False
        LOGGER.debug("Newton iteration %d: %d roots still moving", iteration, np.sum(active))
    # Near a multiple root the iteration stalls at roundoff level; keep such roots.
    idx = np.flatnonzero(active)
    if idx.size:
        stalled = np.abs(char_fn(kernel, lam[idx])) <= 1e-8
        active[idx[stalled]] = False
    return lam, ~active


def _multiplicity(kernel: KernelPair, lam: complex, threshold: float) -> int:
    for order in range(1, 5):
        if abs(char_fn_derivative(kernel, lam, order)) > threshold * math.pi**order:
            return order
    return 4


def eigenvalues(
    kernel: KernelPair,
    window: int,
    im_bound: float = DEFAULT_IM_BOUND,
    merge_tol: float = MERGE_TOL,
    newton_tol: float = 1e-13,
    max_newton: int = 50,
) -> Spectrum:
    """
    All eigenvalues with ``|Re lambda| <= window + 1/2`` and ``|Im lambda| <= im_bound``.

    Newton iterations start at the integers ``-window .. window``; every box
    ``[k - 1/2, k + 1/2] x [-Y, Y]`` is counted by the argument principle and
    boxes holding more zeros than found are searched again from extra seeds.
    """
    if window < 1:
        err = f"Spectrum window must be at least 1, got {window}"
        raise InvalidArgumentError(err)
    ks = list(range(-window, window + 1))
    counts = count_zeros(kernel, ks, im_bound)

    def in_box(lam: complex, k: int) -> bool:
        return k - 0.5 <= lam.real < k + 0.5 and abs(lam.imag) <= im_bound

    roots, converged = _newton(kernel, np.array(ks, dtype=float), newton_tol, max_newton)
    found: dict[int, list[complex]] = {k: [] for k in ks}
    for lam in roots[converged]:
        k = round(lam.real)
        if k in found and in_box(complex(lam), k):
            found[k].append(complex(lam))

    values: list[complex] = []
    for k in ks:
        box = (k - 0.5, k + 0.5, -im_bound, im_bound)
        candidates = found[k]
        distinct = Spectrum.from_values(candidates, merge_tol=merge_tol).values.tolist()
        mults = [_multiplicity(kernel, lam, merge_tol) for lam in distinct]
        if sum(mults) < counts[k]:
            extra = k + np.array([0.25, -0.25, 0.25j, -0.25j, 0.4 + 0.5j, 0.4 - 0.5j])
            more, ok = _newton(kernel, extra, newton_tol, max_newton)
            candidates = candidates + [complex(v) for v in more[ok] if in_box(complex(v), k)]
            distinct = Spectrum.from_values(candidates, merge_tol=merge_tol).values.tolist()
            mults = [_multiplicity(kernel, lam, merge_tol) for lam in distinct]
        if sum(mults) != counts[k]:
            msg = (
                f"Box [{box[0]}, {box[1]}] x [{box[2]}, {box[3]}]: argument principle "
                f"counts {counts[k]} zeros, Newton found {sum(mults)}"
            )
            raise EigenvalueSearchError(msg, box=box)
        for lam, mult in zip(distinct, mults):
            values.extend([lam] * mult)

    total = len(values)
    first_index = -window if total == 2 * window + 1 else None
    if first_index is None:
        LOGGER.warning(
            "Found %d eigenvalues in a window expecting %d; numbering by nearest integer",
            total,
            2 * window + 1,
        )
    return Spectrum.from_values(values, first_index=first_index, merge_tol=merge_tol)
