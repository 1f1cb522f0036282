"""
The vector-function system built from a subspectrum and the w-head reconstruction.

For distinct subspectrum values ``lambda_k`` of multiplicity ``m_k`` the system
consists of ``(d^j/dlam^j sin(lam t), d^j/dlam^j cos(lam t))`` at ``lam = lambda_k``,
``j < m_k``, on (0, b). The E-values are bilinear pairings of the unknown head
``(w1, w2)`` on (0, b) with these vectors.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from diracutils.errors import ConditioningError, InconsistentDataError, InvalidArgumentError
from diracutils.forward import MERGE_TOL, Spectrum
from diracutils.gridfn import ComplexArray, Grid, GridFunction
from diracutils.wtransform import EValues, WPair

LOGGER = logging.getLogger(__name__)

REGULARIZATION = 1e-10
CONDITION_LIMIT = 1e10
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class Subspectrum:
    """
    Eigenvalues given for the index set ``indices``.

    ``values`` are the distinct eigenvalues in index order and ``multiplicities``
    the number of indices each covers.
    """

    indices: tuple[int, ...]
    values: tuple[complex, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.multiplicities):
            err = "Subspectrum needs one multiplicity per distinct value"
            raise InvalidArgumentError(err)
        if any(m < 1 for m in self.multiplicities):
            err = f"Multiplicities must be positive, got {self.multiplicities}"
            raise InvalidArgumentError(err)
        if sum(self.multiplicities) != len(self.indices):
            err = (
                f"Multiplicities sum to {sum(self.multiplicities)} "
                f"but {len(self.indices)} indices are given"
            )
            raise InvalidArgumentError(err)
        if len(set(self.indices)) != len(self.indices):
            err = "Subspectrum indices must be distinct"
            raise InvalidArgumentError(err)

    @classmethod
    def from_values(
        cls,
        indices: Sequence[int],
        values: Sequence[complex],
        merge_tol: float = MERGE_TOL,
    ) -> "Subspectrum":
        """One value per index; values closer than ``merge_tol`` become one multiple value."""
        if len(indices) != len(values):
            err = f"Got {len(indices)} indices but {len(values)} values"
            raise InvalidArgumentError(err)
        pairs = sorted(zip(indices, (complex(v) for v in values)))
        distinct: list[complex] = []
        mults: list[int] = []
        for _, value in pairs:
            for i, known in enumerate(distinct):
                if abs(known - value) <= merge_tol:
                    mults[i] += 1
                    break
            else:
                distinct.append(value)
                mults.append(1)
        return cls(tuple(k for k, _ in pairs), tuple(distinct), tuple(mults))

    @classmethod
    def progression(
        cls, m: int, window: int, kappa: ArrayLike | None = None
    ) -> "Subspectrum":
        """
        ``lambda_{sm} = s m + kappa_s`` for ``|s| <= window``.

        >>> Subspectrum.progression(2, 1).values
        ((-2+0j), 0j, (2+0j))
        """
        s = np.arange(-window, window + 1)
        shifts = np.zeros(s.size) if kappa is None else np.asarray(kappa, dtype=complex)
        if shifts.shape != s.shape:
            err = f"kappa needs {s.size} entries for window {window}, got {shifts.size}"
            raise InvalidArgumentError(err)
        indices = (s * m).tolist()
        return cls.from_values(indices, (s * m + shifts).tolist())

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, m: int, window: int) -> "Subspectrum":
        indices = [s * m for s in range(-window, window + 1)]
        return cls.from_values(indices, [spectrum.value_at(k) for k in indices])

    @property
    def points(self) -> list[tuple[complex, int]]:
        return list(zip(self.values, self.multiplicities))

    def __len__(self) -> int:
        return len(self.indices)

    def value_at(self, index: int) -> complex:
        """Eigenvalue assigned to ``index`` (indices fill multiple values in order)."""
        if index not in self.indices:
            err = f"Index {index} is not part of the subspectrum {self.indices}"
            raise InvalidArgumentError(err)
        position = sorted(self.indices).index(index)
        for value, mult in self.points:
            if position < mult:
                return value
            position -= mult
        err = f"No value for index {index}"
        raise InvalidArgumentError(err)


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """Sampled vectors, shape ``(count, 2, n_points)``, labelled by (value, derivative order)."""

    grid: Grid
    vectors: ComplexArray
    labels: tuple[tuple[complex, int], ...]

    @property
    def b(self) -> float:
        return self.grid.x_end

    def __len__(self) -> int:
        return len(self.labels)

    def vector(self, i: int) -> WPair:
        return WPair(
            GridFunction(self.grid, self.vectors[i, 0]),
            GridFunction(self.grid, self.vectors[i, 1]),
        )


def build_basis(sub: Subspectrum | Iterable[tuple[complex, int]], grid: Grid) -> BasisSystem:
    """Vectors ordered by value, then derivative order."""
    if not grid.starts_at_zero:
        err = f"The basis lives on (0, b), got {grid}"
        raise InvalidArgumentError(err)
    points = sub.points if isinstance(sub, Subspectrum) else list(sub)
    if not points:
        err = "Cannot build a basis from an empty subspectrum window"
        raise InvalidArgumentError(err)
    t = grid.nodes
    vectors = []
    labels = []
    for lam, mult in points:
        for j in range(mult):
            phase = complex(lam) * t + j * math.pi / 2
            vectors.append([t**j * np.sin(phase), t**j * np.cos(phase)])
            labels.append((complex(lam), j))
    return BasisSystem(grid, np.asarray(vectors, dtype=np.complex128), tuple(labels))


@dataclass(frozen=True, eq=False)
class GramReport:
    matrix: ComplexArray
    condition: float

    def print(self, *args: Any, **kwargs: Any) -> None:
        offdiag = self.matrix - np.diag(np.diag(self.matrix))
        print(
            f"  Gram {self.matrix.shape[0]}x{self.matrix.shape[1]}: "
            f"condition {self.condition:.6e}, max off-diagonal {np.max(np.abs(offdiag)):.3e}",
            *args,
            **kwargs,
        )


def _pairing(basis: BasisSystem, conjugate: bool) -> ComplexArray:
    left = basis.vectors.conj() if conjugate else basis.vectors
    weighted = basis.vectors * basis.grid.weights
    return np.einsum("kcn,lcn->kl", left, weighted)


def gram(basis: BasisSystem) -> GramReport:
    """Gram matrix under ``(g, h) = int_0^b (conj(g1) h1 + conj(g2) h2) dt``."""
    matrix = _pairing(basis, conjugate=True)
    return GramReport(matrix, float(np.linalg.cond(matrix)))


def completeness_score(basis: BasisSystem) -> float:
    """
    Smallest singular value of the quadrature-weighted synthesis matrix.

    Equals ``sqrt(b)`` for an orthogonal system and drops to 0 when the
    truncated system is rank deficient.
    """
    root = np.sqrt(basis.grid.weights)
    synthesis = (basis.vectors * root).reshape(len(basis), -1).T
    return float(linalg.svdvals(synthesis)[-1])


@dataclass(frozen=True, eq=False)
class HeadReconstruction:
    w: WPair
    coefficients: ComplexArray
    residual: float
    condition: float

    def print(self, *args: Any, **kwargs: Any) -> None:
        print(
            f"  w-head on (0, {self.w.grid.x_end:.6g}): {self.coefficients.size} coefficients, "
            f"residual {self.residual:.3e}, condition {self.condition:.3e}",
            *args,
            **kwargs,
        )


def boundary_pair(grid: Grid, tail: WPair) -> WPair:
    """
    Closed-form pair on (0, b) carrying the edge data of the tail at ``b``.

    ``phi1(t) = w1(b) t / b + c (t^3 - b^2 t)`` matches the value and the second
    derivative of ``w1`` at ``b``, ``phi2(t) = w2'(b) t^2 / (2 b)`` matches the
    slope of ``w2``. Both vanish at 0 together with ``phi1''`` and ``phi2'``, so
    ``w - phi`` has a sine part vanishing at 0 and ``b`` and a cosine part flat at ``b``.

    >>> tail_grid = Grid(1.0, 2.0, 5)
    >>> tail = WPair(GridFunction.constant(tail_grid, 2.0), GridFunction.zeros(tail_grid))
    >>> boundary_pair(Grid(0.0, 1.0, 5), tail).w1.values.real.tolist()
    [0.0, 0.5, 1.0, 1.5, 2.0]
    """
    if not grid.starts_at_zero:
        err = f"The boundary pair lives on (0, b), got {grid}"
        raise InvalidArgumentError(err)
    if abs(tail.grid.x_start - grid.x_end) > 1e-8 * grid.step:
        err = f"The tail {tail.grid} does not start at b = {grid.x_end:.6g}"
        raise InvalidArgumentError(err)
    b = grid.x_end
    t = grid.nodes
    f1 = tail.w1.values
    f2 = tail.w2.values
    h = tail.grid.step
    curvature = slope = 0j
    if tail.grid.n_points >= 4:
        # one-sided second-order differences at b
        curvature = (2 * f1[0] - 5 * f1[1] + 4 * f1[2] - f1[3]) / h**2
        slope = (-3 * f2[0] + 4 * f2[1] - f2[2]) / (2 * h)
    phi1 = f1[0] * t / b + curvature / (6 * b) * (t**3 - b**2 * t)
    phi2 = slope * t**2 / (2 * b)
    return WPair(GridFunction(grid, phi1), GridFunction(grid, phi2))


def _moments(basis: BasisSystem, w: WPair) -> ComplexArray:
    if w.grid != basis.grid:
        err = f"Pair on {w.grid} does not match the basis grid {basis.grid}"
        raise InvalidArgumentError(err)
    stacked = np.stack([w.w1.values, w.w2.values]) * basis.grid.weights
    return np.einsum("kcn,cn->k", basis.vectors, stacked)


def reconstruct_w_head(
    basis: BasisSystem,
    e: EValues,
    reg: float = REGULARIZATION,
    tol: float = RESIDUAL_TOL,
    condition_limit: float = CONDITION_LIMIT,
    anchor: WPair | None = None,
) -> HeadReconstruction:
    """
    The head ``w = anchor + sum_l c_l phi_l`` whose bilinear pairings with the system reproduce ``e``.

    The collocation system is solved in the least-squares sense with a
    Tikhonov row block scaled by ``reg * |G|``. The pairings of ``anchor`` are
    removed from ``e`` first and the anchor is added back to the synthesized head.
    """
    rhs = e.flat()
    if rhs.size != len(basis):
        err = f"Got {rhs.size} E-values for {len(basis)} basis vectors"
        raise InvalidArgumentError(err)
    if anchor is not None:
        rhs = rhs - _moments(basis, anchor)
    bilinear = _pairing(basis, conjugate=False)
    condition = float(np.linalg.cond(bilinear))
    if not math.isfinite(condition) or condition > condition_limit:
        err = f"Bilinear collocation system is ill-conditioned: cond = {condition:.3e}"
        raise ConditioningError(err, condition=condition)
    scale = math.sqrt(reg) * np.linalg.norm(bilinear, 2)
    augmented = np.vstack([bilinear, scale * np.eye(len(basis))])
    padded = np.concatenate([rhs, np.zeros(len(basis), dtype=np.complex128)])
    coefficients = linalg.lstsq(augmented, padded, lapack_driver="gelsy")[0]
    residual = float(np.linalg.norm(bilinear @ coefficients - rhs)) / max(
        1.0, float(np.linalg.norm(rhs))
    )
    if residual > tol:
        err = f"E-values are inconsistent with the basis: relative residual {residual:.3e}"
        raise InconsistentDataError(err, residual=residual)
    values = np.tensordot(coefficients, basis.vectors, axes=1)
    w = WPair(GridFunction(basis.grid, values[0]), GridFunction(basis.grid, values[1]))
    if anchor is not None:
        w = w + anchor
    LOGGER.debug("w-head: residual %.3e, condition %.3e", residual, condition)
    return HeadReconstruction(w, coefficients, residual, condition)
