"""
Partial inverse problem: continue (p, q) from (0, a) to (a, pi) given a subspectrum.

The nonlinear convolution series that link the kernel with its transform
pair are never expanded. They are evaluated numerically as the difference
between the extracted pair and its closed-form linear part, see
:func:`nonlinear_residual`.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, TypeVar

import numpy as np

from diracutils.basis import (
    BasisSystem,
    HeadReconstruction,
    Subspectrum,
    boundary_pair,
    build_basis,
    completeness_score,
    gram,
    reconstruct_w_head,
)
from diracutils.errors import (
    ConditioningError,
    ConvergenceError,
    DiracError,
    InconsistentDataError,
    InvalidArgumentError,
    StageError,
)
from diracutils.forward import KernelPair, char_fn, char_fn_derivative
from diracutils.gridfn import (
    FloatArray,
    Grid,
    GridFunction,
    WeightedGridFunction,
    l2_norm,
    reflect,
    restrict,
)
from diracutils.wtransform import WFit, WPair, extract_w_fit, linear_w, target_values

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")

CONSISTENCY_TOL = 1e-4
ABS_TOL = 1e-8
REL_TOL = 1e-6
MAX_ITER = 200
MIN_DAMPING = 1.0 / 16
COMPLETENESS_THRESHOLD = 1e-3
# Share of the head coordinates carried by the top quarter of the window.
TAIL_FRACTION_LIMIT = 0.25
# Head coordinate vectors below this norm count as zero.
NEGLIGIBLE_HEAD = 1e-10


@dataclass(frozen=True, eq=False)
class KnownPart:
    """The kernel restricted to (0, a), zero beyond ``a``."""

    p1: GridFunction
    q1: GridFunction
    a: float

    def __post_init__(self) -> None:
        grid = KernelPair(self.p1, self.q1).grid
        if not (math.pi / 2 - 1e-12 <= self.a < math.pi):
            err = f"The split point must satisfy pi/2 <= a < pi, got {self.a}"
            raise InvalidArgumentError(err)
        ia = grid.index_of(self.a)
        if np.any(self.p1.values[ia + 1 :] != 0) or np.any(self.q1.values[ia + 1 :] != 0):
            err = "The known part must vanish on (a, pi)"
            raise InvalidArgumentError(err)

    @classmethod
    def from_kernel(cls, kernel: KernelPair, a: float) -> "KnownPart":
        """Truncate ``kernel`` after the node ``a``."""
        ia = kernel.grid.index_of(a)
        p1 = kernel.p.values.copy()
        q1 = kernel.q.values.copy()
        p1[ia + 1 :] = 0.0
        q1[ia + 1 :] = 0.0
        return cls(kernel.p.with_values(p1), kernel.q.with_values(q1), a)

    @property
    def grid(self) -> Grid:
        return self.p1.grid

    @property
    def b(self) -> float:
        return math.pi - self.a

    @property
    def index_a(self) -> int:
        return self.grid.index_of(self.a)

    def as_kernel(self) -> KernelPair:
        return KernelPair(self.p1, self.q1)


@dataclass(frozen=True, eq=False)
class NonlinearResidual:
    """``N1(t) = -w1(pi - t) - (pi - t) q(t)`` and ``N2(t) = -w2(pi - t) - (pi - t) p(t)``."""

    N1: GridFunction
    N2: GridFunction
    fit: WFit

    def norm(self) -> float:
        return math.hypot(l2_norm(self.N1), l2_norm(self.N2))


def nonlinear_residual(kernel: KernelPair, window: int | None = None) -> NonlinearResidual:
    """The convolution series (orders >= 2) linking the kernel with its transform pair."""
    fit = extract_w_fit(kernel, window=window)
    nonlinear = fit.w - linear_w(kernel)
    return NonlinearResidual(
        -reflect(nonlinear.w1),
        -reflect(nonlinear.w2),
        fit,
    )


def compute_A1_B1(
    known: KnownPart, window: int | None = None
) -> tuple[GridFunction, GridFunction]:
    """Series terms of the known part alone, on (0, pi)."""
    residual = nonlinear_residual(known.as_kernel(), window)
    return residual.N1, residual.N2


def tail_grid(known: KnownPart) -> Grid:
    return known.grid.subgrid(known.b, math.pi)


def head_grid(known: KnownPart) -> Grid:
    return known.grid.subgrid(0.0, known.b)


def w_tail(known: KnownPart, window: int | None = None) -> WPair:
    """
    The transform pair on (b, pi).

    It depends only on the kernel on (0, a), so the extraction from the known
    part alone is exact there.
    """
    fit = extract_w_fit(known.as_kernel(), window=window)
    return fit.w.restrict(tail_grid(known))


def series_bound(p1: GridFunction, q1: GridFunction) -> float:
    """
    ``sum_{n >= 2} (pi^n / n!) 2^(n-1) pi^(n-1) r^n`` with ``r = max(|p1|, |q1|)``.

    >>> grid = Grid.full(9)
    >>> series_bound(GridFunction.zeros(grid), GridFunction.zeros(grid))
    0.0
    """
    r = max(l2_norm(p1), l2_norm(q1))
    x = 2 * math.pi**2 * r
    return (math.expm1(x) - x) / (2 * math.pi)


def assemble_kernel(
    known: KnownPart, yq: WeightedGridFunction, yp: WeightedGridFunction
) -> KernelPair:
    """
    Full kernel from the known part and the weighted unknowns on (a, pi).

    The node ``a`` keeps the known value; the node ``pi``, where the weight
    vanishes, is extrapolated linearly.
    """
    ia = known.index_a
    grid = known.grid

    def combine(known_values: np.ndarray, weighted: WeightedGridFunction) -> GridFunction:
        values = known_values.copy()
        unknown = weighted.to_unweighted().values
        values[ia + 1 : grid.n_points - 1] += unknown[1:]
        if grid.n_points - 2 > ia + 1:
            values[-1] = 2 * values[-2] - values[-3]
        else:
            values[-1] = values[-2]
        return GridFunction(grid, values)

    return KernelPair(combine(known.p1.values, yp), combine(known.q1.values, yq))


@dataclass(frozen=True, eq=False)
class UnknownPartSolution:
    """Weighted unknowns ``(pi - t) q2`` and ``(pi - t) p2`` on (a, pi)."""

    q2: WeightedGridFunction
    p2: WeightedGridFunction
    kernel: KernelPair
    iterations: int
    history: list[float] = field(default_factory=list)

    @property
    def mismatch(self) -> float:
        return self.history[-1] if self.history else 0.0

    def print(self, *args: Any, **kwargs: Any) -> None:
        print(
            f"  unknown part on [{self.q2.grid.x_start:.6g}, pi]: "
            f"{self.iterations} iterations, mismatch {self.mismatch:.3e}",
            *args,
            **kwargs,
        )


def _weighted_mismatch(diff1: np.ndarray, diff2: np.ndarray, step: float) -> float:
    return math.sqrt(step * float(np.sum(np.abs(diff1) ** 2 + np.abs(diff2) ** 2)))


def solve_unknown_part(
    known: KnownPart,
    w_full: WPair,
    tail: WPair | None = None,
    initial: tuple[WeightedGridFunction, WeightedGridFunction] | None = None,
    window: int | None = None,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    max_iter: int = MAX_ITER,
    consistency_tol: float = CONSISTENCY_TOL,
) -> UnknownPartSolution:
    """
    Solve for the weighted unknowns so that the kernel's transform pair is ``w_full``.

    Damped fixed-point iteration: the weighted unknown ``(pi - t) q2(t)`` is
    moved by ``theta (w1_cand(pi - t) - w1_target(pi - t))``, and likewise
    ``(pi - t) p2`` with ``w2``. The nodes ``a`` and ``pi`` are not updated.
    ``theta`` starts at 1 and is halved (down to 1/16) whenever a step would
    increase the mismatch.
    """
    grid = known.grid
    if w_full.grid != grid:
        err = f"w_full must live on the kernel grid {grid}, got {w_full.grid}"
        raise InvalidArgumentError(err)
    tail = tail if tail is not None else w_tail(known, window)
    supplied = w_full.restrict(tail.grid)
    scale = max(w_full.norm(), 1e-300)
    inconsistency = (supplied - tail).norm() / max(tail.norm(), supplied.norm(), 1e-300)
    if (supplied - tail).norm() > abs_tol and inconsistency > consistency_tol:
        err = (
            f"w on (b, pi) disagrees with the known part: relative difference "
            f"{inconsistency:.3e} > {consistency_tol:.1e}"
        )
        raise InconsistentDataError(err, residual=inconsistency)

    unknown_grid = grid.subgrid(known.a, math.pi)
    ia = known.index_a
    n = grid.n_points
    # t in (a, pi) maps to pi - t in (0, b): full-grid indices n-1-i
    mirror = np.arange(n - 1 - ia, -1, -1)
    target1 = w_full.w1.values[mirror]
    target2 = w_full.w2.values[mirror]
    active = np.ones(unknown_grid.n_points, dtype=bool)
    active[0] = active[-1] = False

    if initial is None:
        yq = WeightedGridFunction.zeros(unknown_grid)
        yp = WeightedGridFunction.zeros(unknown_grid)
    else:
        yq, yp = initial
        if yq.grid != unknown_grid or yp.grid != unknown_grid:
            err = f"Initial iterate must live on {unknown_grid}"
            raise InvalidArgumentError(err)
        yq = yq.with_values(np.where(active, yq.values, 0.0))
        yp = yp.with_values(np.where(active, yp.values, 0.0))

    def evaluate(
        yq: WeightedGridFunction, yp: WeightedGridFunction
    ) -> tuple[KernelPair, np.ndarray, np.ndarray, float]:
        kernel = assemble_kernel(known, yq, yp)
        cand = extract_w_fit(kernel, window=window).w
        diff1 = np.where(active, cand.w1.values[mirror] - target1, 0.0)
        diff2 = np.where(active, cand.w2.values[mirror] - target2, 0.0)
        return kernel, diff1, diff2, _weighted_mismatch(diff1, diff2, grid.step)

    tolerance = max(abs_tol, rel_tol * scale)
    kernel, diff1, diff2, mismatch = evaluate(yq, yp)
    history = [mismatch]
    theta = 1.0
    iteration = 0
    while mismatch > tolerance:
        if iteration >= max_iter:
            err = (
                f"Fixed-point iteration did not converge in {max_iter} steps: "
                f"mismatch {mismatch:.3e} > {tolerance:.3e}"
            )
            raise ConvergenceError(err, history=history)
        iteration += 1
        trial_q = yq + theta * diff1
        trial_p = yp + theta * diff2
        trial = evaluate(trial_q, trial_p)
        if trial[3] > mismatch and theta > MIN_DAMPING:
            theta = max(theta / 2, MIN_DAMPING)
            LOGGER.debug(
                "Iteration %d: mismatch would grow to %.3e, damping to %.4g",
                iteration,
                trial[3],
                theta,
            )
            continue
        yq, yp = trial_q, trial_p
        kernel, diff1, diff2, mismatch = trial
        history.append(mismatch)
        LOGGER.debug("Iteration %d: mismatch %.3e (theta %.4g)", iteration, mismatch, theta)

    LOGGER.info(
        "Unknown part converged after %d iterations, mismatch %.3e", iteration, mismatch
    )
    return UnknownPartSolution(yq, yp, kernel, iteration, history)


def subspectrum_residual(kernel: KernelPair, sub: Subspectrum) -> float:
    """Largest ``|Delta^(j)(lambda_k)|``, ``j < m_k``, of ``kernel`` over the subspectrum."""
    worst = float(np.max(np.abs(char_fn(kernel, np.array(sub.values)))))
    for value, mult in sub.points:
        for j in range(1, mult):
            worst = max(worst, abs(char_fn_derivative(kernel, value, j)))
    return worst


def head_tail_fraction(head: HeadReconstruction, basis: BasisSystem) -> float:
    """Share of the coordinate norm carried by the outer quarter of the window."""
    total = float(np.linalg.norm(head.coefficients))
    if len(basis) < 8 or total < NEGLIGIBLE_HEAD:
        return 0.0
    reach = np.array([abs(lam.real) for lam, _ in basis.labels])
    outer = reach >= 0.75 * reach.max()
    return float(np.linalg.norm(head.coefficients[outer])) / total


@dataclass(frozen=True, eq=False)
class InversionResult:
    kernel: KernelPair
    known: KnownPart
    head: HeadReconstruction
    solution: UnknownPartSolution
    diagnostics: dict[str, dict[str, float]]
    extraction: WFit

    def p2(self) -> WeightedGridFunction:
        return self.solution.p2

    def q2(self) -> WeightedGridFunction:
        return self.solution.q2

    def print(self, *args: Any, **kwargs: Any) -> None:
        lines = []
        for stage, values in self.diagnostics.items():
            details = ", ".join(f"{key} {value:.3e}" for key, value in values.items())
            lines.append(f"  {stage:<12} {details}")
        print("\n".join(lines), *args, **kwargs)


def _stage(name: str, func: Callable[[], T]) -> T:
    try:
        return func()
    except DiracError as err:
        LOGGER.debug("Stage %s failed: %s", name, err)
        raise StageError(name, err) from err


def algorithm1(
    known: KnownPart,
    sub: Subspectrum,
    window: int | None = None,
    completeness_threshold: float = COMPLETENESS_THRESHOLD,
    tail_fraction_limit: float = TAIL_FRACTION_LIMIT,
    initial: tuple[WeightedGridFunction, WeightedGridFunction] | None = None,
) -> InversionResult:
    """
    Reconstruct the kernel on (a, pi) from the known part and the subspectrum.

    Stage failures are raised as :class:`StageError` tagged with the stage name.
    """
    diagnostics: dict[str, dict[str, float]] = {}

    fit = _stage("A1B1", lambda: extract_w_fit(known.as_kernel(), window=window))
    nonlinear = fit.w - linear_w(known.as_kernel())
    diagnostics["A1B1"] = {
        "norm_A1": l2_norm(nonlinear.w1),
        "norm_B1": l2_norm(nonlinear.w2),
        "extraction_residual": fit.residual,
    }

    tail = _stage("w_tail", lambda: fit.w.restrict(tail_grid(known)))
    diagnostics["w_tail"] = {"norm": tail.norm()}

    e = _stage("E_target", lambda: target_values(sub.points, tail))
    diagnostics["E_target"] = {"count": float(len(e))}

    def check_basis() -> BasisSystem:
        basis = build_basis(sub, head_grid(known))
        score = completeness_score(basis)
        diagnostics["basis"] = {
            "completeness": score,
            "gram_condition": gram(basis).condition,
        }
        if score < completeness_threshold:
            err = (
                f"Subspectrum system looks incomplete: completeness score "
                f"{score:.3e} < {completeness_threshold:.1e}"
            )
            raise ConditioningError(err, condition=math.inf if score == 0 else 1 / score)
        return basis

    basis = _stage("basis", check_basis)

    def head_stage() -> HeadReconstruction:
        head = reconstruct_w_head(basis, e, anchor=boundary_pair(basis.grid, tail))
        fraction = head_tail_fraction(head, basis)
        diagnostics["w_head"] = {
            "residual": head.residual,
            "condition": head.condition,
            "tail_fraction": fraction,
        }
        if fraction > tail_fraction_limit:
            err = (
                f"Head coordinates do not decay (outer share {fraction:.3f}); the "
                "subspectrum is inconsistent with the known part"
            )
            raise InconsistentDataError(err, residual=fraction)
        return head

    head = _stage("w_head", head_stage)

    def unknown_stage() -> UnknownPartSolution:
        w1 = np.empty(known.grid.n_points, dtype=np.complex128)
        w2 = np.empty(known.grid.n_points, dtype=np.complex128)
        # the tail wins at the shared node b
        head_slice = known.grid.slice_of(head.w.grid)
        tail_slice = known.grid.slice_of(tail.grid)
        w1[head_slice] = head.w.w1.values
        w2[head_slice] = head.w.w2.values
        w1[tail_slice] = tail.w1.values
        w2[tail_slice] = tail.w2.values
        w_full = WPair(GridFunction(known.grid, w1), GridFunction(known.grid, w2))
        return solve_unknown_part(known, w_full, tail=tail, initial=initial, window=window)

    solution = _stage("unknown_part", unknown_stage)
    diagnostics["unknown_part"] = {
        "iterations": float(solution.iterations),
        "mismatch": solution.mismatch,
    }
    return InversionResult(solution.kernel, known, head, solution, diagnostics, fit)


def relative_error(
    reconstructed: KernelPair, reference: KernelPair, a: float
) -> float:
    """Relative weighted L2 error of (p, q) on (a, pi) with weight ``pi - t``."""
    sub = reconstructed.grid.subgrid(a, math.pi)
    weight: FloatArray = math.pi - sub.nodes

    def norm(values: np.ndarray) -> float:
        return math.sqrt(float(sub.weights @ np.abs(weight * values) ** 2))

    def part(kernel: KernelPair) -> tuple[np.ndarray, np.ndarray]:
        return restrict(kernel.p, sub).values, restrict(kernel.q, sub).values

    rp, rq = part(reconstructed)
    tp, tq = part(reference)
    diff = math.hypot(norm(rp - tp), norm(rq - tq))
    scale = math.hypot(norm(tp), norm(tq))
    return diff / scale if scale > 0 else diff
