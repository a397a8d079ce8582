"""Projected subgradient descent on the buffered failure probability over a box.

A point is reported as stationary when some element y of the outer
subgradient set satisfies the box normal-cone condition: y_j = 0 on
coordinates strictly inside the box, y_j >= 0 at the lower bound, and
y_j <= 0 at the upper bound.  This is a necessary condition for local
optimality only; the objective is neither smooth nor convex, so the report
says "stationary", never "optimal".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, WrongRegime
from .risk_measures import bpoe
from .scenario_model import PerformanceModel, ScenarioSet, push_forward
from .simplex import lp_feasible
from .subgradient import SubgradientSet, SubgradientSlice, subgradient_set

#: Tolerance on |x_j - bound| when classifying boundary coordinates,
#: relative to max(1, |bound|).
BOUNDARY_RTOL = 1e-9

#: Stationarity residual below which the descent loop stops.
STATIONARY_TOL = 1e-6


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; entries may be -inf / +inf for unbounded sides."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise BadParameter("box bounds must have equal shape")
        if np.any(lower > upper):
            raise BadParameter("box lower bounds exceed upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class OptimizeReport:
    x_final: np.ndarray
    bpoe_final: float
    iterations: int
    stationarity_residual: float
    trace: tuple[tuple[int, np.ndarray, float], ...]


def project_box(x, box: Box) -> np.ndarray:
    """Componentwise clamp of x into the box."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.clip(x, box.lower, box.upper)


def _at_bound(xj: float, bound: float) -> bool:
    return np.isfinite(bound) and abs(xj - bound) <= BOUNDARY_RTOL * max(
        1.0, abs(bound)
    )


def _coordinate_classes(x: np.ndarray, box: Box) -> list[str]:
    classes = []
    for j in range(x.size):
        lo = _at_bound(x[j], box.lower[j])
        hi = _at_bound(x[j], box.upper[j])
        if lo and hi:
            classes.append("free")  # degenerate box coordinate, no constraint
        elif lo:
            classes.append("lower")
        elif hi:
            classes.append("upper")
        else:
            classes.append("inside")
    return classes


def _slice_normal_cone_feasible(
    slc: SubgradientSlice, classes: list[str], tol: float
) -> bool:
    if slc.gamma_range is not None:
        return _segment_normal_cone_feasible(slc, classes, tol)
    g = slc.gamma_hat
    k = slc.tied_probs.size
    slack = tol / g
    rows_a, rows_b, slack_bounds = [], [], []
    for j, cls in enumerate(classes):
        if cls == "free":
            continue
        a = slc.tied_grads[:, j] if k else np.zeros(0)
        target = -slc.base_vector[j]
        reach = float(slc.tied_probs @ np.abs(a)) if k else 0.0
        big = reach + abs(target) + slack + 1.0
        if cls == "inside":
            lo_u, hi_u = -slack, slack
        elif cls == "lower":
            # y_j >= -tol  <=>  sum t a + u = target with u in [-slack, big]
            lo_u, hi_u = -slack, big
        else:  # upper: y_j <= tol
            lo_u, hi_u = -big, slack
        rows_a.append(a)
        rows_b.append(target)
        slack_bounds.append((lo_u, hi_u))
    n_rows = len(rows_a)
    if n_rows == 0:
        return True
    A = np.zeros((n_rows + 1, k + n_rows))
    b = np.zeros(n_rows + 1)
    for r, (a, target) in enumerate(zip(rows_a, rows_b)):
        A[r, :k] = a
        A[r, k + r] = -1.0  # u_r = sum t a - target, i.e. y_j / gamma_hat
        b[r] = target
    A[n_rows, :k] = 1.0
    b[n_rows] = slc.pattern.tied_mass
    lower = np.concatenate([np.zeros(k), [lb for lb, _ in slack_bounds]])
    upper = np.concatenate([slc.tied_probs, [ub for _, ub in slack_bounds]])
    return lp_feasible(A, b, lower, upper)


def _segment_normal_cone_feasible(
    slc: SubgradientSlice, classes: list[str], tol: float
) -> bool:
    # the slice is the segment {gamma * c}; look for gamma in the range
    # whose image satisfies every coordinate's sign constraint
    glo, ghi = slc.gamma_range
    rows = [(j, cls) for j, cls in enumerate(classes) if cls != "free"]
    if not rows:
        return True
    n_rows = len(rows)
    big = ghi * float(np.abs(slc.base_vector).max(initial=0.0)) + tol + 1.0
    A = np.zeros((n_rows, 1 + n_rows))
    b = np.zeros(n_rows)
    slack_bounds = []
    for r, (j, cls) in enumerate(rows):
        A[r, 0] = slc.base_vector[j]
        A[r, 1 + r] = -1.0  # u_r = gamma * c_j, i.e. y_j
        if cls == "inside":
            slack_bounds.append((-tol, tol))
        elif cls == "lower":
            slack_bounds.append((-tol, big))
        else:
            slack_bounds.append((-big, tol))
    lower = np.concatenate([[glo], [lb for lb, _ in slack_bounds]])
    upper = np.concatenate([[ghi], [ub for _, ub in slack_bounds]])
    return lp_feasible(A, b, lower, upper)


def _slice_residual(slc: SubgradientSlice, classes: list[str]) -> float:
    """Infinity-norm separation between attainable and required y intervals.

    Uses the per-coordinate range of the slice, so it is exact in one
    dimension and a lower bound on the true violation otherwise.
    """
    worst = 0.0
    for j, cls in enumerate(classes):
        if cls == "free":
            continue
        lo, hi = slc.coordinate_bounds(j)
        if cls == "inside":
            viol = max(0.0, lo, -hi)
        elif cls == "lower":
            viol = max(0.0, -hi)
        else:
            viol = max(0.0, lo)
        worst = max(worst, viol)
    return worst


def stationarity_check(
    scenarios: ScenarioSet,
    model: PerformanceModel,
    x,
    box: Box,
    tol: float = 1e-9,
    y_set: SubgradientSet | None = None,
) -> tuple[bool, float]:
    """Box normal-cone stationarity test at x.

    Returns (stationary, residual).  The residual is 0 when some slice is
    feasible and otherwise the smallest coordinate-interval violation over
    slices.  ``y_set`` may be passed to reuse an already computed set.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if y_set is None:
        y_set = subgradient_set(scenarios, model, x)
    classes = _coordinate_classes(x, box)
    for slc in y_set.slices:
        if _slice_normal_cone_feasible(slc, classes, tol):
            return True, 0.0
    residual = min(_slice_residual(slc, classes) for slc in y_set.slices)
    return False, max(residual, np.finfo(float).tiny)


def _descent_direction(slc: SubgradientSlice) -> np.ndarray:
    """Subgradient pick: the unique point when the tied set is empty, else
    the per-coordinate midpoint of the slice bounds (a heuristic; the outer
    set characterization does not single out an element)."""
    if slc.tied_probs.size == 0:
        return slc.gamma_hat * slc.base_vector
    n = slc.base_vector.size
    return np.array(
        [0.5 * sum(slc.coordinate_bounds(j)) for j in range(n)], dtype=float
    )


def projected_subgradient(
    scenarios: ScenarioSet,
    model: PerformanceModel,
    x0,
    box: Box,
    max_iter: int = 500,
    step0: float = 1.0,
) -> OptimizeReport:
    """Projected subgradient descent with diminishing steps step0 / sqrt(k+1).

    Stops when the stationarity residual drops to 1e-6 or the iteration
    budget runs out.  Raises WrongRegime with the offending iterate attached
    if an iterate leaves the interior regime.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if not box.contains(x):
        raise BadParameter("x0 must lie in the box")
    if max_iter < 1:
        raise BadParameter("max_iter must be at least 1")
    trace = []
    residual = np.inf
    iterations = 0
    for k in range(max_iter):
        try:
            y_set = subgradient_set(scenarios, model, x)
        except WrongRegime as exc:
            raise WrongRegime(
                f"iterate {k} left the interior regime at x={x.tolist()}",
                iterate=x.copy(),
            ) from exc
        value = bpoe(push_forward(model, scenarios, x)).value
        trace.append((k, x.copy(), value))
        iterations = k + 1
        stationary, residual = stationarity_check(
            scenarios, model, x, box, y_set=y_set
        )
        if stationary or residual <= STATIONARY_TOL:
            break
        y = _descent_direction(y_set.interior_slice)
        x = project_box(x - step0 / np.sqrt(k + 1.0) * y, box)
    final_value = bpoe(push_forward(model, scenarios, x)).value
    if not trace or not np.array_equal(trace[-1][1], x):
        trace.append((iterations, x.copy(), final_value))
    return OptimizeReport(
        x_final=x,
        bpoe_final=final_value,
        iterations=iterations,
        stationarity_residual=float(residual),
        trace=tuple(trace),
    )
