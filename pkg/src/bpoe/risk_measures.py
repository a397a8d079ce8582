"""Quantiles, superquantiles, failure probability, and buffered failure probability.

The buffered failure probability of a scalar random value is computed by two
independent routes:

* definitional: bisection on the probability level until the superquantile
  hits zero;
* min-formula: exact minimization of gamma -> E[max{0, gamma * g + 1}] over
  gamma >= 0 by breakpoint enumeration of the piecewise-linear objective.

Both routes agree in the interior regime (positive failure mass, negative
mean), which the test suite exercises heavily.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadAlpha, BadParameter, ConvergenceError, WrongRegime
from .scenario_model import FiniteDistribution

#: Relative tolerance used to classify segment slopes as zero.
SLOPE_RTOL = 1e-12

#: Absolute tolerance on the probability level in the definitional bisection.
ALPHA_TOL = 1e-12

_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class GammaSet:
    """Closed interval of minimizers of the min-formula objective.

    ``breakpoints`` lists the candidate kinks -1/v_i for the negative
    outcomes, sorted ascending and deduplicated.
    """

    lo: float
    hi: float
    breakpoints: np.ndarray
    degenerate_flag: str  # "unique" or "interval"

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi:
            raise BadParameter("gamma interval must satisfy 0 <= lo <= hi")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, gamma: float, tol: float = 1e-9) -> bool:
        return self.lo - tol <= gamma <= self.hi + tol


@dataclass(frozen=True)
class BpoeResult:
    """Buffered failure probability with regime and minimizer metadata."""

    value: float
    regime: str  # "zero", "interior", or "one"
    alpha_bar: float | None = None
    gamma: GammaSet | None = None


def quantile(dist: FiniteDistribution, alpha: float) -> float:
    """Left-continuous inverse of the distribution function.

    Returns min{t in values : P(value <= t) >= alpha} for alpha in (0, 1).
    """
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1), got {alpha}")
    order = np.argsort(dist.values, kind="stable")
    sorted_values = dist.values[order]
    cum = np.cumsum(dist.probs[order])
    idx = int(np.searchsorted(cum, alpha, side="left"))
    idx = min(idx, sorted_values.size - 1)  # guard cumulative rounding below 1
    return float(sorted_values[idx])


def superquantile(dist: FiniteDistribution, alpha: float) -> float:
    """Tail expectation q_alpha + E[max{0, g - q_alpha}] / (1 - alpha).

    alpha = 0 returns the mean.
    """
    if not 0.0 <= alpha < 1.0:
        raise BadAlpha(f"alpha must lie in [0, 1), got {alpha}")
    if alpha == 0.0:
        return dist.mean()
    q = quantile(dist, alpha)
    excess = float(dist.probs @ np.maximum(0.0, dist.values - q))
    return q + excess / (1.0 - alpha)


def failure_prob(dist: FiniteDistribution) -> float:
    """Probability mass of strictly positive outcomes."""
    return float(dist.probs[dist.values > 0.0].sum())


def objective(dist: FiniteDistribution, gamma: float) -> float:
    """Min-formula integrand E[max{0, gamma * g + 1}] at a single gamma >= 0."""
    if gamma < 0.0:
        raise BadParameter(f"gamma must be nonnegative, got {gamma}")
    return float(dist.probs @ np.maximum(0.0, gamma * dist.values + 1.0))


def _interior_or_raise(dist: FiniteDistribution) -> None:
    if failure_prob(dist) <= 0.0:
        raise WrongRegime("no outcome is strictly positive")
    if dist.mean() >= 0.0:
        raise WrongRegime("mean of the distribution must be negative")


def gamma_set(dist: FiniteDistribution) -> GammaSet:
    """Exact minimizer interval of the piecewise-linear min-formula objective.

    The objective has slope sum(p_i v_i over active i) between consecutive
    breakpoints -1/v_i (v_i < 0); walking the breakpoints in ascending order
    drops one negative term at a time, so the slope is nondecreasing and the
    first sign change pins down the interval.  Outcomes equal to zero
    contribute the constant 1 and generate no breakpoint.
    """
    _interior_or_raise(dist)
    v, p = dist.values, dist.probs
    neg = v < 0.0
    bp = -1.0 / v[neg]
    drops = p[neg] * v[neg]  # negative slope mass lost at each breakpoint
    unique_bp, inverse = np.unique(bp, return_inverse=True)
    drop_per_bp = np.bincount(inverse, weights=drops, minlength=unique_bp.size)

    slope_tol = SLOPE_RTOL * float(p @ np.abs(v))
    # slope on the segment just right of unique_bp[k]
    slope_after = dist.mean() - np.cumsum(drop_per_bp)
    hits = np.flatnonzero(slope_after >= -slope_tol)
    if hits.size == 0:
        raise WrongRegime("objective slope never becomes nonnegative")
    k = int(hits[0])
    lo = float(unique_bp[k])
    if slope_after[k] > slope_tol:
        hi, flag = lo, "unique"
    else:
        # flat optimal stretch: it must end at the very next breakpoint,
        # because crossing a breakpoint changes the slope by p_i v_i != 0
        if k + 1 >= unique_bp.size:
            raise AssertionError("flat optimal stretch with no right endpoint")
        assert slope_after[k + 1] > slope_tol, (
            "breakpoint strictly inside a flat optimal stretch"
        )
        hi, flag = float(unique_bp[k + 1]), "interval"
    return GammaSet(lo, hi, unique_bp, flag)


def _regime(dist: FiniteDistribution) -> str:
    if failure_prob(dist) == 0.0:
        return "zero"
    if dist.mean() < 0.0:
        return "interior"
    return "one"


def _alpha_bar_bisect(dist: FiniteDistribution) -> float:
    """Solve superquantile(alpha) = 0 by bisection on alpha.

    The superquantile is continuous and nondecreasing in alpha; in the
    interior regime it is negative at 0 and strictly positive at
    1 - failure_prob, so the bracket is valid.
    """
    lo, hi = 0.0, 1.0 - failure_prob(dist)
    for _ in range(_BISECT_MAX_ITER):
        if hi - lo <= ALPHA_TOL:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if superquantile(dist, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("superquantile bisection did not reach tolerance")


def bpoe(dist: FiniteDistribution, method: str = "min_formula") -> BpoeResult:
    """Buffered failure probability of the distribution.

    Returns 0 when no outcome is positive, 1 when the mean is nonnegative,
    and otherwise 1 - alpha_bar where the alpha_bar-superquantile is zero.
    ``method`` selects the definitional bisection or the min-formula route;
    the minimizer interval is attached in the interior regime either way.
    """
    if method not in ("definitional", "min_formula"):
        raise BadParameter(f"unknown method {method!r}")
    regime = _regime(dist)
    if regime == "zero":
        return BpoeResult(0.0, "zero")
    if regime == "one":
        return BpoeResult(1.0, "one")
    gamma = gamma_set(dist)
    if method == "definitional":
        alpha_bar = _alpha_bar_bisect(dist)
        value = 1.0 - alpha_bar
    else:
        value = objective(dist, gamma.lo)
        alpha_bar = 1.0 - value
    return BpoeResult(value, "interior", alpha_bar=alpha_bar, gamma=gamma)
