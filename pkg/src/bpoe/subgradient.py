"""Outer estimate of the bPOE subdifferential for finite distributions.

For a finite distribution, every subgradient y of the buffered failure
probability at x_hat has the form

    y = gamma_hat * sum_i p_i mu_i grad_x g(xi_i, x_hat)

for some minimizer gamma_hat of the min-formula objective and multipliers
mu_i that are pinned to 0 or 1 by the sign of gamma_hat * g_i + 1 and free
in [0, 1] on the tied scenarios, subject to sum_i p_i mu_i g_i = 0.  The set
of all such y, denoted here by the slices of :class:`SubgradientSet`, is an
OUTER estimate of the subdifferential: it can strictly contain it, and this
module never claims otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleMultipliers, NotApplicable, WrongRegime
from .risk_measures import gamma_set
from .scenario_model import (
    FiniteDistribution,
    PerformanceModel,
    ScenarioSet,
    push_forward,
)
from .simplex import lp_feasible

#: Relative tie tolerance on |gamma_hat * v_i + 1|; matched to the scale of
#: the breakpoint computation so classification agrees with gamma_set.
TIE_RTOL = 1e-9

#: Guard on exhaustive vertex enumeration of a tied polytope.
MAX_VERTEX_TIED = 12


def default_tie_tol(dist: FiniteDistribution, gamma_hat: float) -> float:
    return TIE_RTOL * (float(np.abs(dist.values).max()) * gamma_hat + 1.0)


@dataclass(frozen=True)
class MultiplierPattern:
    """Forced-0 / forced-1 / tied classification of scenarios at gamma_hat.

    ``tied_mass`` is the probability mass that the tied multipliers must
    absorb for the equality constraint sum p_i mu_i g_i = 0 to hold.
    """

    gamma_hat: float
    forced_zero: tuple[int, ...]
    forced_one: tuple[int, ...]
    tied: tuple[int, ...]
    tied_mass: float


@dataclass(frozen=True)
class SubgradientSlice:
    """One activity pattern with its base vector and tied-scenario atoms.

    For an endpoint (or unique) minimizer the slice is the set
    {gamma_hat * (c + sum_k t_k grad_k)} over tied masses t_k in [0, p_k]
    summing to tied_mass, with c the probability-weighted sum of gradients
    over the forced-one scenarios.  For the strict-sign pattern on the
    interior of a nondegenerate minimizer interval the tied set is empty
    (no breakpoint can sit strictly inside the flat stretch) and
    ``gamma_range`` carries the interval, so the slice is the segment
    {gamma * c : gamma in gamma_range}.
    """

    pattern: MultiplierPattern
    base_vector: np.ndarray  # shape (n,)
    tied_probs: np.ndarray  # shape (k,)
    tied_grads: np.ndarray  # shape (k, n)
    gamma_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.gamma_range is not None:
            assert self.tied_probs.size == 0, (
                "interior pattern with a tied scenario: breakpoint inside "
                "the flat optimal stretch"
            )

    @property
    def gamma_hat(self) -> float:
        return self.pattern.gamma_hat

    def is_singleton(self, tol: float = 1e-12) -> bool:
        """True when the slice collapses to a single point."""
        lo, hi = zip(
            *(self.coordinate_bounds(j) for j in range(self.base_vector.size))
        )
        return max(h - l for l, h in zip(lo, hi)) <= tol

    def coordinate_bounds(self, j: int) -> tuple[float, float]:
        """Exact min/max of coordinate j over the slice.

        The extremes of a linear function over {0 <= t <= p, sum t = s} are
        attained by filling the mass greedily from the smallest or largest
        gradient components (fractional knapsack); a gamma-range slice is a
        segment, so its extremes sit at the interval endpoints.
        """
        if self.gamma_range is not None:
            glo, ghi = self.gamma_range
            ends = sorted((glo * self.base_vector[j], ghi * self.base_vector[j]))
            return ends[0], ends[1]
        g = self.gamma_hat
        base = g * self.base_vector[j]
        if self.tied_probs.size == 0:
            return base, base
        a = self.tied_grads[:, j]
        s = self.pattern.tied_mass
        return (
            base + g * _knapsack_extreme(self.tied_probs, a, s, maximize=False),
            base + g * _knapsack_extreme(self.tied_probs, a, s, maximize=True),
        )

    def vertices(self) -> np.ndarray:
        """All vertices of the slice polytope, rows in y-space.

        Only available for small tied sets; the count grows like 2^k.
        """
        if self.gamma_range is not None:
            glo, ghi = self.gamma_range
            ends = np.array([glo * self.base_vector, ghi * self.base_vector])
            return np.unique(np.round(ends, 12), axis=0)
        k = self.tied_probs.size
        if k > MAX_VERTEX_TIED:
            raise NotApplicable(
                f"tied set of size {k} exceeds the vertex enumeration guard"
            )
        if k == 0:
            return (self.gamma_hat * self.base_vector)[None, :]
        points = []
        s = self.pattern.tied_mass
        for order in _vertex_orders(k):
            t = _greedy_fill(self.tied_probs, order, s)
            points.append(self.gamma_hat * (self.base_vector + t @ self.tied_grads))
        return np.unique(np.round(np.array(points), 12), axis=0)


def _vertex_orders(k: int):
    # vertices of {0 <= t <= p, sum t = s} saturate all but one coordinate;
    # enumerate which coordinates are filled first
    import itertools

    for subset in itertools.chain.from_iterable(
        itertools.combinations(range(k), r) for r in range(k + 1)
    ):
        rest = [i for i in range(k) if i not in subset]
        yield list(subset) + rest


def _greedy_fill(p: np.ndarray, order, s: float) -> np.ndarray:
    t = np.zeros_like(p)
    remaining = s
    for i in order:
        take = min(p[i], max(remaining, 0.0))
        t[i] = take
        remaining -= take
    return t


def _knapsack_extreme(p: np.ndarray, a: np.ndarray, s: float, maximize: bool) -> float:
    order = np.argsort(-a if maximize else a, kind="stable")
    t = _greedy_fill(p, order, s)
    return float(t @ a)


@dataclass(frozen=True)
class SubgradientSet:
    """Union of activity-pattern slices: the outer set of subgradients."""

    slices: tuple[SubgradientSlice, ...]
    dim: int

    @property
    def interior_slice(self) -> SubgradientSlice:
        """Slice for the strict-sign pattern on the minimizer interval."""
        return self.slices[0]


def activity_pattern(
    dist: FiniteDistribution, gamma_hat: float, tol: float | None = None
) -> MultiplierPattern:
    """Classify scenarios by the sign of gamma_hat * v_i + 1 at tolerance tol.

    Raises InfeasibleMultipliers when the tied mass required by the equality
    constraint cannot be packed into the tied scenarios, which signals that
    gamma_hat is not a minimizer.
    """
    if gamma_hat <= 0.0:
        raise WrongRegime("activity patterns require gamma_hat > 0")
    if tol is None:
        tol = default_tie_tol(dist, gamma_hat)
    slack = gamma_hat * dist.values + 1.0
    forced_zero = np.flatnonzero(slack < -tol)
    forced_one = np.flatnonzero(slack > tol)
    tied = np.flatnonzero(np.abs(slack) <= tol)
    tied_mass = gamma_hat * float(dist.probs[forced_one] @ dist.values[forced_one])
    capacity = float(dist.probs[tied].sum())
    feas_tol = max(tol, 1e-10)
    if not -feas_tol <= tied_mass <= capacity + feas_tol:
        raise InfeasibleMultipliers(
            f"required tied mass {tied_mass!r} outside [0, {capacity!r}]"
        )
    tied_mass = min(max(tied_mass, 0.0), capacity)
    return MultiplierPattern(
        gamma_hat=gamma_hat,
        forced_zero=tuple(int(i) for i in forced_zero),
        forced_one=tuple(int(i) for i in forced_one),
        tied=tuple(int(i) for i in tied),
        tied_mass=tied_mass,
    )


def _make_slice(
    dist: FiniteDistribution,
    grads: np.ndarray,
    gamma_hat: float,
    gamma_range: tuple[float, float] | None = None,
) -> SubgradientSlice:
    pattern = activity_pattern(dist, gamma_hat)
    one = list(pattern.forced_one)
    tied = list(pattern.tied)
    base = dist.probs[one] @ grads[one] if one else np.zeros(grads.shape[1])
    slc = SubgradientSlice(
        pattern=pattern,
        base_vector=np.asarray(base, dtype=float),
        tied_probs=dist.probs[tied].copy(),
        tied_grads=grads[tied].copy(),
        gamma_range=gamma_range,
    )
    _assert_equality_residual(dist, slc)
    return slc


def _assert_equality_residual(dist: FiniteDistribution, slc: SubgradientSlice) -> None:
    # with tied values at -1/gamma_hat, any greedy fill of the tied mass
    # satisfies sum p_i mu_i v_i = 0; check the residual at one such fill
    one = list(slc.pattern.forced_one)
    tied = list(slc.pattern.tied)
    residual = float(dist.probs[one] @ dist.values[one]) if one else 0.0
    if tied:
        t = _greedy_fill(slc.tied_probs, range(len(tied)), slc.pattern.tied_mass)
        residual += float(t @ dist.values[tied])
    scale = max(1.0, float(np.abs(dist.values).max()))
    assert abs(residual) <= 1e-8 * scale, f"multiplier equality residual {residual}"


def subgradient_set(
    scenarios: ScenarioSet, model: PerformanceModel, x
) -> SubgradientSet:
    """Outer estimate of the bPOE subdifferential at x.

    One slice is built per distinct activity pattern over the minimizer
    interval: the strict-sign pattern of its interior (classified at the
    midpoint and carrying the full interval as its gamma range) and, when
    the interval is nondegenerate, one per endpoint.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dist = push_forward(model, scenarios, x)
    if not (dist.values > 0.0).any() or dist.mean() >= 0.0:
        raise WrongRegime(
            "subgradient sets require a positive outcome and a negative mean"
        )
    grads = model.grad_batch(scenarios.scenarios, x)
    interval = gamma_set(dist)
    if interval.degenerate_flag == "unique":
        slices = (_make_slice(dist, grads, interval.lo),)
    else:
        slices = (
            _make_slice(
                dist, grads, interval.midpoint, gamma_range=(interval.lo, interval.hi)
            ),
            _make_slice(dist, grads, interval.lo),
            _make_slice(dist, grads, interval.hi),
        )
    return SubgradientSet(slices=slices, dim=model.dim)


def coordinate_bounds(y_set: SubgradientSet, j: int) -> tuple[float, float]:
    """Exact min/max of coordinate j over the whole outer set."""
    bounds = [slc.coordinate_bounds(j) for slc in y_set.slices]
    return min(b[0] for b in bounds), max(b[1] for b in bounds)


def contains(y_set: SubgradientSet, y, tol: float = 1e-8) -> bool:
    """Membership of y in the outer set, within tol per coordinate.

    Each slice reduces to a box-constrained linear feasibility problem in
    the tied masses; the per-coordinate tolerance is carried by slack
    variables so the phase-one simplex can decide it exactly.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    for slc in y_set.slices:
        if _slice_contains(slc, y, tol):
            return True
    return False


def _slice_contains(slc: SubgradientSlice, y: np.ndarray, tol: float) -> bool:
    g = slc.gamma_hat
    n = slc.base_vector.size
    k = slc.tied_probs.size
    if slc.gamma_range is not None:
        # the slice is the segment {gamma * c}; membership asks whether some
        # gamma in the range puts every coordinate within tol of y
        glo, ghi = slc.gamma_range
        A = np.zeros((n, 1 + n))
        A[:, 0] = slc.base_vector
        A[:, 1:] = np.eye(n)
        lower = np.concatenate([[glo], np.full(n, -tol)])
        upper = np.concatenate([[ghi], np.full(n, tol)])
        return lp_feasible(A, y, lower, upper)
    target = y / g - slc.base_vector
    slack = tol / g
    if k == 0:
        mass_ok = abs(slc.pattern.tied_mass) <= 1e-10
        return mass_ok and bool(np.all(np.abs(target) <= slack))
    # variables: tied masses t (k), per-coordinate slacks u (n)
    A = np.zeros((n + 1, k + n))
    b = np.zeros(n + 1)
    A[:n, :k] = slc.tied_grads.T
    A[:n, k:] = np.eye(n)
    b[:n] = target
    A[n, :k] = 1.0
    b[n] = slc.pattern.tied_mass
    lower = np.concatenate([np.zeros(k), np.full(n, -slack)])
    upper = np.concatenate([slc.tied_probs, np.full(n, slack)])
    return lp_feasible(A, b, lower, upper)


def distinct_outcome_gradient(
    scenarios: ScenarioSet, model: PerformanceModel, x
) -> np.ndarray:
    """Closed-form gradient for distinct outcome values.

    Sorting the values ascending, the formula needs an index j whose tail
    sums satisfy the strict sandwich sum_{i>=j} p_i g_i < 0 < sum_{i>j} p_i
    g_i; the gradient is then

        sum_{i>j} p_i * (g_i / g_j^2 * grad_j - grad_i / g_j).

    Raises NotApplicable on tied values or when no sandwich index exists.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dist = push_forward(model, scenarios, x)
    if not (dist.values > 0.0).any() or dist.mean() >= 0.0:
        raise WrongRegime("distinct-outcome gradient requires the interior regime")
    grads = model.grad_batch(scenarios.scenarios, x)
    order = np.argsort(dist.values, kind="stable")
    v = dist.values[order]
    p = dist.probs[order]
    gr = grads[order]
    scale = max(1.0, float(np.abs(v).max()))
    if v.size > 1 and float(np.diff(v).min()) <= 1e-9 * scale:
        raise NotApplicable("outcome values are tied")
    # tail[i] = sum_{l >= i} p_l v_l
    tail = np.cumsum((p * v)[::-1])[::-1]
    tail = np.append(tail, 0.0)
    sandwich = np.flatnonzero((tail[:-1] < 0.0) & (tail[1:] > 0.0))
    if sandwich.size == 0:
        raise NotApplicable("no strict sandwich index exists")
    j = int(sandwich[0])
    gj, dj = v[j], gr[j]
    tail_idx = slice(j + 1, v.size)
    weights = p[tail_idx]
    tail_pv = float(weights @ v[tail_idx])
    return np.asarray(
        tail_pv / gj**2 * dj - (weights @ gr[tail_idx]) / gj, dtype=float
    )
