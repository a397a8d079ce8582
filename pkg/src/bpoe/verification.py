"""Independent oracles: finite differences and brute-force grid minimization.

These routines deliberately avoid the analytic machinery of the rest of the
package so they can serve as cross-checks for it.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BadParameter, NonFinite
from .scenario_model import FiniteDistribution

#: Default relative finite-difference step.
FD_STEP = 1e-5


def _probe(f, x):
    value = float(f(x))
    if not math.isfinite(value):
        raise NonFinite(f"function returned {value!r} at {x!r}")
    return value


def fd_gradient(f, x, h: float | None = None) -> np.ndarray:
    """Central finite-difference gradient of a scalar function.

    The step defaults to 1e-5 * max(1, |x_j|) per coordinate.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h is not None and h <= 0.0:
        raise BadParameter("finite-difference step must be positive")
    grad = np.zeros_like(x)
    for j in range(x.size):
        hj = h if h is not None else FD_STEP * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = hj
        grad[j] = (_probe(f, x + e) - _probe(f, x - e)) / (2.0 * hj)
    return grad


def one_sided_derivatives(f, x: float, h: float) -> tuple[float, float]:
    """Left and right difference quotients of a scalar function of a real."""
    if h <= 0.0:
        raise BadParameter("step must be positive")
    fx = _probe(f, x)
    left = (fx - _probe(f, x - h)) / h
    right = (_probe(f, x + h) - fx) / h
    return left, right


def bpoe_grid_oracle(
    dist: FiniteDistribution,
    gamma_max: float | None = None,
    n_grid: int = 10**6,
    refine: int = 1,
) -> tuple[float, float]:
    """Brute-force minimum of E[max{0, gamma g + 1}] on a uniform gamma grid.

    Returns (minimum value, argmin).  The default grid extends to twice the
    largest breakpoint -1/v over negative outcomes, which always brackets
    the true minimizer interval.  Each refinement pass rescans a one-spacing
    window around the current argmin with the same point count, shrinking
    the spacing by a factor n_grid / 2 per pass.
    """
    if n_grid < 2:
        raise BadParameter("n_grid must be at least 2")
    if refine < 0:
        raise BadParameter("refine must be nonnegative")
    v, p = dist.values, dist.probs
    if gamma_max is None:
        neg = v < 0.0
        gamma_max = 2.0 * float((-1.0 / v[neg]).max()) if neg.any() else 1.0
    if gamma_max <= 0.0:
        raise BadParameter("gamma_max must be positive")
    lo, hi = 0.0, gamma_max
    best_val, best_arg = np.inf, 0.0
    chunk = max(2, min(n_grid, 200_000 // max(1, v.size // 8)))
    for _ in range(refine + 1):
        grid = np.linspace(lo, hi, n_grid)
        for start in range(0, n_grid, chunk):
            block = grid[start : start + chunk]
            vals = np.maximum(0.0, block[:, None] * v[None, :] + 1.0) @ p
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val, best_arg = float(vals[i]), float(block[i])
        spacing = (hi - lo) / (n_grid - 1)
        lo = max(0.0, best_arg - spacing)
        hi = best_arg + spacing
    return best_val, best_arg
