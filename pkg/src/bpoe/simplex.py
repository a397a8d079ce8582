"""Small dense phase-one simplex for box-constrained linear feasibility."""

from __future__ import annotations

import logging

import numpy as np

from .errors import BadParameter

logger = logging.getLogger(__name__)

#: Tolerance on constraint residuals when declaring feasibility.
RESIDUAL_TOL = 1e-9

_PIVOT_TOL = 1e-11


def lp_feasible(A_eq, b_eq, lower, upper, tol: float = RESIDUAL_TOL) -> bool:
    """Decide whether some x with lower <= x <= upper solves A_eq x = b_eq.

    The system is shifted to nonnegative variables, upper bounds become slack
    rows, and a phase-one simplex with Bland's rule drives the artificial
    variables to zero.  Feasibility is declared when the residual objective
    drops below ``tol`` times the problem scale.  Bounds must be finite.
    """
    A = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b = np.atleast_1d(np.asarray(b_eq, dtype=float))
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    m, n = A.shape
    if b.shape != (m,) or lower.shape != (n,) or upper.shape != (n,):
        raise BadParameter("inconsistent dimensions in lp_feasible")
    if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
        raise BadParameter("lp_feasible requires finite bounds")
    if np.any(lower > upper):
        raise BadParameter("lower bounds exceed upper bounds")

    # shift: z = x - lower, 0 <= z <= u; append slack rows z + w = u
    u = upper - lower
    d = b - A @ lower
    M = np.zeros((m + n, 2 * n))
    M[:m, :n] = A
    M[m:, :n] = np.eye(n)
    M[m:, n:] = np.eye(n)
    rhs = np.concatenate([d, u])

    # flip rows so the right-hand side is nonnegative for the artificial basis
    flip = rhs < 0
    M[flip] *= -1.0
    rhs[flip] *= -1.0

    scale = max(1.0, float(np.abs(rhs).max()))
    residual = _phase_one(M, rhs)
    feasible = residual <= tol * scale
    if not feasible and residual <= 10.0 * tol * scale:
        logger.debug("near-degenerate infeasibility: residual %.3e", residual)
    return feasible


def _phase_one(M: np.ndarray, rhs: np.ndarray) -> float:
    """Minimal attainable sum of artificial variables for M z = rhs, z >= 0."""
    m, n = M.shape
    # tableau: [M | I | rhs] with the reduced-cost row at the bottom
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = M
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = rhs
    T[m, :n] = -M.sum(axis=0)
    T[m, -1] = -rhs.sum()
    basis = list(range(n, n + m))

    max_pivots = 50 * (n + m) + 200  # Bland's rule terminates; belt and braces
    for _ in range(max_pivots):
        entering = -1
        for j in range(n + m):
            if T[m, j] < -_PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            break
        leaving = -1
        best_ratio = np.inf
        for i in range(m):
            coeff = T[i, entering]
            if coeff > _PIVOT_TOL:
                ratio = T[i, -1] / coeff
                if ratio < best_ratio - 1e-14 or (
                    abs(ratio - best_ratio) <= 1e-14
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            # phase-one objective is bounded below; unboundedness means
            # numerical breakdown, report the current residual
            logger.warning("phase-one simplex hit an unbounded direction")
            break
        _pivot(T, leaving, entering)
        basis[leaving] = entering
    else:
        logger.warning("phase-one simplex exhausted its pivot budget")
    return float(-T[m, -1])


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
