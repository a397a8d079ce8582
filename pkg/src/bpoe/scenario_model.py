"""Finite distributions, scenario sets, and performance models.

A scenario set holds the outcomes of the driving random vector together with
their probabilities.  A performance model maps an outcome and a decision
vector to a scalar quantity of interest and its gradient with respect to the
decision.  Pushing a scenario set through a model yields the finite
distribution of the quantity of interest, keeping one atom per scenario even
when values tie: multiplier bookkeeping downstream is indexed by scenario,
and consolidating atoms would change which formulas apply.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import itertools
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParameter,
    BadProbabilities,
    DimensionMismatch,
    MalformedFile,
)

PROB_SUM_ATOL = 1e-12
RENORM_TOL = 1e-9


def _check_probs(probs: np.ndarray) -> None:
    if probs.size == 0:
        raise BadProbabilities("empty probability vector")
    if np.any(probs <= 0):
        raise BadProbabilities("all probabilities must be strictly positive")
    total = float(probs.sum())
    if abs(total - 1.0) > PROB_SUM_ATOL:
        raise BadProbabilities(
            f"probabilities sum to {total!r}, expected 1 within {PROB_SUM_ATOL}"
        )


@dataclass(frozen=True)
class FiniteDistribution:
    """Outcomes of a scalar random value with strictly positive probabilities.

    Values need not be distinct; ties are deliberately preserved so that each
    atom keeps its scenario identity.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise BadParameter("values must be a nonempty 1-d array")
        if probs.shape != values.shape:
            raise DimensionMismatch("values and probs must have equal length")
        _check_probs(probs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        self.values.setflags(write=False)
        self.probs.setflags(write=False)

    def __len__(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.probs @ self.values)

    def scaled(self, c: float) -> "FiniteDistribution":
        """Distribution of c times the random value, c > 0."""
        if c <= 0:
            raise BadParameter("scaling factor must be positive")
        return FiniteDistribution(self.values * c, self.probs)


@dataclass(frozen=True)
class ScenarioSet:
    """Outcome vectors of the driving random vector with their probabilities."""

    scenarios: np.ndarray  # shape (nu, m)
    probs: np.ndarray  # shape (nu,)

    def __post_init__(self):
        scenarios = np.asarray(self.scenarios, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if scenarios.ndim != 2 or scenarios.shape[0] == 0:
            raise BadParameter("scenarios must be a nonempty 2-d array")
        if probs.shape != (scenarios.shape[0],):
            raise DimensionMismatch("one probability per scenario required")
        _check_probs(probs)
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "probs", probs)
        self.scenarios.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def n_scenarios(self) -> int:
        return self.scenarios.shape[0]

    @property
    def outcome_dim(self) -> int:
        return self.scenarios.shape[1]


class PerformanceModel(ABC):
    """Evaluation contract for a quantity of interest g(xi, x).

    Implementations must be pure: repeated calls with the same arguments
    return identical results, and no internal state is mutated.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension n of the decision vector x."""

    @abstractmethod
    def eval(self, xi: np.ndarray, x: np.ndarray) -> float:
        """Value g(xi, x)."""

    @abstractmethod
    def grad(self, xi: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Gradient of g with respect to x, shape (n,)."""

    def eval_batch(self, xis: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Values for a (k, m) batch of outcomes; default loops over rows."""
        return np.array([self.eval(xi, x) for xi in xis], dtype=float)

    def grad_batch(self, xis: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Gradients for a (k, m) batch of outcomes, shape (k, n)."""
        return np.array([self.grad(xi, x) for xi in xis], dtype=float)


def _as_decision(x, n: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (n,):
        raise DimensionMismatch(f"decision vector must have shape ({n},), got {x.shape}")
    return x


@dataclass(frozen=True)
class AffineScenarioModel(PerformanceModel):
    """Affine-per-scenario model where the outcome carries its coefficients.

    Each outcome vector is xi = (b, a_1, ..., a_n) and
    g(xi, x) = b + a . x, so the gradient is the coefficient block of xi.
    """

    n: int

    @property
    def dim(self) -> int:
        return self.n

    def eval(self, xi, x) -> float:
        xi = np.asarray(xi, dtype=float)
        x = _as_decision(x, self.n)
        return float(xi[0] + xi[1:] @ x)

    def grad(self, xi, x) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        _as_decision(x, self.n)
        return np.array(xi[1:], dtype=float)

    def eval_batch(self, xis, x) -> np.ndarray:
        xis = np.asarray(xis, dtype=float)
        x = _as_decision(x, self.n)
        return xis[:, 0] + xis[:, 1:] @ x

    def grad_batch(self, xis, x) -> np.ndarray:
        xis = np.asarray(xis, dtype=float)
        _as_decision(x, self.n)
        return np.array(xis[:, 1:], dtype=float)


@dataclass(frozen=True)
class BilinearModel(PerformanceModel):
    """Scalar model g(xi, x) = x * xi + offset with scalar outcome and decision."""

    offset: float = -1.0

    @property
    def dim(self) -> int:
        return 1

    def eval(self, xi, x) -> float:
        x = _as_decision(x, 1)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return float(x[0] * xi[0] + self.offset)

    def grad(self, xi, x) -> np.ndarray:
        _as_decision(x, 1)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return np.array([xi[0]], dtype=float)

    def eval_batch(self, xis, x) -> np.ndarray:
        x = _as_decision(x, 1)
        xis = np.asarray(xis, dtype=float).reshape(-1)
        return x[0] * xis + self.offset

    def grad_batch(self, xis, x) -> np.ndarray:
        _as_decision(x, 1)
        xis = np.asarray(xis, dtype=float).reshape(-1)
        return xis[:, None].copy()


@dataclass(frozen=True)
class NewsvendorModel(PerformanceModel):
    """Nonsmooth-in-x model g(xi, x) = max{0, beta * (x - xi)}.

    The kink sits on the set {x = xi}; for a continuous outcome distribution
    that set has probability zero, which is exactly the situation the
    continuous-gradient assumptions allow.
    """

    beta: float = 1.0

    @property
    def dim(self) -> int:
        return 1

    def eval(self, xi, x) -> float:
        x = _as_decision(x, 1)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return float(max(0.0, self.beta * (x[0] - xi[0])))

    def grad(self, xi, x) -> np.ndarray:
        x = _as_decision(x, 1)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        active = self.beta * (x[0] - xi[0]) > 0
        return np.array([self.beta if active else 0.0])

    def eval_batch(self, xis, x) -> np.ndarray:
        x = _as_decision(x, 1)
        xis = np.asarray(xis, dtype=float).reshape(-1)
        return np.maximum(0.0, self.beta * (x[0] - xis))

    def grad_batch(self, xis, x) -> np.ndarray:
        x = _as_decision(x, 1)
        xis = np.asarray(xis, dtype=float).reshape(-1)
        g = np.where(self.beta * (x[0] - xis) > 0, self.beta, 0.0)
        return g[:, None]


_FULL = (1.0, 1.0, 1.0, 1.0)
_HALF = ((1.0, 1.0, 0.0, 1.0), (1.0, 1.0, 1.0, 0.0))


@dataclass(frozen=True)
class NetworkFlowModel(PerformanceModel):
    """Flow-shortfall of the four-component bridge network, scalar decision.

    Components 1 and 2 have capacity 2x, components 3 and 4 capacity x, and
    the target is one unit of delivered flow.  The shortfall is affine in x
    for each survival pattern: 1 - 2x when all components survive, 1 - x when
    exactly one of components 3, 4 fails, and 1 otherwise.
    """

    @property
    def dim(self) -> int:
        return 1

    def _coeff(self, xi) -> float:
        key = tuple(np.asarray(xi, dtype=float))
        if key == _FULL:
            return -2.0
        if key in _HALF:
            return -1.0
        return 0.0

    def eval(self, xi, x) -> float:
        x = _as_decision(x, 1)
        return 1.0 + self._coeff(xi) * x[0]

    def grad(self, xi, x) -> np.ndarray:
        _as_decision(x, 1)
        return np.array([self._coeff(xi)])


def network_flow_model(rho: float) -> tuple[ScenarioSet, NetworkFlowModel]:
    """Product-Bernoulli scenario set over four component states, failure prob rho.

    Outcomes are ordered with the three flow-carrying patterns first:
    (1,1,1,1), (1,1,0,1), (1,1,1,0), followed by the remaining 13 patterns.
    """
    if not 0.0 < rho < 1.0:
        raise BadParameter(f"rho must lie in (0, 1), got {rho}")
    special = [_FULL, *_HALF]
    rest = [
        pattern
        for pattern in itertools.product((1.0, 0.0), repeat=4)
        if pattern not in special
    ]
    patterns = np.array(special + rest)
    survive = 1.0 - rho
    probs = np.prod(np.where(patterns == 1.0, survive, rho), axis=1)
    return ScenarioSet(patterns, probs), NetworkFlowModel()


def bernoulli_scenario_set(p_one: float = 0.5) -> ScenarioSet:
    """Two scalar outcomes {0, 1} with P(1) = p_one."""
    if not 0.0 < p_one < 1.0:
        raise BadParameter("p_one must lie in (0, 1)")
    return ScenarioSet(np.array([[0.0], [1.0]]), np.array([1.0 - p_one, p_one]))


def push_forward(
    model: PerformanceModel, scenarios: ScenarioSet, x
) -> FiniteDistribution:
    """Distribution of g(xi, x) over the scenario set.

    Scenario order and probabilities are preserved exactly; tied values are
    never merged.
    """
    x = _as_decision(x, model.dim)
    values = model.eval_batch(scenarios.scenarios, x)
    return FiniteDistribution(values, scenarios.probs)


def _rows_to_scenarios(rows, source: str) -> tuple[ScenarioSet, AffineScenarioModel]:
    probs, data = [], []
    n = None
    for prob, b, a in rows:
        if n is None:
            n = len(a)
        elif len(a) != n:
            raise MalformedFile(f"{source}: inconsistent coefficient arity")
        probs.append(prob)
        data.append([b, *a])
    if n is None:
        raise MalformedFile(f"{source}: no scenario rows")
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0):
        raise BadProbabilities(f"{source}: probabilities must be positive")
    total = float(probs.sum())
    if abs(total - 1.0) > RENORM_TOL:
        raise BadProbabilities(
            f"{source}: probabilities sum to {total!r}, off by more than {RENORM_TOL}"
        )
    probs = probs / total
    return ScenarioSet(np.asarray(data, dtype=float), probs), AffineScenarioModel(n)


def _parse_csv(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedFile(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        n = len(header) - 2
        expected = ["prob", "b"] + [f"a{j}" for j in range(1, n + 1)]
        if n < 1 or header != expected:
            raise MalformedFile(
                f"{path}: header must be prob,b,a1,...,an; got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 2:
                raise MalformedFile(f"{path}:{lineno}: expected {n + 2} fields")
            try:
                numbers = [float(field) for field in row]
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from None
            rows.append((numbers[0], numbers[1], numbers[2:]))
    return rows


def _parse_json(path) -> list:
    with open(path, encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: {exc}") from None
    try:
        entries = payload["scenarios"]
        rows = [
            (float(e["prob"]), float(e["b"]), [float(v) for v in e["a"]])
            for e in entries
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{path}: bad scenario payload ({exc})") from None
    return rows


def load_scenarios(
    path, format: str | None = None
) -> tuple[ScenarioSet, AffineScenarioModel]:
    """Load an affine scenario file.

    CSV header is ``prob,b,a1,...,an``; the JSON mirror is
    ``{"scenarios": [{"prob": ..., "b": ..., "a": [...]}]}``.  Probabilities
    are renormalized only if their sum deviates from 1 by at most 1e-9.
    """
    if format is None:
        format = "json" if str(path).lower().endswith(".json") else "csv"
    if format == "csv":
        rows = _parse_csv(path)
    elif format == "json":
        rows = _parse_json(path)
    else:
        raise BadParameter(f"unknown format {format!r}")
    return _rows_to_scenarios(rows, str(path))


#: Built-in model factories keyed by the names the CLI accepts.
MODEL_REGISTRY = {
    "affine": AffineScenarioModel,
    "network": NetworkFlowModel,
    "bilinear": BilinearModel,
    "newsvendor": NewsvendorModel,
}
