"""Desk-scale reproduction checks for the three worked models.

Each runner returns a list of :class:`Check` rows comparing a closed-form
expected value against the library's computation.  The CLI renders them as a
pass/fail table; the acceptance tests assert on them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuous_grad import UniformSampler, mc_gradient
from .errors import NotApplicable
from .risk_measures import bpoe
from .scenario_model import (
    BilinearModel,
    bernoulli_scenario_set,
    network_flow_model,
    push_forward,
)
from .subgradient import (
    contains,
    coordinate_bounds,
    distinct_outcome_gradient,
    subgradient_set,
)
from .verification import one_sided_derivatives


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    computed: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.expected) <= self.tol


def bernoulli_shortfall_instance():
    """Two equiprobable outcomes {0, 1} under g(xi, x) = x * xi - 1."""
    return bernoulli_scenario_set(0.5), BilinearModel(offset=-1.0)


def network_kink_point(rho: float) -> float:
    """Decision value where the two branches of the network bPOE meet."""
    s = 1.0 - rho
    return (1.0 - s**4) / (2.0 * s**3 * rho)


def network_branch_coeffs(rho: float) -> tuple[float, float]:
    """(sigma, tau) weights of the two closed-form bPOE branches."""
    s = 1.0 - rho
    sigma = 1.0 - s**4 - s**3 * rho
    tau = 1.0 - s**4 - 2.0 * s**3 * rho
    return sigma, tau


def network_bpoe_closed_form(x: float, rho: float) -> float:
    """Piecewise closed form of the network bPOE on its two branches."""
    sigma, tau = network_branch_coeffs(rho)
    x_hat = network_kink_point(rho)
    if x <= x_hat:
        return 2.0 * sigma * x / (2.0 * x - 1.0)
    return tau * x / (x - 1.0)


def run_bernoulli_checks(x_hat: float = 1.5) -> list[Check]:
    scenarios, model = bernoulli_shortfall_instance()
    dist = push_forward(model, scenarios, x_hat)
    result_min = bpoe(dist, method="min_formula")
    result_def = bpoe(dist, method="definitional")
    y_set = subgradient_set(scenarios, model, x_hat)
    lo, hi = coordinate_bounds(y_set, 0)
    grad = distinct_outcome_gradient(scenarios, model, x_hat)
    return [
        Check("bpoe (min formula)", x_hat / 2.0, result_min.value, 1e-9),
        Check("bpoe (definitional)", x_hat / 2.0, result_def.value, 1e-9),
        Check("alpha_bar", 1.0 - x_hat / 2.0, result_def.alpha_bar, 1e-9),
        Check("gamma lo", 1.0, result_min.gamma.lo, 1e-9),
        Check("gamma hi", 1.0, result_min.gamma.hi, 1e-9),
        Check("subgradient lower bound", 0.5, lo, 1e-9),
        Check("subgradient upper bound", 0.5, hi, 1e-9),
        Check("distinct-outcome gradient", 0.5, float(grad[0]), 1e-9),
        Check(
            "membership of 0.5",
            1.0,
            1.0 if contains(y_set, [0.5]) else 0.0,
            0.0,
        ),
    ]


def run_uniform_mc_checks(
    seed: int = 0, n_samples: int = 10**6, xs=(4.0 / 3.0, 2.0, 3.0)
) -> list[Check]:
    """Monte Carlo gradient of g(xi, x) = x * xi - 1, xi uniform on [-1, 1].

    The closed-form gradient is 1/x^2 with minimizer 1/(x - 1).
    """
    sampler = UniformSampler(-1.0, 1.0)
    model = BilinearModel(offset=-1.0)
    checks = []
    for x in xs:
        est = mc_gradient(sampler, model, [x], n_samples, seed)
        grad_tol = max(4.0 * float(est.stderr[0]), 5e-3)
        checks.append(
            Check(f"mc gradient at x={x:.4g}", 1.0 / x**2, float(est.mean[0]), grad_tol)
        )
        checks.append(
            Check(f"gamma_hat at x={x:.4g}", 1.0 / (x - 1.0), est.gamma_hat, 0.01)
        )
    return checks


def run_network_checks(rho: float = 0.1) -> list[Check]:
    scenarios, model = network_flow_model(rho)
    sigma, tau = network_branch_coeffs(rho)
    x_hat = network_kink_point(rho)
    checks = [Check("kink location", 2.3587, x_hat, 5e-4)]

    y_set = subgradient_set(scenarios, model, x_hat)
    interval = bpoe(push_forward(model, scenarios, x_hat)).gamma
    checks.append(Check("gamma lo", 1.0 / (2.0 * x_hat - 1.0), interval.lo, 1e-9))
    checks.append(Check("gamma hi", 1.0 / (x_hat - 1.0), interval.hi, 1e-9))
    checks.append(Check("gamma lo (digits)", 0.26900, interval.lo, 1e-4))
    checks.append(Check("gamma hi (digits)", 0.73599, interval.hi, 1e-4))

    left_expected = -2.0 * sigma / (2.0 * x_hat - 1.0) ** 2
    right_expected = -tau / (x_hat - 1.0) ** 2
    lo, hi = coordinate_bounds(y_set, 0)
    checks.append(Check("outer set lower bound", right_expected, lo, 1e-3))
    checks.append(Check("outer set upper bound", left_expected, hi, 1e-3))
    checks.append(Check("outer set lower (digits)", -0.1073, lo, 1e-3))
    checks.append(Check("outer set upper (digits)", -0.0392, hi, 1e-3))

    def value_at(x):
        return bpoe(push_forward(model, scenarios, float(x))).value

    left, right = one_sided_derivatives(value_at, x_hat, 1e-6)
    checks.append(Check("left derivative", left_expected, left, 1e-3))
    checks.append(Check("right derivative", right_expected, right, 1e-3))

    try:
        distinct_outcome_gradient(scenarios, model, x_hat)
        applies = 1.0
    except NotApplicable:
        applies = 0.0
    checks.append(Check("distinct-value formula inapplicable", 0.0, applies, 0.0))

    lo_branch = np.linspace(1.2, x_hat, 50)
    hi_branch = np.linspace(x_hat + 0.05, 6.0, 50)
    worst = 0.0
    for x in np.concatenate([lo_branch, hi_branch]):
        worst = max(worst, abs(value_at(x) - network_bpoe_closed_form(x, rho)))
    checks.append(Check("branch formula max deviation", 0.0, worst, 1e-9))
    return checks


RUNNERS = {
    "example1": run_bernoulli_checks,
    "example2": run_uniform_mc_checks,
    "example3": run_network_checks,
}
