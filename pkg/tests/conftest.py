"""Shared fixtures and randomized instance generators."""

from __future__ import annotations

import numpy as np
import pytest

from bpoe import (
    AffineScenarioModel,
    ScenarioSet,
    failure_prob,
    gamma_set,
    push_forward,
    subgradient_set,
)
from bpoe.repro import bernoulli_shortfall_instance


@pytest.fixture
def bernoulli_instance():
    """Two equiprobable outcomes {0, 1} under g = x * xi - 1."""
    return bernoulli_shortfall_instance()


def random_interior_instance(rng, max_nu=50, max_n=5):
    """Random affine instance whose pushforward sits in the interior regime."""
    while True:
        nu = int(rng.integers(2, max_nu + 1))
        n = int(rng.integers(1, max_n + 1))
        a = rng.normal(size=(nu, n))
        b = rng.normal(size=nu) - 0.8
        probs = rng.dirichlet(np.ones(nu))
        x = rng.normal(size=n)
        scenarios = ScenarioSet(np.column_stack([b, a]), probs)
        model = AffineScenarioModel(n)
        dist = push_forward(model, scenarios, x)
        if dist.mean() < -1e-3 and failure_prob(dist) > 1e-3:
            return scenarios, model, x, dist


def random_smooth_scalar_instance(rng, margin=1e-3):
    """Scalar affine instance at a smoothness point of the bPOE.

    Filters for distinct outcome values with healthy gaps, a unique
    minimizer, non-tied slacks bounded away from zero, a strict sandwich
    index, and an outer subgradient set that collapses to a single point.
    """
    while True:
        scenarios, model, x, dist = random_interior_instance(rng, max_nu=12, max_n=1)
        v = np.sort(dist.values)
        if v.size > 1 and float(np.diff(v).min()) <= margin:
            continue
        interval = gamma_set(dist)
        if interval.degenerate_flag != "unique":
            continue
        slack = interval.lo * dist.values + 1.0
        near = np.abs(slack) <= margin
        if near.sum() != 1:
            continue
        order = np.argsort(dist.values)
        tail = np.cumsum((dist.probs[order] * dist.values[order])[::-1])[::-1]
        tail = np.append(tail, 0.0)
        sandwich = (tail[:-1] < -margin) & (tail[1:] > margin)
        if not sandwich.any():
            continue
        y_set = subgradient_set(scenarios, model, x)
        if not all(slc.is_singleton(1e-10) for slc in y_set.slices):
            continue
        return scenarios, model, x, dist
