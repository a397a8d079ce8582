"""Buffered failure probability: values, subgradients, gradients, optimization."""

from .continuous_grad import (
    AssumptionReport,
    FiniteResampler,
    GradientEstimate,
    NormalSampler,
    Sampler,
    UniformSampler,
    F_integrand,
    counter_uniform01,
    mc_gradient,
)
from .errors import (
    BadAlpha,
    BadParameter,
    BadProbabilities,
    BpoeError,
    ConvergenceError,
    DegenerateError,
    DimensionMismatch,
    InfeasibleMultipliers,
    MalformedFile,
    NonFinite,
    NotApplicable,
    WrongRegime,
)
from .optimizer import (
    Box,
    OptimizeReport,
    project_box,
    projected_subgradient,
    stationarity_check,
)
from .risk_measures import (
    BpoeResult,
    GammaSet,
    bpoe,
    failure_prob,
    gamma_set,
    objective,
    quantile,
    superquantile,
)
from .scenario_model import (
    AffineScenarioModel,
    BilinearModel,
    FiniteDistribution,
    MODEL_REGISTRY,
    NetworkFlowModel,
    NewsvendorModel,
    PerformanceModel,
    ScenarioSet,
    bernoulli_scenario_set,
    load_scenarios,
    network_flow_model,
    push_forward,
)
from .simplex import lp_feasible
from .subgradient import (
    MultiplierPattern,
    SubgradientSet,
    SubgradientSlice,
    activity_pattern,
    contains,
    coordinate_bounds,
    distinct_outcome_gradient,
    subgradient_set,
)
from .verification import bpoe_grid_oracle, fd_gradient, one_sided_derivatives

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
