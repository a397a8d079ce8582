"""Command-line interface.

Exit codes are a stable contract: 0 success, 1 reproduction failure,
2 input error, 3 regime error.  All stdout payloads are machine-parseable
JSON or CSV; floats are printed with 17 significant digits so values
round-trip exactly.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import config
from .continuous_grad import NormalSampler, UniformSampler, mc_gradient
from .errors import (
    BadAlpha,
    BadParameter,
    BadProbabilities,
    DegenerateError,
    DimensionMismatch,
    MalformedFile,
    NotApplicable,
    WrongRegime,
)
from .optimizer import Box, projected_subgradient, stationarity_check
from .repro import RUNNERS
from .risk_measures import bpoe, failure_prob
from .scenario_model import (
    BilinearModel,
    NewsvendorModel,
    load_scenarios,
    network_flow_model,
    push_forward,
)
from .subgradient import (
    coordinate_bounds,
    distinct_outcome_gradient,
    subgradient_set,
)

EXIT_REPRO_FAIL = 1
EXIT_INPUT = 2
EXIT_REGIME = 3

_INPUT_ERRORS = (
    MalformedFile,
    BadProbabilities,
    BadParameter,
    BadAlpha,
    DimensionMismatch,
    FileNotFoundError,
    ValueError,
)
_REGIME_ERRORS = (WrongRegime, DegenerateError)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _json_dump(obj) -> str:
    """JSON with floats at 17 significant digits."""
    if isinstance(obj, dict):
        items = ", ".join(f'"{k}": {_json_dump(v)}' for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_dump(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (float, np.floating)):
        return f"{float(obj):.17g}"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    import json as _json

    return _json.dumps(obj)


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(part) for part in text.split(",")], dtype=float)
    except ValueError:
        raise BadParameter(f"cannot parse vector {text!r}") from None


def _load_instance(scenarios_path, model_name, rho, fmt):
    if scenarios_path is not None:
        return load_scenarios(scenarios_path, format=fmt)
    if model_name == "network":
        if rho is None:
            raise BadParameter("--rho is required with --model network")
        return network_flow_model(rho)
    raise BadParameter("provide --scenarios FILE or --model network --rho R")


def _scenario_options(fn):
    fn = click.option(
        "--scenarios", "scenarios_path", type=click.Path(), default=None,
        help="Scenario file (CSV header prob,b,a1,...,an or JSON mirror).",
    )(fn)
    fn = click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
        help="Scenario file format; inferred from the extension by default.",
    )(fn)
    fn = click.option(
        "--model", "model_name", type=click.Choice(["network"]), default=None,
        help="Built-in model instead of a scenario file.",
    )(fn)
    fn = click.option("--rho", type=float, default=None,
                      help="Component failure probability for --model network.")(fn)
    return fn


@click.group()
@click.option(
    "--threads",
    type=int,
    default=None,
    help="Cap on worker threads (falls back to BPOE_THREADS).",
)
def main(threads):
    """Buffered failure probability toolkit."""
    if threads is None:
        env = os.environ.get("BPOE_THREADS")
        threads = int(env) if env else None
    config.max_threads = threads


@main.command("eval")
@_scenario_options
@click.option("--x", "x_text", required=True, help='Decision vector "v1,...,vn".')
@click.option(
    "--method",
    type=click.Choice(["definitional", "min"]),
    default="min",
    show_default=True,
)
def cmd_eval(scenarios_path, fmt, model_name, rho, x_text, method):
    """Evaluate the buffered failure probability at a decision vector."""
    try:
        scenarios, model = _load_instance(scenarios_path, model_name, rho, fmt)
        x = _parse_vector(x_text)
        dist = push_forward(model, scenarios, x)
        result = bpoe(
            dist, method="definitional" if method == "definitional" else "min_formula"
        )
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    payload = {
        "bpoe": result.value,
        "regime": result.regime,
        "alpha_bar": result.alpha_bar,
        "gamma": [result.gamma.lo, result.gamma.hi] if result.gamma else None,
        "failure_prob": failure_prob(dist),
        "method": method,
    }
    click.echo(_json_dump(payload))


@main.command("subgrad")
@_scenario_options
@click.option("--x", "x_text", required=True)
def cmd_subgrad(scenarios_path, fmt, model_name, rho, x_text):
    """Report the outer subgradient set at a decision vector."""
    try:
        scenarios, model = _load_instance(scenarios_path, model_name, rho, fmt)
        x = _parse_vector(x_text)
        y_set = subgradient_set(scenarios, model, x)
        bounds = [list(coordinate_bounds(y_set, j)) for j in range(model.dim)]
        try:
            closed_form = list(distinct_outcome_gradient(scenarios, model, x))
        except NotApplicable:
            closed_form = None
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    payload = {
        "slices": [
            {
                "gamma_hat": slc.gamma_hat,
                "n_forced_zero": len(slc.pattern.forced_zero),
                "n_forced_one": len(slc.pattern.forced_one),
                "n_tied": len(slc.pattern.tied),
                "tied_mass": slc.pattern.tied_mass,
            }
            for slc in y_set.slices
        ],
        "coordinate_bounds": bounds,
        "distinct_outcome_gradient": closed_form,
    }
    click.echo(_json_dump(payload))


@main.command("sweep")
@_scenario_options
@click.option("--x-min", type=float, required=True)
@click.option("--x-max", type=float, required=True)
@click.option("--steps", type=int, default=201, show_default=True)
@click.option(
    "--plot",
    "plot_path",
    type=click.Path(),
    default=None,
    help="Also render the sweep as a figure at this path.",
)
def cmd_sweep(scenarios_path, fmt, model_name, rho, x_min, x_max, steps, plot_path):
    """Emit x, bpoe, failure_prob rows as CSV over a decision grid."""
    try:
        if x_min > x_max:
            raise BadParameter("--x-min must not exceed --x-max")
        if steps < 2:
            raise BadParameter("--steps must be at least 2")
        scenarios, model = _load_instance(scenarios_path, model_name, rho, fmt)
        if model.dim != 1:
            raise BadParameter("sweep requires a scalar decision")
        xs = np.linspace(x_min, x_max, steps)
        rows = []
        for x in xs:
            dist = push_forward(model, scenarios, [float(x)])
            rows.append((float(x), bpoe(dist).value, failure_prob(dist)))
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    click.echo("x,bpoe,failure_prob")
    for x, value, fp in rows:
        click.echo(f"{x:.17g},{value:.17g},{fp:.17g}")
    if plot_path:
        from .plotting import render_sweep_figure

        render_sweep_figure(
            [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], plot_path
        )


@main.command("grad-mc")
@click.option(
    "--model",
    "model_name",
    type=click.Choice(["bilinear", "newsvendor"]),
    default="bilinear",
    show_default=True,
)
@click.option("--offset", type=float, default=-1.0, show_default=True,
              help="Offset of the bilinear model.")
@click.option("--beta", type=float, default=1.0, show_default=True,
              help="Slope of the newsvendor model.")
@click.option(
    "--sampler",
    "sampler_name",
    type=click.Choice(["uniform", "normal"]),
    default="uniform",
    show_default=True,
)
@click.option("--a", type=float, default=-1.0, show_default=True)
@click.option("--b", type=float, default=1.0, show_default=True)
@click.option("--x", "x_text", required=True)
@click.option("--n-samples", type=int, default=10**6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_grad_mc(model_name, offset, beta, sampler_name, a, b, x_text, n_samples, seed):
    """Monte Carlo gradient estimate for a sampled distribution."""
    try:
        model = (
            BilinearModel(offset=offset)
            if model_name == "bilinear"
            else NewsvendorModel(beta=beta)
        )
        sampler = UniformSampler(a, b) if sampler_name == "uniform" else NormalSampler()
        x = _parse_vector(x_text)
        est = mc_gradient(sampler, model, x, n_samples, seed)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    payload = {
        "mean": list(est.mean),
        "stderr": list(est.stderr),
        "gamma_hat": est.gamma_hat,
        "n_samples": est.n_samples,
        "diagnostics": {
            "positive_mass_epsilon": est.diagnostics.positive_mass[0],
            "positive_mass_fraction": est.diagnostics.positive_mass[1],
            "atom_fraction": est.diagnostics.atom_fraction,
            "gamma_width": est.diagnostics.gamma_width,
            "mean_g": est.diagnostics.mean_g,
        },
    }
    click.echo(_json_dump(payload))


def _parse_box(lower_text, upper_text, n) -> Box:
    lower = _parse_vector(lower_text) if lower_text else np.full(n, -np.inf)
    upper = _parse_vector(upper_text) if upper_text else np.full(n, np.inf)
    return Box(lower, upper)


@main.command("optimize")
@_scenario_options
@click.option("--x0", "x0_text", required=True)
@click.option("--lower", "lower_text", default=None, help='Box lower bounds "l1,...".')
@click.option("--upper", "upper_text", default=None, help='Box upper bounds "u1,...".')
@click.option("--max-iter", type=int, default=500, show_default=True)
@click.option("--step0", type=float, default=1.0, show_default=True)
def cmd_optimize(
    scenarios_path, fmt, model_name, rho, x0_text, lower_text, upper_text,
    max_iter, step0,
):
    """Projected subgradient descent on the buffered failure probability."""
    try:
        scenarios, model = _load_instance(scenarios_path, model_name, rho, fmt)
        x0 = _parse_vector(x0_text)
        box = _parse_box(lower_text, upper_text, model.dim)
        report = projected_subgradient(
            scenarios, model, x0, box, max_iter=max_iter, step0=step0
        )
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    payload = {
        "x_final": list(report.x_final),
        "bpoe_final": report.bpoe_final,
        "iterations": report.iterations,
        "stationarity_residual": report.stationarity_residual,
    }
    click.echo(_json_dump(payload))


@main.command("check")
@_scenario_options
@click.option("--x", "x_text", required=True)
@click.option("--lower", "lower_text", default=None)
@click.option("--upper", "upper_text", default=None)
@click.option("--tol", type=float, default=1e-9, show_default=True)
def cmd_check(scenarios_path, fmt, model_name, rho, x_text, lower_text, upper_text, tol):
    """Box normal-cone stationarity test at a decision vector."""
    try:
        scenarios, model = _load_instance(scenarios_path, model_name, rho, fmt)
        x = _parse_vector(x_text)
        box = _parse_box(lower_text, upper_text, model.dim)
        stationary, residual = stationarity_check(scenarios, model, x, box, tol=tol)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    except _REGIME_ERRORS as exc:
        _fail(EXIT_REGIME, str(exc))
    click.echo(_json_dump({"stationary": stationary, "residual": residual}))


@main.command("repro")
@click.argument(
    "which", type=click.Choice(["example1", "example2", "example3", "all"])
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-samples", type=int, default=10**6, show_default=True,
              help="Sample count for the Monte Carlo checks.")
def cmd_repro(which, seed, n_samples):
    """Re-run the worked-model checks and print a pass/fail table."""
    names = list(RUNNERS) if which == "all" else [which]
    all_passed = True
    for name in names:
        try:
            if name == "example2":
                checks = RUNNERS[name](seed=seed, n_samples=n_samples)
            else:
                checks = RUNNERS[name]()
        except _INPUT_ERRORS as exc:
            _fail(EXIT_INPUT, str(exc))
        except _REGIME_ERRORS as exc:
            _fail(EXIT_REGIME, str(exc))
        click.echo(f"== {name} ==")
        for check in checks:
            status = "PASS" if check.passed else "FAIL"
            all_passed &= check.passed
            click.echo(
                f"{status}  {check.name:<36} expected {check.expected:+.6g}  "
                f"computed {check.computed:+.6g}  tol {check.tol:.1e}"
            )
    sys.exit(0 if all_passed else EXIT_REPRO_FAIL)


if __name__ == "__main__":
    main()
