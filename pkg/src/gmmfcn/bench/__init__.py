"""Experiment harness: specs, sweep runners, CSV/SVG output and the CLI."""

from .runners import (
    LinearFit,
    SweepResult,
    fit_error_scaling,
    linear_fit,
    paired_trend,
    run_convergence_sweep,
    run_error_vs_n,
    run_init_compare,
    run_risk_sweeps,
    run_sample_complexity_grid,
    run_sweep,
    run_trial,
)
from .spec import KINDS, ExperimentSpec, SpecError, build_mixture, build_teacher, load_spec, trial_seed
from .specs import default_spec, default_spec_names

__all__ = [
    "KINDS",
    "ExperimentSpec",
    "SpecError",
    "SweepResult",
    "LinearFit",
    "build_mixture",
    "build_teacher",
    "default_spec",
    "default_spec_names",
    "fit_error_scaling",
    "linear_fit",
    "load_spec",
    "paired_trend",
    "run_convergence_sweep",
    "run_error_vs_n",
    "run_init_compare",
    "run_risk_sweeps",
    "run_sample_complexity_grid",
    "run_sweep",
    "run_trial",
    "trial_seed",
]
