"""Sweep execution: one trial function and one summary per experiment kind.

Every trial draws all of its randomness from a single integer seed that is a
hash of the base seed and the trial index (see :func:`trial_seed`). The seed
is written to each row, so any row can be re-run alone with
:func:`run_trial`. Trials run in a thread pool; results are collected in
``(cell, trial)`` order, so the thread count never changes the output.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .. import theory
from ..mixture import MixtureParams, sample
from ..risk import aligned_error, excess_risk, group_risk, population_risk
from ..teacher import draw_labels
from ..tensorinit import InitStageError, tensor_init
from ..train import (
    DivergenceError,
    TrainConfig,
    auto_step_size,
    fit_rate,
    gd_train,
    local_random_init,
    trial_success,
)
from .spec import Cell, ExperimentSpec, build_teacher, trial_seed

__all__ = [
    "SweepResult",
    "LinearFit",
    "linear_fit",
    "fit_error_scaling",
    "paired_trend",
    "success_midpoint",
    "run_trial",
    "run_sweep",
    "run_sample_complexity_grid",
    "run_convergence_sweep",
    "run_error_vs_n",
    "run_risk_sweeps",
    "run_init_compare",
    "THREADS_ENV",
]

THREADS_ENV = "GMMFCN_THREADS"
NAN = float("nan")
THEORY_COLUMNS = (
    "theory_rate",
    "theory_q",
    "theory_gamma",
    "theory_radius",
    "theory_error",
    "theory_sample_complexity",
)
FAR_INIT_STD = 5.0  # entries N(0, 25)


@dataclass
class SweepResult:
    kind: str
    columns: list[str]
    rows: list[dict]
    summary: dict
    timing: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)


# -- fitting helpers ------------------------------------------------------------


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    slope_se: float
    n_points: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("slope", "intercept", "r_squared", "slope_se", "n_points")}


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y ~ a + b x`` with the usual slope standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    m = x.shape[0]
    if m < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct x values to fit a line")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    b = float(xc @ (y - y.mean()) / sxx)
    a = float(y.mean() - b * x.mean())
    resid = y - a - b * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    se = math.sqrt(float(resid @ resid) / (m - 2) / sxx) if m > 2 else NAN
    return LinearFit(b, a, r2, se, m)


def fit_error_scaling(n_values, errors) -> LinearFit:
    """Regress errors on ``sqrt(log n / n)``."""
    n = np.asarray(n_values, dtype=float)
    return linear_fit(np.sqrt(np.log(n) / n), errors)


def _within_trial_slope(x, Y) -> dict:
    """Slope of ``Y[cell, trial]`` on ``x[cell]`` with a free intercept per trial.

    Trials share random numbers across cells, so removing each trial's mean
    takes out the between-trial variation before fitting.
    """
    x = np.asarray(x, dtype=float)
    Y = np.asarray(Y, dtype=float)
    keep = np.all(np.isfinite(Y), axis=0)
    Y = Y[:, keep]
    M = Y.shape[1]
    if M == 0 or x.shape[0] < 2:
        return {"slope": NAN, "slope_se": NAN, "trials": int(M)}
    xc = x - x.mean()
    Yc = Y - Y.mean(axis=0)
    sxx = float(xc @ xc) * M
    b = float(xc @ Yc.sum(axis=1)) / sxx
    resid = Yc - b * xc[:, None]
    dof = Y.size - M - 1
    se = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if dof > 0 else NAN
    return {"slope": b, "slope_se": se, "trials": int(M)}


def paired_trend(values, Y, z: float = 2.0) -> dict:
    """Consecutive-cell comparisons of ``Y[cell, trial]`` along a 1-D grid.

    Each step is classified from the mean of the per-trial differences:
    ``"increase"`` or ``"decrease"`` when it exceeds ``z`` standard errors,
    ``"flat"`` otherwise. Also reports where the cell mean is smallest.
    """
    Y = np.asarray(Y, dtype=float)
    steps = []
    for i in range(Y.shape[0] - 1):
        diff = Y[i + 1] - Y[i]
        diff = diff[np.isfinite(diff)]
        if diff.size == 0:
            steps.append({"from": values[i], "to": values[i + 1], "mean": NAN, "se": NAN, "call": "unknown"})
            continue
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0
        call = "increase" if mean > z * se else "decrease" if mean < -z * se else "flat"
        steps.append({"from": values[i], "to": values[i + 1], "mean": mean, "se": se, "call": call})
    means = np.array([np.nanmean(r) if np.any(np.isfinite(r)) else np.inf for r in Y])
    medians = np.array([np.nanmedian(r) if np.any(np.isfinite(r)) else np.inf for r in Y])
    i_mean = int(np.argmin(means))
    i_med = int(np.argmin(medians))
    last = Y.shape[0] - 1
    return {
        "steps": steps,
        "non_decreasing": all(s["call"] != "decrease" for s in steps),
        "argmin_mean": values[i_mean],
        "interior_min_mean": bool(0 < i_mean < last),
        "argmin_median": values[i_med],
        "interior_min_median": bool(0 < i_med < last),
    }


def _cell_stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"count": 0, "mean": NAN, "se": NAN, "median": NAN, "q25": NAN, "q75": NAN}
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else NAN
    return {"count": int(v.size), "mean": float(v.mean()), "se": se, "median": float(med), "q25": float(q25), "q75": float(q75)}


# -- per-trial plumbing -----------------------------------------------------------


@dataclass
class _Streams:
    teacher: np.random.Generator
    data: np.random.Generator
    init: np.random.Generator
    noise_seed: int
    eval_seed: int


def _streams(seed: int, eval_base: int) -> _Streams:
    t, d, i, nz = np.random.SeedSequence(seed).spawn(4)
    ev = np.random.SeedSequence([int(eval_base), int(seed)])
    return _Streams(
        np.random.default_rng(t),
        np.random.default_rng(d),
        np.random.default_rng(i),
        int(nz.generate_state(1)[0]),
        int(ev.generate_state(1)[0]),
    )


def _theory_columns(psi: MixtureParams, W: np.ndarray, step_scale: float) -> dict:
    # Uses only the mixture and the teacher, never measured quantities.
    try:
        r = theory.report(psi, W, step_scale=step_scale)
    except (ValueError, theory.QuadratureError, np.linalg.LinAlgError):
        return {c: NAN for c in THEORY_COLUMNS}
    return {
        "theory_rate": r.predicted_rate,
        "theory_q": r.q,
        "theory_gamma": r.gamma,
        "theory_radius": r.radius,
        "theory_error": r.error_average,
        "theory_sample_complexity": r.sample_complexity_indicator,
    }


def _train_config(cell: Cell, noise_seed: int) -> TrainConfig:
    tc = cell.train
    return TrainConfig(
        iterations=int(tc["iterations"]),
        noise_level=float(tc["noise_level"]),
        seed=noise_seed,
        step_scale=float(tc["step_scale"]),
        grad_tol=None if tc["grad_tol"] is None else float(tc["grad_tol"]),
    )


def _setup(cell: Cell, seed: int):
    st = _streams(seed, cell.eval["seed"])
    psi = cell.mixture()
    W = build_teacher(cell.doc["teacher"], cell.d, st.teacher)
    X, _ = sample(psi, cell.n, st.data)
    y = draw_labels(W, X, st.data)
    return st, psi, W, X, y


def _local_run(cell: Cell, seed: int):
    """Draw a problem and train from a local random initialization."""
    st, psi, W, X, y = _setup(cell, seed)
    W0 = local_random_init(W, float(cell.train["init_eps"]), st.init)
    try:
        trace = gd_train(W0, X, y, _train_config(cell, st.noise_seed), W_star=W, psi=psi)
    except DivergenceError as e:
        trace, div = None, e.iteration
    else:
        div = -1
    return st, psi, W, W0, trace, div


# -- trial functions ------------------------------------------------------------


def _trial_sample_complexity(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    st = _streams(seed, cell.eval["seed"])
    psi = cell.mixture()
    W = build_teacher(cell.doc["teacher"], cell.d, st.teacher)
    tc = cell.train
    out = trial_success(
        psi, W, cell.n, M=spec.inits, seed=st.data,
        step_size=auto_step_size(psi, float(tc["step_scale"])),
        iterations=int(tc["iterations"]),
        grad_tol=1e-7 if tc["grad_tol"] is None else float(tc["grad_tol"]),
        eps=float(tc["init_eps"]),
    )
    return {
        "success": int(out.success),
        "v_w": out.v_w,
        "n_diverged": out.n_diverged,
        "max_grad": out.max_grad,
        **_theory_columns(psi, W, float(tc["step_scale"])),
    }


def _trial_convergence(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    st, psi, W, W0, trace, div = _local_run(cell, seed)
    row = {"init_error": aligned_error(W0, W).distance, "diverged_at": div}
    if trace is None:
        row.update(rate=NAN, r_squared=NAN, fit_points=0, iterations_run=0, converged=0, final_error=NAN)
    else:
        try:
            fit = fit_rate(trace)
            rate, r2, pts = fit.rate, fit.r_squared, fit.n_points
        except ValueError:
            rate, r2, pts = NAN, NAN, 0
        row.update(
            rate=rate, r_squared=r2, fit_points=pts, iterations_run=trace.iterations_run,
            converged=int(trace.converged), final_error=float(trace.aligned_error[-1]),
        )
    row.update(_theory_columns(psi, W, float(cell.train["step_scale"])))
    return row


def _trial_error_vs_n(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    st, psi, W, W0, trace, div = _local_run(cell, seed)
    row = {"diverged_at": div}
    if trace is None:
        row.update(final_error=NAN, relative_error=NAN, iterations_run=0, converged=0)
    else:
        err = float(trace.aligned_error[-1])
        row.update(final_error=err, relative_error=err / float(np.linalg.norm(W)),
                   iterations_run=trace.iterations_run, converged=int(trace.converged))
    row.update(_theory_columns(psi, W, float(cell.train["step_scale"])))
    return row


def _trial_risk(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    st, psi, W, W0, trace, div = _local_run(cell, seed)
    ev = cell.eval
    g = int(ev["group"])
    n_mc = int(ev["n_mc"])
    row = {"diverged_at": div}
    if trace is None:
        for k in ("risk_avg", "risk_avg_se", "risk_group", "risk_group_se",
                  "excess_avg", "excess_avg_se", "excess_group", "excess_group_se", "final_error"):
            row[k] = NAN
        row.update(iterations_run=0, converged=0)
    else:
        Wh = trace.final
        # The same evaluation seed for every risk of a trial pairs the estimates.
        ra = population_risk(Wh, psi, W, n_mc, seed=st.eval_seed, labels=ev["labels"])
        rg = group_risk(Wh, psi, W, g, n_mc, seed=st.eval_seed, labels=ev["labels"])
        ea = excess_risk(Wh, psi, W, n_mc, seed=st.eval_seed)
        eg = excess_risk(Wh, psi, W, n_mc, seed=st.eval_seed, group=g)
        row.update(
            risk_avg=ra.value, risk_avg_se=ra.mc_std_err,
            risk_group=rg.value, risk_group_se=rg.mc_std_err,
            excess_avg=ea.value, excess_avg_se=ea.mc_std_err,
            excess_group=eg.value, excess_group_se=eg.mc_std_err,
            final_error=float(trace.aligned_error[-1]),
            iterations_run=trace.iterations_run, converged=int(trace.converged),
        )
    row.update(_theory_columns(psi, W, float(cell.train["step_scale"])))
    return row


def _arm(cell: Cell, W0, X, y, W, psi, noise_seed: int) -> dict:
    t0 = time.perf_counter()
    try:
        trace = gd_train(W0, X, y, _train_config(cell, noise_seed), W_star=W, psi=psi)
    except DivergenceError:
        return {"converged": 0, "final_error": NAN, "iterations_run": -1, "wall": time.perf_counter() - t0}
    return {
        "converged": int(trace.converged),
        "final_error": float(trace.aligned_error[-1]),
        "iterations_run": trace.iterations_run,
        "wall": time.perf_counter() - t0,
    }


def _trial_init_compare(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    st, psi, W, X, y = _setup(cell, seed)
    wnorm = float(np.linalg.norm(W))
    row = {}
    t0 = time.perf_counter()
    try:
        ti = tensor_init(X, y, psi, cell.k)
        W_tensor = ti.W0
        row["tensor_warnings"] = len(ti.diagnostics.get("warnings", []))
    except InitStageError:
        W_tensor = None
        row["tensor_warnings"] = -1
    t_init = time.perf_counter() - t0
    starts = {
        "tensor": W_tensor,
        "local": local_random_init(W, float(cell.train["init_eps"]), st.init),
        "far": FAR_INIT_STD * st.init.standard_normal(W.shape),
    }
    walls = {"tensor_init": t_init}
    for name, W0 in starts.items():
        if W0 is None:
            row.update({f"{name}_init_rel_error": NAN, f"{name}_converged": 0,
                        f"{name}_final_error": NAN, f"{name}_iterations": -1})
            continue
        res = _arm(cell, W0, X, y, W, psi, st.noise_seed)
        row[f"{name}_init_rel_error"] = aligned_error(W0, W).distance / wnorm
        row[f"{name}_converged"] = res["converged"]
        row[f"{name}_final_error"] = res["final_error"]
        row[f"{name}_iterations"] = res["iterations_run"]
        walls[name] = res["wall"]
    row.update(_theory_columns(psi, W, float(cell.train["step_scale"])))
    row["_walls"] = walls
    return row


# -- summaries ----------------------------------------------------------------------


def _matrix(result_rows: list[dict], n_cells: int, trials: int, key: str) -> np.ndarray:
    Y = np.full((n_cells, trials), NAN)
    for r in result_rows:
        Y[r["cell"], r["trial"]] = r[key]
    return Y


def _per_cell(spec: ExperimentSpec, rows: list[dict], metrics) -> list[dict]:
    out = []
    for cell in spec.cells():
        mine = [r for r in rows if r["cell"] == cell.index]
        out.append({"cell": cell.index, **cell.coords,
                    **{m: _cell_stats([r[m] for r in mine]) for m in metrics}})
    return out


def _axis_values(spec: ExperimentSpec) -> list:
    if len(spec.axes) != 1:
        return []
    return list(spec.axes[0].values)


def success_midpoint(n_values, outcomes) -> float | None:
    """Sample size where a logistic fit of success on ``log n`` crosses one half.

    ``outcomes`` holds one 0/1 result per trial. Returns ``None`` when every
    trial failed or every trial succeeded. Under complete separation the slope
    runs to its bound and the midpoint lands between the last failure and the
    first success.
    """
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.asarray(outcomes, dtype=float)
    if y.min() == y.max():
        return None

    def nll(p):
        z = np.exp(p[1]) * (x - p[0])
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    lo, hi = x.min() - 1.0, x.max() + 1.0
    res = minimize(nll, [0.5 * (x[y == 0].mean() + x[y == 1].mean()), 0.0], method="L-BFGS-B",
                   bounds=[(lo, hi), (-5.0, 5.0)])
    return float(np.exp(res.x[0]))


def _grid_boundary(row) -> float | None:
    """Smallest grid ``n`` from which the success rate stays at or above one half."""
    first = None
    for n, rate in reversed(row):
        if rate is None or not rate >= 0.5:
            break
        first = n
    return first


def _fit_points(boundary: dict):
    pts = [(float(d), float(n)) for d, n in boundary.items() if n is not None]
    try:
        return linear_fit(*zip(*pts)).to_dict() if len(pts) >= 2 else None
    except ValueError:
        return None


def _summarize_sample_complexity(spec, rows):
    cells = _per_cell(spec, rows, ["success", "v_w"])
    summary = {"cells": cells}
    names = [a.name for a in spec.axes]
    if "d" not in names or "n" not in names:
        return summary
    boundary, grid = {}, {}
    for d in sorted({c["d"] for c in cells}):
        mine = [r for r in rows if r["d"] == d]
        boundary[str(d)] = success_midpoint([r["n"] for r in mine], [r["success"] for r in mine])
        grid[str(d)] = _grid_boundary(sorted((c["n"], c["success"]["mean"]) for c in cells if c["d"] == d))
    summary["phase_boundary"] = boundary
    summary["boundary_fit"] = _fit_points(boundary)
    summary["phase_boundary_grid"] = grid
    summary["boundary_fit_grid"] = _fit_points(grid)
    return summary


def _summarize_convergence(spec, rows):
    cells = _per_cell(spec, rows, ["rate", "r_squared", "final_error", "iterations_run", "theory_rate"])
    summary = {"cells": cells}
    values = _axis_values(spec)
    if values:
        n_cells = len(values)
        summary["rate_trend"] = paired_trend(values, _matrix(rows, n_cells, spec.trials, "rate"))
        summary["theory_rate_trend"] = paired_trend(values, _matrix(rows, n_cells, spec.trials, "theory_rate"))
        if spec.axes[0].name == "K" or any(p == "teacher.k" for p, _, _ in spec.axes[0].setters):
            med = [c["rate"]["median"] for c in cells]
            try:
                summary["k_fit"] = linear_fit(-1.0 / np.asarray(values, dtype=float) ** 2, med).to_dict()
            except ValueError:
                summary["k_fit"] = None
    return summary


def _summarize_error_vs_n(spec, rows):
    cells = _per_cell(spec, rows, ["final_error", "relative_error", "theory_error"])
    summary = {"cells": cells, "fit": None}
    if any(p == "n" for a in spec.axes for p, _, _ in a.setters):
        ns = [c["n"] if "n" in c else None for c in cells]
        ns = [float(cell.n) for cell in spec.cells()] if None in ns else ns
        errs = [c["final_error"]["mean"] for c in cells]
        if len(set(ns)) >= 2:
            summary["fit"] = fit_error_scaling(ns, errs).to_dict()
    return summary


def _summarize_risk(spec, rows):
    metrics = ["risk_avg", "risk_group", "excess_avg", "excess_group", "final_error"]
    cells = _per_cell(spec, rows, metrics)
    summary = {"cells": cells}
    values = _axis_values(spec)
    if values:
        n_cells = len(values)
        for m in metrics[:4]:
            Y = _matrix(rows, n_cells, spec.trials, m)
            summary[f"{m}_trend"] = paired_trend(values, Y)
            try:
                summary[f"{m}_slope"] = _within_trial_slope(np.asarray(values, dtype=float), Y)
            except (TypeError, ValueError):
                pass
    return summary


def _summarize_init_compare(spec, rows):
    arms = ("tensor", "local", "far")
    summary = {"cells": _per_cell(spec, rows, [f"{a}_{m}" for a in arms for m in (
        "init_rel_error", "converged", "final_error", "iterations")])}
    match = []
    for r in rows:
        t, l = r["tensor_final_error"], r["local_final_error"]
        match.append(abs(t - l) / l if np.isfinite(t) and np.isfinite(l) and l > 0 else NAN)
    summary["tensor_vs_local_relative_gap"] = _cell_stats(match)
    return summary


# -- registry and drivers ------------------------------------------------------------

_KIND_TABLE = {
    "sample_complexity_grid": (
        _trial_sample_complexity, _summarize_sample_complexity,
        ("success", "v_w", "n_diverged", "max_grad"),
    ),
    "convergence_sweep": (
        _trial_convergence, _summarize_convergence,
        ("rate", "r_squared", "fit_points", "iterations_run", "converged", "init_error", "final_error", "diverged_at"),
    ),
    "error_vs_n": (
        _trial_error_vs_n, _summarize_error_vs_n,
        ("final_error", "relative_error", "iterations_run", "converged", "diverged_at"),
    ),
    "init_compare": (
        _trial_init_compare, _summarize_init_compare,
        tuple(f"{a}_{m}" for a in ("tensor", "local", "far")
              for m in ("init_rel_error", "converged", "final_error", "iterations")) + ("tensor_warnings",),
    ),
}
_RISK_METRICS = (
    "risk_avg", "risk_avg_se", "risk_group", "risk_group_se",
    "excess_avg", "excess_avg_se", "excess_group", "excess_group_se",
    "final_error", "iterations_run", "converged", "diverged_at",
)
for _k in ("risk_vs_mu", "risk_vs_sigma", "risk_vs_lambda"):
    _KIND_TABLE[_k] = (_trial_risk, _summarize_risk, _RISK_METRICS)


def _columns(spec: ExperimentSpec) -> list[str]:
    metrics = _KIND_TABLE[spec.kind][2]
    return ["cell", "trial", "seed"] + [a.name for a in spec.axes] + list(metrics) + list(THEORY_COLUMNS)


def run_trial(spec: ExperimentSpec, cell: Cell, seed: int) -> dict:
    """Metrics of one trial; reproducible from ``(spec, cell, seed)`` alone."""
    return _KIND_TABLE[spec.kind][0](spec, cell, seed)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    """Run every ``(cell, trial)`` of ``spec`` and summarize per kind."""
    threads = default_threads() if threads is None else max(1, int(threads))
    cells = spec.cells()
    tasks = [(c, t) for c in cells for t in range(spec.trials)]
    columns = _columns(spec)

    def work(task):
        cell, t = task
        seed = trial_seed(spec.seed, t)
        t0 = time.perf_counter()
        metrics = run_trial(spec, cell, seed)
        wall = time.perf_counter() - t0
        extra = metrics.pop("_walls", None)
        row = {"cell": cell.index, "trial": t, "seed": seed, **cell.coords}
        for c in columns[len(row):]:
            row[c] = metrics.get(c, NAN)
        return row, wall, extra

    t0 = time.perf_counter()
    if threads == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, tasks))  # map keeps submission order
    rows = [r for r, _, _ in results]
    summary = _KIND_TABLE[spec.kind][1](spec, rows)
    timing = {"total": time.perf_counter() - t0, "per_trial": [w for _, w, _ in results], "threads": threads}
    arm_walls = [e for _, _, e in results if e]
    if arm_walls:
        timing["arms_median"] = {k: float(np.median([e[k] for e in arm_walls if k in e])) for k in arm_walls[0]}
    return SweepResult(spec.kind, columns, rows, summary, timing)


def _check_kind(spec: ExperimentSpec, *kinds: str) -> None:
    if spec.kind not in kinds:
        raise ValueError(f"spec kind {spec.kind!r} is not one of {kinds}")


def run_sample_complexity_grid(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    _check_kind(spec, "sample_complexity_grid")
    return run_sweep(spec, threads)


def run_convergence_sweep(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    _check_kind(spec, "convergence_sweep")
    return run_sweep(spec, threads)


def run_error_vs_n(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    _check_kind(spec, "error_vs_n")
    return run_sweep(spec, threads)


def run_risk_sweeps(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    _check_kind(spec, "risk_vs_mu", "risk_vs_sigma", "risk_vs_lambda")
    return run_sweep(spec, threads)


def run_init_compare(spec: ExperimentSpec, threads: int | None = None) -> SweepResult:
    _check_kind(spec, "init_compare")
    return run_sweep(spec, threads)
