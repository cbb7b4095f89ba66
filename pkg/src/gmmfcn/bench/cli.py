"""Command-line entry point: ``python -m gmmfcn.bench <command> ...``.

Exit codes: 0 on success, 2 for a bad or missing spec/input, 3 when a run
fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import theory
from ..mixture import MixtureParams, sample
from ..teacher import TeacherModel, draw_labels
from ..tensorinit import InitConfig, tensor_init
from ..train import TrainConfig, fit_rate, gd_train, local_random_init
from . import output
from .runners import run_sweep
from .spec import KIND_ALIASES, KINDS, SpecError, build_teacher, load_spec, trial_seed

EXIT_OK, EXIT_SPEC, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("gmmfcn.bench")


class InputError(Exception):
    """Unreadable or inconsistent command-line input (maps to exit code 2)."""


def _load_json_model(cls, path, what: str):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} file not found: {p}")
    try:
        return cls.load(p)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputError(f"{p}: invalid {what}: {e}") from e


def _load_data(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"data file not found: {p}")
    with np.load(p) as z:
        if "X" not in z or "y" not in z:
            raise InputError(f"{p}: expected arrays 'X' and 'y'")
        return z["X"], z["y"]


def cmd_generate(args) -> int:
    spec = load_spec(args.spec)
    cells = spec.cells() if spec.axes else []
    if spec.axes and not 0 <= args.cell < len(cells):
        raise InputError(f"cell {args.cell} out of range (0..{len(cells) - 1})")
    from .spec import Cell
    cell = cells[args.cell] if cells else Cell(0, {}, spec.doc)
    seed = trial_seed(spec.seed if args.seed is None else args.seed, args.trial)
    rng_t, rng_d = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    psi = cell.mixture()
    W = build_teacher(cell.doc["teacher"], cell.d, rng_t)
    n = args.n if args.n is not None else cell.n
    X, groups = sample(psi, n, rng_d)
    y = draw_labels(W, X, rng_d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    psi.save(out / "psi.json")
    TeacherModel(W).save(out / "teacher.json")
    np.savez(out / "data.npz", X=X, y=y, groups=groups)
    print(json.dumps({"psi": str(out / "psi.json"), "teacher": str(out / "teacher.json"),
                      "data": str(out / "data.npz"), "n": int(n), "seed": seed}))
    return EXIT_OK


def cmd_train(args) -> int:
    psi = _load_json_model(MixtureParams, args.psi, "mixture")
    teacher = _load_json_model(TeacherModel, args.teacher, "teacher")
    X, y = _load_data(args.data)
    if args.init:
        p = Path(args.init)
        if not p.is_file():
            raise InputError(f"init file not found: {p}")
        doc = json.loads(p.read_text())
        W0 = np.asarray(doc["W0"] if isinstance(doc, dict) else doc, dtype=float)
    else:
        W0 = local_random_init(teacher.weights, args.eps, np.random.default_rng(args.seed))
    cfg = TrainConfig(
        step_size=args.step_size if args.step_size is not None else "auto",
        iterations=args.iterations,
        noise_level=args.noise,
        seed=args.seed,
        step_scale=args.step_scale,
        grad_tol=args.grad_tol,
    )
    trace = gd_train(W0, X, y, cfg, W_star=teacher.weights, psi=psi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / "trace.csv")
    try:
        fit = fit_rate(trace)
        rate = {"rate": fit.rate, "r_squared": fit.r_squared, "n_points": fit.n_points,
                "usable_prefix": fit.usable_prefix}
    except ValueError as e:
        rate = {"error": str(e)}
    summary = {
        "step_size": trace.step_size,
        "iterations_run": trace.iterations_run,
        "converged": trace.converged,
        "final_aligned_error": float(trace.aligned_error[-1]),
        "final_empirical_risk": float(trace.empirical_risk[-1]),
        "rate_fit": rate,
        "rate_distance": "distance to the final iterate, tail-extrapolated",
        "final": trace.final.tolist(),
    }
    (out / "summary.json").write_text(json.dumps(output._jsonable(summary), indent=2) + "\n")
    print(json.dumps({k: summary[k] for k in ("iterations_run", "converged", "final_aligned_error")}))
    return EXIT_OK


def cmd_init(args) -> int:
    psi = _load_json_model(MixtureParams, args.psi, "mixture")
    X, y = _load_data(args.data)
    res = tensor_init(X, y, psi, args.k, InitConfig(restarts=args.restarts))
    res.save(args.out)
    print(json.dumps({"out": str(args.out), "warnings": res.diagnostics.get("warnings", [])}))
    return EXIT_OK


def cmd_theory(args) -> int:
    psi = _load_json_model(MixtureParams, args.psi, "mixture")
    teacher = _load_json_model(TeacherModel, args.teacher, "teacher")
    rep = theory.report(psi, teacher.weights, eps0=args.eps0, step_scale=args.step_scale)
    print(json.dumps(output._jsonable(rep.to_dict()), indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    wanted = KIND_ALIASES.get(args.kind, args.kind)
    if wanted != spec.kind:
        raise SpecError(f"command asks for {wanted!r} but the spec describes {spec.kind!r}")
    if args.seed is not None:
        spec.seed = args.seed
        spec.doc["seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise SpecError("--trials must be positive")
        spec.trials = args.trials
        spec.doc["trials"] = args.trials
    result = run_sweep(spec, args.threads)
    written = output.write_outputs(args.out, result, spec.to_dict(), [a.name for a in spec.axes],
                                   plots=not args.no_plots)
    print(json.dumps({"rows": len(result.rows), "written": [str(p) for p in written]}))
    return EXIT_OK


def cmd_plot(args) -> int:
    d = Path(args.results)
    summary_path = d / "summary.json"
    if not summary_path.is_file():
        raise InputError(f"no summary.json in {d}")
    doc = json.loads(summary_path.read_text())
    axes = [a["name"] for a in doc.get("spec", {}).get("axes", [])] or (
        [doc["spec"]["axis"]["name"]] if "axis" in doc.get("spec", {}) else [])
    plots = output.plots_for(doc["kind"], doc["summary"], axes)
    for name, svg in plots.items():
        (d / name).write_text(svg)
    print(json.dumps({"written": sorted(plots)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmmfcn-bench", description="Gaussian-mixture teacher-student experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a mixture, teacher and labeled sample from a spec")
    g.add_argument("--spec", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--cell", type=int, default=0)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="gradient descent on a generated dataset")
    t.add_argument("--psi", required=True)
    t.add_argument("--teacher", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--init", help="JSON with W0 (e.g. the output of 'init')")
    t.add_argument("--eps", type=float, default=0.1, help="radius of the local random init")
    t.add_argument("--iterations", type=int, default=1000)
    t.add_argument("--step-size", type=float)
    t.add_argument("--step-scale", type=float, default=1.0)
    t.add_argument("--grad-tol", type=float)
    t.add_argument("--noise", type=float, default=0.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("init", help="tensor initialization")
    i.add_argument("--psi", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--k", type=int, required=True)
    i.add_argument("--restarts", type=int, default=50)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_init)

    th = sub.add_parser("theory", help="print the theory report as JSON")
    th.add_argument("--psi", required=True)
    th.add_argument("--teacher", required=True)
    th.add_argument("--eps0", type=float, default=0.1)
    th.add_argument("--step-scale", type=float, default=1.0)
    th.set_defaults(func=cmd_theory)

    s = sub.add_parser("sweep", help="run an experiment sweep")
    s.add_argument("kind", choices=sorted(set(KINDS) | set(KIND_ALIASES)))
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, help="worker threads (default: $GMMFCN_THREADS or 1)")
    s.add_argument("--seed", type=int, help="override the spec's base seed")
    s.add_argument("--trials", type=int, help="override the spec's trial count")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="redraw SVG plots from a results directory")
    pl.add_argument("--results", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_SPEC if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SpecError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC
    except Exception as e:  # noqa: BLE001 - any failure during a run maps to exit 3
        print(f"run failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
