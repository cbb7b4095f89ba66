import json
import subprocess
import sys

import numpy as np
import pytest

from gmmfcn.bench import (
    ExperimentSpec,
    SpecError,
    default_spec,
    default_spec_names,
    fit_error_scaling,
    linear_fit,
    paired_trend,
    run_sweep,
    trial_seed,
)
from gmmfcn.bench.cli import EXIT_OK, EXIT_RUNTIME, EXIT_SPEC, main
from gmmfcn.bench.output import read_csv, write_outputs
from gmmfcn.bench.runners import _within_trial_slope

MIX = {"components": [
    {"weight": 0.5, "mean": {"fill": 1.0}, "cov": {"identity": 1.0}},
    {"weight": 0.5, "mean": {"fill": -1.0}, "cov": {"identity": 1.0}},
]}


def small(kind, **kw):
    doc = {"kind": kind, "seed": 3, "trials": 2, "d": 3, "n": 2000, "mixture": MIX,
           "teacher": {"k": 2, "entries": "normal"},
           "train": {"step_scale": 20, "iterations": 60, "grad_tol": 1e-9}}
    doc.update(kw)
    return doc


SMALL = {
    "convergence_sweep": small("convergence_sweep", axis={
        "name": "C", "values": [0.0, 1.0],
        "set": [{"path": "mixture.components.0.mean.fill"}, {"path": "mixture.components.1.mean.fill", "scale": -1}]}),
    "error_vs_n": small("error_vs_n", axis={"name": "n", "values": [1000, 2000, 4000], "set": [{"path": "n"}]}),
    "risk_vs_sigma": small("risk_vs_sigma", eval={"n_mc": 500, "labels": "expected", "group": 1, "seed": 5},
                           axis={"name": "sigma2", "values": [0.5, 1.0, 2.0],
                                 "set": [{"path": "mixture.components.1.cov.sigma"}]}),
    "sample_complexity_grid": small("sample_complexity_grid", inits=3, axes=[
        {"name": "d", "values": [2, 3], "set": [{"path": "d"}]},
        {"name": "n", "values": [50, 400], "set": [{"path": "n"}]}]),
    "init_compare": small("init_compare", trials=1, n=3000,
                          teacher={"k": 2, "entries": "uniform", "low": -0.5, "high": 0.5}),
}


def write_spec(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


# -- spec handling ------------------------------------------------------------------------


def test_builtin_specs_load():
    names = default_spec_names()
    assert {"sample_complexity", "error_vs_n", "init_compare", "convergence_k"} <= set(names)
    for n in names:
        spec = default_spec(n)
        assert spec.cells()


def test_spec_rejects_bad_documents():
    good = SMALL["error_vs_n"]
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "kind": "nope"})
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "trials": 0})
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "axis": {"name": "n", "values": []}})
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "teacher": {"k": 5, "entries": "normal"}})
    bad_weights = {"components": [{**MIX["components"][0], "weight": 0.9}, MIX["components"][1]]}
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "mixture": bad_weights})
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({**good, "mixture": {"components": [
            {"weight": 1.0, "mean": {"fill": 0.0}, "cov": {"diagonal": 1.0}}]}})


def test_axis_setters_apply_scale_and_offset():
    spec = ExperimentSpec.from_dict(SMALL["convergence_sweep"])
    psi = spec.cells()[1].mixture()
    np.testing.assert_array_equal(psi.means, [np.ones(3), -np.ones(3)])


def test_trial_seeds_do_not_depend_on_cell():
    assert trial_seed(3, 0) == trial_seed(3, 0) != trial_seed(3, 1)
    res = run_sweep(ExperimentSpec.from_dict(SMALL["error_vs_n"]))
    seeds = res.column("seed").reshape(3, 2)
    assert np.all(seeds == seeds[0])


def test_single_cell_grid():
    doc = {**SMALL["error_vs_n"], "axis": {"name": "n", "values": [1500], "set": [{"path": "n"}]}}
    res = run_sweep(ExperimentSpec.from_dict(doc))
    assert len(res.rows) == 2 and res.summary["fit"] is None


# -- fitting helpers ---------------------------------------------------------------------


def test_linear_fit_exact_line():
    f = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert f.slope == pytest.approx(2) and f.intercept == pytest.approx(1)
    assert f.r_squared == pytest.approx(1.0) and f.slope_se == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        linear_fit([1, 1], [0, 1])


def test_linear_fit_slope_se_matches_scipy():
    from scipy.stats import linregress
    rng = np.random.default_rng(0)
    x = rng.uniform(size=30)
    y = 2 * x + rng.standard_normal(30)
    ref = linregress(x, y)
    f = linear_fit(x, y)
    assert f.slope == pytest.approx(ref.slope) and f.slope_se == pytest.approx(ref.stderr)
    assert f.r_squared == pytest.approx(ref.rvalue ** 2)


def test_error_scaling_self_check():
    n = np.array([2e3, 5e3, 1e4, 2e4, 4e4, 6e4])
    f = fit_error_scaling(n, 3.0 * np.sqrt(np.log(n) / n) + 0.01)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12) and f.slope == pytest.approx(3.0)


def test_paired_trend_calls():
    rng = np.random.default_rng(1)
    base = rng.standard_normal(10)
    Y = np.stack([base, base + 1, base + 1 + 1e-3 * rng.standard_normal(10), base - 5])
    t = paired_trend([0, 1, 2, 3], Y)
    assert [s["call"] for s in t["steps"]] == ["increase", "flat", "decrease"]
    assert not t["non_decreasing"] and t["argmin_mean"] == 3 and not t["interior_min_mean"]
    t = paired_trend([0, 1, 2], np.stack([base + 1, base, base + 2]))
    assert t["interior_min_mean"] and t["argmin_median"] == 1


def test_within_trial_slope_removes_trial_offsets():
    x = np.array([0.0, 1.0, 2.0])
    offsets = np.array([0.0, 10.0, -7.0, 3.0])
    Y = 0.5 * x[:, None] + offsets[None, :] + 1e-3 * np.random.default_rng(2).standard_normal((3, 4))
    out = _within_trial_slope(x, Y)
    assert out["slope"] == pytest.approx(0.5, abs=5e-3) and out["slope_se"] < 5e-3


# -- sweeps, outputs and determinism --------------------------------------------------------


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_every_kind_runs_and_is_deterministic(tmp_path, kind):
    spec = ExperimentSpec.from_dict(SMALL[kind])
    a = run_sweep(spec, threads=1)
    b = run_sweep(ExperimentSpec.from_dict(SMALL[kind]), threads=2)
    write_outputs(tmp_path / "a", a, spec.to_dict(), [x.name for x in spec.axes])
    write_outputs(tmp_path / "b", b, spec.to_dict(), [x.name for x in spec.axes])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    cols, rows = read_csv(tmp_path / "a" / "results.csv")
    assert cols == a.columns and len(rows) == len(a.rows)
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["kind"] == spec.kind and "timing" in summary


def test_csv_round_trips_floats(tmp_path):
    spec = ExperimentSpec.from_dict(SMALL["error_vs_n"])
    res = run_sweep(spec)
    write_outputs(tmp_path, res, plots=False)
    _, rows = read_csv(tmp_path / "results.csv")
    assert [r["final_error"] for r in rows] == [r["final_error"] for r in res.rows]


def test_sample_complexity_summary_shape():
    res = run_sweep(ExperimentSpec.from_dict(SMALL["sample_complexity_grid"]))
    assert set(res.summary["phase_boundary"]) == {"2", "3"}
    assert {"success", "v_w"} <= set(res.columns)


# -- command line ----------------------------------------------------------------------------


def test_cli_sweep_and_plot(tmp_path, capsys):
    p = write_spec(tmp_path, SMALL["risk_vs_sigma"])
    assert main(["sweep", "risk_vs_sigma", "--spec", str(p), "--out", str(tmp_path / "r")]) == EXIT_OK
    first = (tmp_path / "r" / "results.csv").read_bytes()
    assert (tmp_path / "r" / "risk.svg").is_file()
    assert main(["sweep", "risk_vs_sigma", "--spec", str(p), "--out", str(tmp_path / "r2")]) == EXIT_OK
    assert (tmp_path / "r2" / "results.csv").read_bytes() == first
    assert main(["plot", "--results", str(tmp_path / "r")]) == EXIT_OK


def test_cli_spec_errors_exit_2(tmp_path):
    assert main(["sweep", "error_vs_n", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_SPEC
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sweep", "error_vs_n", "--spec", str(bad), "--out", str(tmp_path)]) == EXIT_SPEC
    p = write_spec(tmp_path, SMALL["error_vs_n"])
    assert main(["sweep", "risk_vs_mu", "--spec", str(p), "--out", str(tmp_path)]) == EXIT_SPEC
    assert main(["sweep", "no_such_kind", "--spec", str(p), "--out", str(tmp_path)]) == EXIT_SPEC
    assert main(["train", "--psi", "x", "--teacher", "y", "--data", "z", "--out", str(tmp_path)]) == EXIT_SPEC


def test_cli_runtime_failure_exit_3(tmp_path):
    p = write_spec(tmp_path, SMALL["error_vs_n"])
    blocker = tmp_path / "file"
    blocker.write_text("")
    # the output path lies under a regular file, so writing results fails mid-run
    assert main(["sweep", "error_vs_n", "--spec", str(p), "--out", str(blocker / "out")]) == EXIT_RUNTIME


def test_cli_pipeline(tmp_path):
    p = write_spec(tmp_path, SMALL["init_compare"])
    g = tmp_path / "g"
    assert main(["generate", "--spec", str(p), "--out", str(g)]) == EXIT_OK
    args = ["--psi", str(g / "psi.json"), "--teacher", str(g / "teacher.json")]
    assert main(["init", "--psi", str(g / "psi.json"), "--data", str(g / "data.npz"), "--k", "2",
                 "--restarts", "5", "--out", str(tmp_path / "init.json")]) == EXIT_OK
    assert main(["train", *args, "--data", str(g / "data.npz"), "--init", str(tmp_path / "init.json"),
                 "--iterations", "30", "--out", str(tmp_path / "t")]) == EXIT_OK
    trace = (tmp_path / "t" / "trace.csv").read_text().splitlines()
    assert trace[0] == "iter,aligned_error,dist_to_final,empirical_risk" and len(trace) == 32
    assert main(["theory", *args]) == EXIT_OK


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gmmfcn.bench", "sweep", "error_vs_n", "--spec",
                          str(tmp_path / "missing.json"), "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == EXIT_SPEC and "not found" in out.stderr


def test_success_midpoint_recovers_logistic_center():
    from gmmfcn.bench.runners import success_midpoint
    rng = np.random.default_rng(0)
    ns = np.repeat([50, 100, 200, 400, 800], 400)
    p = 1 / (1 + np.exp(-2.0 * (np.log(ns) - np.log(200))))
    wins = rng.random(ns.size) < p
    assert success_midpoint(ns, wins) == pytest.approx(200, rel=0.1)


def test_success_midpoint_undefined_without_both_outcomes():
    from gmmfcn.bench.runners import success_midpoint
    assert success_midpoint([50, 100, 200], [1, 1, 1]) is None
    assert success_midpoint([50, 100, 200], [0, 0, 0]) is None
