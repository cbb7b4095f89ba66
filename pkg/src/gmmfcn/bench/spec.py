"""Experiment specifications: parsing, validation and per-cell expansion.

An experiment is a JSON document. The sweep axes name dotted paths into the
document itself; each grid cell is the document with those paths overwritten,
so every generator (mixture, teacher, sample size) is described once.

Minimal example::

    {
      "kind": "convergence_sweep",
      "seed": 1, "trials": 5, "d": 5, "n": 10000,
      "mixture": {"components": [
          {"weight": 0.5, "mean": {"fill": 1.0}, "cov": {"identity": 1.0}},
          {"weight": 0.5, "mean": {"fill": -1.0}, "cov": {"identity": 1.0}}]},
      "teacher": {"k": 3, "entries": "normal"},
      "axis": {"name": "C", "values": [0, 1, 2],
               "set": [{"path": "mixture.components.0.mean.fill"},
                       {"path": "mixture.components.1.mean.fill", "scale": -1}]},
      "train": {"step_scale": 50, "iterations": 5000, "grad_tol": 1e-11}
    }

Mean forms: a list of ``d`` numbers, or ``{"fill": c}`` for ``c * ones(d)``.
Covariance forms, all multiplied by ``sigma**2`` when ``"sigma"`` is given:
``{"identity": v}`` for ``v * I``, ``{"rotated_diag": [...],
"rotation_seed": k}`` for ``L^T diag(D) L`` with ``L`` the left singular
vectors of a seeded standard normal ``d x d`` matrix, or an explicit nested
list. Teacher entries are ``"normal"`` or ``"uniform"`` (with ``low`` and
``high``).
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..mixture import MixtureParams

__all__ = [
    "KINDS",
    "SpecError",
    "Axis",
    "Cell",
    "ExperimentSpec",
    "load_spec",
    "build_mixture",
    "build_teacher",
    "trial_seed",
]

KINDS = (
    "sample_complexity_grid",
    "convergence_sweep",
    "error_vs_n",
    "risk_vs_mu",
    "risk_vs_sigma",
    "risk_vs_lambda",
    "init_compare",
)
KIND_ALIASES = {"sample_complexity": "sample_complexity_grid"}

TRAIN_DEFAULTS = {
    "step_scale": 1.0,
    "iterations": 3000,
    "grad_tol": None,
    "noise_level": 0.0,
    "init_eps": 0.1,
}
EVAL_DEFAULTS = {"n_mc": 100000, "labels": "expected", "group": 1, "seed": 0}


class SpecError(ValueError):
    """Malformed or inconsistent experiment specification."""


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed for one trial, hashed from the base seed and the trial index.

    It does not depend on the grid cell, so every cell of a sweep sees the
    same teacher and sample streams for a given trial (common random numbers).
    """
    return int(np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1)[0])


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple
    setters: tuple  # of (path, scale, offset)

    @classmethod
    def from_dict(cls, doc: dict) -> "Axis":
        if not isinstance(doc, dict) or "name" not in doc or "values" not in doc:
            raise SpecError("each axis needs 'name' and 'values'")
        values = tuple(doc["values"])
        if not values:
            raise SpecError(f"axis {doc['name']!r} has an empty grid")
        setters = []
        for s in doc.get("set", [{"path": doc["name"]}]):
            if "path" not in s:
                raise SpecError(f"axis {doc['name']!r}: setter without 'path'")
            setters.append((str(s["path"]), float(s.get("scale", 1.0)), float(s.get("offset", 0.0))))
        return cls(str(doc["name"]), values, tuple(setters))


@dataclass
class Cell:
    """One grid point: the axis values and the expanded document."""

    index: int
    coords: dict
    doc: dict

    @property
    def d(self) -> int:
        return int(self.doc["d"])

    @property
    def n(self) -> int:
        return int(self.doc["n"])

    @property
    def k(self) -> int:
        return int(self.doc["teacher"]["k"])

    @property
    def train(self) -> dict:
        return {**TRAIN_DEFAULTS, **self.doc.get("train", {})}

    @property
    def eval(self) -> dict:
        return {**EVAL_DEFAULTS, **self.doc.get("eval", {})}

    def mixture(self) -> MixtureParams:
        return build_mixture(self.doc["mixture"], self.d)


def _set_path(doc: dict, path: str, value) -> None:
    keys = path.split(".")
    node = doc
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _setter_value(v, scale: float, offset: float):
    if scale == 1.0 and offset == 0.0:
        return v
    return float(v) * scale + offset


@dataclass
class ExperimentSpec:
    kind: str
    seed: int
    trials: int
    axes: list[Axis]
    doc: dict = field(repr=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise SpecError("spec must be a JSON object")
        kind = KIND_ALIASES.get(doc.get("kind"), doc.get("kind"))
        if kind not in KINDS:
            raise SpecError(f"unknown kind {doc.get('kind')!r}; expected one of {', '.join(KINDS)}")
        trials = doc.get("trials", 1)
        if not isinstance(trials, int) or trials < 1:
            raise SpecError("trials must be a positive integer")
        axes_doc = doc.get("axes", [doc["axis"]] if "axis" in doc else [])
        axes = [Axis.from_dict(a) for a in axes_doc]
        for key in ("d", "mixture", "teacher"):
            if key not in doc:
                raise SpecError(f"spec is missing {key!r}")
        if "n" not in doc and not any(any(p == "n" for p, _, _ in a.setters) for a in axes):
            raise SpecError("spec needs 'n' or an axis that sets it")
        doc = copy.deepcopy(doc)
        doc["kind"] = kind
        spec = cls(kind, int(doc.get("seed", 0)), trials, axes, doc)
        # Expanding every cell validates the generators early (exit code 2, not 3).
        for cell in spec.cells():
            try:
                cell.mixture()
                k = _teacher_doc(cell.doc["teacher"])[0]
                if not 1 <= k <= cell.d:
                    raise SpecError(f"cell {cell.coords}: teacher k={k} must lie in 1..d={cell.d}")
            except SpecError:
                raise
            except (KeyError, TypeError, ValueError, IndexError) as e:
                raise SpecError(f"cell {cell.coords}: {e}") from e
        return spec

    def cells(self) -> list[Cell]:
        out = []
        grids = [a.values for a in self.axes]
        for i, combo in enumerate(itertools.product(*grids)):
            doc = copy.deepcopy(self.doc)
            coords = {}
            for axis, v in zip(self.axes, combo):
                coords[axis.name] = v
                for path, scale, offset in axis.setters:
                    try:
                        _set_path(doc, path, _setter_value(v, scale, offset))
                    except (KeyError, IndexError, ValueError, TypeError) as e:
                        raise SpecError(f"axis {axis.name!r}: cannot set {path!r}: {e}") from e
            out.append(Cell(i, coords, doc))
        return out

    @property
    def inits(self) -> int:
        return int(self.doc.get("inits", 20))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.doc)


def load_spec(path) -> ExperimentSpec:
    p = Path(path)
    if not p.is_file():
        raise SpecError(f"spec file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise SpecError(f"{p}: invalid JSON: {e}") from e
    return ExperimentSpec.from_dict(doc)


def _rotation(d: int, seed: int) -> np.ndarray:
    G = np.random.default_rng(seed).standard_normal((d, d))
    return np.linalg.svd(G)[0]


def _build_mean(m, d: int) -> np.ndarray:
    if isinstance(m, dict):
        if "fill" not in m:
            raise SpecError(f"mean object needs 'fill': {m}")
        return np.full(d, float(m["fill"]))
    mu = np.asarray(m, dtype=float)
    if mu.shape != (d,):
        raise SpecError(f"mean has shape {mu.shape}, expected ({d},)")
    return mu


def _build_cov(c, d: int) -> np.ndarray:
    if not isinstance(c, dict):
        S = np.asarray(c, dtype=float)
        if S.shape != (d, d):
            raise SpecError(f"covariance has shape {S.shape}, expected ({d}, {d})")
        return S
    sig2 = float(c.get("sigma", 1.0)) ** 2
    if "identity" in c:
        return sig2 * float(c["identity"]) * np.eye(d)
    if "rotated_diag" in c:
        D = np.asarray(c["rotated_diag"], dtype=float)
        if D.shape != (d,):
            raise SpecError(f"rotated_diag has {D.size} entries, expected {d}")
        L = _rotation(d, int(c.get("rotation_seed", 0)))
        S = L.T @ np.diag(D) @ L
        return sig2 * 0.5 * (S + S.T)
    raise SpecError(f"unrecognized covariance form: {sorted(c)}")


def build_mixture(doc: dict, d: int) -> MixtureParams:
    comps = doc.get("components")
    if not comps:
        raise SpecError("mixture needs a non-empty 'components' list")
    w = [float(c.get("weight", 1.0 / len(comps))) for c in comps]
    means = [_build_mean(c.get("mean", {"fill": 0.0}), d) for c in comps]
    covs = [_build_cov(c.get("cov", {"identity": 1.0}), d) for c in comps]
    return MixtureParams(w, means, covs)


def _teacher_doc(doc: dict) -> tuple[int, str, float, float]:
    k = int(doc["k"])
    entries = doc.get("entries", "normal")
    if entries not in ("normal", "uniform"):
        raise SpecError(f"teacher entries must be 'normal' or 'uniform', got {entries!r}")
    return k, entries, float(doc.get("low", -1.0)), float(doc.get("high", 1.0))


def build_teacher(doc: dict, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a ``d x k`` teacher; redraws (rarely) until it has full column rank."""
    k, entries, low, high = _teacher_doc(doc)
    if k > d:
        raise SpecError(f"teacher k={k} exceeds dimension d={d}")
    for _ in range(100):
        W = rng.standard_normal((d, k)) if entries == "normal" else rng.uniform(low, high, size=(d, k))
        s = np.linalg.svd(W, compute_uv=False)
        if s[-1] > 1e-8 * s[0]:
            return W
    raise RuntimeError("could not draw a full-rank teacher")
