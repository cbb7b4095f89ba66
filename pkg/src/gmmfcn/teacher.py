"""One-hidden-layer sigmoid teacher network.

``H(W, x) = (1/K) sum_j sigmoid(w_j^T x)`` is the probability that ``y = 1``.
Second-layer weights are fixed to ``1/K``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import expit

__all__ = [
    "sigmoid",
    "sigmoid_prime",
    "sigmoid_second",
    "neuron_mean",
    "forward",
    "draw_labels",
    "SpectralStats",
    "spectral_stats",
    "TeacherModel",
]


def sigmoid(z):
    # expit never overflows, which matters once |w^T x| is large.
    return expit(z)


def sigmoid_prime(z):
    s = expit(z)
    return s * (1.0 - s)


def sigmoid_second(z):
    s = expit(z)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def neuron_mean(S) -> np.ndarray:
    """Row means of per-neuron outputs, independent of the column order.

    Sorting first fixes the summation order, so permuting the neurons leaves
    the result bitwise unchanged.
    """
    return np.sort(S, axis=1).mean(axis=1)


def _check(W, x):
    # A contiguous copy makes X @ W round identically for any column order.
    W = np.ascontiguousarray(W, dtype=float)
    X = np.asarray(x, dtype=float)
    if W.ndim != 2:
        raise ValueError("W must be a d x K matrix")
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != W.shape[0]:
        raise ValueError(f"x has dimension {X.shape[1]} but W has {W.shape[0]} rows")
    return W, X, single


def forward(W, x):
    """Teacher probability ``H(W, x)`` for one point or each row of ``x``."""
    W, X, single = _check(W, x)
    H = neuron_mean(sigmoid(X @ W))
    return float(H[0]) if single else H


def draw_labels(W, x, rng) -> np.ndarray:
    """Bernoulli labels with success probability ``forward(W, x)``.

    ``rng`` is a :class:`numpy.random.Generator` (or a seed). Returns an int
    array, or a plain int for a single point.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    H = np.atleast_1d(forward(W, x))
    y = (rng.random(H.shape[0]) < H).astype(np.int64)
    return int(y[0]) if np.ndim(x) == 1 else y


@dataclass(frozen=True)
class SpectralStats:
    singular_values: np.ndarray
    kappa: float
    eta: float


def spectral_stats(W, rank_tol: float = 1e-12) -> SpectralStats:
    """Singular values (descending), condition number and ``prod_i delta_i/delta_K``."""
    W = np.asarray(W, dtype=float)
    s = np.linalg.svd(W, compute_uv=False)
    if W.shape[1] > W.shape[0] or s[-1] <= rank_tol * max(s[0], 1e-300):
        raise ValueError("W must have full column rank")
    ratios = s / s[-1]
    return SpectralStats(s, float(ratios[0]), float(np.prod(ratios)))


@dataclass(frozen=True)
class TeacherModel:
    """Ground-truth weights ``W*`` (d x K, full column rank)."""

    weights: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[1] < 1 or W.shape[0] < W.shape[1]:
            raise ValueError("teacher weights must be d x K with d >= K >= 1")
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)
        spectral_stats(W)  # raises on rank deficiency

    @classmethod
    def random(cls, d: int, k: int, seed=None) -> "TeacherModel":
        """i.i.d. standard normal entries."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(rng.standard_normal((d, k)))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    @cached_property
    def stats(self) -> SpectralStats:
        return spectral_stats(self.weights)

    @property
    def kappa(self) -> float:
        return self.stats.kappa

    @property
    def eta(self) -> float:
        return self.stats.eta

    def forward(self, x):
        return forward(self.weights, x)

    def draw_labels(self, x, rng):
        return draw_labels(self.weights, x, rng)

    def to_dict(self) -> dict:
        return {"d": self.d, "k": self.k, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "TeacherModel":
        W = np.asarray(doc["weights"], dtype=float)
        if W.shape != (int(doc["d"]), int(doc["k"])):
            raise ValueError(f"weights shape {W.shape} disagrees with d={doc['d']}, k={doc['k']}")
        return cls(W)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "TeacherModel":
        return cls.from_dict(json.loads(Path(path).read_text()))
