"""Cross-entropy loss of the one-hidden-layer network and its derivatives.

Per sample, with ``H = H(W, x)`` and ``phi`` the sigmoid,

    loss = -y log H - (1 - y) log(1 - H)
    d loss / d w_j = zeta_j x,   zeta_j = -(1/K) (y - H) / (H (1 - H)) phi'(w_j^T x)
    d^2 loss / d w_j d w_l = xi_jl x x^T

Inside the log and the ``H (1 - H)`` denominators, ``H`` is clamped to
``[HCLAMP, 1 - HCLAMP]``; derivative checks must stay away from that region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mixture import MixtureParams, sample, sample_component
from .teacher import draw_labels, forward, neuron_mean, sigmoid, sigmoid_prime, sigmoid_second

__all__ = [
    "HCLAMP",
    "RiskEval",
    "loss",
    "grad",
    "hessian",
    "hessian_coefficients",
    "empirical_risk",
    "empirical_grad",
    "empirical_hessian",
    "population_risk",
    "group_risk",
    "excess_risk",
    "AlignedError",
    "aligned_error",
]

HCLAMP = 1e-12
HESSIAN_MAX_DIM = 256
MIN_MC = 100
MAX_ALIGN_K = 8


@dataclass(frozen=True)
class RiskEval:
    value: float
    n_used: int
    mc_std_err: float = 0.0


def _prep(W, x):
    W = np.ascontiguousarray(W, dtype=float)
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if W.ndim != 2 or X.shape[1] != W.shape[0]:
        raise ValueError(f"shape mismatch: W {W.shape}, x {np.shape(x)}")
    return W, X, single


def _labels(y, n):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != n:
        raise ValueError("one label per sample required")
    return y


def _per_sample_loss(Z, y):
    H = np.clip(neuron_mean(sigmoid(Z)), HCLAMP, 1 - HCLAMP)
    return -(y * np.log(H) + (1 - y) * np.log1p(-H))


def _zeta(Z, y):
    """Gradient coefficients, shape (n, K)."""
    K = Z.shape[1]
    H = np.clip(neuron_mean(sigmoid(Z)), HCLAMP, 1 - HCLAMP)
    g = -(y - H) / (H * (1 - H)) / K
    return g[:, None] * sigmoid_prime(Z)


def loss(W, x, y):
    """Cross-entropy loss for one sample (float) or per row of ``x``."""
    W, X, single = _prep(W, x)
    out = _per_sample_loss(X @ W, _labels(y, X.shape[0]))
    return float(out[0]) if single else out


def grad(W, x, y) -> np.ndarray:
    """Gradient of the single-sample loss, a d x K matrix (column j = zeta_j x)."""
    W, X, single = _prep(W, x)
    if not single:
        raise ValueError("grad takes one sample; use empirical_grad for datasets")
    zeta = _zeta(X @ W, _labels(y, 1))
    return np.outer(X[0], zeta[0])


def hessian_coefficients(W, x, y) -> np.ndarray:
    """``xi_{j,l}`` for each sample, shape (n, K, K) (or (K, K) for one sample)."""
    W, X, single = _prep(W, x)
    yv = _labels(y, X.shape[0])
    Z = X @ W
    K = W.shape[1]
    H = np.clip(neuron_mean(sigmoid(Z)), HCLAMP, 1 - HCLAMP)
    dp = sigmoid_prime(Z)
    common = (H ** 2 + yv - 2 * yv * H) / (H ** 2 * (1 - H) ** 2) / K ** 2
    xi = common[:, None, None] * (dp[:, :, None] * dp[:, None, :])
    diag = -sigmoid_second(Z) * ((yv - H) / (H * (1 - H)))[:, None] / K
    xi[:, np.arange(K), np.arange(K)] += diag
    return xi[0] if single else xi


def hessian(W, x, y) -> np.ndarray:
    """Hessian of the single-sample loss as a dK x dK matrix.

    Parameters are ordered column-major, i.e. ``vec(W) = (w_1, ..., w_K)``.
    """
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    d, K = W.shape
    if d * K > HESSIAN_MAX_DIM:
        raise ValueError(f"dense Hessian refused for dK > {HESSIAN_MAX_DIM}")
    xi = hessian_coefficients(W, x, y)
    return np.kron(xi, np.outer(x, x))


def empirical_risk(W, X, y) -> RiskEval:
    W, X, _ = _prep(W, X)
    per = _per_sample_loss(X @ W, _labels(y, X.shape[0]))
    # np.sum uses pairwise summation on contiguous float arrays.
    return RiskEval(float(np.sum(per) / per.shape[0]), per.shape[0], 0.0)


def empirical_grad(W, X, y) -> np.ndarray:
    W, X, _ = _prep(W, X)
    zeta = _zeta(X @ W, _labels(y, X.shape[0]))
    return X.T @ zeta / X.shape[0]


def empirical_hessian(W, X, y) -> np.ndarray:
    """Mean per-sample Hessian, dK x dK (column-major parameter order)."""
    W, X, _ = _prep(W, X)
    d, K = W.shape
    if d * K > HESSIAN_MAX_DIM:
        raise ValueError(f"dense Hessian refused for dK > {HESSIAN_MAX_DIM}")
    xi = hessian_coefficients(W, X, y)
    if xi.ndim == 2:
        xi = xi[None]
    Hs = np.einsum("njl,na,nb->jalb", xi, X, X, optimize=True) / X.shape[0]
    Hs = Hs.reshape(d * K, d * K)
    return 0.5 * (Hs + Hs.T)


# -- population risks ---------------------------------------------------------


def _mc_risk(W, X, Wstar, rng, labels: str) -> RiskEval:
    if labels == "sampled":
        y = draw_labels(Wstar, X, rng)
        per = _per_sample_loss(X @ np.ascontiguousarray(W, dtype=float), y)
    elif labels == "expected":
        # Conditional expectation over y given x; same mean, lower variance.
        Hs = forward(Wstar, X)
        H = np.clip(neuron_mean(sigmoid(X @ np.ascontiguousarray(W, dtype=float))), HCLAMP, 1 - HCLAMP)
        per = -(Hs * np.log(H) + (1 - Hs) * np.log1p(-H))
    else:
        raise ValueError("labels must be 'sampled' or 'expected'")
    n = per.shape[0]
    return RiskEval(float(np.sum(per) / n), n, float(per.std(ddof=1) / np.sqrt(n)))


def _teacher_weights(teacher):
    return np.asarray(getattr(teacher, "weights", teacher), dtype=float)


def population_risk(W, psi: MixtureParams, teacher, n_mc: int, seed=None, labels: str = "sampled") -> RiskEval:
    """Monte-Carlo average risk over fresh draws from the whole mixture."""
    if n_mc < MIN_MC:
        raise ValueError(f"n_mc must be at least {MIN_MC}")
    rng = np.random.default_rng(seed)
    X, _ = sample(psi, n_mc, rng)
    return _mc_risk(W, X, _teacher_weights(teacher), rng, labels)


def group_risk(W, psi: MixtureParams, teacher, l: int, n_mc: int, seed=None, labels: str = "sampled") -> RiskEval:
    """Monte-Carlo risk on group ``l`` (0-based component index)."""
    if n_mc < MIN_MC:
        raise ValueError(f"n_mc must be at least {MIN_MC}")
    if not 0 <= l < psi.n_components:
        raise ValueError(f"group index {l} out of range for L={psi.n_components}")
    rng = np.random.default_rng(seed)
    if psi.n_components == 1:
        # Same draw sequence as population_risk so L=1 results coincide.
        X, _ = sample(psi, n_mc, rng)
    else:
        X = sample_component(psi, l, n_mc, rng)
    return _mc_risk(W, X, _teacher_weights(teacher), rng, labels)


def excess_risk(W, psi: MixtureParams, teacher, n_mc: int, seed=None, group: int | None = None) -> RiskEval:
    """Monte-Carlo ``risk(W) - risk(W*)`` on one paired sample.

    With labels integrated out the per-sample difference is the Bernoulli
    KL divergence ``KL(H(W*, x) || H(W, x)) >= 0``, so the estimate is
    nonnegative and its standard error excludes the teacher-entropy noise
    that dominates either risk alone. ``group=None`` draws from the whole
    mixture; otherwise from component ``group`` (0-based), with the same draw
    sequence as :func:`population_risk` and :func:`group_risk`.
    """
    if n_mc < MIN_MC:
        raise ValueError(f"n_mc must be at least {MIN_MC}")
    rng = np.random.default_rng(seed)
    if group is None or psi.n_components == 1:
        X, _ = sample(psi, n_mc, rng)
    else:
        if not 0 <= group < psi.n_components:
            raise ValueError(f"group index {group} out of range for L={psi.n_components}")
        X = sample_component(psi, group, n_mc, rng)
    Hs = np.clip(forward(_teacher_weights(teacher), X), HCLAMP, 1 - HCLAMP)
    H = np.clip(neuron_mean(sigmoid(X @ np.ascontiguousarray(W, dtype=float))), HCLAMP, 1 - HCLAMP)
    per = Hs * (np.log(Hs) - np.log(H)) + (1 - Hs) * (np.log1p(-Hs) - np.log1p(-H))
    n = per.shape[0]
    return RiskEval(float(np.sum(per) / n), n, float(per.std(ddof=1) / np.sqrt(n)))


# -- permutation-aligned error --------------------------------------------------


@dataclass(frozen=True)
class AlignedError:
    distance: float
    permutation: tuple[int, ...]

    def apply(self, Wstar) -> np.ndarray:
        """``W* P``: the columns of ``Wstar`` in the aligned order."""
        return np.asarray(Wstar)[:, list(self.permutation)]


def aligned_error(W, Wstar) -> AlignedError:
    """Smallest ``||W - W* P||_F`` over column permutations ``P``.

    The search is exhaustive; ``permutation[j]`` is the column of ``Wstar``
    matched to column ``j`` of ``W``.
    """
    W = np.asarray(W, dtype=float)
    Ws = np.asarray(Wstar, dtype=float)
    if W.shape != Ws.shape:
        raise ValueError(f"shape mismatch {W.shape} vs {Ws.shape}")
    K = W.shape[1]
    if K > MAX_ALIGN_K:
        raise ValueError(f"aligned_error supports K <= {MAX_ALIGN_K}")
    cost = ((W[:, :, None] - Ws[:, None, :]) ** 2).sum(axis=0)
    perms = np.array(list(itertools.permutations(range(K))))
    totals = cost[np.arange(K)[None, :], perms].sum(axis=1)
    best = int(np.argmin(totals))
    return AlignedError(float(np.sqrt(max(totals[best], 0.0))), tuple(int(p) for p in perms[best]))
