"""Full-batch gradient descent on the empirical cross-entropy risk.

Each step is ``W <- W - step * (grad f_n(W) + mean_i nu_i)``, where the
``nu_i`` have i.i.d. entries uniform on ``[-noise, noise]``. The trace keeps
per-iteration diagnostics so that linear convergence can be fitted
afterwards. Because the critical point is unknown during a run, distances are
measured to the final iterate.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mixture import MixtureParams, sample
from .risk import HCLAMP, aligned_error, empirical_risk
from .teacher import draw_labels

__all__ = [
    "DivergenceError",
    "TrainConfig",
    "TrainTrace",
    "RateFit",
    "TrialOutcome",
    "auto_step_size",
    "gd_train",
    "gd_train_batch",
    "fit_rate",
    "local_random_init",
    "trial_success",
    "SUCCESS_THRESHOLD",
]

log = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 1e-3
DIVERGENCE_FACTOR = 1e3


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(f"diverged at iteration {iteration}" + (f": {message}" if message else ""))


def auto_step_size(psi: MixtureParams, c: float = 1.0) -> float:
    """``c / sum_l lambda_l (||mu_l|| + ||Sigma_l^{1/2}||)^2``."""
    return float(c / np.sum(psi.weights * psi.scale_terms() ** 2))


@dataclass
class TrainConfig:
    step_size: float | str = "auto"
    iterations: int = 1000
    noise_level: float = 0.0
    seed: int = 0
    step_scale: float = 1.0
    # Optional early stop on max |gradient entry|; None runs all iterations.
    grad_tol: float | None = None

    def __post_init__(self):
        if self.step_size != "auto" and not float(self.step_size) > 0:
            raise ValueError("step_size must be positive or 'auto'")
        if self.noise_level < 0:
            raise ValueError("noise_level must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    def resolve_step(self, psi: MixtureParams | None) -> float:
        if self.step_size == "auto":
            if psi is None:
                raise ValueError("step_size='auto' needs the mixture")
            return auto_step_size(psi, self.step_scale)
        return float(self.step_size)


@dataclass
class TrainTrace:
    step_size: float
    aligned_error: np.ndarray
    dist_to_final: np.ndarray
    empirical_risk: np.ndarray
    grad_norm: np.ndarray
    final: np.ndarray
    iterations_run: int
    converged: bool = False

    def __len__(self) -> int:
        return self.empirical_risk.shape[0]

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "aligned_error", "dist_to_final", "empirical_risk"])
            for t in range(len(self)):
                writer.writerow([t] + [f"{v:.17g}" for v in (
                    self.aligned_error[t], self.dist_to_final[t], self.empirical_risk[t])])


class _Objective:
    """Empirical risk and gradient with the data stored feature-major.

    Keeping ``X^T`` contiguous makes ``W^T X^T`` and the gradient product run
    over long rows, which is several times faster than the sample-major form.
    """

    def __init__(self, X, y):
        self.Xt = np.ascontiguousarray(np.asarray(X, dtype=float).T)
        self.y = np.asarray(y, dtype=float)
        self.n = self.Xt.shape[1]

    def __call__(self, W):
        K = W.shape[1]
        # sigmoid(z) = (1 + tanh(z/2)) / 2 and sigmoid' = (1 - tanh^2(z/2)) / 4;
        # tanh is several times cheaper than expit and exact to ~1e-16 absolute.
        T = np.tanh(0.5 * (W.T @ self.Xt))
        H = np.clip(0.5 + 0.5 * T.mean(axis=0), HCLAMP, 1 - HCLAMP)
        y = self.y
        risk = -np.sum(y * np.log(H) + (1 - y) * np.log1p(-H)) / self.n
        coef = (H - y) / (H * (1 - H)) * (0.25 / K)
        T *= T
        np.subtract(1.0, T, out=T)
        T *= coef
        return risk, self.Xt @ T.T / self.n


def gd_train(W0, X, y, config: TrainConfig, W_star=None, psi: MixtureParams | None = None) -> TrainTrace:
    """Run gradient descent from ``W0`` on the dataset ``(X, y)``.

    Parameters
    ----------
    W0 : ndarray (d, K)
    X, y : training data
    config : TrainConfig
        ``step_size='auto'`` requires ``psi``.
    W_star : ndarray, optional
        Ground truth, used only for the aligned-error diagnostic.

    Raises
    ------
    DivergenceError
        On non-finite values or when the risk exceeds ``1e3`` times its
        initial value.
    """
    W = np.array(W0, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if W.shape[0] != d:
        raise ValueError(f"W0 has {W.shape[0]} rows, data has dimension {d}")
    K = W.shape[1]
    step = config.resolve_step(psi)
    rng = np.random.default_rng(config.seed)
    T = config.iterations

    iterates = np.empty((T + 1, d, K))
    risks = np.empty(T + 1)
    gnorms = np.empty(T + 1)
    converged = False
    t = 0
    risk0 = None
    objective = _Objective(X, y)
    while True:
        risk, g = objective(W)
        if not (np.isfinite(risk) and np.all(np.isfinite(g))):
            raise DivergenceError(t, "non-finite loss or gradient")
        if risk0 is None:
            risk0 = risk
        elif risk > DIVERGENCE_FACTOR * max(risk0, 1e-300):
            raise DivergenceError(t, f"risk {risk:.3g} exceeds {DIVERGENCE_FACTOR:g}x initial")
        iterates[t] = W
        risks[t] = risk
        gnorms[t] = np.max(np.abs(g))
        if config.grad_tol is not None and gnorms[t] <= config.grad_tol:
            converged = True
            break
        if t == T:
            break
        if config.noise_level > 0:
            g = g + rng.uniform(-config.noise_level, config.noise_level, size=(n, d, K)).mean(axis=0)
        W = W - step * g
        t += 1

    iterates = iterates[: t + 1]
    final = iterates[-1].copy()
    dist = np.sqrt(((iterates - final) ** 2).sum(axis=(1, 2)))
    if W_star is not None:
        perm = list(aligned_error(final, W_star).permutation)
        Wp = np.asarray(W_star)[:, perm]
        aligned = np.sqrt(((iterates - Wp) ** 2).sum(axis=(1, 2)))
    else:
        aligned = np.full(t + 1, np.nan)
    return TrainTrace(
        step_size=step,
        aligned_error=aligned,
        dist_to_final=dist,
        empirical_risk=risks[: t + 1],
        grad_norm=gnorms[: t + 1],
        final=final,
        iterations_run=t,
        converged=converged,
    )


def gd_train_batch(W0s, X, y, step: float, iterations: int, grad_tol: float | None = None):
    """Noise-free GD from several starting points on one dataset at once.

    All active runs are stacked side by side into one ``d x (M K)`` matrix,
    so each iteration is two matrix products over the data.

    Parameters
    ----------
    W0s : ndarray (M, d, K)

    Returns
    -------
    W : ndarray (M, d, K)
        Final iterates.
    grad_max : ndarray (M,)
        Max absolute gradient entry at the returned iterates.
    diverged : ndarray of bool (M,)
        Runs that produced non-finite values or blew up the risk.
    """
    W = np.array(W0s, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    M, d, K = W.shape
    n = X.shape[0]
    Xt = np.ascontiguousarray(X.T)
    active = np.ones(M, dtype=bool)
    diverged = np.zeros(M, dtype=bool)
    grad_max = np.full(M, np.inf)
    risk0 = None
    for it in range(iterations + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        m = idx.size
        Wa = W[idx]
        Wcat = Wa.transpose(1, 0, 2).reshape(d, m * K)
        T = np.tanh(0.5 * (X @ Wcat)).reshape(n, m, K)  # sigmoid = (1 + T) / 2
        H = np.clip(0.5 + 0.5 * T.mean(axis=2), HCLAMP, 1 - HCLAMP)
        risk = -(y[:, None] * np.log(H) + (1 - y[:, None]) * np.log1p(-H)).mean(axis=0)
        coef = (H - y[:, None]) / (H * (1 - H)) * (0.25 / K)
        T *= T
        np.subtract(1.0, T, out=T)
        T *= coef[:, :, None]
        G = (Xt @ T.reshape(n, m * K) / n).reshape(d, m, K).transpose(1, 0, 2)
        if risk0 is None:
            risk0 = risk.copy()
            r0 = risk0
        else:
            r0 = risk0[idx]
        bad = ~np.isfinite(risk) | ~np.all(np.isfinite(G), axis=(1, 2)) | (risk > DIVERGENCE_FACTOR * r0)
        gm = np.max(np.abs(G), axis=(1, 2))
        grad_max[idx] = gm
        if np.any(bad):
            diverged[idx[bad]] = True
            active[idx[bad]] = False
        done = ~bad & (gm <= grad_tol) if grad_tol is not None else np.zeros_like(bad)
        active[idx[done]] = False
        if it == iterations:
            break  # the last pass only measures the gradient
        move = ~bad & ~done
        W[idx[move]] = Wa[move] - step * G[move]
    return W, grad_max, diverged


@dataclass(frozen=True)
class RateFit:
    rate: float
    r_squared: float
    n_points: int
    usable_prefix: bool = False


def fit_rate(
    trace_or_distances,
    burn_in: float = 0.1,
    floor: float | None = None,
    min_points: int = 20,
    extrapolate: bool = True,
) -> RateFit:
    """Least-squares fit of ``log distance ~ a + t log v``.

    Accepts a :class:`TrainTrace` (uses ``dist_to_final``) or a 1-D array of
    distances. The first ``burn_in`` fraction of points is dropped.

    Distances to the final iterate undershoot the distance to the limit near
    the end of a run. When the array ends in 0 (a distance-to-final series)
    and ``extrapolate`` is set, the remaining geometric tail
    ``s v / (1 - v)`` is added back, with ``s`` the last step length and ``v``
    the decay of the last few steps. Points at or below ``floor`` (default:
    ``1e-12`` of the largest distance) are excluded; if that happens before the
    end, only the usable prefix is fitted and ``usable_prefix`` is set.
    """
    if isinstance(trace_or_distances, TrainTrace):
        dist = np.asarray(trace_or_distances.dist_to_final, dtype=float)
    else:
        dist = np.asarray(trace_or_distances, dtype=float)
    if extrapolate and len(dist) > 2 and dist[-1] == 0:
        dist = dist + _tail_remaining(dist)
    if floor is None:
        floor = 1e-12 * float(np.max(dist)) if len(dist) else 0.0
    start = int(np.floor(burn_in * len(dist)))
    t = np.arange(len(dist))[start:]
    dv = dist[start:]
    usable = dv > floor
    prefix = False
    if not np.all(usable):
        stop = int(np.argmin(usable))  # first point at or under the floor
        prefix = True
        t, dv = t[:stop], dv[:stop]
    if len(dv) < 2:
        raise ValueError("not enough points above the floor to fit a rate")
    if len(dv) < min_points:
        log.warning("fit_rate: only %d usable points (< %d)", len(dv), min_points)
    logd = np.log(dv)
    A = np.vstack([np.ones_like(t, dtype=float), t.astype(float)]).T
    coef, *_ = np.linalg.lstsq(A, logd, rcond=None)
    resid = logd - A @ coef
    ss_tot = np.sum((logd - logd.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(np.exp(coef[1])), float(r2), int(len(dv)), prefix)


def _tail_remaining(dist: np.ndarray, span: int = 10) -> float:
    """Geometric estimate of ``||W_T - W_inf||`` from a distance-to-final series.

    ``dist[t] - dist[t+1]`` is the step length in the one-mode regime, so the
    last steps give the decay ``v``; returns 0 when they do not look geometric.
    """
    steps = -np.diff(dist[-(span + 2):])
    if len(steps) < 3 or np.any(steps <= 0):
        return 0.0
    v = (steps[-1] / steps[0]) ** (1.0 / (len(steps) - 1))
    if not 0 < v < 1:
        return 0.0
    return float(dist[-2] * v / (1 - v))


def local_random_init(W_star, eps: float = 0.1, rng=None) -> np.ndarray:
    """``W* + E`` with ``E`` uniform on the Frobenius sphere of radius ``eps``."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    W_star = np.asarray(W_star, dtype=float)
    E = rng.standard_normal(W_star.shape)
    return W_star + eps * E / np.linalg.norm(E)


@dataclass
class TrialOutcome:
    success: bool
    v_w: float
    n_diverged: int = 0
    max_grad: float = float("nan")
    finals: np.ndarray | None = field(default=None, repr=False)


def trial_success(
    psi: MixtureParams,
    W_star,
    n: int,
    M: int = 20,
    seed=None,
    step_size: float | None = None,
    iterations: int = 3000,
    grad_tol: float = 1e-7,
    eps: float = 0.1,
) -> TrialOutcome:
    """Multi-start recovery experiment on one freshly drawn dataset.

    Draws ``n`` labeled samples, runs ``M`` gradient descents from independent
    local random initializations, aligns every solution to the first by
    column permutation and reports
    ``V_W = sqrt(sum_m ||W_m - W_bar||_F^2 / M)``. The experiment succeeds when
    no run diverged and ``V_W <= 1e-3``.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    W_star = np.asarray(getattr(W_star, "weights", W_star), dtype=float)
    rng = np.random.default_rng(seed)
    X, _ = sample(psi, n, rng)
    y = draw_labels(W_star, X, rng)
    W0s = np.stack([local_random_init(W_star, eps, rng) for _ in range(M)])
    step = auto_step_size(psi) if step_size is None else float(step_size)
    finals, gmax, diverged = gd_train_batch(W0s, X, y, step, iterations, grad_tol)
    if np.any(diverged):
        return TrialOutcome(False, float("inf"), int(diverged.sum()), float(np.max(gmax)), finals)
    ref = finals[0]
    aligned = np.stack([W[:, list(aligned_error(ref, W).permutation)] for W in finals])
    mean = aligned.mean(axis=0)
    v_w = float(np.sqrt(((aligned - mean) ** 2).sum(axis=(1, 2)).mean()))
    return TrialOutcome(bool(v_w <= SUCCESS_THRESHOLD), v_w, 0, float(np.max(gmax)), aligned)
