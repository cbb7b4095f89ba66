"""Method-of-moments initialization for the teacher weights.

The label-weighted score moments ``Q_m = E[y S_m(x)]`` are tensors in the
teacher columns, e.g. ``Q_3 = (1/K) sum_i E[phi'''(w_i^T x)] w_i^{(x)3}``. The
data are split into thirds: the first third gives the column span ``U`` (from
``Q_2``, or from the slice ``Q_3(I, I, alpha)`` when the mixture is symmetric
and ``Q_2`` vanishes), the second gives ``R_3 = Q_3(U, U, U)`` whose components
are the projected directions, and the last gives ``Q_1`` for the magnitudes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mixture import DENSE_MAX_DIM, MixtureParams, Score3, detect_symmetry, score

__all__ = [
    "MomentTensor3",
    "TildeOuter",
    "MomentEstimates",
    "InitConfig",
    "InitResult",
    "Decomposition",
    "split_thirds",
    "estimate_moments",
    "tilde_outer",
    "contract3",
    "estimate_subspace",
    "decompose_r3",
    "recover_magnitudes",
    "tensor_init",
]

log = logging.getLogger(__name__)

EIGENGAP_WARN = 1e-12
GRAM_COND_MAX = 1e12
N_BATCHES = 10


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    return (M[:, None], True) if M.ndim == 1 else (M, False)


class MomentTensor3:
    """Sample mean of ``y_i S_3(x_i)`` kept in per-sample structured form.

    Contractions cost ``O(n L d (a + b + c) + n L a b c)`` and never build a
    ``d x d x d`` array unless :meth:`dense` is asked for.
    """

    def __init__(self, s3: Score3, y):
        self._s3 = s3
        self._y = np.asarray(y, dtype=float)
        if self._y.shape != (s3.n,):
            raise ValueError("one label per sample required")

    @property
    def n(self) -> int:
        return self._s3.n

    @property
    def dim(self) -> int:
        return self._s3.dim

    def contract(self, A, B, C) -> np.ndarray:
        return self._s3.contract(A, B, C, weights=self._y)

    def batch_std_err(self, A, B, C, batches: int = N_BATCHES) -> np.ndarray:
        """Standard error of the contraction from contiguous batch means."""
        edges = np.linspace(0, self.n, batches + 1).astype(int)
        parts = []
        for a, b in zip(edges[:-1], edges[1:]):
            sub = Score3(self._s3.w[a:b], self._s3.r[a:b], self._s3.precisions)
            parts.append(sub.contract(A, B, C, weights=self._y[a:b]))
        parts = np.array(parts)
        return parts.std(axis=0, ddof=1) / np.sqrt(batches)

    def dense(self) -> np.ndarray:
        return self._s3.dense(weights=self._y)


class TildeOuter:
    """``v (~x) Z = sum_i (v (x) z_i (x) z_i + z_i (x) v (x) z_i + z_i (x) z_i (x) v)``."""

    def __init__(self, v, Z):
        self.v = np.asarray(v, dtype=float)
        Z = np.asarray(Z, dtype=float)
        self.Z = Z[:, None] if Z.ndim == 1 else Z
        if self.v.ndim != 1 or self.Z.shape[0] != self.v.shape[0]:
            raise ValueError("v must be a vector and Z must have len(v) rows")

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def contract(self, A, B, C) -> np.ndarray:
        (A, sa), (B, sb), (C, sc) = _as_matrix(A), _as_matrix(B), _as_matrix(C)
        va, vb, vc = self.v @ A, self.v @ B, self.v @ C
        za, zb, zc = self.Z.T @ A, self.Z.T @ B, self.Z.T @ C
        out = (
            np.einsum("a,ib,ic->abc", va, zb, zc)
            + np.einsum("ia,b,ic->abc", za, vb, zc)
            + np.einsum("ia,ib,c->abc", za, zb, vc)
        )
        return out[tuple(0 if s else slice(None) for s in (sa, sb, sc))]

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_MAX_DIM:
            raise ValueError(f"dense third-order tensor refused for d > {DENSE_MAX_DIM}")
        I = np.eye(self.dim)
        return self.contract(I, I, I)


def tilde_outer(v, Z) -> TildeOuter:
    return TildeOuter(v, Z)


def contract3(contractor, A, B, C) -> np.ndarray:
    """``T(A, B, C)_{abc} = sum_{ijk} T_ijk A_ia B_jb C_kc`` for any contractor."""
    for M in (A, B, C):
        if np.shape(M)[0] != contractor.dim:
            raise ValueError("contraction matrices must have dim rows")
    return contractor.contract(A, B, C)


# -- moments --------------------------------------------------------------------


@dataclass
class MomentEstimates:
    """Label-weighted score moments from the three data splits.

    ``q2`` is set for non-symmetric mixtures; ``q3_slice`` (bound to the first
    split) for symmetric ones. ``q3`` is always bound to the second split and
    ``q1`` comes from the third.
    """

    q1: np.ndarray
    q1_std_err: float
    q2: np.ndarray | None
    q2_std_err: float | None
    q3_slice: MomentTensor3 | None
    q3: MomentTensor3
    symmetric: bool
    n_used: tuple[int, int, int]
    data_split_id: str = "thirds"
    warnings: list[str] = field(default_factory=list)


def split_thirds(n: int) -> list[slice]:
    """Contiguous equal thirds (the first ``n mod 3`` parts get one extra sample)."""
    if n < 3:
        raise ValueError("need at least three samples to split into thirds")
    edges = np.cumsum([0] + [n // 3 + (1 if i < n % 3 else 0) for i in range(3)])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _mean_and_err(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Mean over axis 0 and the norm of its entrywise standard error."""
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, float("nan")
    se = values.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, float(np.linalg.norm(se))


def _q2_mean(psi: MixtureParams, X, y):
    """Mean of ``y S_2(x)`` and its standard error without storing ``(n, d, d)``."""
    s1_parts = score(psi, X, 3)  # reuse responsibilities and residuals
    w, r = s1_parts.w, s1_parts.r
    n = X.shape[0]
    c = w * y[:, None]
    mean = np.einsum("nl,nld,nle->de", c, r, r, optimize=True) / n
    mean -= np.einsum("l,lde->de", c.sum(axis=0), psi.precisions) / n
    mean = 0.5 * (mean + mean.T)
    # Entrywise variance: E[(y S2)^2] - mean^2, using per-sample S2 in chunks.
    sq = np.zeros_like(mean)
    for a in range(0, n, 4096):
        S2 = np.einsum("nl,nld,nle->nde", w[a:a + 4096], r[a:a + 4096], r[a:a + 4096])
        S2 -= np.einsum("nl,lde->nde", w[a:a + 4096], psi.precisions)
        sq += np.einsum("n,nde->de", y[a:a + 4096] ** 2, S2 ** 2)
    var = np.maximum(sq / n - mean ** 2, 0.0) * n / max(n - 1, 1)
    return mean, float(np.linalg.norm(np.sqrt(var / n)))


def estimate_moments(X, y, psi: MixtureParams, splits=None) -> MomentEstimates:
    """Estimate ``Q_1``, ``Q_2`` (or the ``Q_3`` slice path) and ``Q_3``.

    Parameters
    ----------
    X, y : training data
    psi : the generating mixture
    splits : three index arrays or slices, default :func:`split_thirds`
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != psi.dim or y.shape != (X.shape[0],):
        raise ValueError("X must be n x d with one label per row")
    splits = split_thirds(X.shape[0]) if splits is None else list(splits)
    if len(splits) != 3:
        raise ValueError("need exactly three splits")
    parts = [(X[s], y[s]) for s in splits]
    if any(p[0].shape[0] == 0 for p in parts):
        raise ValueError("every split must be nonempty")
    (X1, y1), (X2, y2), (X3, y3) = parts
    symmetric = detect_symmetry(psi).symmetric

    q1, q1_se = _mean_and_err(y3[:, None] * score(psi, X3, 1))
    q2 = q2_se = None
    q3_slice = None
    if symmetric:
        q3_slice = MomentTensor3(score(psi, X1, 3), y1)
    else:
        q2, q2_se = _q2_mean(psi, X1, y1)
    q3 = MomentTensor3(score(psi, X2, 3), y2)

    warnings = []
    if np.linalg.norm(q1) < 3 * q1_se:
        warnings.append(f"||Q1|| = {np.linalg.norm(q1):.3g} is below 3 standard errors (standard error {q1_se:.3g})")
    if q2 is not None and np.linalg.norm(q2) < 3 * q2_se:
        warnings.append(f"||Q2|| = {np.linalg.norm(q2):.3g} is below 3 standard errors (standard error {q2_se:.3g})")
    for w in warnings:
        log.warning(w)
    return MomentEstimates(
        q1=q1, q1_std_err=q1_se, q2=q2, q2_std_err=q2_se, q3_slice=q3_slice, q3=q3,
        symmetric=symmetric, n_used=tuple(p[0].shape[0] for p in parts), warnings=warnings,
    )


# -- subspace ---------------------------------------------------------------------


@dataclass
class Subspace:
    U: np.ndarray
    eigenvalues: np.ndarray
    eigengap: float
    probe: np.ndarray | None
    warnings: list[str] = field(default_factory=list)


def _probe_vector(d: int, seed) -> np.ndarray:
    a = np.random.default_rng(seed).standard_normal(d)
    return a / np.linalg.norm(a)


def estimate_subspace(moments: MomentEstimates, psi: MixtureParams, K: int, probe_seed=0) -> Subspace:
    """Top-``K`` eigenvectors (by absolute eigenvalue) of ``Q_2`` or ``Q_3(I, I, alpha)``."""
    d = psi.dim
    if not 1 <= K <= d:
        raise ValueError("need 1 <= K <= d")
    probe = None
    if moments.q2 is not None:
        M = moments.q2
    else:
        if moments.q3_slice is None:
            raise ValueError("symmetric path needs the third-moment slice")
        probe = _probe_vector(d, probe_seed)
        I = np.eye(d)
        M = moments.q3_slice.contract(I, I, probe)
        M = 0.5 * (M + M.T)
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    gap = float(abs(vals[K - 1]) - abs(vals[K])) if K < d else float(abs(vals[K - 1]))
    warnings = []
    if gap < EIGENGAP_WARN:
        warnings.append(f"eigengap {gap:.3g} between eigenvalues K and K+1 is below {EIGENGAP_WARN:g}")
        log.warning(warnings[-1])
    # eigh returns orthonormal vectors; QR only guards against round-off.
    U, R = np.linalg.qr(vecs[:, :K])
    U = U * np.sign(np.diag(R))[None, :]
    return Subspace(U, vals[:K], gap, probe, warnings)


# -- tensor decomposition ---------------------------------------------------------


@dataclass
class Decomposition:
    vectors: np.ndarray  # (K, K), column i is v_i
    eigenvalues: np.ndarray
    residuals: np.ndarray
    warnings: list[str] = field(default_factory=list)


def _tv(T, u):
    return np.einsum("ijk,j,k->i", T, u, u)


def _power_iterate(T, u, iters: int, tol: float):
    res = np.inf
    for _ in range(iters):
        v = _tv(T, u)
        nv = np.linalg.norm(v)
        if nv == 0:
            return u, 0.0
        v /= nv
        res = float(np.linalg.norm(v - u))
        u = v
        if res <= tol:
            break
    return u, res


def decompose_r3(R3, K: int | None = None, restarts: int = 50, iters: int = 100, seed=0, tol: float = 1e-8) -> Decomposition:
    """Robust symmetric tensor power method with deflation.

    For each component: ``restarts`` random unit starts run ``iters`` power
    steps ``u <- T(I, u, u) / ||T(I, u, u)||``; the start with the largest
    ``|T(u, u, u)|`` is iterated again to the fixed-point tolerance, then the
    rank-one term ``lambda u^{(x)3}`` is subtracted.
    """
    T = np.array(R3, dtype=float)
    k = T.shape[0]
    if T.shape != (k, k, k):
        raise ValueError("R3 must be a cubic K x K x K array")
    asym = max(np.max(np.abs(T - T.transpose(p))) for p in [(1, 0, 2), (0, 2, 1), (2, 1, 0)])
    scale = max(np.max(np.abs(T)), 1e-300)
    if asym > 1e-8 * scale:
        raise ValueError(f"R3 is not symmetric (max asymmetry {asym:.3g})")
    K = k if K is None else K
    rng = np.random.default_rng(seed)
    vecs, lams, resid, warnings = [], [], [], []
    for comp in range(K):
        starts = rng.standard_normal((restarts, k))
        starts /= np.linalg.norm(starts, axis=1, keepdims=True)
        best_u, best_val = None, -np.inf
        for u0 in starts:
            u, _ = _power_iterate(T, u0, iters, tol)
            val = abs(np.einsum("ijk,i,j,k->", T, u, u, u))
            if val > best_val:
                best_u, best_val = u, val
        u, res = _power_iterate(T, best_u, iters, tol)
        lam = float(np.einsum("ijk,i,j,k->", T, u, u, u))
        if res > tol:
            warnings.append(f"component {comp}: power iteration residual {res:.3g} above {tol:g}")
            log.warning(warnings[-1])
        vecs.append(u)
        lams.append(lam)
        resid.append(res)
        T = T - lam * np.einsum("i,j,k->ijk", u, u, u)
    return Decomposition(np.array(vecs).T, np.array(lams), np.array(resid), warnings)


# -- magnitudes ---------------------------------------------------------------------


def recover_magnitudes(q1, directions) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares ``z = argmin ||q1 - sum_j z_j d_j||``, signs folded into directions.

    Returns
    -------
    z : ndarray (K,), nonnegative
    directions : ndarray (d, K), columns flipped where the raw coefficient was negative
    """
    q1 = np.asarray(q1, dtype=float)
    D = np.array(directions, dtype=float)
    if D.ndim == 1:
        D = D[:, None]
    G = D.T @ D
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > GRAM_COND_MAX:
        raise np.linalg.LinAlgError(f"direction Gram matrix is ill-conditioned (cond {cond:.3g})")
    z = np.linalg.solve(G, D.T @ q1)
    neg = z < 0
    D[:, neg] *= -1.0
    z[neg] *= -1.0
    return z, D


# -- full pipeline --------------------------------------------------------------------


@dataclass
class InitConfig:
    restarts: int = 50
    power_iters: int = 100
    power_tol: float = 1e-8
    probe_seed: int = 0
    decomposition_seed: int = 1


@dataclass
class InitResult:
    W0: np.ndarray
    U: np.ndarray
    directions: np.ndarray  # (K, K), column i is v_i
    magnitudes: np.ndarray
    diagnostics: dict
    config: InitConfig

    def to_dict(self) -> dict:
        return {
            "W0": self.W0.tolist(),
            "U": self.U.tolist(),
            "directions": self.directions.tolist(),
            "magnitudes": self.magnitudes.tolist(),
            "diagnostics": self.diagnostics,
            "config": vars(self.config),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "InitResult":
        return cls(
            W0=np.asarray(doc["W0"], dtype=float),
            U=np.asarray(doc["U"], dtype=float),
            directions=np.asarray(doc["directions"], dtype=float),
            magnitudes=np.asarray(doc["magnitudes"], dtype=float),
            diagnostics=doc.get("diagnostics", {}),
            config=InitConfig(**doc.get("config", {})),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "InitResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


class InitStageError(RuntimeError):
    pass


def tensor_init(X, y, psi: MixtureParams, K: int, config: InitConfig | None = None) -> InitResult:
    """Full initialization: moments, subspace, decomposition, magnitudes.

    Column ``j`` of ``W0`` is ``z_j U v_j``. Errors are re-raised with the
    stage that produced them.
    """
    config = config or InitConfig()
    try:
        moments = estimate_moments(X, y, psi)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise InitStageError(f"moment estimation: {e}") from e
    try:
        sub = estimate_subspace(moments, psi, K, config.probe_seed)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise InitStageError(f"subspace estimation: {e}") from e
    U = sub.U
    R3 = moments.q3.contract(U, U, U)
    R3_se = moments.q3.batch_std_err(U, U, U)
    # Sample means of a symmetric per-sample tensor are symmetric up to round-off.
    R3 = sum(R3.transpose(p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6
    warnings = list(moments.warnings) + list(sub.warnings)
    if np.linalg.norm(R3) < 3 * np.linalg.norm(R3_se):
        warnings.append(f"||R3|| = {np.linalg.norm(R3):.3g} is below 3 standard errors (standard error {np.linalg.norm(R3_se):.3g})")
        log.warning(warnings[-1])
    try:
        dec = decompose_r3(R3, K, config.restarts, config.power_iters, config.decomposition_seed, config.power_tol)
    except ValueError as e:
        raise InitStageError(f"tensor decomposition: {e}") from e
    try:
        z, dirs = recover_magnitudes(moments.q1, U @ dec.vectors)
    except np.linalg.LinAlgError as e:
        raise InitStageError(f"magnitude recovery: {e}") from e
    V = U.T @ dirs  # sign-adjusted v_i
    W0 = dirs * z[None, :]
    diagnostics = {
        "symmetric": moments.symmetric,
        "n_used": list(moments.n_used),
        "data_split_id": moments.data_split_id,
        "probe": None if sub.probe is None else sub.probe.tolist(),
        "subspace_eigenvalues": sub.eigenvalues.tolist(),
        "eigengap": sub.eigengap,
        "power_eigenvalues": dec.eigenvalues.tolist(),
        "power_residuals": dec.residuals.tolist(),
        "q1_norm": float(np.linalg.norm(moments.q1)),
        "q1_std_err": moments.q1_std_err,
        "q2_norm": None if moments.q2 is None else float(np.linalg.norm(moments.q2)),
        "q2_std_err": moments.q2_std_err,
        "r3_norm": float(np.linalg.norm(R3)),
        "r3_std_err": float(np.linalg.norm(R3_se)),
        "warnings": warnings + dec.warnings,
    }
    return InitResult(W0, U, V, z, diagnostics, config)
