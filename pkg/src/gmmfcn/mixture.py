"""Gaussian mixture inputs: sampling, density and score functions.

The mixture ``sum_l lambda_l N(mu_l, Sigma_l)`` is the generative model for
features. Each component is one *group*. Besides sampling and the density,
this module provides the score functions

    S_m(x) = (-1)^m grad^m p(x) / p(x),   m = 1, 2, 3

which, weighted by labels, give the moment tensors used by tensor
initialization. The third-order score is returned in a structured form
(:class:`Score3`) that supports multilinear contraction without building a
``d x d x d`` array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "MixtureParams",
    "Score3",
    "SymmetryResult",
    "sample",
    "pdf",
    "log_pdf",
    "responsibilities",
    "score",
    "detect_symmetry",
    "DENSE_MAX_DIM",
]

# Dense d^3 materialization is only for testing.
DENSE_MAX_DIM = 16


class MixtureParams:
    """Parameters of a Gaussian mixture with per-component caches.

    Parameters
    ----------
    weights : sequence of float
        Mixing probabilities, each in (0, 1), summing to one.
    means : array_like, shape (L, d)
    covariances : array_like, shape (L, d, d)
        Symmetric positive-definite matrices.

    Raises
    ------
    ValueError
        If any invariant (weights, symmetry, positive definiteness, shapes)
        is violated.
    """

    def __init__(self, weights, means, covariances):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        mu = np.atleast_2d(np.asarray(means, dtype=float))
        cov = np.asarray(covariances, dtype=float)
        if cov.ndim == 2:
            cov = cov[None]
        L = w.shape[0]
        if mu.shape[0] != L or cov.shape[0] != L:
            raise ValueError("weights, means and covariances disagree on the number of components")
        d = mu.shape[1]
        if d < 1 or cov.shape[1:] != (d, d):
            raise ValueError(f"covariances must have shape ({L}, {d}, {d}), got {cov.shape}")
        if L == 1:
            if not np.isclose(w[0], 1.0, rtol=0, atol=1e-12):
                raise ValueError("a single component must have weight 1")
        elif np.any(w <= 0) or np.any(w >= 1):
            raise ValueError("component weights must lie in (0, 1)")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise ValueError("means and covariances must be finite")
        asym = np.max(np.abs(cov - np.swapaxes(cov, 1, 2)))
        if asym > 1e-10:
            raise ValueError(f"covariances must be symmetric (max asymmetry {asym:.3g})")
        cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
        eig = np.linalg.eigvalsh(cov)
        if np.any(eig[:, 0] <= 0):
            raise ValueError("covariances must be positive definite")

        self._weights = w
        self._means = mu
        self._covs = cov
        self._eig = eig
        for arr in (self._weights, self._means, self._covs, self._eig):
            arr.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def single(cls, mean, cov=None) -> "MixtureParams":
        """One-component mixture ``N(mean, cov)``; ``cov`` defaults to identity."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if cov is None:
            cov = np.eye(mean.shape[0])
        return cls([1.0], [mean], [cov])

    @classmethod
    def from_dict(cls, doc: dict) -> "MixtureParams":
        comps = doc["components"]
        psi = cls(
            [c["weight"] for c in comps],
            [c["mean"] for c in comps],
            [c["covariance"] for c in comps],
        )
        if "dimension" in doc and int(doc["dimension"]) != psi.dim:
            raise ValueError(f"dimension field {doc['dimension']} does not match means ({psi.dim})")
        return psi

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "components": [
                {
                    "weight": float(self._weights[l]),
                    "mean": self._means[l].tolist(),
                    "covariance": self._covs[l].tolist(),
                }
                for l in range(self.n_components)
            ],
        }

    @classmethod
    def load(cls, path) -> "MixtureParams":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def replace(self, weights=None, means=None, covariances=None) -> "MixtureParams":
        return MixtureParams(
            self._weights if weights is None else weights,
            self._means if means is None else means,
            self._covs if covariances is None else covariances,
        )

    # -- basic attributes -----------------------------------------------------

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def means(self) -> np.ndarray:
        return self._means

    @property
    def covariances(self) -> np.ndarray:
        return self._covs

    @property
    def dim(self) -> int:
        return self._means.shape[1]

    @property
    def n_components(self) -> int:
        return self._weights.shape[0]

    def __repr__(self) -> str:
        return f"MixtureParams(L={self.n_components}, d={self.dim})"

    # -- cached factorizations ------------------------------------------------

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factors, shape (L, d, d)."""
        return np.linalg.cholesky(self._covs)

    @cached_property
    def precisions(self) -> np.ndarray:
        """Inverse covariances, shape (L, d, d)."""
        P = np.linalg.inv(self._covs)
        return 0.5 * (P + np.swapaxes(P, 1, 2))

    @cached_property
    def precision_sqrt(self) -> np.ndarray:
        """Symmetric square roots of the precisions, shape (L, d, d)."""
        vals, vecs = np.linalg.eigh(self._covs)
        return np.einsum("lij,lj,lkj->lik", vecs, vals ** -0.5, vecs)

    @cached_property
    def log_dets(self) -> np.ndarray:
        return 2.0 * np.sum(np.log(np.diagonal(self.cholesky, axis1=1, axis2=2)), axis=1)

    @property
    def cov_norms(self) -> np.ndarray:
        """Spectral norms ``||Sigma_l||``."""
        return self._eig[:, -1]

    @property
    def inv_cov_norms_inv(self) -> np.ndarray:
        """``||Sigma_l^{-1}||^{-1}``, i.e. the smallest eigenvalue of each Sigma_l."""
        return self._eig[:, 0]

    @property
    def sigma_max(self) -> float:
        return float(np.sqrt(self.cov_norms.max()))

    @property
    def sigma_min(self) -> float:
        return float(np.sqrt(self.inv_cov_norms_inv.min()))

    @property
    def tau(self) -> float:
        return self.sigma_max / self.sigma_min

    def scale_terms(self) -> np.ndarray:
        """Per-component ``||mu_l|| + ||Sigma_l^{1/2}||``."""
        return np.linalg.norm(self._means, axis=1) + np.sqrt(self.cov_norms)


# -- sampling -----------------------------------------------------------------


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(psi: MixtureParams, n: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` points with their group indices.

    The group of each point is drawn first with probabilities ``psi.weights``;
    the point is then ``mu_l + C_l z`` with ``C_l`` the Cholesky factor.

    Returns
    -------
    X : ndarray, shape (n, d)
    groups : ndarray of int, shape (n,)
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _as_rng(seed)
    groups = rng.choice(psi.n_components, size=n, p=psi.weights)
    Z = rng.standard_normal((n, psi.dim))
    X = psi.means[groups] + np.einsum("nij,nj->ni", psi.cholesky[groups], Z)
    return X, groups


def sample_component(psi: MixtureParams, l: int, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` points from component ``l`` alone."""
    if not 0 <= l < psi.n_components:
        raise ValueError(f"component index {l} out of range")
    rng = _as_rng(seed)
    Z = rng.standard_normal((n, psi.dim))
    return psi.means[l] + Z @ psi.cholesky[l].T


# -- density ------------------------------------------------------------------


def _check_points(psi: MixtureParams, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != psi.dim:
        raise ValueError(f"points must have dimension {psi.dim}, got shape {np.shape(x)}")
    return X, single


def _component_terms(psi: MixtureParams, X: np.ndarray):
    """Log joint densities ``log lambda_l N_l(x)`` (n, L) and whitened residuals r (n, L, d)."""
    diff = X[:, None, :] - psi.means[None, :, :]
    r = np.einsum("lij,nlj->nli", psi.precisions, diff)
    maha = np.einsum("nli,nli->nl", diff, r)
    log_joint = (
        np.log(psi.weights)[None, :]
        - 0.5 * (psi.dim * np.log(2 * np.pi) + psi.log_dets)[None, :]
        - 0.5 * maha
    )
    return log_joint, r


def log_pdf(psi: MixtureParams, x):
    X, single = _check_points(psi, x)
    log_joint, _ = _component_terms(psi, X)
    out = logsumexp(log_joint, axis=1)
    return float(out[0]) if single else out


def pdf(psi: MixtureParams, x):
    """Mixture density at one point (returns float) or at each row of ``x``."""
    out = np.exp(log_pdf(psi, x))
    return float(out) if np.ndim(out) == 0 else out


def responsibilities(psi: MixtureParams, x) -> np.ndarray:
    """Posterior component probabilities, computed in log space. Shape (n, L)."""
    X, _ = _check_points(psi, x)
    log_joint, _ = _component_terms(psi, X)
    return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))


# -- score functions ----------------------------------------------------------


@dataclass(frozen=True)
class Score3:
    """Structured third-order score for a batch of points.

    For point ``i`` the tensor is ``sum_l w[i,l] (r_il^{(x)3} - sym(r_il (x) P_l))``
    where ``P_l`` is the precision of component ``l`` and ``sym`` adds the three
    placements of the vector among the modes.

    Attributes
    ----------
    w : ndarray (n, L)
        Responsibilities.
    r : ndarray (n, L, d)
        ``Sigma_l^{-1}(x_i - mu_l)``.
    precisions : ndarray (L, d, d)
    """

    w: np.ndarray
    r: np.ndarray
    precisions: np.ndarray

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def dim(self) -> int:
        return self.r.shape[2]

    def contract(self, A, B, C, weights=None) -> np.ndarray:
        """Weighted mean over points of ``T_i(A, B, C)``.

        ``A``, ``B``, ``C`` are ``d x a``, ``d x b``, ``d x c`` matrices or
        length-``d`` vectors (a vector drops that output mode). ``weights``
        (length n) multiplies each point before averaging; the labels play
        this role in moment estimation.
        """
        mats, squeeze = [], []
        for M in (A, B, C):
            M = np.asarray(M, dtype=float)
            squeeze.append(M.ndim == 1)
            mats.append(M[:, None] if M.ndim == 1 else M)
        A2, B2, C2 = mats
        if any(M.shape[0] != self.dim for M in mats):
            raise ValueError("contraction matrices must have dim rows")
        c = self.w if weights is None else self.w * np.asarray(weights, dtype=float)[:, None]
        ra = np.einsum("nld,da->nla", self.r, A2)
        rb = np.einsum("nld,db->nlb", self.r, B2)
        rc = np.einsum("nld,dc->nlc", self.r, C2)
        out = np.einsum("nl,nla,nlb,nlc->abc", c, ra, rb, rc, optimize=True)
        # sym(r (x) P)(A,B,C) = r_A P(B,C) + r_B P(A,C) + r_C P(A,B)
        PBC = np.einsum("db,lde,ec->lbc", B2, self.precisions, C2)
        PAC = np.einsum("da,lde,ec->lac", A2, self.precisions, C2)
        PAB = np.einsum("da,lde,eb->lab", A2, self.precisions, B2)
        out -= np.einsum("nl,nla,lbc->abc", c, ra, PBC, optimize=True)
        out -= np.einsum("nl,nlb,lac->abc", c, rb, PAC, optimize=True)
        out -= np.einsum("nl,nlc,lab->abc", c, rc, PAB, optimize=True)
        out /= self.n
        idx = tuple(0 if s else slice(None) for s in squeeze)
        return out[idx]

    def dense(self, weights=None) -> np.ndarray:
        """Weighted mean tensor as a ``d x d x d`` array (small ``d`` only)."""
        if self.dim > DENSE_MAX_DIM:
            raise ValueError(f"dense third-order tensor refused for d > {DENSE_MAX_DIM}")
        I = np.eye(self.dim)
        return self.contract(I, I, I, weights=weights)


def score(psi: MixtureParams, x, order: int):
    """Score function ``S_order`` at one point or at each row of ``x``.

    Orders 1 and 2 return arrays of shape (d,) / (d, d), or with a leading
    batch axis. Order 3 returns a :class:`Score3` (always batched).
    """
    X, single = _check_points(psi, x)
    log_joint, r = _component_terms(psi, X)
    w = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
    if order == 1:
        out = np.einsum("nl,nld->nd", w, r)
    elif order == 2:
        out = np.einsum("nl,nld,nle->nde", w, r, r) - np.einsum("nl,lde->nde", w, psi.precisions)
    elif order == 3:
        return Score3(w=w, r=r, precisions=psi.precisions)
    else:
        raise ValueError(f"score order must be 1, 2 or 3, got {order}")
    return out[0] if single else out


# -- symmetry -----------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryResult:
    symmetric: bool
    pairing: tuple[tuple[int, int], ...] | None = None
    center: int | None = None


def detect_symmetry(psi: MixtureParams, tol: float = 1e-9) -> SymmetryResult:
    """Check whether the mixture is symmetric about the origin.

    Components must pair up as ``(mu, Sigma)`` / ``(-mu, Sigma)`` with equal
    weights; when L is odd one extra zero-mean component is allowed. All
    comparisons are in max-norm within ``tol``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    L = psi.n_components
    w, mu, cov = psi.weights, psi.means, psi.covariances

    def mirror(i, j):
        return (
            abs(w[i] - w[j]) <= tol
            and np.max(np.abs(mu[i] + mu[j])) <= tol
            and np.max(np.abs(cov[i] - cov[j])) <= tol
        )

    centers = [None] if L % 2 == 0 else [l for l in range(L) if np.max(np.abs(mu[l])) <= tol]
    for center in centers:
        remaining = [l for l in range(L) if l != center]
        pairs = _match_pairs(remaining, mirror)
        if pairs is not None:
            return SymmetryResult(True, tuple(pairs), center)
    return SymmetryResult(False)


def _match_pairs(items: Sequence[int], mirror) -> list[tuple[int, int]] | None:
    if not items:
        return []
    first, rest = items[0], list(items[1:])
    for k, other in enumerate(rest):
        if mirror(first, other):
            sub = _match_pairs(rest[:k] + rest[k + 1:], mirror)
            if sub is not None:
                return [(first, other)] + sub
    return None
