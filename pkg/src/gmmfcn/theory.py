"""Curvature and complexity quantities for the Gaussian-mixture teacher model.

The central object is the curvature surrogate ``rho(u, sigma)``, built from the
one-dimensional expectations

    alpha_q = E[phi'(sigma z) z^q],   beta_q = E[phi'(sigma z)^2 z^q],   z ~ N(u_i, 1),

with ``phi`` the sigmoid. Everything else (``D_m``, ``Gamma``, ``q``, the
predicted rate, the convex-region radius and the sample-complexity indicator)
is a composition of ``rho`` with norms of the mixture and spectral statistics
of ``W*``. Hidden constants are 1 unless passed explicitly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .mixture import MixtureParams
from .teacher import sigmoid_prime, spectral_stats
from .train import auto_step_size

__all__ = [
    "QuadratureError",
    "alpha_beta",
    "rho",
    "rho_group_arguments",
    "d_function",
    "gamma",
    "TheoryReport",
    "report",
]

QUAD_NODES = 61
QUAD_TOL = 1e-9


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=4)
def _hermite_rule(n: int):
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / np.sqrt(2.0 * np.pi)


def _moments(u: float, sigma: float, n: int) -> np.ndarray:
    """``[alpha_0, alpha_1, alpha_2, beta_0, beta_1, beta_2]`` with an ``n``-node rule.

    The rule is re-centred on the product of the Gaussian weight and the
    bell of ``phi'(sigma z)`` (approximated by ``exp(-sigma^2 z^2 / 8)``), so
    the nodes follow the integrand even when ``sigma`` is large.
    """
    x, w = _hermite_rule(n)
    prec = 1.0 + sigma * sigma / 4.0
    s = 1.0 / np.sqrt(prec)
    c = u / prec
    z = c + s * x
    # density ratio N(z; u, 1) / N(z; c, s^2)
    wz = w * np.exp(-0.5 * (z - u) ** 2 + 0.5 * x * x) * s
    dp = sigmoid_prime(sigma * z)
    zp = np.vstack([np.ones_like(z), z, z * z])
    a = zp @ (wz * dp)
    b = zp @ (wz * dp * dp)
    if sigma < 1.0:
        # beta_0 - alpha_0^2 ~ sigma^4/128 cancels badly; centre on phi'(0) = 1/4.
        # (s ~ 1 here, so the weights sum to 1 to machine precision.)
        g = dp - 0.25
        var0 = np.sum(wz * g * g) - (a[0] - 0.25) ** 2
    else:
        var0 = b[0] - a[0] ** 2
    return np.concatenate([a, b, [var0]])


def _checked_moments(u: float, sigma: float) -> np.ndarray:
    if sigma == 0 or not np.isfinite(sigma) or not np.isfinite(u):
        raise ValueError("sigma must be finite and nonzero, u finite")
    sigma = abs(float(sigma))  # phi' is even, so E depends on |sigma| only
    m1 = _moments(float(u), sigma, QUAD_NODES)
    m2 = _moments(float(u), sigma, 2 * QUAD_NODES)
    if np.max(np.abs(m1 - m2)) > QUAD_TOL:
        raise QuadratureError(
            f"quadrature not converged at u={u}, sigma={sigma}: node doubling moved result by "
            f"{np.max(np.abs(m1 - m2)):.2e}"
        )
    return m2


def alpha_beta(q: int, u: float, sigma: float) -> tuple[float, float]:
    """``(alpha_q, beta_q)`` for ``q`` in ``{0, 1, 2}``.

    Raises
    ------
    QuadratureError
        If doubling the number of quadrature nodes changes any moment by more
        than ``1e-9``.
    """
    if q not in (0, 1, 2):
        raise ValueError("q must be 0, 1 or 2")
    m = _checked_moments(u, sigma)
    return float(m[q]), float(m[3 + q])


def _rho_terms(u: np.ndarray, sigma: float):
    """Per-coordinate ``beta_0 - alpha_0^2`` and ``beta_2 - alpha_2^2/(u_i^2+1)``."""
    var0 = np.empty(u.shape[0])
    second = np.empty(u.shape[0])
    for i, ui in enumerate(u):
        m = _checked_moments(ui, sigma)
        var0[i] = m[6]
        second[i] = m[5] - m[2] ** 2 / (ui * ui + 1.0)
    return var0, second


def rho(u, sigma: float) -> float:
    """Curvature surrogate: min over ``i != j`` of the two bracketed terms.

    ``u`` needs at least two entries because the minimum runs over distinct
    index pairs.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError("rho needs len(u) >= 2: its minimum ranges over index pairs i != j")
    var0, second = _rho_terms(u, sigma)
    scale = u * u + 1.0
    best = np.inf
    for i in range(u.shape[0]):
        others = np.delete(scale, i)
        best = min(best, float(np.min(others)) * var0[i], second[i])
    return float(best)


def _teacher_array(W_star) -> np.ndarray:
    return np.asarray(getattr(W_star, "weights", W_star), dtype=float)


def rho_group_arguments(psi: MixtureParams, W_star) -> list[tuple[np.ndarray, float]]:
    """Per group: ``u_l = W*^T mu_l / (delta_K s_l)`` and ``sigma_l = delta_K s_l``.

    ``s_l = ||Sigma_l^{-1}||^{-1/2}`` is the square root of the smallest
    eigenvalue of ``Sigma_l``.
    """
    W = _teacher_array(W_star)
    dK = spectral_stats(W).singular_values[-1]
    s = np.sqrt(psi.inv_cov_norms_inv)
    return [(W.T @ psi.means[l] / (dK * s[l]), float(dK * s[l])) for l in range(psi.n_components)]


def group_rhos(psi: MixtureParams, W_star) -> np.ndarray:
    return np.array([rho(u, sg) for u, sg in rho_group_arguments(psi, W_star)])


def d_function(psi: MixtureParams, m: int) -> float:
    """``sum_l lambda_l (||mu_l|| / ||Sigma_l^{-1}||^{-1/2} + 1)^m``."""
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    ratio = np.linalg.norm(psi.means, axis=1) / np.sqrt(psi.inv_cov_norms_inv)
    return float(np.sum(psi.weights * (ratio + 1.0) ** int(m)))


def _curvature_sum(psi: MixtureParams, W_star, rhos=None) -> float:
    """``sum_l lambda_l ||Sigma_l^{-1}||^{-1} rho_l / (tau^K kappa^2 eta)``."""
    W = _teacher_array(W_star)
    st = spectral_stats(W)
    K = W.shape[1]
    rhos = group_rhos(psi, W) if rhos is None else rhos
    pref = psi.tau ** K * st.kappa ** 2 * st.eta
    return float(np.sum(psi.weights * psi.inv_cov_norms_inv * rhos) / pref)


def gamma(psi: MixtureParams, W_star, include_sigma_max: bool = True) -> float:
    """Rho-weighted curvature aggregate.

    With ``include_sigma_max`` (default) each term carries the extra
    ``1 / sigma_max^2`` factor; without it the sum is the plain local-convexity
    lower bound.
    """
    val = _curvature_sum(psi, W_star)
    return val / psi.sigma_max ** 2 if include_sigma_max else val


@dataclass
class TheoryReport:
    rho: list[float]
    d_values: dict[str, float]
    gamma: float
    gamma_without_sigma_max: float
    q: float
    predicted_rate: float
    step_size: float
    radius: float
    sample_complexity_indicator: float
    error_weights: float
    error_average: float
    error_groups: list[float]
    eps0: float
    constants: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def report(
    psi: MixtureParams,
    W_star,
    eps0: float = 0.1,
    d_orders=(1, 2, 4, 8, 12),
    c_radius: float = 1.0,
    step_scale: float = 1.0,
) -> TheoryReport:
    """Assemble every theory quantity for ``(psi, W*)``.

    All order constants are 1 except ``c_radius`` (radius prefactor) and
    ``step_scale`` (step-size constant), which are recorded in the report.
    ``q`` is clamped into the open unit interval.
    """
    if not 0 < eps0 < 0.25:
        raise ValueError("eps0 must lie in (0, 1/4)")
    W = _teacher_array(W_star)
    st = spectral_stats(W)
    K = W.shape[1]
    rhos = group_rhos(psi, W)
    curv = _curvature_sum(psi, W, rhos)
    scale = psi.scale_terms()
    lam = psi.weights
    second = float(np.sum(lam * scale ** 2))

    tiny = np.finfo(float).eps
    q = float(np.clip(curv / second, tiny, 1.0 - tiny))
    rate = 1.0 - q / K ** 2

    radius = c_radius * eps0 * curv / (K ** 3.5 * (np.sum(lam * scale ** 4) * np.sum(lam * scale ** 8)) ** 0.25)

    smax = psi.sigma_max
    inner = float(np.sum(lam * psi.inv_cov_norms_inv * rhos) / (st.eta * smax ** 2))
    b_ind = (smax * st.singular_values[0]) ** 2 * psi.tau ** 12 * inner ** -2 * d_function(psi, 12)

    denom = float(np.sum(lam * psi.inv_cov_norms_inv * rhos))
    e_w = np.sqrt(second) / denom
    e_avg = second / denom
    e_l = [float(np.sqrt(second) * (np.linalg.norm(psi.means[l]) + np.sqrt(psi.cov_norms[l])) / denom)
           for l in range(psi.n_components)]

    return TheoryReport(
        rho=[float(r) for r in rhos],
        d_values={str(m): d_function(psi, m) for m in d_orders},
        gamma=curv / smax ** 2,
        gamma_without_sigma_max=curv,
        q=q,
        predicted_rate=float(rate),
        step_size=auto_step_size(psi, step_scale),
        radius=float(radius),
        sample_complexity_indicator=float(b_ind),
        error_weights=float(e_w),
        error_average=float(e_avg),
        error_groups=e_l,
        eps0=float(eps0),
        constants={"c_radius": float(c_radius), "step_scale": float(step_scale)},
    )
