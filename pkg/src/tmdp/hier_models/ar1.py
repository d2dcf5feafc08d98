"""Multivariate normal with AR(1) correlation, via the tridiagonal precision.

For an AR(1) correlation matrix C(rho) with entries rho^|i-j|, the inverse is
tridiagonal and det C = (1 - rho^2)^(n-1), so the log density of N(mean,
sd^2 C) needs no factorization. Batched over leading axes.
"""

from __future__ import annotations

import math

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def ar1_corr(rho: float, n: int = 8) -> np.ndarray:
    """Dense AR(1) correlation matrix (used by oracles and docs, not the fast path)."""
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _quad_terms(e: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ends = e[..., 0] ** 2 + e[..., -1] ** 2
    mid = (e[..., 1:-1] ** 2).sum(axis=-1)
    cross = (e[..., :-1] * e[..., 1:]).sum(axis=-1)
    return ends, mid, cross


def ar1_quad(e: np.ndarray, rho: float) -> np.ndarray:
    """Quadratic form e' C(rho)^-1 e, batched over leading axes."""
    ends, mid, cross = _quad_terms(e)
    return (ends + (1.0 + rho * rho) * mid - 2.0 * rho * cross) / (1.0 - rho * rho)


def ar1_logpdf(x: np.ndarray, mean: np.ndarray | float, sd: float, rho: float) -> np.ndarray:
    """Log density of N(mean, sd^2 C(rho)) per leading-axis row."""
    e = np.asarray(x, dtype=np.float64) - mean
    n = e.shape[-1]
    quad = ar1_quad(e, rho)
    return (
        -0.5 * n * LOG_2PI
        - n * math.log(sd)
        - 0.5 * (n - 1) * math.log1p(-rho * rho)
        - quad / (2.0 * sd * sd)
    )


def ar1_precision(rho: float, n: int = 8) -> np.ndarray:
    """Dense inverse of the AR(1) correlation matrix (tridiagonal)."""
    p = np.zeros((n, n))
    idx = np.arange(n)
    p[idx, idx] = 1.0 + rho * rho
    p[0, 0] = p[-1, -1] = 1.0
    p[idx[:-1], idx[:-1] + 1] = -rho
    p[idx[:-1] + 1, idx[:-1]] = -rho
    return p / (1.0 - rho * rho)


def conditional_gaussian_draws(
    n_children: np.ndarray,      # (k,) retained children per cell
    child_sums: np.ndarray,      # (k, n) sum of child curves per cell
    child_prec: np.ndarray,      # (n, n) child-level precision (incl. scale)
    prior_mean: np.ndarray,      # (k, n) or scalar
    prior_prec: np.ndarray,      # (n, n) own prior precision (incl. scale)
    rng,
) -> np.ndarray:
    """Exact draws from N(A^-1 b, A^-1) with A = m*child_prec + prior_prec.

    The linear-Gaussian full conditional of a location tier given its
    children and parent; batched over cells.
    """
    k, n = child_sums.shape
    a = n_children[:, None, None] * child_prec[None] + prior_prec[None]
    rhs = child_sums @ child_prec.T + (
        prior_mean @ prior_prec.T if isinstance(prior_mean, np.ndarray) else 0.0
    )
    chol = np.linalg.cholesky(a)
    mean = np.linalg.solve(a, rhs[:, :, None])[:, :, 0]
    z = rng.standard_normal((k, n))
    # x = mean + L^-T z has covariance A^-1.
    noise = np.linalg.solve(np.transpose(chol, (0, 2, 1)), z[:, :, None])[:, :, 0]
    return mean + noise


def ar1_precision_apply(e: np.ndarray, rho: float) -> np.ndarray:
    """C(rho)^-1 e, batched; used by gradients."""
    out = np.empty_like(e)
    out[..., 0] = e[..., 0] - rho * e[..., 1]
    out[..., -1] = e[..., -1] - rho * e[..., -2]
    if e.shape[-1] > 2:
        out[..., 1:-1] = (
            (1.0 + rho * rho) * e[..., 1:-1] - rho * (e[..., :-2] + e[..., 2:])
        )
    return out / (1.0 - rho * rho)


def ar1_grad_x(e: np.ndarray, sd: float, rho: float) -> np.ndarray:
    """d logpdf / dx (the mean gradient is its negation)."""
    return -ar1_precision_apply(e, rho) / (sd * sd)


def ar1_grad_sd(e: np.ndarray, sd: float, rho: float) -> np.ndarray:
    n = e.shape[-1]
    return -n / sd + ar1_quad(e, rho) / sd**3


def ar1_grad_rho(e: np.ndarray, sd: float, rho: float) -> np.ndarray:
    n = e.shape[-1]
    ends, mid, cross = _quad_terms(e)
    one_m = 1.0 - rho * rho
    u = ends + (1.0 + rho * rho) * mid - 2.0 * rho * cross
    du = 2.0 * rho * mid - 2.0 * cross
    dquad = (du * one_m + 2.0 * rho * u) / (one_m * one_m)
    return (n - 1) * rho / one_m - dquad / (2.0 * sd * sd)


def gamma_logpdf(x: float, shape: float, rate: float) -> float:
    """Log density of a Gamma(shape, rate) hyperprior at x > 0."""
    if x <= 0:
        return -math.inf
    return (
        shape * math.log(rate)
        - math.lgamma(shape)
        + (shape - 1.0) * math.log(x)
        - rate * x
    )


def gamma_grad(x: float, shape: float, rate: float) -> float:
    return (shape - 1.0) / x - rate
