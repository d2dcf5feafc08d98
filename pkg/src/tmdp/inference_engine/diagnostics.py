"""Convergence diagnostics: rank-normalized split R-hat and bulk ESS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from tmdp.errors import DiagnosticsUnavailableError
from tmdp.inference_engine.draws import PosteriorDrawSet

RHAT_THRESHOLD = 1.1


def _split_chains(chains: np.ndarray) -> np.ndarray:
    """(m, n) -> (2m, n//2), dropping a trailing odd draw."""
    m, n = chains.shape
    half = n // 2
    return np.concatenate([chains[:, :half], chains[:, half : 2 * half]], axis=0)


def _rank_normalize(chains: np.ndarray) -> np.ndarray:
    flat = chains.reshape(-1)
    ranks = rankdata(flat, method="average")
    z = ndtri((ranks - 0.375) / (flat.size + 0.25))
    return z.reshape(chains.shape)


def split_rhat(chains: np.ndarray) -> float:
    """Rank-normalized split potential-scale-reduction factor."""
    z = _rank_normalize(_split_chains(np.asarray(chains, dtype=float)))
    m, n = z.shape
    chain_means = z.mean(axis=1)
    b = n * chain_means.var(ddof=1)
    w = z.var(axis=1, ddof=1).mean()
    if w == 0:
        return 1.0
    var_hat = (n - 1) / n * w + b / n
    return float(np.sqrt(var_hat / w))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance by FFT, one chain per row."""
    m, n = x.shape
    xc = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n].real
    return acov / n


def ess_bulk(chains: np.ndarray) -> float:
    """Rank-normalized bulk effective sample size (paired-sum truncation)."""
    z = _rank_normalize(_split_chains(np.asarray(chains, dtype=float)))
    m, n = z.shape
    if n < 4:
        raise DiagnosticsUnavailableError("chains too short for ESS")
    acov = _autocovariance(z)
    chain_var = acov[:, 0] * n / (n - 1)
    w = chain_var.mean()
    var_plus = w * (n - 1) / n + z.mean(axis=1).var(ddof=1) if m > 1 else w
    if var_plus == 0:
        return float(m * n)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer initial monotone positive sequence on paired sums.
    max_pairs = (n - 1) // 2
    tau = 0.0
    prev = np.inf
    total = 0.0
    for k in range(max_pairs):
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        prev = pair
        total += pair
    tau = max(2.0 * total - 1.0, 1.0 / np.log10(m * n + 10))
    ess = m * n / tau
    return float(min(ess, m * n * np.log10(max(m * n, 10))))


@dataclass
class DiagnosticsReport:
    """Per-parameter convergence diagnostics plus per-block acceptance rates."""

    param_names: tuple[str, ...]
    rhat: np.ndarray
    ess: np.ndarray
    acceptance: dict[str, float]
    flagged: tuple[str, ...]

    @property
    def max_rhat(self) -> float:
        return float(np.nanmax(self.rhat))

    @property
    def min_ess(self) -> float:
        return float(np.nanmin(self.ess))

    def to_json(self) -> dict:
        return {
            "max_rhat": self.max_rhat,
            "min_ess": self.min_ess,
            "flagged": list(self.flagged),
            "acceptance": self.acceptance,
            "per_parameter": {
                name: {"rhat": float(r), "ess": float(e)}
                for name, r, e in zip(self.param_names, self.rhat, self.ess)
            },
        }


def diagnostics(draw_set: PosteriorDrawSet) -> DiagnosticsReport:
    """Split R-hat and ESS for every sampled parameter.

    Requires at least two chains and 100 post-burn-in draws per chain.
    """
    if draw_set.n_chains < 2:
        raise DiagnosticsUnavailableError("diagnostics need at least two chains")
    if draw_set.n_kept < 100:
        raise DiagnosticsUnavailableError(
            f"diagnostics need >= 100 kept draws per chain, got {draw_set.n_kept}"
        )
    names = draw_set.param_names()
    dim = draw_set.dim
    rhat = np.empty(dim)
    ess = np.empty(dim)
    for j in range(dim):
        series = draw_set.draws[:, :, j]
        if np.allclose(series, series.flat[0]):
            # Constant parameter (e.g. never-moved block): R-hat undefined.
            rhat[j] = 1.0
            ess[j] = float(series.size)
            continue
        rhat[j] = split_rhat(series)
        ess[j] = ess_bulk(series)
    mean_accept = draw_set.acceptance.mean(axis=0)
    acceptance = {
        name: float(a) for name, a in zip(draw_set.block_names, mean_accept)
    }
    flagged = tuple(n for n, r in zip(names, rhat) if r >= RHAT_THRESHOLD)
    return DiagnosticsReport(
        param_names=tuple(names),
        rhat=rhat,
        ess=ess,
        acceptance=acceptance,
        flagged=flagged,
    )
