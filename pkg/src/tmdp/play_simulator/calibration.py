"""Calibration of simulated seasons against observed transition counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tmdp.errors import RejectedInputError
from tmdp.play_simulator.counts import CountTensor

CATEGORIES = ("two_pt", "three_pt", "turnover", "all")


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    if a.std() == 0 or b.std() == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


@dataclass
class CalibrationReport:
    """Correlations per category plus per-cell simulation envelopes."""

    correlations: dict[str, float | None]
    n_replicates: int
    envelope_low: np.ndarray    # 2.5% quantile per merged cell
    envelope_high: np.ndarray   # 97.5% quantile per merged cell
    envelope_min: np.ndarray
    envelope_max: np.ndarray
    observed: np.ndarray        # merged observed cells
    coverage_nonzero: float     # share of observed-nonzero cells inside the band

    def to_json(self) -> dict:
        return {
            "correlations": {
                k: (None if v is None else float(v)) for k, v in self.correlations.items()
            },
            "n_replicates": self.n_replicates,
            "coverage_nonzero": float(self.coverage_nonzero),
        }


def calibration_report(
    simulated: Sequence[CountTensor], observed: CountTensor
) -> CalibrationReport:
    """Compare mean simulated counts to observed counts.

    Pearson correlations are reported for 2-point shots, 3-point shots,
    turnovers (both flavors merged), and all transitions; zero-variance
    observed vectors yield a null correlation rather than an error.
    """
    simulated = list(simulated)
    if not simulated:
        raise RejectedInputError("need at least one simulated replicate")
    for t in simulated:
        if t.space.states != observed.space.states:
            raise RejectedInputError("state-space indexing differs between tensors")

    # Category correlations compare season totals per origin state (slices
    # pooled); the all-transitions correlation keeps full cell granularity.
    correlations: dict[str, float | None] = {}
    for cat in CATEGORIES:
        def vec(t: CountTensor) -> np.ndarray:
            v = t.category_vector(cat)
            if cat == "all":
                return v
            return v.reshape(8, -1).sum(axis=0)

        obs_vec = vec(observed)
        sim_mean = np.mean([vec(t) for t in simulated], axis=0)
        correlations[cat] = _pearson(sim_mean, obs_vec)

    merged = np.stack([t.merged_counts() for t in simulated])
    lo = np.quantile(merged, 0.025, axis=0)
    hi = np.quantile(merged, 0.975, axis=0)
    obs_merged = observed.merged_counts()
    nonzero = obs_merged > 0
    inside = (obs_merged >= lo) & (obs_merged <= hi)
    coverage = float(inside[nonzero].mean()) if nonzero.any() else 1.0
    return CalibrationReport(
        correlations=correlations,
        n_replicates=len(simulated),
        envelope_low=lo,
        envelope_high=hi,
        envelope_min=merged.min(axis=0),
        envelope_max=merged.max(axis=0),
        observed=obs_merged,
        coverage_nonzero=coverage,
    )
