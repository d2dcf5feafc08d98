"""Empirical distribution of time lapses between consecutive ball events."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tmdp import binio
from tmdp.errors import RejectedInputError
from tmdp.state_model.states import N_SLICES


class LapseDistribution:
    """Per-clock-slice multiset of observed positive inter-event lapses.

    Sampling is stratified by the slice of the current clock; an empty
    stratum falls back to the pooled distribution across all slices.
    """

    def __init__(self, by_slice: Sequence[np.ndarray]):
        if len(by_slice) != N_SLICES:
            raise RejectedInputError(f"need {N_SLICES} strata, got {len(by_slice)}")
        self.by_slice = [np.asarray(a, dtype=np.float64) for a in by_slice]
        for arr in self.by_slice:
            if arr.size and arr.min() <= 0:
                raise RejectedInputError("lapses must be strictly positive")
        self.pooled = (
            np.concatenate([a for a in self.by_slice])
            if any(a.size for a in self.by_slice)
            else np.array([])
        )
        if self.pooled.size == 0:
            raise RejectedInputError("lapse distribution has no observations")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "LapseDistribution":
        """Build from (slice_index, lapse_seconds) pairs; non-positive lapses dropped."""
        strata: list[list[float]] = [[] for _ in range(N_SLICES)]
        for slice_index, lapse in pairs:
            if lapse > 0:
                strata[slice_index - 1].append(lapse)
        return cls([np.array(s, dtype=np.float64) for s in strata])

    def sample(self, slice_index: int, rng: np.random.Generator) -> float:
        stratum = self.by_slice[slice_index - 1]
        if stratum.size == 0:
            stratum = self.pooled
        return float(stratum[rng.integers(stratum.size)])

    def save(self, path: str | Path) -> None:
        binio.write_blob(
            path,
            meta={"kind": "lapse_distribution"},
            arrays={f"slice_{i + 1}": arr for i, arr in enumerate(self.by_slice)},
        )

    @classmethod
    def load(cls, path: str | Path) -> "LapseDistribution":
        meta, arrays = binio.read_blob(path)
        if meta.get("kind") != "lapse_distribution":
            raise RejectedInputError(f"not a lapse distribution file: {path}")
        return cls([arrays[f"slice_{i + 1}"] for i in range(N_SLICES)])
