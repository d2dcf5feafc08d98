"""Paired baseline/altered season comparison: shot mixes, EPPS, EPPP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from tmdp.play_simulator.counts import CountTensor
from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.simulate import PlayStart, iter_seasons
from tmdp.play_simulator.tensors import DrawTensorBundle
from tmdp.state_model.states import CourtRegion, THREE_POINT_REGIONS

METRICS = ("midrange_contested_shots", "three_pt_shots", "epps", "eppp")


def _metric_row(counts: CountTensor) -> dict[str, float | None]:
    space = counts.space
    shots_state = counts.shots_by_state().sum(axis=0)
    mid_c = sum(
        int(shots_state[i])
        for i, s in enumerate(space.states)
        if s.region is CourtRegion.MID_RANGE and s.contested
    )
    three = sum(
        int(shots_state[i])
        for i, s in enumerate(space.states)
        if s.region in THREE_POINT_REGIONS
    )
    shots = counts.shot_total()
    points = counts.expected_points_total()
    return {
        "midrange_contested_shots": float(mid_c),
        "three_pt_shots": float(three),
        "epps": points / shots if shots > 0 else None,
        "eppp": points / counts.n_plays,
    }


@dataclass
class ComparisonReport:
    """Per-replicate paired metric distributions plus summary deltas."""

    replicates: int
    seed: int
    metrics: dict[str, dict[str, list[float | None]]]
    per_player: dict[str, dict[str, list[float]]]
    epps_excluded_replicates: int
    summary: dict[str, float] = field(default_factory=dict)

    def compute_summary(self) -> None:
        out: dict[str, float] = {}
        for name in METRICS:
            base = self.metrics[name]["baseline"]
            alt = self.metrics[name]["altered"]
            deltas = [
                a - b for a, b in zip(alt, base) if a is not None and b is not None
            ]
            out[f"mean_delta_{name}"] = float(np.mean(deltas)) if deltas else float("nan")
            valid_b = [b for b in base if b is not None]
            valid_a = [a for a in alt if a is not None]
            out[f"mean_baseline_{name}"] = float(np.mean(valid_b)) if valid_b else float("nan")
            out[f"mean_altered_{name}"] = float(np.mean(valid_a)) if valid_a else float("nan")
        self.summary = out

    def to_json(self) -> dict[str, Any]:
        return {
            "replicates": self.replicates,
            "seed": self.seed,
            "metrics": self.metrics,
            "per_player": self.per_player,
            "epps_excluded_replicates": self.epps_excluded_replicates,
            "summary": self.summary,
        }


def compare_policies(
    baseline: DrawTensorBundle,
    altered: DrawTensorBundle,
    starts: Sequence[PlayStart],
    lapses: LapseDistribution,
    replicates: int,
    seed: int,
) -> ComparisonReport:
    """Run both arms over identical starts with replicate-paired seeds.

    Replicate r of each arm consumes an identical random stream, so an
    identity alteration yields exactly zero paired deltas. Replicates with
    zero shots have undefined EPPS and are excluded from EPPS summaries
    (their count is reported).
    """
    metrics: dict[str, dict[str, list]] = {
        name: {"baseline": [], "altered": []} for name in METRICS
    }
    player_ids = [p.player_id for p in baseline.space.players]
    per_player: dict[str, dict[str, list[float]]] = {
        pid: {"baseline": [], "altered": []} for pid in player_ids
    }
    excluded = 0
    arms = (
        ("baseline", iter_seasons(starts, baseline, lapses, replicates, seed)),
        ("altered", iter_seasons(starts, altered, lapses, replicates, seed)),
    )
    for arm_name, season_iter in arms:
        for _, counts, _ in season_iter:
            row = _metric_row(counts)
            for name in METRICS:
                metrics[name][arm_name].append(row[name])
            if row["epps"] is None:
                excluded += 1
            shots = counts.shots_by_player()
            for pid in player_ids:
                per_player[pid][arm_name].append(float(shots[pid]))
    report = ComparisonReport(
        replicates=replicates,
        seed=seed,
        metrics=metrics,
        per_player=per_player,
        epps_excluded_replicates=excluded,
    )
    report.compute_summary()
    return report
