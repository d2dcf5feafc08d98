"""Crossed shot-group clustering: volume terciles times propensity profiles.

Players are clustered twice: k-means on season shot volume (k=3) and
k-means on the per-region shot-share vector (k=6), each initialized at the
centroids found by Ward-linkage agglomeration. Crossing the labels yields
the 18 groups that regularize the shot-efficiency model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from sklearn.cluster import KMeans

from tmdp.errors import DegenerateClusteringError, RejectedInputError


@dataclass(frozen=True)
class PlayerShotSummary:
    player_id: str
    shot_count: float
    region_shares: tuple[float, ...]  # one share per region, sums to 1


@dataclass(frozen=True)
class ShotGroupAssignment:
    player_id: str
    volume_cluster: int       # 1..k_volume
    propensity_cluster: int   # 1..k_propensity
    group: int                # crossed label h

    @staticmethod
    def crossed(volume: int, propensity: int, k_propensity: int) -> int:
        return k_propensity * (volume - 1) + propensity


def _ward_kmeans(x: np.ndarray, k: int) -> np.ndarray:
    """K-means labels initialized at Ward-linkage centroids."""
    distinct = np.unique(x, axis=0)
    if len(distinct) < k:
        raise DegenerateClusteringError(
            f"{len(distinct)} distinct points cannot form {k} clusters"
        )
    tree = linkage(x, method="ward")
    ward_labels = fcluster(tree, t=k, criterion="maxclust")
    centroids = np.stack([x[ward_labels == c].mean(axis=0) for c in range(1, k + 1)])
    km = KMeans(n_clusters=k, init=centroids, n_init=1, max_iter=300)
    return km.fit_predict(x)


def _canonical_relabel(labels: np.ndarray, x: np.ndarray, by_volume: bool) -> np.ndarray:
    """Deterministic 1-based labels: volume sorted descending, else lexicographic."""
    uniq = np.unique(labels)
    centroids = np.stack([x[labels == c].mean(axis=0) for c in uniq])
    if by_volume:
        order = np.argsort(-centroids[:, 0], kind="stable")
    else:
        order = np.lexsort(centroids.T[::-1])
    rank = {int(uniq[o]): i + 1 for i, o in enumerate(order)}
    return np.array([rank[int(c)] for c in labels])


def cluster_shot_groups(
    summaries: Sequence[PlayerShotSummary],
    k_volume: int = 3,
    k_propensity: int = 6,
) -> list[ShotGroupAssignment]:
    """Assign every player a crossed volume-by-propensity shot group."""
    if len(summaries) < k_volume * k_propensity:
        raise RejectedInputError(
            f"need at least {k_volume * k_propensity} players, got {len(summaries)}"
        )
    volumes = np.array([[s.shot_count] for s in summaries], dtype=float)
    shares = np.array([s.region_shares for s in summaries], dtype=float)
    if np.any(np.abs(shares.sum(axis=1) - 1.0) > 1e-6):
        raise RejectedInputError("region shares must sum to 1 per player")

    vol_labels = _canonical_relabel(_ward_kmeans(volumes, k_volume), volumes, by_volume=True)
    prop_labels = _canonical_relabel(_ward_kmeans(shares, k_propensity), shares, by_volume=False)

    return [
        ShotGroupAssignment(
            player_id=s.player_id,
            volume_cluster=int(v),
            propensity_cluster=int(p),
            group=ShotGroupAssignment.crossed(int(v), int(p), k_propensity),
        )
        for s, v, p in zip(summaries, vol_labels, prop_labels)
    ]


def summaries_from_episodes(episodes, space) -> list[PlayerShotSummary]:
    """Season shot volume and per-region shot shares per rostered player."""
    from tmdp.state_model.events import Action

    region_index = {r: i for i, r in enumerate(space.regions)}
    counts = {p.player_id: np.zeros(len(space.regions)) for p in space.players}
    for ep in episodes:
        if ep.steps and ep.steps[-1].action is Action.SHOOT:
            s = ep.steps[-1].state
            counts[s.player_id][region_index[s.region]] += 1
    out = []
    for p in space.players:
        c = counts[p.player_id]
        total = c.sum()
        shares = c / total if total > 0 else np.full(len(c), 1.0 / len(c))
        out.append(PlayerShotSummary(p.player_id, float(total), tuple(shares)))
    return out


def assignments_csv(assignments: Sequence[ShotGroupAssignment]) -> str:
    lines = ["player_id,volume_cluster,propensity_cluster,h"]
    for a in assignments:
        lines.append(f"{a.player_id},{a.volume_cluster},{a.propensity_cluster},{a.group}")
    return "\n".join(lines) + "\n"
