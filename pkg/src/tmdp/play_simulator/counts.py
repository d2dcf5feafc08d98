"""Per-slice transition count tensor shared by ingestion and simulation."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np

from tmdp import binio
from tmdp.errors import RejectedInputError
from tmdp.state_model.states import (
    N_SLICES,
    StateSpace,
    THREE_POINT_REGIONS,
)

# Destination axis = dense states, then four terminal columns. Turnovers via
# transition and via shot-clock violation are tracked separately and merged
# for reporting.
TERMINAL_COLUMNS = ("turnover", "turnover_violation", "made_shot", "missed_shot")


class CountTensor:
    """Counts of (clock slice, origin state, destination) transitions.

    Destinations span the dense state space plus the terminal sentinels.
    Also carries the per-play reward ledger of the plays that produced it.
    """

    def __init__(self, space: StateSpace, counts: np.ndarray | None = None,
                 rewards: np.ndarray | None = None):
        self.space = space
        n = space.n_states
        self.n_dest = n + len(TERMINAL_COLUMNS)
        if counts is None:
            counts = np.zeros((N_SLICES, n, self.n_dest), dtype=np.int64)
        if counts.shape != (N_SLICES, n, self.n_dest):
            raise RejectedInputError(
                f"count tensor shape {counts.shape} inconsistent with space"
            )
        self.counts = counts
        self.rewards = np.asarray(rewards if rewards is not None else [], dtype=np.float64)

    # -- column helpers -----------------------------------------------------

    def dest_col(self, name: str) -> int:
        return self.space.n_states + TERMINAL_COLUMNS.index(name)

    @property
    def col_turnover(self) -> int:
        return self.dest_col("turnover")

    @property
    def col_violation(self) -> int:
        return self.dest_col("turnover_violation")

    @property
    def col_made(self) -> int:
        return self.dest_col("made_shot")

    @property
    def col_missed(self) -> int:
        return self.dest_col("missed_shot")

    # -- recording ----------------------------------------------------------

    def record(self, slice_index: int, origin: int, dest: int) -> None:
        self.counts[slice_index - 1, origin, dest] += 1

    def add_play_reward(self, reward: float) -> None:
        self.rewards = np.append(self.rewards, reward)

    # -- aggregate views ----------------------------------------------------

    @property
    def n_plays(self) -> int:
        return len(self.rewards)

    def terminal_total(self) -> int:
        return int(self.counts[:, :, self.space.n_states :].sum())

    def shot_total(self) -> int:
        return int(self.counts[:, :, [self.col_made, self.col_missed]].sum())

    def turnover_total(self) -> int:
        return int(self.counts[:, :, [self.col_turnover, self.col_violation]].sum())

    def movement_total(self) -> int:
        """Transitions whose destination is a state or a turnover sentinel."""
        return int(self.counts[:, :, : self.space.n_states].sum()) + self.turnover_total()

    def expected_points_total(self) -> float:
        return float(self.rewards.sum())

    def shots_by_state(self) -> np.ndarray:
        """(slice, origin) shot counts (made + missed)."""
        return (
            self.counts[:, :, self.col_made] + self.counts[:, :, self.col_missed]
        )

    def shots_by_player(self) -> dict[str, int]:
        per_state = self.shots_by_state().sum(axis=0)
        totals: dict[str, int] = {p.player_id: 0 for p in self.space.players}
        for i, state in enumerate(self.space.states):
            totals[state.player_id] += int(per_state[i])
        return totals

    def category_vector(self, category: str) -> np.ndarray:
        """Flattened per-(slice, origin) counts for a calibration category."""
        if category == "turnover":
            mat = self.counts[:, :, self.col_turnover] + self.counts[:, :, self.col_violation]
            return mat.reshape(-1).astype(np.float64)
        if category in ("two_pt", "three_pt"):
            shots = self.shots_by_state().astype(np.float64)
            is3 = np.array(
                [s.region in THREE_POINT_REGIONS for s in self.space.states]
            )
            mask = is3 if category == "three_pt" else ~is3
            return (shots * mask[None, :]).reshape(-1)
        if category == "all":
            merged = self.merged_counts()
            return merged.reshape(-1).astype(np.float64)
        raise RejectedInputError(f"unknown calibration category: {category}")

    def merged_counts(self) -> np.ndarray:
        """Counts with the two turnover flavors collapsed into one column."""
        n = self.space.n_states
        merged = np.concatenate(
            [
                self.counts[:, :, :n],
                (self.counts[:, :, self.col_turnover] + self.counts[:, :, self.col_violation])[
                    :, :, None
                ],
                self.counts[:, :, self.col_made :],
            ],
            axis=2,
        )
        return merged

    # -- persistence ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        binio.write_blob(
            path,
            meta={"kind": "count_tensor", "space": self.space.to_json()},
            arrays={"counts": self.counts, "rewards": self.rewards},
        )

    @classmethod
    def load(cls, path: str | Path) -> "CountTensor":
        meta, arrays = binio.read_blob(path)
        space = StateSpace.from_json(meta["space"])
        return cls(space, counts=arrays["counts"], rewards=arrays["rewards"])

    @classmethod
    def sum(cls, tensors: Iterable["CountTensor"]) -> "CountTensor":
        tensors = list(tensors)
        if not tensors:
            raise RejectedInputError("cannot sum zero count tensors")
        out = cls(tensors[0].space)
        out.counts = np.sum([t.counts for t in tensors], axis=0)
        out.rewards = np.concatenate([t.rewards for t in tensors])
        return out
