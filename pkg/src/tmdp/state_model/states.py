"""Discrete state space: court regions, terminals, states, and clock slices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from tmdp.errors import ConfigError, RejectedInputError


class CourtRegion(Enum):
    RIM = "rim"
    PAINT = "paint"
    MID_RANGE = "mid_range"
    CORNER_3 = "corner_3"
    ARC_3 = "arc_3"
    BACKCOURT = "backcourt"


REGION_ORDER: tuple[CourtRegion, ...] = tuple(CourtRegion)

THREE_POINT_REGIONS = frozenset(
    {CourtRegion.CORNER_3, CourtRegion.ARC_3, CourtRegion.BACKCOURT}
)


def shot_value(region: CourtRegion) -> int:
    """Point value of a shot attempted from a region."""
    return 3 if region in THREE_POINT_REGIONS else 2


class Terminal(Enum):
    TURNOVER = "turnover"
    MADE_SHOT = "made_shot"
    MISSED_SHOT = "missed_shot"


N_SLICES = 8
SLICE_SECONDS = 3.0
SHOT_CLOCK_SECONDS = 24.0


@dataclass(frozen=True)
class ClockSlice:
    """One of eight 3-second shot-clock bins; slice 1 has the most time left."""

    index: int

    def __post_init__(self) -> None:
        if not 1 <= self.index <= N_SLICES:
            raise RejectedInputError(f"clock slice index out of range: {self.index}")

    @property
    def bounds(self) -> tuple[float, float]:
        lo, hi = slice_bounds(self.index)
        return lo, hi


def slice_bounds(index: int) -> tuple[float, float]:
    """Half-open interval (lo, hi] of seconds remaining covered by a slice."""
    if not 1 <= index <= N_SLICES:
        raise RejectedInputError(f"clock slice index out of range: {index}")
    hi = SHOT_CLOCK_SECONDS - SLICE_SECONDS * (index - 1)
    return hi - SLICE_SECONDS, hi


def clock_slice(shot_clock: float) -> int:
    """Map seconds remaining to a slice index in 1..8.

    Bins are half-open with the upper edge owned by the slice:
    slice 1 = (21, 24], ..., slice 8 = (0, 3].
    """
    if not (0.0 < shot_clock <= SHOT_CLOCK_SECONDS) or math.isnan(shot_clock):
        raise RejectedInputError(f"shot clock out of (0, 24]: {shot_clock!r}")
    return N_SLICES + 1 - math.ceil(shot_clock / SLICE_SECONDS)


@dataclass(frozen=True)
class StateId:
    """Ballcarrier state: who has the ball, where, and under what pressure."""

    player_id: str
    region: CourtRegion
    contested: bool

    def key(self) -> tuple[str, str, bool]:
        return (self.player_id, self.region.value, self.contested)

    def label(self) -> str:
        z = "c" if self.contested else "o"
        return f"{self.player_id}:{self.region.value}:{z}"


@dataclass(frozen=True)
class Player:
    player_id: str
    position: str
    shot_group: int | None = None
    attributes: tuple[tuple[str, str], ...] = ()

    def attribute(self, name: str) -> str | None:
        for key, value in self.attributes:
            if key == name:
                return value
        return None


class StateSpace:
    """Dense indexing of all non-terminal states for a roster and region set.

    Ordering is deterministic: roster order, then region declaration order,
    then open before contested. Terminal sentinels live outside the index.
    """

    def __init__(self, players: Sequence[Player], regions: Sequence[CourtRegion] | None = None):
        if not players:
            raise ConfigError("state space needs at least one player")
        ids = [p.player_id for p in players]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate player ids in roster")
        self.players: tuple[Player, ...] = tuple(players)
        self.regions: tuple[CourtRegion, ...] = tuple(regions) if regions else REGION_ORDER
        if len(set(self.regions)) != len(self.regions):
            raise ConfigError("duplicate regions")
        self.states: tuple[StateId, ...] = tuple(
            StateId(p.player_id, region, contested)
            for p in self.players
            for region in self.regions
            for contested in (False, True)
        )
        self._index: dict[StateId, int] = {s: i for i, s in enumerate(self.states)}
        self._player: dict[str, Player] = {p.player_id: p for p in self.players}

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, state: StateId) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise RejectedInputError(f"state not in space: {state}") from None

    def __contains__(self, state: StateId) -> bool:
        return state in self._index

    def player(self, player_id: str) -> Player:
        try:
            return self._player[player_id]
        except KeyError:
            raise RejectedInputError(f"unknown player: {player_id}") from None

    def position_of(self, player_id: str) -> str:
        return self.player(player_id).position

    def group_of(self, player_id: str) -> int | None:
        return self.player(player_id).shot_group

    @property
    def positions(self) -> tuple[str, ...]:
        seen: list[str] = []
        for p in self.players:
            if p.position not in seen:
                seen.append(p.position)
        return tuple(seen)

    def to_json(self) -> dict[str, Any]:
        return {
            "players": [
                {
                    "player_id": p.player_id,
                    "position": p.position,
                    "shot_group": p.shot_group,
                    "attributes": {k: v for k, v in p.attributes},
                }
                for p in self.players
            ],
            "regions": [r.value for r in self.regions],
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "StateSpace":
        players = [
            Player(
                player_id=p["player_id"],
                position=p["position"],
                shot_group=p.get("shot_group"),
                attributes=tuple(sorted((p.get("attributes") or {}).items())),
            )
            for p in doc["players"]
        ]
        regions = [CourtRegion(r) for r in doc["regions"]]
        return cls(players, regions)


def union_state_order(chains_states: Iterable[Sequence[Any]]) -> list[Any]:
    """Deterministic union preserving first-seen order across sequences."""
    seen: dict[Any, None] = {}
    for states in chains_states:
        for s in states:
            if s not in seen:
                seen[s] = None
    return list(seen)
