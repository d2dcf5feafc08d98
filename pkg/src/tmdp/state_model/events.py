"""Ball events and episode records, with deterministic JSON-line codecs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from tmdp.errors import RejectedInputError
from tmdp.state_model.states import CourtRegion, StateId, Terminal


class EventKind(Enum):
    DRIBBLE = "dribble"
    PASS = "pass"
    SHOT = "shot"
    TURNOVER = "turnover"
    # Raw-feed kinds outside the model's action space. Rebounds initialize
    # plays; the other three mark plays the models exclude.
    REBOUND = "rebound"
    FOUL = "foul"
    TIMEOUT = "timeout"
    JUMPBALL = "jumpball"


MODEL_KINDS = frozenset(
    {EventKind.DRIBBLE, EventKind.PASS, EventKind.SHOT, EventKind.TURNOVER}
)
EXCLUSION_KINDS = frozenset({EventKind.FOUL, EventKind.TIMEOUT, EventKind.JUMPBALL})

_EVENT_FIELDS = (
    "game_id",
    "play_id",
    "t_clock",
    "player_id",
    "pos_group",
    "x",
    "y",
    "def_dist",
    "kind",
)


@dataclass(frozen=True)
class BallEvent:
    game_id: str
    play_id: str
    t_clock: float
    player_id: str
    pos_group: str
    x: float
    y: float
    def_dist: float
    kind: EventKind
    made: bool | None = None
    value: int | None = None

    def to_json_line(self) -> str:
        doc: dict[str, Any] = {
            "game_id": self.game_id,
            "play_id": self.play_id,
            "t_clock": self.t_clock,
            "player_id": self.player_id,
            "pos_group": self.pos_group,
            "x": self.x,
            "y": self.y,
            "def_dist": self.def_dist,
            "kind": self.kind.value,
        }
        if self.made is not None:
            doc["made"] = self.made
        if self.value is not None:
            doc["value"] = self.value
        return json.dumps(doc, separators=(", ", ": "))

    @classmethod
    def from_json_line(cls, line: str) -> "BallEvent":
        doc = json.loads(line)
        missing = [f for f in _EVENT_FIELDS if f not in doc]
        if missing:
            raise RejectedInputError(f"ball event missing fields {missing}: {line!r}")
        return cls(
            game_id=str(doc["game_id"]),
            play_id=str(doc["play_id"]),
            t_clock=float(doc["t_clock"]),
            player_id=str(doc["player_id"]),
            pos_group=str(doc["pos_group"]),
            x=float(doc["x"]),
            y=float(doc["y"]),
            def_dist=float(doc["def_dist"]),
            kind=EventKind(doc["kind"]),
            made=doc.get("made"),
            value=doc.get("value"),
        )


class Action(Enum):
    SHOOT = "shoot"
    NO_SHOOT = "no_shoot"


@dataclass(frozen=True)
class Step:
    """One decision point of an episode."""

    state: StateId
    t_clock: float
    slice_index: int
    action: Action
    lapse: float | None  # seconds until the next event; None on the final step


@dataclass(frozen=True)
class EpisodeRecord:
    """A single play: decision steps, terminal sentinel, and realized reward.

    Steps with action NO_SHOOT are the non-terminal steps; a play that ends in
    a shot carries one final SHOOT step. Reward is nonzero only for made shots
    (observed plays) or carries the expected-point bookkeeping (simulated).
    """

    play_id: str
    game_id: str
    initial_state: StateId
    initial_clock: float
    steps: tuple[Step, ...]
    terminal: Terminal
    reward: float
    clock_violation: bool = False

    @property
    def n_nonterminal_steps(self) -> int:
        return sum(1 for s in self.steps if s.action is Action.NO_SHOOT)

    def to_json(self) -> dict[str, Any]:
        return {
            "play_id": self.play_id,
            "game_id": self.game_id,
            "initial_state": list(self.initial_state.key()),
            "initial_clock": self.initial_clock,
            "steps": [
                {
                    "state": list(s.state.key()),
                    "t_clock": s.t_clock,
                    "slice": s.slice_index,
                    "action": s.action.value,
                    "lapse": s.lapse,
                }
                for s in self.steps
            ],
            "terminal": self.terminal.value,
            "reward": self.reward,
            "clock_violation": self.clock_violation,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(", ", ": "))

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "EpisodeRecord":
        def state_of(key: list) -> StateId:
            return StateId(str(key[0]), CourtRegion(key[1]), bool(key[2]))

        return cls(
            play_id=str(doc["play_id"]),
            game_id=str(doc["game_id"]),
            initial_state=state_of(doc["initial_state"]),
            initial_clock=float(doc["initial_clock"]),
            steps=tuple(
                Step(
                    state=state_of(s["state"]),
                    t_clock=float(s["t_clock"]),
                    slice_index=int(s["slice"]),
                    action=Action(s["action"]),
                    lapse=None if s["lapse"] is None else float(s["lapse"]),
                )
                for s in doc["steps"]
            ),
            terminal=Terminal(doc["terminal"]),
            reward=float(doc["reward"]),
            clock_violation=bool(doc.get("clock_violation", False)),
        )
