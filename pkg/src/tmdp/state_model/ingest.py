"""Turn raw ball-event logs into episodes, counts, lapses, and starts.

A play's events are decision points: every dribble/pass/shot event is a
Bernoulli shot-policy observation, every non-shot decision emits one
transition whose destination is the next event's state (or the turnover
sentinel). Plays ending in fouls, timeouts, jumpballs, or backcourt
turnovers are excluded; structurally broken plays are quarantined with a
diagnostic instead of silently dropped.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tmdp.errors import RejectedInputError
from tmdp.state_model.events import (
    Action,
    BallEvent,
    EpisodeRecord,
    EventKind,
    EXCLUSION_KINDS,
    Step,
)
from tmdp.state_model.geometry import (
    CourtGeometry,
    DEFAULT_GEOMETRY,
    PRESSURE_THRESHOLD_FT,
    classify_pressure,
    classify_region,
)
from tmdp.state_model.states import (
    CourtRegion,
    Player,
    REGION_ORDER,
    StateId,
    StateSpace,
    Terminal,
    clock_slice,
    shot_value,
)

from typing import TYPE_CHECKING

if TYPE_CHECKING:  # runtime import happens inside ingest_events (import cycle)
    from tmdp.play_simulator.counts import CountTensor
    from tmdp.play_simulator.lapses import LapseDistribution

_CLOCK_EPS = 1e-9


@dataclass(frozen=True)
class PlayStartRecord:
    play_id: str
    state: StateId
    t_clock: float


@dataclass
class IngestResult:
    space: StateSpace
    episodes: list[EpisodeRecord]
    counts: CountTensor
    lapses: LapseDistribution
    starts: list[PlayStartRecord]
    exclusions: list[tuple[str, str]]

    def exclusions_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["play_id", "reason"])
        writer.writerows(self.exclusions)
        return buf.getvalue()


def _group_plays(events: Iterable[BallEvent]) -> list[tuple[str, list[BallEvent]]]:
    order: list[str] = []
    groups: dict[str, list[BallEvent]] = {}
    for ev in events:
        if ev.play_id not in groups:
            order.append(ev.play_id)
            groups[ev.play_id] = []
        groups[ev.play_id].append(ev)
    return [(pid, groups[pid]) for pid in order]


@dataclass
class _ClassifiedEvent:
    event: BallEvent
    region: CourtRegion
    contested: bool

    @property
    def state(self) -> StateId:
        return StateId(self.event.player_id, self.region, self.contested)


def _check_play(
    play_id: str, evs: list[BallEvent], geometry: CourtGeometry
) -> tuple[list[_ClassifiedEvent], str | None]:
    """Classify a play. Returns (classified events, None) or ([], reason)."""
    last = evs[-1]
    for i, ev in enumerate(evs):
        if ev.t_clock < 0 or ev.t_clock > 24:
            return [], f"malformed: clock_out_of_range at event {i}"
        if i + 1 < len(evs) and evs[i + 1].t_clock > ev.t_clock + _CLOCK_EPS:
            return [], f"malformed: clock_increases at event {i + 1}"
        if ev.kind in EXCLUSION_KINDS and ev is not last:
            return [], f"malformed: {ev.kind.value}_mid_play"
        if ev.kind in (EventKind.SHOT, EventKind.TURNOVER) and ev is not last:
            return [], f"malformed: event_after_terminal at event {i}"
        if ev.kind is EventKind.REBOUND and i != 0:
            return [], "malformed: rebound_mid_play"
    if last.kind in EXCLUSION_KINDS:
        return [], f"excluded: terminal_{last.kind.value}"
    if last.kind not in (EventKind.SHOT, EventKind.TURNOVER):
        return [], "malformed: missing_terminal"
    if last.kind is EventKind.SHOT and last.made is None:
        return [], "malformed: shot_missing_outcome"

    classified: list[_ClassifiedEvent] = []
    for i, ev in enumerate(evs):
        try:
            region = classify_region(ev.x, ev.y, geometry)
        except RejectedInputError:
            return [], f"malformed: coordinates_out_of_bounds at event {i}"
        classified.append(_ClassifiedEvent(ev, region, classify_pressure(region, ev.def_dist)))

    # Decision events need a usable clock; a trailing turnover may sit at 0.0.
    n_decisions = len(evs) if last.kind is EventKind.SHOT else len(evs) - 1
    if n_decisions == 0:
        return [], "malformed: no_decision_events"
    for ce in classified[:n_decisions]:
        if not 0.0 < ce.event.t_clock <= 24.0:
            return [], "malformed: decision_at_zero_clock"
    if last.kind is EventKind.TURNOVER and classified[-1].region is CourtRegion.BACKCOURT:
        return [], "excluded: terminal_in_backcourt"
    return classified, None


def build_state_space(
    plays: Sequence[tuple[str, list[_ClassifiedEvent]]],
    regions: Sequence[CourtRegion] | None = None,
) -> StateSpace:
    players: list[Player] = []
    seen: set[str] = set()
    observed_regions: set[CourtRegion] = set()
    for _, classified in plays:
        last = classified[-1]
        n_decisions = (
            len(classified) if last.event.kind is EventKind.SHOT else len(classified) - 1
        )
        for ce in classified[:n_decisions]:
            observed_regions.add(ce.region)
            if ce.event.player_id not in seen:
                seen.add(ce.event.player_id)
                players.append(Player(ce.event.player_id, ce.event.pos_group))
    if regions is None:
        region_list = [r for r in REGION_ORDER if r in observed_regions]
    else:
        region_list = list(regions)
    return StateSpace(players, region_list)


def ingest_events(
    events: Iterable[BallEvent],
    space: StateSpace | None = None,
    geometry: CourtGeometry = DEFAULT_GEOMETRY,
) -> IngestResult:
    """Ingest a clock-ordered, play-grouped event stream.

    Deterministic given input order: roster and play order follow first
    appearance in the stream.
    """
    from tmdp.play_simulator.counts import CountTensor
    from tmdp.play_simulator.lapses import LapseDistribution

    grouped = _group_plays(events)
    retained: list[tuple[str, list[_ClassifiedEvent]]] = []
    exclusions: list[tuple[str, str]] = []
    for play_id, evs in grouped:
        classified, reason = _check_play(play_id, evs, geometry)
        if reason is not None:
            exclusions.append((play_id, reason))
        else:
            retained.append((play_id, classified))

    if space is None:
        space = build_state_space(retained)

    episodes: list[EpisodeRecord] = []
    counts = CountTensor(space)
    lapse_pairs: list[tuple[int, float]] = []
    starts: list[PlayStartRecord] = []

    for play_id, classified in retained:
        last = classified[-1]
        is_shot_play = last.event.kind is EventKind.SHOT
        decisions = classified if is_shot_play else classified[:-1]
        try:
            steps, terminal, reward = _build_steps(classified, decisions, is_shot_play, space)
        except RejectedInputError as err:
            exclusions.append((play_id, f"malformed: {err}"))
            continue
        ep = EpisodeRecord(
            play_id=play_id,
            game_id=decisions[0].event.game_id,
            initial_state=decisions[0].state,
            initial_clock=decisions[0].event.t_clock,
            steps=steps,
            terminal=terminal,
            reward=reward,
        )
        episodes.append(ep)
        starts.append(PlayStartRecord(play_id, ep.initial_state, ep.initial_clock))
        _record_counts(ep, counts, space)
        counts.add_play_reward(reward)
        for step in steps:
            if step.lapse is not None and step.lapse > 0:
                lapse_pairs.append((step.slice_index, step.lapse))

    lapses = LapseDistribution.from_pairs(lapse_pairs) if lapse_pairs else None
    if lapses is None:
        # Degenerate corpora (e.g. all plays length one) still need a usable
        # distribution; a single nominal one-second lapse keeps invariants.
        lapses = LapseDistribution.from_pairs([(8, 1.0)])
    return IngestResult(space, episodes, counts, lapses, starts, exclusions)


def _build_steps(
    classified: list[_ClassifiedEvent],
    decisions: list[_ClassifiedEvent],
    is_shot_play: bool,
    space: StateSpace,
) -> tuple[tuple[Step, ...], Terminal, float]:
    steps: list[Step] = []
    for i, ce in enumerate(decisions):
        if ce.state not in space:
            raise RejectedInputError(f"state_outside_space ({ce.state.label()})")
        is_last_decision = i == len(decisions) - 1
        if is_shot_play and is_last_decision:
            action = Action.SHOOT
            lapse = None
        else:
            action = Action.NO_SHOOT
            next_clock = classified[i + 1].event.t_clock
            lapse = ce.event.t_clock - next_clock
        steps.append(
            Step(
                state=ce.state,
                t_clock=ce.event.t_clock,
                slice_index=clock_slice(ce.event.t_clock),
                action=action,
                lapse=lapse,
            )
        )
    if is_shot_play:
        ev = decisions[-1].event
        terminal = Terminal.MADE_SHOT if ev.made else Terminal.MISSED_SHOT
        value = ev.value if ev.value is not None else shot_value(decisions[-1].region)
        reward = float(value) if ev.made else 0.0
    else:
        terminal = Terminal.TURNOVER
        reward = 0.0
    return tuple(steps), terminal, reward


def _record_counts(ep: EpisodeRecord, counts: CountTensor, space: StateSpace) -> None:
    for i, step in enumerate(ep.steps):
        origin = space.index(step.state)
        if step.action is Action.SHOOT:
            dest = counts.col_made if ep.terminal is Terminal.MADE_SHOT else counts.col_missed
        elif i + 1 < len(ep.steps):
            dest = space.index(ep.steps[i + 1].state)
        else:
            dest = counts.col_violation if ep.clock_violation else counts.col_turnover
        counts.record(step.slice_index, origin, dest)


# ---------------------------------------------------------------------------
# Episode -> event serialization (used by the synthetic generator and the
# ingest round-trip property). Coordinates are drawn from pre-sampled region
# interior pools so reclassification is exact.
# ---------------------------------------------------------------------------


class RegionPointPool:
    """Seeded pools of interior points per region, stable under perturbation."""

    def __init__(self, geometry: CourtGeometry = DEFAULT_GEOMETRY, seed: int = 7,
                 pool_size: int = 256, margin: float = 0.35):
        self.geometry = geometry
        rng = np.random.default_rng(seed)
        self.pools: dict[CourtRegion, list[tuple[float, float]]] = {}
        for region in REGION_ORDER:
            pts: list[tuple[float, float]] = []
            while len(pts) < pool_size:
                x = float(rng.uniform(0.5, geometry.court_length - 0.5))
                y = float(rng.uniform(0.5, geometry.court_width - 0.5))
                if self._interior(x, y, region, margin):
                    pts.append((x, y))
            self.pools[region] = pts

    def _interior(self, x: float, y: float, region: CourtRegion, margin: float) -> bool:
        g = self.geometry
        for dx, dy in ((0, 0), (margin, 0), (-margin, 0), (0, margin), (0, -margin)):
            px, py = x + dx, y + dy
            if not (0 <= px <= g.court_length and 0 <= py <= g.court_width):
                return False
            if classify_region(px, py, g) is not region:
                return False
        return True

    def point(self, region: CourtRegion, rng: np.random.Generator) -> tuple[float, float]:
        pool = self.pools[region]
        return pool[int(rng.integers(len(pool)))]


def defender_distance_for(region: CourtRegion, contested: bool) -> float:
    threshold = PRESSURE_THRESHOLD_FT[region]
    return round(threshold - 1.2, 3) if contested else round(threshold + 2.0, 3)


def serialize_episodes(
    episodes: Sequence[EpisodeRecord],
    space: StateSpace,
    pool: RegionPointPool | None = None,
    seed: int = 7,
) -> list[BallEvent]:
    """Render episodes back into a ball-event stream.

    Coordinates are synthesized inside region interiors; everything else is
    informationally lossless, so ingest(serialize(ingest(x))) is a fixed point.
    """
    pool = pool or RegionPointPool()
    rng = np.random.default_rng(seed)
    shot_terminals = (Terminal.MADE_SHOT, Terminal.MISSED_SHOT)
    out: list[BallEvent] = []
    for ep in episodes:
        for i, step in enumerate(ep.steps):
            x, y = pool.point(step.state.region, rng)
            if step.action is Action.SHOOT and ep.terminal in shot_terminals:
                # A drawn shot preempted by a clock violation never happens
                # on the floor; it serializes as an ordinary on-ball event.
                kind = EventKind.SHOT
            elif i + 1 < len(ep.steps):
                next_player = ep.steps[i + 1].state.player_id
                kind = EventKind.DRIBBLE if next_player == step.state.player_id else EventKind.PASS
            else:
                kind = EventKind.DRIBBLE
            made = None
            value = None
            if kind is EventKind.SHOT:
                made = ep.terminal is Terminal.MADE_SHOT
                value = shot_value(step.state.region)
            out.append(
                BallEvent(
                    game_id=ep.game_id,
                    play_id=ep.play_id,
                    t_clock=step.t_clock,
                    player_id=step.state.player_id,
                    pos_group=space.position_of(step.state.player_id),
                    x=x,
                    y=y,
                    def_dist=defender_distance_for(step.state.region, step.state.contested),
                    kind=kind,
                    made=made,
                    value=value,
                )
            )
        if ep.terminal is Terminal.TURNOVER:
            last = ep.steps[-1]
            t_clock = last.t_clock - last.lapse if last.lapse is not None else 0.0
            t_clock = max(t_clock, 0.0)
            # The turnover event is a destination, not a decision; its own
            # player/location are immaterial to the models. Reuse the last
            # ballcarrier in a frontcourt spot.
            region = last.state.region
            if region is CourtRegion.BACKCOURT:
                region = CourtRegion.MID_RANGE if CourtRegion.MID_RANGE in space.regions else space.regions[0]
            x, y = pool.point(region, rng)
            out.append(
                BallEvent(
                    game_id=ep.game_id,
                    play_id=ep.play_id,
                    t_clock=t_clock,
                    player_id=last.state.player_id,
                    pos_group=space.position_of(last.state.player_id),
                    x=x,
                    y=y,
                    def_dist=defender_distance_for(region, False),
                    kind=EventKind.TURNOVER,
                )
            )
    return out


def write_events_jsonl(events: Sequence[BallEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json_line())
            fh.write("\n")


def read_events_jsonl(path: str | Path) -> list[BallEvent]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(BallEvent.from_json_line(line))
    return out
