"""Event-log ingestion: episode building, exclusions, counts, round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from tmdp.state_model import (
    Action,
    BallEvent,
    CourtRegion,
    EventKind,
    Terminal,
    ingest_events,
    serialize_episodes,
)
from tmdp.state_model.ingest import read_events_jsonl, write_events_jsonl

COORDS = {
    CourtRegion.RIM: (5.25, 25.0),
    CourtRegion.PAINT: (17.0, 25.0),
    CourtRegion.MID_RANGE: (20.0, 32.0),
    CourtRegion.CORNER_3: (4.0, 1.5),
    CourtRegion.ARC_3: (32.0, 25.0),
    CourtRegion.BACKCOURT: (60.0, 25.0),
}


def ev(
    play: str,
    t: float,
    kind: EventKind = EventKind.DRIBBLE,
    player: str = "p1",
    pos: str = "guard",
    region: CourtRegion = CourtRegion.MID_RANGE,
    contested: bool = False,
    made: bool | None = None,
    value: int | None = None,
    game: str = "g1",
) -> BallEvent:
    x, y = COORDS[region]
    return BallEvent(
        game_id=game,
        play_id=play,
        t_clock=t,
        player_id=player,
        pos_group=pos,
        x=x,
        y=y,
        def_dist=1.0 if contested else 9.0,
        kind=kind,
        made=made,
        value=value,
    )


def shot_play(play: str = "s1") -> list[BallEvent]:
    return [
        ev(play, 20.0),
        ev(play, 18.5),
        ev(play, 17.0),
        ev(play, 15.5, kind=EventKind.SHOT, made=True, value=2),
    ]


class TestEpisodes:
    def test_three_dribbles_and_made_two(self):
        result = ingest_events(shot_play())
        assert len(result.episodes) == 1
        ep = result.episodes[0]
        assert ep.n_nonterminal_steps == 3
        assert len(ep.steps) == 4
        assert ep.steps[-1].action is Action.SHOOT
        assert ep.terminal is Terminal.MADE_SHOT
        assert ep.reward == 2.0

    def test_turnover_play(self):
        events = [
            ev("t1", 20.0),
            ev("t1", 18.0, player="p2", kind=EventKind.PASS),
            ev("t1", 16.0, kind=EventKind.TURNOVER),
        ]
        # p1 dribbles... actually p1 passes to p2 implicitly via next event.
        result = ingest_events(events)
        ep = result.episodes[0]
        assert ep.terminal is Terminal.TURNOVER
        assert ep.reward == 0.0
        assert ep.n_nonterminal_steps == 2
        assert result.counts.turnover_total() == 1

    def test_leading_rebound_initializes(self):
        events = [
            ev("r1", 21.0, kind=EventKind.REBOUND, region=CourtRegion.RIM),
            ev("r1", 19.0, kind=EventKind.SHOT, region=CourtRegion.RIM, made=False),
        ]
        result = ingest_events(events)
        ep = result.episodes[0]
        assert ep.initial_state.region is CourtRegion.RIM
        assert ep.terminal is Terminal.MISSED_SHOT
        assert len(ep.steps) == 2

    def test_starts_and_lapses(self):
        result = ingest_events(shot_play())
        assert len(result.starts) == 1
        assert result.starts[0].t_clock == 20.0
        # Three lapses of 1.5 s each.
        assert result.lapses.pooled.tolist() == [1.5, 1.5, 1.5]


class TestExclusions:
    def test_terminal_foul_excluded(self):
        events = shot_play("keep") + [
            ev("foul1", 20.0),
            ev("foul1", 18.0, kind=EventKind.FOUL),
        ]
        result = ingest_events(events)
        assert [e.play_id for e in result.episodes] == ["keep"]
        assert ("foul1", "excluded: terminal_foul") in result.exclusions

    @pytest.mark.parametrize("kind", [EventKind.TIMEOUT, EventKind.JUMPBALL])
    def test_other_exclusion_kinds(self, kind):
        events = shot_play("keep") + [ev("x", 20.0), ev("x", 18.0, kind=kind)]
        result = ingest_events(events)
        assert any(r.startswith("excluded: terminal_") for _, r in result.exclusions)

    def test_backcourt_turnover_excluded(self):
        events = shot_play("keep") + [
            ev("bc", 22.0, region=CourtRegion.BACKCOURT),
            ev("bc", 20.0, kind=EventKind.TURNOVER, region=CourtRegion.BACKCOURT),
        ]
        result = ingest_events(events)
        assert ("bc", "excluded: terminal_in_backcourt") in result.exclusions

    def test_clock_increase_quarantined(self):
        events = shot_play("keep") + [
            ev("bad", 15.0),
            ev("bad", 16.0, kind=EventKind.SHOT, made=True),
        ]
        result = ingest_events(events)
        reasons = dict(result.exclusions)
        assert reasons["bad"].startswith("malformed: clock_increases")

    def test_missing_terminal_quarantined(self):
        events = shot_play("keep") + [ev("open", 20.0), ev("open", 18.0)]
        result = ingest_events(events)
        assert dict(result.exclusions)["open"] == "malformed: missing_terminal"

    def test_exclusions_csv(self):
        events = shot_play("keep") + [ev("f", 20.0), ev("f", 19.0, kind=EventKind.FOUL)]
        csv_text = ingest_events(events).exclusions_csv()
        assert csv_text.splitlines()[0] == "play_id,reason"
        assert "f,excluded: terminal_foul" in csv_text


class TestCounts:
    def test_recount_by_brute_force(self):
        """Movement cells sum to the non-terminal step total; terminals to plays."""
        rng = np.random.default_rng(5)
        events: list[BallEvent] = []
        regions = list(COORDS)
        players = [("p1", "guard"), ("p2", "guard"), ("p3", "big")]
        for k in range(60):
            t = 22.0
            n_moves = int(rng.integers(0, 6))
            ends_in_shot = bool(rng.random() < 0.7)
            pid = f"play{k}"
            for i in range(n_moves):
                player, pos = players[int(rng.integers(len(players)))]
                region = regions[int(rng.integers(0, 4))]
                events.append(ev(pid, t, player=player, pos=pos, region=region,
                                 contested=bool(rng.random() < 0.4)))
                t -= float(rng.uniform(0.4, 2.2))
            player, pos = players[int(rng.integers(len(players)))]
            if ends_in_shot:
                events.append(ev(pid, t, kind=EventKind.SHOT, player=player, pos=pos,
                                 region=regions[int(rng.integers(0, 4))],
                                 made=bool(rng.random() < 0.5)))
            else:
                if n_moves == 0:
                    events.append(ev(pid, t, player=player, pos=pos))
                    t -= 1.0
                events.append(ev(pid, t, kind=EventKind.TURNOVER, player=player, pos=pos))
        result = ingest_events(events)
        total_nonterminal = sum(e.n_nonterminal_steps for e in result.episodes)
        assert result.counts.movement_total() == total_nonterminal
        assert result.counts.terminal_total() == len(result.episodes)
        assert result.counts.shot_total() == sum(
            1 for e in result.episodes
            if e.terminal in (Terminal.MADE_SHOT, Terminal.MISSED_SHOT)
        )

    def test_determinism(self):
        events = shot_play() + shot_play("s2")
        r1 = ingest_events(events)
        r2 = ingest_events(events)
        assert [e.to_json_line() for e in r1.episodes] == [
            e.to_json_line() for e in r2.episodes
        ]


class TestRoundTrip:
    def test_ingest_serialize_ingest_fixed_point(self, tmp_path):
        events = shot_play() + [
            ev("t1", 20.0),
            ev("t1", 18.0, player="p2", kind=EventKind.PASS),
            ev("t1", 16.0, kind=EventKind.TURNOVER),
        ]
        first = ingest_events(events)
        regen = serialize_episodes(first.episodes, first.space)
        path = tmp_path / "events.jsonl"
        write_events_jsonl(regen, path)
        second = ingest_events(read_events_jsonl(path), space=first.space)
        assert [e.to_json_line() for e in first.episodes] == [
            e.to_json_line() for e in second.episodes
        ]
