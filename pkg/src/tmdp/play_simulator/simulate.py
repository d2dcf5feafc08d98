"""Play and season simulation.

Each play follows the countdown loop: draw the shoot/no-shoot action from
the policy slice, draw a lapse from the empirical distribution stratified by
the current slice, decrement the clock, and resolve a shot-clock-violation
turnover, a shot, or a state transition (which may itself be a turnover).
Rewards carry expected points; the realized make/miss is drawn only for the
count ledger. Replicates own counter-seeded random streams.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from tmdp.errors import RejectedInputError
from tmdp.play_simulator.counts import CountTensor
from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.tensors import DrawTensorBundle, FastTensors, MdpTensors
from tmdp.state_model.events import Action, EpisodeRecord, Step
from tmdp.state_model.states import StateId, StateSpace, Terminal

_TERMINAL_OF_CODE = {
    0: Terminal.TURNOVER,
    1: Terminal.TURNOVER,
    2: Terminal.MADE_SHOT,
    3: Terminal.MISSED_SHOT,
}


@dataclass(frozen=True)
class PlayStart:
    state: StateId
    clock: float

    def __post_init__(self) -> None:
        if not 0.0 < self.clock <= 24.0:
            raise RejectedInputError(f"play-start clock outside (0, 24]: {self.clock}")


class _FastLapses:
    def __init__(self, lapses: LapseDistribution):
        self.strata = [
            (arr.tolist() if arr.size else lapses.pooled.tolist()) for arr in lapses.by_slice
        ]
        self.sizes = [len(s) for s in self.strata]


def _play_core(
    s: int,
    clock: float,
    ft: FastTensors,
    fl: _FastLapses,
    rng,
    hits: list,
    n_dest: int,
    terminal_col: dict,
    trail: list | None = None,
) -> tuple[int, float]:
    """Run one play, appending flat (slice, origin, dest) cell indices to hits.

    Terminal codes: 0 turnover via transition, 1 shot-clock violation,
    2 made shot, 3 missed shot.
    """
    policy = ft.policy
    make = ft.make
    ep = ft.ep
    trans_cum = ft.trans_cum
    n = ft.n_states
    random = rng.random
    row_stride = n_dest
    while True:
        t = 9 - math.ceil(clock / 3.0)
        base = ((t - 1) * n + s) * row_stride
        shoot = random() < policy[s][t - 1]
        lapse = fl.strata[t - 1][int(random() * fl.sizes[t - 1])]
        next_clock = clock - lapse
        if next_clock <= 0.0:
            if trail is not None:
                trail.append((s, clock, t, shoot, lapse))
            hits.append(base + terminal_col[1])
            return 1, 0.0
        if shoot:
            made = random() < make[s]
            code = 2 if made else 3
            if trail is not None:
                trail.append((s, clock, t, True, None))
            hits.append(base + terminal_col[code])
            return code, ep[s]
        d = bisect_right(trans_cum[t - 1][s], random())
        if trail is not None:
            trail.append((s, clock, t, False, lapse))
        if d >= n:
            hits.append(base + terminal_col[0])
            return 0, 0.0
        hits.append(base + d)
        s = d
        clock = next_clock


def _episode_from_trail(
    trail: list, code: int, reward: float, space: StateSpace, play_id: str, game_id: str
) -> EpisodeRecord:
    steps = [
        Step(
            state=space.states[s_idx],
            t_clock=clock,
            slice_index=t,
            action=Action.SHOOT if shoot else Action.NO_SHOOT,
            lapse=lapse,
        )
        for s_idx, clock, t, shoot, lapse in trail
    ]
    return EpisodeRecord(
        play_id=play_id,
        game_id=game_id,
        initial_state=steps[0].state,
        initial_clock=steps[0].t_clock,
        steps=tuple(steps),
        terminal=_TERMINAL_OF_CODE[code],
        reward=reward,
        clock_violation=(code == 1),
    )


def _terminal_cols(counts: CountTensor) -> dict:
    return {
        0: counts.col_turnover,
        1: counts.col_violation,
        2: counts.col_made,
        3: counts.col_missed,
    }


def simulate_play(
    start: PlayStart,
    tensors: MdpTensors | FastTensors,
    lapses: LapseDistribution,
    rng: np.random.Generator,
    space: StateSpace,
    play_id: str = "sim",
    game_id: str = "sim",
) -> EpisodeRecord:
    """Simulate one play and return its full episode record."""
    ft = tensors if isinstance(tensors, FastTensors) else FastTensors(tensors)
    fl = _FastLapses(lapses)
    scratch = CountTensor(space)
    trail: list = []
    code, reward = _play_core(
        space.index(start.state), start.clock, ft, fl, rng,
        hits=[], n_dest=scratch.n_dest, terminal_col=_terminal_cols(scratch), trail=trail,
    )
    return _episode_from_trail(trail, code, reward, space, play_id, game_id)


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, replicate])))


def iter_seasons(
    starts: Sequence[PlayStart],
    bundle: DrawTensorBundle,
    lapses: LapseDistribution,
    n_replicates: int,
    seed: int,
    freeze_draw: int | None = None,
    collect_episodes: bool = False,
    play_ids: Sequence[str] | None = None,
) -> Iterator[tuple[int, CountTensor, list[EpisodeRecord]]]:
    """Simulate the start list once per replicate, yielding as results finish.

    Replicate r uses posterior draw r mod n_draws (or a frozen draw) and its
    own counter-seeded stream, so any replicate is reproducible in isolation.
    """
    starts = list(starts)
    if not starts:
        raise RejectedInputError("empty play-start list")
    if n_replicates < 1:
        raise RejectedInputError("need at least one replicate")
    space = bundle.space
    starts_idx = [space.index(p.state) for p in starts]
    start_clocks = [p.clock for p in starts]
    fl = _FastLapses(lapses)
    proto = CountTensor(space)
    n_dest = proto.n_dest
    terminal_col = _terminal_cols(proto)
    shape = proto.counts.shape
    size = proto.counts.size

    for r in range(n_replicates):
        rng = _replicate_rng(seed, r)
        draw = freeze_draw if freeze_draw is not None else r % bundle.n_draws
        ft = bundle.fast(draw)
        hits: list[int] = []
        rewards = np.empty(len(starts))
        episodes: list[EpisodeRecord] = []
        for k in range(len(starts)):
            trail = [] if collect_episodes else None
            code, reward = _play_core(
                starts_idx[k], start_clocks[k], ft, fl, rng,
                hits, n_dest, terminal_col, trail,
            )
            rewards[k] = reward
            if trail is not None:
                pid = play_ids[k] if play_ids else f"sim_{r}_{k}"
                episodes.append(
                    _episode_from_trail(trail, code, reward, space, pid, f"rep{r}")
                )
        counts = CountTensor(space)
        counts.counts = np.bincount(
            np.asarray(hits, dtype=np.int64), minlength=size
        ).reshape(shape)
        counts.rewards = rewards
        yield r, counts, episodes


def simulate_season(
    starts: Sequence[PlayStart],
    bundle: DrawTensorBundle,
    lapses: LapseDistribution,
    n_replicates: int,
    seed: int,
    freeze_draw: int | None = None,
) -> list[CountTensor]:
    """One CountTensor per replicate; deterministic given the seed."""
    return [
        counts
        for _, counts, _ in iter_seasons(
            starts, bundle, lapses, n_replicates, seed, freeze_draw
        )
    ]
