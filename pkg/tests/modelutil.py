"""Shared fixtures for hierarchical-model tests."""

from __future__ import annotations

import numpy as np

from tmdp.state_model.events import Action, EpisodeRecord, Step
from tmdp.state_model.states import (
    CourtRegion,
    Player,
    StateId,
    StateSpace,
    Terminal,
    clock_slice,
)

TEST_REGIONS = (CourtRegion.RIM, CourtRegion.MID_RANGE, CourtRegion.ARC_3)


def tiny_space(n_players: int = 2, regions=TEST_REGIONS, positions=("guard", "big")) -> StateSpace:
    players = [
        Player(f"p{i}", positions[i % len(positions)], shot_group=1 + i % 2)
        for i in range(n_players)
    ]
    return StateSpace(players, list(regions))


def random_episodes(
    space: StateSpace,
    n_plays: int,
    seed: int = 0,
    shoot_prob: float = 0.25,
    make_prob: float = 0.45,
    turnover_prob: float = 0.05,
) -> list[EpisodeRecord]:
    """Random-walk episodes for feeding model builders in tests."""
    rng = np.random.default_rng(seed)
    episodes = []
    n = space.n_states
    for k in range(n_plays):
        clock = float(rng.uniform(12.0, 24.0))
        state = space.states[int(rng.integers(n))]
        steps: list[Step] = []
        terminal = None
        while True:
            t = clock_slice(clock)
            shoot = rng.random() < shoot_prob
            lapse = float(rng.uniform(0.5, 2.5))
            if shoot:
                steps.append(Step(state, clock, t, Action.SHOOT, None))
                made = rng.random() < make_prob
                terminal = Terminal.MADE_SHOT if made else Terminal.MISSED_SHOT
                break
            steps.append(Step(state, clock, t, Action.NO_SHOOT, lapse))
            clock -= lapse
            if clock <= 0.5 or rng.random() < turnover_prob:
                terminal = Terminal.TURNOVER
                break
            state = space.states[int(rng.integers(n))]
        reward = 0.0
        if terminal is Terminal.MADE_SHOT:
            from tmdp.state_model.states import shot_value

            reward = float(shot_value(steps[-1].state.region))
        episodes.append(
            EpisodeRecord(
                play_id=f"play{k}",
                game_id="g0",
                initial_state=steps[0].state,
                initial_clock=steps[0].t_clock,
                steps=tuple(steps),
                terminal=terminal,
                reward=reward,
            )
        )
    return episodes


def interior_point(model, x: np.ndarray, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    """Jitter a parameter vector while keeping scales/correlations legal."""
    z = x + scale * rng.standard_normal(len(x))
    for name, idx in getattr(model, "_scalar_offset", {}).items():
        if name.startswith("sd_"):
            z[idx] = abs(z[idx]) + 0.2
        else:
            z[idx] = np.clip(z[idx], -0.9, 0.9)
    for name in ("_off_sd",):
        table = getattr(model, name, None)
        if table:
            for idx in table.values():
                z[idx] = abs(z[idx]) + 0.2
    return z


def fd_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def check_gradient(model, x: np.ndarray, rel: float = 1e-5, abs_tol: float = 5e-4) -> None:
    g = model.grad_logpost(x)
    fd = fd_gradient(model.logpost, x)
    err = np.abs(g - fd)
    denom = np.maximum(np.abs(fd), 1.0)
    worst = np.argmax(err / denom)
    assert np.all(err <= rel * denom + abs_tol), (
        f"gradient mismatch at {worst}: analytic {g[worst]}, fd {fd[worst]}"
    )
