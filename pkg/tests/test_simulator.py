"""Simulator: degenerate policies, conservation, determinism, uncertainty."""

from __future__ import annotations

import numpy as np
import pytest

from tmdp.errors import RejectedInputError
from tmdp.play_simulator.simulate import PlayStart, iter_seasons, simulate_play, simulate_season
from tmdp.play_simulator.tensors import MdpTensors, TransformedTensorBundle, TruthTensorBundle
from tmdp.state_model.events import Action
from tmdp.state_model.states import Terminal

from modelutil import tiny_space
from simutil import const_lapses, some_starts, spread_lapses, truth_bundle, uniform_tensors


class TestDegenerateCases:
    def test_always_shoot_every_play_is_one_shot(self):
        space = tiny_space(2)
        bundle = truth_bundle(space, shoot_prob=1.0)
        starts = some_starts(space, 50)
        tensors = simulate_season(starts, bundle, const_lapses(1.0), 1, seed=1)
        counts = tensors[0]
        assert counts.shot_total() == 50
        assert counts.turnover_total() == 0
        assert counts.terminal_total() == 50
        assert counts.movement_total() == 0
        ep = simulate_play(
            PlayStart(space.states[0], 20.0), bundle.get(0), const_lapses(1.0),
            np.random.default_rng(0), space,
        )
        assert len(ep.steps) == 1
        assert ep.steps[0].action is Action.SHOOT
        assert ep.terminal in (Terminal.MADE_SHOT, Terminal.MISSED_SHOT)

    def test_never_shoot_25s_lapse_is_clock_violation(self):
        space = tiny_space(2)
        bundle = truth_bundle(space, shoot_prob=0.0)
        starts = some_starts(space, 40)
        counts = simulate_season(starts, bundle, const_lapses(25.0), 1, seed=2)[0]
        assert counts.turnover_total() == 40
        assert int(counts.counts[:, :, counts.col_violation].sum()) == 40
        assert counts.expected_points_total() == 0.0
        ep = simulate_play(
            PlayStart(space.states[0], 24.0), bundle.get(0), const_lapses(25.0),
            np.random.default_rng(1), space,
        )
        assert ep.terminal is Terminal.TURNOVER
        assert ep.clock_violation
        assert ep.reward == 0.0


class TestInvariants:
    def test_terminal_count_conservation(self):
        space = tiny_space(3)
        bundle = truth_bundle(space, shoot_prob=0.25, turnover_prob=0.08)
        starts = some_starts(space, 200)
        for _, counts, _ in iter_seasons(starts, bundle, spread_lapses(), 5, seed=3):
            assert counts.shot_total() + counts.turnover_total() == 200
            assert counts.terminal_total() == 200
            assert counts.n_plays == 200

    def test_no_event_at_nonpositive_clock(self):
        space = tiny_space(2)
        bundle = truth_bundle(space, shoot_prob=0.1)
        rng = np.random.default_rng(5)
        for k in range(200):
            ep = simulate_play(
                PlayStart(space.states[k % space.n_states], 24.0),
                bundle.get(0), spread_lapses(k), rng, space,
            )
            assert all(s.t_clock > 0 for s in ep.steps)

    def test_every_play_terminates_and_rewards_on_shots_only(self):
        space = tiny_space(2)
        bundle = truth_bundle(space, shoot_prob=0.2, make_prob=0.5)
        rng = np.random.default_rng(6)
        for k in range(300):
            ep = simulate_play(
                PlayStart(space.states[0], 24.0), bundle.get(0), spread_lapses(1), rng, space
            )
            if ep.terminal is Terminal.TURNOVER:
                assert ep.reward == 0.0
            else:
                assert ep.reward == pytest.approx(
                    bundle.get(0).reward_ep[space.index(ep.steps[-1].state)]
                )

    def test_determinism_same_seed(self):
        space = tiny_space(3)
        bundle = truth_bundle(space)
        starts = some_starts(space, 100)
        a = simulate_season(starts, bundle, spread_lapses(), 4, seed=9)
        b = simulate_season(starts, bundle, spread_lapses(), 4, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.counts, y.counts)
            assert np.array_equal(x.rewards, y.rewards)

    def test_empty_starts_rejected(self):
        space = tiny_space(2)
        with pytest.raises(RejectedInputError):
            simulate_season([], truth_bundle(space), const_lapses(), 1, seed=0)

    def test_replicates_are_prefix_stable(self):
        """Replicate r is identical whether 3 or 5 replicates are requested."""
        space = tiny_space(2)
        bundle = truth_bundle(space)
        starts = some_starts(space, 50)
        three = simulate_season(starts, bundle, spread_lapses(), 3, seed=11)
        five = simulate_season(starts, bundle, spread_lapses(), 5, seed=11)
        for x, y in zip(three, five):
            assert np.array_equal(x.counts, y.counts)


class TestUncertaintyPropagation:
    def test_cycled_draws_spread_exceeds_frozen_draw(self):
        space = tiny_space(2)
        rng = np.random.default_rng(13)
        triples = []
        for _ in range(12):
            t = uniform_tensors(space, shoot_prob=float(rng.uniform(0.1, 0.6)),
                                make_prob=float(rng.uniform(0.3, 0.6)))
            triples.append(t)
        bundle = TransformedTensorBundle(space, triples)
        starts = some_starts(space, 150)

        def epps_list(freeze):
            out = []
            for _, counts, _ in iter_seasons(
                starts, bundle, spread_lapses(), 60, seed=17, freeze_draw=freeze
            ):
                shots = counts.shot_total()
                out.append(counts.expected_points_total() / shots if shots else np.nan)
            return np.array(out)

        var_cycled = np.nanvar(epps_list(None))
        var_frozen = np.nanvar(epps_list(0))
        assert var_cycled > var_frozen
