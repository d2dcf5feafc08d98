"""Shot-efficiency model: anchors, contest effect, grid oracle, expected points."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import norm

from tmdp.errors import RejectedInputError
from tmdp.hier_models.reward import RewardData, RewardModel
from tmdp.state_model.states import CourtRegion, Player, StateId, StateSpace, Terminal

from modelutil import check_gradient, interior_point, random_episodes, tiny_space


def data_of(space, attempts=None, makes=None):
    shape = (len(space.players), len(space.regions), 2)
    attempts = np.zeros(shape) if attempts is None else np.asarray(attempts, float)
    makes = np.zeros(shape) if makes is None else np.asarray(makes, float)
    return RewardData(space, attempts, makes)


def zeroed_x(model):
    x = np.zeros(model.layout.dim)
    for idx in model._off_sd.values():
        x[idx] = 1.0
    return x


class TestLikelihoodAnchors:
    def test_zero_skills_give_half_probability(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        for state in space.states:
            assert model.make_probability(x, state) == pytest.approx(0.5)

    def test_contest_logit_difference_is_region_effect(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        ri = list(space.regions).index(CourtRegion.MID_RANGE)
        model._contest(x)[ri] = -0.8
        open_s = StateId("p0", CourtRegion.MID_RANGE, False)
        cont_s = StateId("p0", CourtRegion.MID_RANGE, True)
        p_open = model.make_probability(x, open_s)
        p_cont = model.make_probability(x, cont_s)
        logit = lambda p: math.log(p / (1 - p))
        assert logit(p_cont) - logit(p_open) == pytest.approx(-0.8, abs=1e-12)

    def test_minus_inf_outside_support(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        x[model._off_sd["sd_group"]] = 0.0
        assert model.logpost(x) == -math.inf


class TestGridOracle:
    def test_single_player_single_region_mode(self):
        """Joint mode over (skill, contest) matches a 2-D grid search."""
        space = StateSpace([Player("p0", "guard", shot_group=1)], [CourtRegion.MID_RANGE])
        attempts = np.zeros((1, 1, 2))
        makes = np.zeros((1, 1, 2))
        attempts[0, 0, 0], makes[0, 0, 0] = 14, 7
        attempts[0, 0, 1], makes[0, 0, 1] = 10, 3
        model = RewardModel(RewardData(space, attempts, makes))
        x = zeroed_x(model)
        mu_idx = 0
        xi_idx = model._sl_contest.start
        assert model.layout.blocks[0].name.startswith("skill[")

        def conditional(mu, xi):
            z = x.copy()
            z[mu_idx] = mu
            z[xi_idx] = xi
            return model.logpost(z)

        def oracle(mu, xi):
            ll = 7 * mu - 14 * math.log1p(math.exp(mu))
            ll += 3 * (mu + xi) - 10 * math.log1p(math.exp(mu + xi))
            ll += float(norm.logpdf(mu, 0.0, 1.0)) + float(norm.logpdf(xi, 0.0, 1.0))
            return ll

        def argmax_2d(f, mu_range, xi_range, step):
            mus = np.arange(*mu_range, step)
            xis = np.arange(*xi_range, step)
            vals = np.array([[f(m, c) for c in xis] for m in mus])
            i, j = np.unravel_index(np.argmax(vals), vals.shape)
            return mus[i], xis[j]

        def two_stage_mode(f):
            m0, c0 = argmax_2d(f, (-2.0, 2.0), (-2.0, 2.0), 0.05)
            return argmax_2d(f, (m0 - 0.08, m0 + 0.08), (c0 - 0.08, c0 + 0.08), 1e-3)

        mu_o, xi_o = two_stage_mode(oracle)
        mu_m, xi_m = two_stage_mode(conditional)
        assert mu_m == pytest.approx(mu_o, abs=2e-3)
        assert xi_m == pytest.approx(xi_o, abs=2e-3)


class TestExpectedPoints:
    def test_half_probability_at_rim_gives_one_point(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        assert model.expected_points(x, StateId("p0", CourtRegion.RIM, False)) == pytest.approx(1.0)

    def test_forty_percent_arc3_gives_1_2(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        ri = list(space.regions).index(CourtRegion.ARC_3)
        j = model.skill_regions.index(ri)
        model._skill(x)[0, j] = math.log(0.4 / 0.6)
        assert model.expected_points(x, StateId("p0", CourtRegion.ARC_3, False)) == pytest.approx(1.2)

    def test_terminal_rejected(self):
        space = tiny_space(2)
        model = RewardModel(data_of(space))
        with pytest.raises(RejectedInputError):
            model.expected_points(zeroed_x(model), Terminal.TURNOVER)

    def test_backcourt_uses_group_level(self):
        space = tiny_space(2, regions=(CourtRegion.MID_RANGE, CourtRegion.BACKCOURT))
        model = RewardModel(data_of(space))
        x = zeroed_x(model)
        gi = model._gidx[space.players[0].shot_group]
        model._group(x)[gi, model.bc_region] = 0.7
        state = StateId("p0", CourtRegion.BACKCOURT, False)
        assert model.make_probability(x, state) == pytest.approx(1 / (1 + math.exp(-0.7)))
        # Backcourt has no player-level skill blocks.
        assert all("backcourt" not in b.name for b in model.layout.blocks if b.name.startswith("skill["))


def test_gradient_matches_finite_differences():
    space = tiny_space(3)
    episodes = random_episodes(space, 150, seed=21, shoot_prob=0.5)
    model = RewardModel(RewardData.from_episodes(episodes, space))
    rng = np.random.default_rng(31)
    x0 = model.init_point()
    for _ in range(10):
        check_gradient(model, interior_point(model, x0, rng))
