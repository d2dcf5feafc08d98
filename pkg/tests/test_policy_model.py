"""Shot-policy model: likelihood anchors, grid-search oracle, symmetry, gradients."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import norm

from tmdp.config import ModelConfig
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.state_model.states import CourtRegion, N_SLICES, Player, StateSpace

from modelutil import check_gradient, interior_point, random_episodes, tiny_space


def data_of(space, shots, events):
    return PolicyData(space, np.asarray(shots, float), np.asarray(events, float))


def test_zero_logits_give_log_half_per_event():
    space = tiny_space(2)
    rng = np.random.default_rng(0)
    events = rng.integers(0, 20, size=(space.n_states, N_SLICES)).astype(float)
    shots = np.floor(events * rng.random(events.shape))
    model = PolicyModel(data_of(space, shots, events))
    x = np.zeros(model.layout.dim)
    x[model._scalar_offset["sd_player"]] = 1.0
    x[model._scalar_offset["sd_position"]] = 1.0
    x[model._scalar_offset["sd_league"]] = 1.0
    assert model.loglik(x) == pytest.approx(-math.log(2.0) * events.sum(), abs=1e-9)


def test_probabilities_at_zero_are_half():
    space = tiny_space(2)
    model = PolicyModel(data_of(space, np.zeros((space.n_states, 8)), np.ones((space.n_states, 8))))
    x = model.init_point() * 0
    assert np.allclose(model.probabilities(x), 0.5)


def test_rejected_region_is_minus_inf():
    space = tiny_space(2)
    model = PolicyModel(data_of(space, np.zeros((space.n_states, 8)), np.ones((space.n_states, 8))))
    x = model.init_point()
    x[model._scalar_offset["sd_player"]] = -0.5
    assert model.logpost(x) == -math.inf
    x = model.init_point()
    x[model._scalar_offset["rho_league"]] = 1.0
    assert model.logpost(x) == -math.inf


def test_single_state_mode_matches_grid_oracle():
    """Conditional mode of one slice equals the 1-D logistic-normal grid mode."""
    space = StateSpace([Player("p0", "guard")], [CourtRegion.MID_RANGE])
    shots = np.zeros((2, N_SLICES))
    events = np.zeros((2, N_SLICES))
    shots[0, 0] = 3
    events[0, 0] = 10
    model = PolicyModel(data_of(space, shots, events))
    x = np.zeros(model.layout.dim)
    for name in model._scalar_offset:
        x[model._scalar_offset[name]] = 1.0 if name.startswith("sd_") else 0.0

    theta_idx = 0  # first player block, slice 1
    assert model.layout.blocks[0].name.startswith("player[")

    def conditional(v: float) -> float:
        z = x.copy()
        z[theta_idx] = v
        return model.logpost(z)

    def oracle(v: float) -> float:
        return 3 * v - 10 * math.log1p(math.exp(v)) + float(norm.logpdf(v, 0.0, 1.0))

    grid = np.arange(-3.0, 3.0, 1e-4)
    oracle_mode = grid[np.argmax([oracle(v) for v in grid])]
    coarse = np.arange(-3.0, 3.0, 0.01)
    v0 = coarse[np.argmax([conditional(v) for v in coarse])]
    fine = np.arange(v0 - 0.02, v0 + 0.02, 1e-4)
    model_mode = fine[np.argmax([conditional(v) for v in fine])]
    assert model_mode == pytest.approx(oracle_mode, abs=1e-4)


def test_label_symmetry():
    """Swapping two same-position players' data and blocks leaves logpost unchanged."""
    space = tiny_space(4, positions=("guard", "guard"))
    episodes = random_episodes(space, 120, seed=3)
    data = PolicyData.from_episodes(episodes, space)
    model = PolicyModel(data)
    rng = np.random.default_rng(8)
    x = interior_point(model, model.init_point(), rng)
    lp = model.logpost(x)

    # Swap players p0 and p1: both data rows and parameter blocks.
    idx0 = [i for i, s in enumerate(space.states) if s.player_id == "p0"]
    idx1 = [i for i, s in enumerate(space.states) if s.player_id == "p1"]
    data2 = PolicyData(space, data.shots.copy(), data.events.copy())
    data2.shots[idx0 + idx1] = data.shots[idx1 + idx0]
    data2.events[idx0 + idx1] = data.events[idx1 + idx0]
    model2 = PolicyModel(data2)
    x2 = x.copy()
    pm = model._player_mat(x)
    pm2 = model2._player_mat(x2)
    # player blocks are laid out state-major in the same order as states
    player_rows = {i: r for r, i in enumerate(model.player_states)}
    for a, b in zip(idx0, idx1):
        pm2[player_rows[a]] = pm[player_rows[b]]
        pm2[player_rows[b]] = pm[player_rows[a]]
    assert model2.logpost(x2) == pytest.approx(lp, rel=1e-12)


def test_gradient_matches_finite_differences():
    space = tiny_space(3)
    episodes = random_episodes(space, 80, seed=5)
    model = PolicyModel(PolicyData.from_episodes(episodes, space))
    rng = np.random.default_rng(11)
    x0 = model.init_point()
    for _ in range(10):
        x = interior_point(model, x0, rng)
        check_gradient(model, x)


def test_backcourt_states_use_position_level():
    space = tiny_space(2, regions=(CourtRegion.MID_RANGE, CourtRegion.BACKCOURT))
    shots = np.zeros((space.n_states, N_SLICES))
    events = np.ones((space.n_states, N_SLICES))
    model = PolicyModel(data_of(space, shots, events))
    x = np.zeros(model.layout.dim)
    # Set the position curve for (guard, backcourt, open) and check it drives
    # the backcourt state's probability.
    bc_state = next(
        i for i, s in enumerate(space.states)
        if s.region is CourtRegion.BACKCOURT and not s.contested and s.player_id == "p0"
    )
    cell = model._position_index[("guard", CourtRegion.BACKCOURT, False)]
    model._position_mat(x)[cell, :] = 1.5
    eta = model.eta(x)
    assert np.allclose(eta[bc_state], 1.5)
    # No player block exists for backcourt states.
    assert all("backcourt" not in b.name for b in model.layout.blocks if b.name.startswith("player["))


def test_level_variants_shrink_layout():
    space = tiny_space(2)
    episodes = random_episodes(space, 40, seed=9)
    data = PolicyData.from_episodes(episodes, space)
    full = PolicyModel(data, levels="player")
    pos = PolicyModel(data, levels="position")
    reg = PolicyModel(data, levels="region")
    assert full.layout.dim > pos.layout.dim > reg.layout.dim
    for model in (pos, reg):
        x = model.init_point()
        assert np.isfinite(model.logpost(x))
        check_gradient(model, interior_point(model, x, np.random.default_rng(2)))
