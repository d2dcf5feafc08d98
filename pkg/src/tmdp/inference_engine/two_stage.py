"""Two-stage transition-tensor fit.

Stage one samples the position and region tiers on position-aggregated
counts. An interlude then simulates a fixed-size corpus of plays at the
position level from the stage-one draws, refits stage one on that corpus,
and reads off its position-tier scale: the spread a position-level estimate
shows when backed by roughly six games of plays. Stage two samples the
player-pair curves only, with prior means at the stage-one posterior means
and the interlude scale as the prior spread, shrinking thin players toward
their position without swamping heavy ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from tmdp.config import McmcConfig, ModelConfig
from tmdp.errors import RejectedInputError
from tmdp.hier_models.policy import PolicyData
from tmdp.hier_models.transition import (
    FixedPairPrior,
    TransitionData,
    TransitionModel,
    aggregate_to_positions,
    player_parent_maps,
    player_transition_data,
    position_cell_of,
    position_parent_map,
)
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.inference_engine.sampler import sample
from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.simulate import PlayStart, _FastLapses, _play_core, _replicate_rng
from tmdp.play_simulator.counts import CountTensor
from tmdp.play_simulator.tensors import (
    MdpTensors,
    TransformedTensorBundle,
    transition_dense_rows,
)
from tmdp.state_model.events import Action, EpisodeRecord
from tmdp.state_model.states import N_SLICES, Player, StateId, StateSpace

logger = logging.getLogger(__name__)


def _position_space(space: StateSpace) -> StateSpace:
    return StateSpace(
        [Player(pos, pos) for pos in space.positions], list(space.regions)
    )


def _position_policy_probs(episodes, space: StateSpace, pos_space: StateSpace) -> np.ndarray:
    data = PolicyData.from_episodes(episodes, space)
    shots = np.zeros((pos_space.n_states, N_SLICES))
    events = np.zeros((pos_space.n_states, N_SLICES))
    for i, s in enumerate(space.states):
        j = pos_space.index(StateId(space.position_of(s.player_id), s.region, s.contested))
        shots[j] += data.shots[i]
        events[j] += data.events[i]
    pooled = shots.sum() / max(events.sum(), 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(events > 0, shots / np.maximum(events, 1.0), pooled)
    return np.clip(p, 0.01, 0.95)


@dataclass
class TwoStageResult:
    draws: PosteriorDrawSet
    stage1: PosteriorDrawSet
    interlude_scale: float
    interlude_fallback: bool
    prior_means: np.ndarray  # stage-two prior mean per pair curve


def fit_tpt_two_stage(
    episodes,
    space: StateSpace,
    config: ModelConfig | None = None,
    mcmc_stage1: McmcConfig | None = None,
    mcmc_stage2: McmcConfig | None = None,
    lapses: LapseDistribution | None = None,
) -> TwoStageResult:
    """Fit the transition tensor in two stages with a simulated interlude."""
    config = config or ModelConfig()
    mcmc_stage1 = mcmc_stage1 or config.mcmc_for("transition_stage1")
    mcmc_stage2 = mcmc_stage2 or config.mcmc_for("transition_stage2")
    if not episodes:
        raise RejectedInputError("no episodes to fit")
    if lapses is None:
        pairs = [
            (st.slice_index, st.lapse)
            for ep in episodes
            for st in ep.steps
            if st.lapse is not None and st.lapse > 0
        ]
        lapses = LapseDistribution.from_pairs(pairs or [(8, 1.0)])

    player_data = player_transition_data(episodes, space)
    pos_data = aggregate_to_positions(player_data, space)
    stage1_model = TransitionModel(pos_data, position_parent_map(), config=config)
    stage1 = sample(stage1_model, mcmc_stage1, model_tag="transition_stage1")
    stage1_mean = stage1.posterior_mean()
    sd_pair_mean = float(stage1_mean[stage1.block_slice("sd_pair")][0])
    rho_pair_mean = float(stage1_mean[stage1.block_slice("rho_pair")][0])

    # Posterior-mean curve per position pair key.
    pair_means = stage1_model._pair_mat(stage1_mean)
    mean_of_pair: dict = {}
    for p, (i, s) in enumerate(stage1_model.pairs):
        key = (pos_data.origin_keys[i], pos_data.dest_key(i, s))
        mean_of_pair[key] = pair_means[p]

    interlude_scale, fallback = _interlude_scale(
        episodes, space, pos_data, stage1, config, mcmc_stage1, lapses
    )
    if fallback:
        interlude_scale = sd_pair_mean

    # Stage 2: player-pair curves under the fixed interlude prior.
    parent_fn, grandparent_fn = player_parent_maps(space)
    means = np.zeros((len(player_data.pair_list()), N_SLICES))
    for p, (i, s) in enumerate(player_data.pair_list()):
        o_cell = position_cell_of(space, i)
        d_idx = player_data.dest_slots[i][s - 1]
        d_cell = position_cell_of(space, d_idx)
        means[p] = mean_of_pair.get((o_cell, d_cell), 0.0)
    stage2_model = TransitionModel(
        player_data,
        parent_fn,
        grandparent_fn,
        config=config,
        fixed_prior=FixedPairPrior(means=means, sd=interlude_scale, rho=rho_pair_mean),
    )
    draws = sample(
        stage2_model,
        mcmc_stage2,
        model_tag="transition",
        extra_meta={
            "space": space.to_json(),
            "dest_slots": [list(map(int, d)) for d in player_data.dest_slots],
            "prior_scale": interlude_scale,
            "prior_rho": rho_pair_mean,
            "stage1_sd_pair": sd_pair_mean,
            "interlude_fallback": fallback,
        },
    )
    return TwoStageResult(
        draws=draws,
        stage1=stage1,
        interlude_scale=interlude_scale,
        interlude_fallback=fallback,
        prior_means=means,
    )


def _interlude_scale(
    episodes,
    space: StateSpace,
    pos_data: TransitionData,
    stage1: PosteriorDrawSet,
    config: ModelConfig,
    mcmc: McmcConfig,
    lapses: LapseDistribution,
) -> tuple[float, bool]:
    """Simulate the interlude corpus and refit stage one on it."""
    pos_space = _position_space(space)
    n_pos = pos_space.n_states

    # Remap the stage-one destination structure into the dense pseudo-space.
    cell_to_idx = {}
    for i, cell in enumerate(pos_data.origin_keys):
        g, r, z = cell
        cell_to_idx[i] = pos_space.index(StateId(g, r, z))
    dest_slots_pseudo: list[list[int]] = [[] for _ in range(n_pos)]
    pair_rows_pseudo: list[list[int]] = [[] for _ in range(n_pos)]
    for p, (i, s) in enumerate(pos_data.pair_list()):
        oi = cell_to_idx[i]
        dest_slots_pseudo[oi].append(cell_to_idx[pos_data.dest_slots[i][s - 1]])
        pair_rows_pseudo[oi].append(p)
    order = [np.argsort(d) for d in dest_slots_pseudo]
    dest_slots_sorted = [
        [dest_slots_pseudo[i][k] for k in order[i]] for i in range(n_pos)
    ]
    row_map = [
        [pair_rows_pseudo[i][k] for k in order[i]] for i in range(n_pos)
    ]

    policy_p = _position_policy_probs(episodes, space, pos_space)
    stacked = stage1.stacked()
    n_pair_rows = sum(len(d) for d in dest_slots_sorted)

    draw_count = min(len(stacked), 32)
    triples = []
    for d in range(draw_count):
        vec = stacked[(d * max(len(stacked) // draw_count, 1)) % len(stacked)]
        pair_vals_raw = vec[: n_pair_rows * N_SLICES].reshape(-1, N_SLICES)
        pair_vals = np.empty_like(pair_vals_raw)
        pos = 0
        for i in range(n_pos):
            for r in row_map[i]:
                pair_vals[pos] = pair_vals_raw[r]
                pos += 1
        trans_p = transition_dense_rows(dest_slots_sorted, pair_vals, n_pos)
        make_p = np.full(n_pos, 0.5)
        reward_ep = np.full(n_pos, 1.0)
        triples.append(MdpTensors(policy_p, trans_p, reward_ep, make_p))
    bundle = TransformedTensorBundle(pos_space, triples)

    starts = []
    for ep in episodes:
        s = ep.initial_state
        starts.append(
            PlayStart(
                StateId(space.position_of(s.player_id), s.region, s.contested),
                ep.initial_clock,
            )
        )
    n_plays = config.interlude_plays
    rng = _replicate_rng(stage1.seed, 104729)
    fl = _FastLapses(lapses)
    proto = CountTensor(pos_space)
    terminal_col = {
        0: proto.col_turnover, 1: proto.col_violation, 2: proto.col_made, 3: proto.col_missed
    }
    interlude_eps: list[EpisodeRecord] = []
    from tmdp.play_simulator.simulate import _episode_from_trail

    for j in range(n_plays):
        start = starts[j % len(starts)]
        ft = bundle.fast(j % bundle.n_draws)
        trail: list = []
        code, reward = _play_core(
            pos_space.index(start.state), start.clock, ft, fl, rng,
            hits=[], n_dest=proto.n_dest, terminal_col=terminal_col, trail=trail,
        )
        interlude_eps.append(
            _episode_from_trail(trail, code, reward, pos_space, f"interlude{j}", "interlude")
        )

    interlude_data = aggregate_to_positions(
        player_transition_data(interlude_eps, pos_space), pos_space
    )
    # Required origins: position cells that carry data in the real corpus.
    required = {
        pos_data.origin_keys[i]
        for i in range(pos_data.n_origins)
        if pos_data.totals[i].sum() > 0
    }
    covered = {
        interlude_data.origin_keys[i]
        for i in range(interlude_data.n_origins)
        if interlude_data.totals[i].sum() > 0
    }
    missing = {k for k in required if k not in covered}
    if missing:
        logger.warning(
            "interlude produced no transitions for %d required origins; "
            "falling back to the stage-one scale", len(missing),
        )
        return float("nan"), True

    refit_model = TransitionModel(interlude_data, position_parent_map(), config=config)
    refit = sample(refit_model, mcmc, model_tag="transition_interlude")
    scale = float(refit.posterior_mean()[refit.block_slice("sd_pair")][0])
    return scale, False
