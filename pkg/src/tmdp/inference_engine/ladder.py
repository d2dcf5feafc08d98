"""Held-out log-likelihood ladder over models of increasing complexity.

Rungs for the shot policy: A empirical rates, B region shrinkage only,
C adds position shrinkage, D adds player shrinkage. The fitted rungs use
posterior-mean predictive probabilities; the empirical rung stabilizes
rates so held-out evaluation stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tmdp.config import McmcConfig, ModelConfig
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.hier_models.transition import (
    TransitionData,
    player_transition_data,
)
from tmdp.inference_engine.fits import fit_policy
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.play_simulator.tensors import transition_dense_rows
from tmdp.state_model.states import N_SLICES, StateSpace


def _binom_loglik(p: np.ndarray, shots: np.ndarray, events: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float((shots * np.log(p) + (events - shots) * np.log1p(-p)).sum())


def empirical_policy_probs(train: PolicyData) -> np.ndarray:
    """Stabilized per-(state, slice) empirical shot rates."""
    pooled = (train.shots.sum() + 0.5) / (train.events.sum() + 1.0)
    p = (train.shots + 0.5) / (train.events + 1.0)
    return np.where(train.events > 0, p, pooled)


def heldout_policy_loglik(probs: np.ndarray, heldout: PolicyData) -> float:
    return _binom_loglik(probs, heldout.shots, heldout.events)


@dataclass
class PolicyLadder:
    logliks: dict[str, float]
    draws: dict[str, PosteriorDrawSet]


def policy_ladder(
    train_episodes,
    heldout_episodes,
    space: StateSpace,
    config: ModelConfig | None = None,
    mcmc: McmcConfig | None = None,
) -> PolicyLadder:
    """Held-out log-likelihood for rungs A (empirical), B, C, D."""
    config = config or ModelConfig()
    train = PolicyData.from_episodes(train_episodes, space)
    heldout = PolicyData.from_episodes(heldout_episodes, space)
    logliks = {"A": heldout_policy_loglik(empirical_policy_probs(train), heldout)}
    draws: dict[str, PosteriorDrawSet] = {}
    for rung, levels in (("B", "region"), ("C", "position"), ("D", "player")):
        ds = fit_policy(train_episodes, space, config, mcmc, levels=levels)
        model = PolicyModel(train, config, levels=levels)
        probs = model.predictive_probs(ds.stacked()[:: max(len(ds.stacked()) // 200, 1)])
        logliks[rung] = heldout_policy_loglik(probs, heldout)
        draws[rung] = ds
    return PolicyLadder(logliks=logliks, draws=draws)


def empirical_transition_probs(train: TransitionData) -> np.ndarray:
    """Stabilized count-ratio destination probabilities, (origins, slots, 8)."""
    n, m, _ = train.counts.shape
    alpha = 0.5
    smoothed = train.counts + alpha * train.mask[:, :, None]
    return smoothed / smoothed.sum(axis=1, keepdims=True)


def heldout_transition_loglik(probs: np.ndarray, heldout: TransitionData) -> float:
    p = np.clip(probs, 1e-12, 1.0)
    return float((heldout.counts * np.log(p) * heldout.mask[:, :, None]).sum())


def transition_data_on_structure(episodes, space: StateSpace, structure: TransitionData) -> TransitionData:
    """Count held-out transitions over the training support structure."""
    from tmdp.state_model.events import Action

    counts = np.zeros_like(structure.counts)
    slot_of = [
        {j: s + 1 for s, j in enumerate(dests)} for dests in structure.dest_slots
    ]
    for ep in episodes:
        for k, step in enumerate(ep.steps):
            if step.action is not Action.NO_SHOOT:
                continue
            i = space.index(step.state)
            t = step.slice_index - 1
            if k + 1 < len(ep.steps):
                j = space.index(ep.steps[k + 1].state)
                slot = slot_of[i].get(j)
                if slot is None:
                    continue  # outside training support: not scoreable by either model
            else:
                slot = 0
            counts[i, slot, t] += 1
    return TransitionData(
        origin_keys=structure.origin_keys,
        dest_slots=structure.dest_slots,
        counts=counts,
        mask=structure.mask,
        totals=counts.sum(axis=1),
    )


def two_stage_predictive_probs(
    draws: PosteriorDrawSet, structure: TransitionData, thin: int = 10
) -> np.ndarray:
    """Posterior-mean destination probabilities of a player-level draw set."""
    stacked = draws.stacked()[::thin]
    n_pair_rows = sum(len(d) for d in structure.dest_slots)
    n = structure.n_origins
    total = np.zeros((n, structure.max_slots, N_SLICES))
    for vec in stacked:
        pair_values = vec[: n_pair_rows * N_SLICES].reshape(-1, N_SLICES)
        dense = transition_dense_rows(structure.dest_slots, pair_values, n)
        for i in range(n):
            total[i, 0] += dense[:, i, n]
            for s, j in enumerate(structure.dest_slots[i]):
                total[i, s + 1] += dense[:, i, j]
    return total / len(stacked)
