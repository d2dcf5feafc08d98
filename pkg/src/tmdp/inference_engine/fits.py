"""Fit entry points: episodes in, persisted-ready posterior draw sets out."""

from __future__ import annotations

import numpy as np

from tmdp.config import McmcConfig, ModelConfig
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.hier_models.reward import RewardData, RewardModel
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.inference_engine.sampler import sample
from tmdp.state_model.states import StateSpace


def fit_policy(
    episodes,
    space: StateSpace,
    config: ModelConfig | None = None,
    mcmc: McmcConfig | None = None,
    levels: str = "player",
) -> PosteriorDrawSet:
    config = config or ModelConfig()
    mcmc = mcmc or config.mcmc_for("policy")
    model = PolicyModel(PolicyData.from_episodes(episodes, space), config, levels=levels)
    ds = sample(
        model,
        mcmc,
        model_tag="policy",
        extra_meta={"space": space.to_json(), "levels": levels},
    )
    return ds


def fit_reward(
    episodes,
    space: StateSpace,
    config: ModelConfig | None = None,
    mcmc: McmcConfig | None = None,
) -> PosteriorDrawSet:
    config = config or ModelConfig()
    mcmc = mcmc or config.mcmc_for("reward")
    model = RewardModel(RewardData.from_episodes(episodes, space), config)
    return sample(
        model,
        mcmc,
        model_tag="reward",
        extra_meta={"space": space.to_json()},
    )
