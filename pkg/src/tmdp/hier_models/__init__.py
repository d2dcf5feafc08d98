"""Hierarchical Bayesian models: shot policy, transitions, rewards, clustering."""

from tmdp.hier_models.clustering import (
    PlayerShotSummary,
    ShotGroupAssignment,
    cluster_shot_groups,
)
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.hier_models.reward import RewardData, RewardModel
from tmdp.hier_models.transition import (
    TransitionData,
    TransitionModel,
    aggregate_to_positions,
    player_parent_maps,
    player_transition_data,
    position_parent_map,
)

__all__ = [
    "PlayerShotSummary",
    "PolicyData",
    "PolicyModel",
    "RewardData",
    "RewardModel",
    "ShotGroupAssignment",
    "TransitionData",
    "TransitionModel",
    "aggregate_to_positions",
    "cluster_shot_groups",
    "player_parent_maps",
    "player_transition_data",
    "position_parent_map",
]
