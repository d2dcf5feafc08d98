"""Materialize per-draw MDP tensors (policy, transition, reward) for simulation.

A draw set persists enough structure in its manifest extras to rebuild the
mapping from parameter vectors to probability tensors without the training
data. A bundle serves one coherent tensor triple per draw index, cached.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tmdp.errors import RejectedInputError
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.hier_models.reward import RewardData, RewardModel
from tmdp.hier_models.transition import TransitionData
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.state_model.states import N_SLICES, StateSpace


@dataclass
class MdpTensors:
    """One coherent draw of the three MDP components, in dense state indexing.

    trans_p rows span the dense states plus a trailing turnover column.
    """

    policy_p: np.ndarray   # (n_states, 8)
    trans_p: np.ndarray    # (8, n_states, n_states + 1)
    reward_ep: np.ndarray  # (n_states,) expected points per shot
    make_p: np.ndarray     # (n_states,)

    def validate(self) -> None:
        n = self.policy_p.shape[0]
        if self.trans_p.shape != (N_SLICES, n, n + 1):
            raise RejectedInputError("transition tensor shape mismatch")
        if self.reward_ep.shape != (n,) or self.make_p.shape != (n,):
            raise RejectedInputError("reward table shape mismatch")
        if np.any(self.policy_p < 0) or np.any(self.policy_p > 1):
            raise RejectedInputError("policy probabilities outside [0, 1]")
        rows = self.trans_p.sum(axis=2)
        if np.max(np.abs(rows - 1.0)) > 1e-9:
            raise RejectedInputError("transition rows must sum to 1")

    def copy(self) -> "MdpTensors":
        return MdpTensors(
            self.policy_p.copy(), self.trans_p.copy(),
            self.reward_ep.copy(), self.make_p.copy(),
        )


class FastTensors:
    """Python-native views of one draw for the per-event hot loop."""

    def __init__(self, tensors: MdpTensors):
        self.policy = tensors.policy_p.tolist()
        self.make = tensors.make_p.tolist()
        self.ep = tensors.reward_ep.tolist()
        cum = np.cumsum(tensors.trans_p, axis=2)
        cum[:, :, -1] = 1.0 + 1e-12  # guard the top edge against rounding
        self.trans_cum = [ [row.tolist() for row in cum[t]] for t in range(N_SLICES) ]
        self.n_states = tensors.policy_p.shape[0]


def transition_dense_rows(
    dest_slots: Sequence[Sequence[int]], pair_values: np.ndarray, n_states: int
) -> np.ndarray:
    """Softmax slot logits into a dense (8, n_states, n_states+1) tensor."""
    out = np.zeros((N_SLICES, n_states, n_states + 1))
    p = 0
    for i, dests in enumerate(dest_slots):
        k = len(dests)
        logits = np.zeros((k + 1, N_SLICES))
        logits[1:] = pair_values[p : p + k]
        p += k
        m = logits.max(axis=0)
        e = np.exp(logits - m)
        probs = e / e.sum(axis=0)
        out[:, i, n_states] = probs[0]
        for s, j in enumerate(dests):
            out[:, i, j] = probs[s + 1]
    return out


class DrawTensorBundle:
    """Serves MdpTensors per draw index from persisted posterior draw sets."""

    def __init__(self, space: StateSpace, n_draws: int):
        self.space = space
        self.n_draws = n_draws
        self._cache: dict[int, MdpTensors] = {}
        self._fast_cache: dict[int, FastTensors] = {}

    def _materialize(self, idx: int) -> MdpTensors:
        raise NotImplementedError

    def get(self, idx: int) -> MdpTensors:
        if idx not in self._cache:
            t = self._materialize(idx)
            t.validate()
            self._cache[idx] = t
        return self._cache[idx]

    def fast(self, idx: int) -> FastTensors:
        if idx not in self._fast_cache:
            self._fast_cache[idx] = FastTensors(self.get(idx))
        return self._fast_cache[idx]


class TruthTensorBundle(DrawTensorBundle):
    """A single known tensor triple, served for every draw index."""

    def __init__(self, space: StateSpace, tensors: MdpTensors):
        super().__init__(space, 1)
        tensors.validate()
        self._tensors = tensors

    def _materialize(self, idx: int) -> MdpTensors:
        return self._tensors


class TransformedTensorBundle(DrawTensorBundle):
    """Materialized tensors, typically the output of a policy alteration."""

    def __init__(self, space: StateSpace, triples: list[MdpTensors]):
        super().__init__(space, len(triples))
        self._triples = triples

    def _materialize(self, idx: int) -> MdpTensors:
        return self._triples[idx]


class PosteriorTensorBundle(DrawTensorBundle):
    """Tensor triples from (policy, transition, reward) posterior draw sets.

    Draw index d pairs the d-th merged draw of each component, cycling when
    a component has fewer draws. The draw sets must share one state space.
    """

    def __init__(
        self,
        policy: PosteriorDrawSet,
        transition: PosteriorDrawSet,
        reward: PosteriorDrawSet,
        max_draws: int | None = None,
    ):
        spaces = []
        for ds in (policy, transition, reward):
            if "space" not in ds.extra:
                raise RejectedInputError(
                    f"draw set {ds.model_tag} lacks state-space metadata"
                )
            spaces.append(ds.extra["space"])
        if not (spaces[0] == spaces[1] == spaces[2]):
            raise RejectedInputError("draw sets were fit on different state spaces")
        space = StateSpace.from_json(spaces[0])
        if "dest_slots" not in transition.extra:
            raise RejectedInputError("transition draw set lacks destination structure")
        self._dest_slots = [list(map(int, d)) for d in transition.extra["dest_slots"]]
        if len(self._dest_slots) != space.n_states:
            raise RejectedInputError("destination structure inconsistent with space")

        self._policy_draws = policy.stacked()
        self._transition_draws = transition.stacked()
        self._reward_draws = reward.stacked()
        n = min(len(self._policy_draws), len(self._transition_draws), len(self._reward_draws))
        if max_draws is not None:
            n = min(n, max_draws)
        super().__init__(space, n)

        zeros_pd = PolicyData(
            space, np.zeros((space.n_states, N_SLICES)), np.zeros((space.n_states, N_SLICES))
        )
        self._policy_model = PolicyModel(zeros_pd, levels=policy.extra.get("levels", "player"))
        if self._policy_model.layout.dim != policy.dim:
            raise RejectedInputError("policy draw set layout mismatch")
        nr = len(space.regions)
        zeros_rd = RewardData(
            space, np.zeros((len(space.players), nr, 2)), np.zeros((len(space.players), nr, 2))
        )
        self._reward_model = RewardModel(zeros_rd)
        if self._reward_model.layout.dim != reward.dim:
            raise RejectedInputError("reward draw set layout mismatch")
        self._n_pair_rows = sum(len(d) for d in self._dest_slots)
        if self._transition_draws.shape[1] < self._n_pair_rows * N_SLICES:
            raise RejectedInputError("transition draw set layout mismatch")

    def _materialize(self, idx: int) -> MdpTensors:
        pol = self._policy_draws[idx % len(self._policy_draws)]
        tra = self._transition_draws[idx % len(self._transition_draws)]
        rew = self._reward_draws[idx % len(self._reward_draws)]
        policy_p = self._policy_model.probabilities(pol)
        pair_values = tra[: self._n_pair_rows * N_SLICES].reshape(-1, N_SLICES)
        trans_p = transition_dense_rows(self._dest_slots, pair_values, self.space.n_states)
        reward_ep = self._reward_model.expected_points_table(rew)
        make_p = self._reward_model.make_prob_table(rew)
        return MdpTensors(policy_p, trans_p, reward_ep, make_p)
