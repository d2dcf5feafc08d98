"""Hand-built tensor triples and starts for simulator tests."""

from __future__ import annotations

import numpy as np

from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.simulate import PlayStart
from tmdp.play_simulator.tensors import MdpTensors, TruthTensorBundle
from tmdp.state_model.states import N_SLICES, StateSpace, shot_value


def uniform_tensors(
    space: StateSpace,
    shoot_prob: float = 0.3,
    turnover_prob: float = 0.05,
    make_prob: float = 0.45,
) -> MdpTensors:
    n = space.n_states
    policy_p = np.full((n, N_SLICES), shoot_prob)
    trans_p = np.empty((N_SLICES, n, n + 1))
    trans_p[:, :, :n] = (1.0 - turnover_prob) / n
    trans_p[:, :, n] = turnover_prob
    make_p = np.full(n, make_prob)
    reward_ep = np.array([make_prob * shot_value(s.region) for s in space.states])
    return MdpTensors(policy_p, trans_p, reward_ep, make_p)


def truth_bundle(space: StateSpace, **kwargs) -> TruthTensorBundle:
    return TruthTensorBundle(space, uniform_tensors(space, **kwargs))


def heterogeneous_tensors(space: StateSpace, seed: int = 0) -> MdpTensors:
    """Sticky, state-dependent dynamics: strong cell-level signal."""
    rng = np.random.default_rng(seed)
    n = space.n_states
    base = rng.uniform(0.05, 0.5, size=n)
    ramp = np.linspace(0.6, 1.6, N_SLICES)
    policy_p = np.clip(base[:, None] * ramp[None, :], 0.0, 0.95)
    trans_p = np.empty((N_SLICES, n, n + 1))
    for i in range(n):
        w = rng.dirichlet(np.full(n, 0.25))
        row = 0.55 * np.eye(n)[i] + 0.4 * w
        for t in range(N_SLICES):
            trans_p[t, i, :n] = row
            trans_p[t, i, n] = 0.05
    make_p = rng.uniform(0.3, 0.65, size=n)
    reward_ep = make_p * np.array([shot_value(s.region) for s in space.states])
    return MdpTensors(policy_p, trans_p, reward_ep, make_p)


def heterogeneous_bundle(space: StateSpace, seed: int = 0) -> TruthTensorBundle:
    return TruthTensorBundle(space, heterogeneous_tensors(space, seed))


def const_lapses(value: float = 1.5) -> LapseDistribution:
    return LapseDistribution([np.array([value])] * N_SLICES)


def spread_lapses(seed: int = 0) -> LapseDistribution:
    rng = np.random.default_rng(seed)
    return LapseDistribution(
        [rng.uniform(0.3, 2.5, size=40) for _ in range(N_SLICES)]
    )


def some_starts(space: StateSpace, n: int, seed: int = 0) -> list[PlayStart]:
    rng = np.random.default_rng(seed)
    return [
        PlayStart(
            state=space.states[int(rng.integers(space.n_states))],
            clock=float(rng.uniform(14.0, 24.0)),
        )
        for _ in range(n)
    ]
