"""Random-chain builders and Monte Carlo oracles used by chain tests.

The oracles simulate episodes directly from the transition rows and never
touch the analytic code paths they are checking.
"""

from __future__ import annotations

import numpy as np

from tmdp.chain_algebra import AbsorbingChain


def random_chain(
    rng: np.random.Generator,
    n_transient: int,
    n_absorbing: int = 2,
    transient_keys=None,
    absorbing_keys=None,
    weight: float = 1.0,
    min_absorb: float = 0.12,
) -> AbsorbingChain:
    """Random absorbing chain; every row keeps direct absorption mass."""
    nt, na = n_transient, n_absorbing
    raw = rng.dirichlet(np.ones(nt + na), size=nt)
    # Guarantee absorption: shift mass onto the absorbing block.
    absorb = raw[:, nt:].sum(axis=1)
    deficit = np.maximum(min_absorb - absorb, 0.0)
    scale = (1.0 - (absorb + deficit))[:, None] / np.maximum(raw[:, :nt].sum(axis=1), 1e-12)[:, None]
    q = raw[:, :nt] * scale
    r = raw[:, nt:] + deficit[:, None] * rng.dirichlet(np.ones(na), size=nt) if na > 1 else (
        raw[:, nt:] + deficit[:, None]
    )
    r *= ((1.0 - q.sum(axis=1)) / np.maximum(r.sum(axis=1), 1e-300))[:, None]
    start = rng.dirichlet(np.ones(nt))
    t_keys = tuple(transient_keys) if transient_keys is not None else tuple(f"t{i}" for i in range(nt))
    a_keys = tuple(absorbing_keys) if absorbing_keys is not None else tuple(f"a{i}" for i in range(na))
    return AbsorbingChain(t_keys, a_keys, q, r, start, weight=weight)


def random_overlapping_family(
    rng: np.random.Generator,
    n_chains: int,
    n_transient_range: tuple[int, int] = (4, 12),
    overlap: float = 0.5,
) -> list[AbsorbingChain]:
    """Chains over a shared key pool with roughly the given state overlap."""
    max_t = n_transient_range[1]
    pool = [f"s{i}" for i in range(int(max_t * n_chains * (1 - overlap)) + max_t + 2)]
    absorbing = ("shot", "turnover")
    weights = rng.dirichlet(np.ones(n_chains))
    chains = []
    prev_keys: list[str] = []
    for c in range(n_chains):
        nt = int(rng.integers(n_transient_range[0], n_transient_range[1] + 1))
        n_shared = min(int(round(overlap * nt)), len(prev_keys))
        shared = list(rng.choice(prev_keys, size=n_shared, replace=False)) if n_shared else []
        fresh = [k for k in pool if k not in prev_keys and k not in shared]
        keys = shared + fresh[: nt - n_shared]
        order = rng.permutation(len(keys))
        keys = [keys[i] for i in order]
        chains.append(
            random_chain(rng, nt, 2, transient_keys=keys, absorbing_keys=absorbing, weight=float(weights[c]))
        )
        prev_keys = list(dict.fromkeys(prev_keys + keys))
    return chains


def mc_visits_from_start(
    chain: AbsorbingChain, start_index: int, n_episodes: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate episodes from one start; return per-state mean and SE of visits."""
    rng = np.random.default_rng(seed)
    nt = chain.n_transient
    cum = np.cumsum(chain.full_matrix(), axis=1)
    visits = np.zeros((n_episodes, nt), dtype=np.int32)
    idx = np.arange(n_episodes)
    state = np.full(n_episodes, start_index)
    while idx.size:
        visits[idx, state] += 1
        nxt = (cum[state] > rng.random(idx.size)[:, None]).argmax(axis=1)
        alive = nxt < nt
        idx = idx[alive]
        state = nxt[alive]
    mean = visits.mean(axis=0)
    se = visits.std(axis=0, ddof=1) / np.sqrt(n_episodes)
    return mean, se


def mc_transition_tallies(
    chain: AbsorbingChain, n_episodes: int, seed: int, batch: int = 20000
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate episodes from the initial distribution; tally transitions.

    Returns per-cell mean and SE of per-episode (origin, destination) counts.
    """
    rng = np.random.default_rng(seed)
    nt = chain.n_transient
    ncol = nt + len(chain.absorbing)
    cum = np.cumsum(chain.full_matrix(), axis=1)
    start_cum = np.cumsum(chain.start)
    total = np.zeros((nt, ncol))
    total_sq = np.zeros((nt, ncol))
    done = 0
    while done < n_episodes:
        b = min(batch, n_episodes - done)
        tallies = np.zeros((b, nt, ncol), dtype=np.int16)
        idx = np.arange(b)
        state = np.searchsorted(start_cum, rng.random(b), side="right")
        while idx.size:
            nxt = (cum[state] > rng.random(idx.size)[:, None]).argmax(axis=1)
            tallies[idx, state, nxt] += 1
            alive = nxt < nt
            idx = idx[alive]
            state = nxt[alive]
        total += tallies.sum(axis=0)
        total_sq += (tallies.astype(np.float64) ** 2).sum(axis=0)
        done += b
    mean = total / n_episodes
    var = total_sq / n_episodes - mean**2
    se = np.sqrt(np.maximum(var, 0.0) / n_episodes)
    return mean, se
