"""Absorbing Markov chain math and count-preserving chain averaging.

An absorbing chain in canonical form holds the transient block Q, the
absorption block R, and an initial distribution over transient states.
The averaging operation combines chains with overlapping state spaces so
that the combined chain's expected state-pair transition counts equal the
weighted sum of the component chains' expected counts, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Hashable, Mapping, Sequence

import numpy as np

from tmdp.errors import DegenerateStateError, NonAbsorbingChainError, RejectedInputError

_ROW_TOL = 1e-12

__all__ = [
    "AbsorbingChain",
    "ExpectedCountMatrix",
    "average_chain",
    "average_chain_per_slice",
    "expected_counts",
    "fundamental_matrix",
]


@dataclass(frozen=True)
class AbsorbingChain:
    """Canonical-form absorbing chain over hashable state keys."""

    transient: tuple[Hashable, ...]
    absorbing: tuple[Hashable, ...]
    q: np.ndarray
    r: np.ndarray
    start: np.ndarray
    weight: float = 1.0

    def __post_init__(self) -> None:
        nt, na = len(self.transient), len(self.absorbing)
        object.__setattr__(self, "q", np.asarray(self.q, dtype=np.float64))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=np.float64))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=np.float64))
        if self.q.shape != (nt, nt) or self.r.shape != (nt, na):
            raise RejectedInputError(
                f"block shapes {self.q.shape}/{self.r.shape} inconsistent with "
                f"{nt} transient and {na} absorbing states"
            )
        if self.start.shape != (nt,):
            raise RejectedInputError("initial distribution length mismatch")
        if len(set(self.transient)) != nt or len(set(self.absorbing)) != na:
            raise RejectedInputError("duplicate state keys")
        if set(self.transient) & set(self.absorbing):
            raise RejectedInputError("state key appears as both transient and absorbing")
        if self.q.min(initial=0.0) < -_ROW_TOL or self.r.min(initial=0.0) < -_ROW_TOL:
            raise RejectedInputError("negative transition probability")
        if self.start.min(initial=0.0) < -_ROW_TOL:
            raise RejectedInputError("negative initial probability")
        rows = self.q.sum(axis=1) + self.r.sum(axis=1)
        if nt and np.abs(rows - 1.0).max() > 1e-9:
            raise RejectedInputError(f"rows of [Q|R] must sum to 1 (max err {np.abs(rows-1).max():.2e})")
        if abs(self.start.sum() - 1.0) > 1e-9:
            raise RejectedInputError("initial distribution must sum to 1")
        if not 0.0 <= self.weight <= 1.0 + _ROW_TOL:
            raise RejectedInputError(f"weight outside [0, 1]: {self.weight}")

    @property
    def n_transient(self) -> int:
        return len(self.transient)

    def full_matrix(self) -> np.ndarray:
        """[Q | R] over destinations (transient then absorbing)."""
        return np.hstack([self.q, self.r])


def _recurrent_transient_states(chain: AbsorbingChain, tol: float = 1e-15) -> list[Hashable]:
    """Transient-block states from which no absorbing state is reachable."""
    nt = chain.n_transient
    can_absorb = chain.r.sum(axis=1) > tol
    adjacency = chain.q > tol
    frontier = list(np.flatnonzero(can_absorb))
    reached = set(frontier)
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(adjacency[:, j]):
            if i not in reached:
                reached.add(int(i))
                frontier.append(int(i))
    return [chain.transient[i] for i in range(nt) if i not in reached]


def fundamental_matrix(chain: AbsorbingChain) -> np.ndarray:
    """Solve (I - Q) S = I; entry (i, j) is the expected visits to j from i."""
    trapped = _recurrent_transient_states(chain)
    if trapped:
        raise NonAbsorbingChainError(tuple(trapped))
    n = chain.n_transient
    try:
        return np.linalg.solve(np.eye(n) - chain.q, np.eye(n))
    except np.linalg.LinAlgError as err:  # pragma: no cover - reachability catches first
        raise NonAbsorbingChainError(tuple(chain.transient)) from err


@dataclass(frozen=True)
class ExpectedCountMatrix:
    """Expected per-episode transition counts over (origin, destination)."""

    origins: tuple[Hashable, ...]
    dests: tuple[Hashable, ...]
    n: np.ndarray

    def cell(self, origin: Hashable, dest: Hashable) -> float:
        return float(self.n[self.origins.index(origin), self.dests.index(dest)])

    def visit_counts(self) -> np.ndarray:
        return self.n.sum(axis=1)


def expected_counts(chain: AbsorbingChain) -> ExpectedCountMatrix:
    """Expected transition counts: visits(j) times transition probability."""
    s = fundamental_matrix(chain)
    visits = chain.start @ s
    n = visits[:, None] * chain.full_matrix()
    return ExpectedCountMatrix(
        origins=chain.transient,
        dests=chain.transient + chain.absorbing,
        n=n,
    )


def _union_order(parts: Sequence[Sequence[Hashable]]) -> tuple[Hashable, ...]:
    seen: dict[Hashable, None] = {}
    for part in parts:
        for key in part:
            seen.setdefault(key, None)
    return tuple(seen)


def _embed(
    matrix: np.ndarray,
    row_keys: Sequence[Hashable],
    col_keys: Sequence[Hashable],
    union_rows: Sequence[Hashable],
    union_cols: Sequence[Hashable],
) -> np.ndarray:
    out = np.zeros((len(union_rows), len(union_cols)))
    row_pos = {k: i for i, k in enumerate(union_rows)}
    col_pos = {k: i for i, k in enumerate(union_cols)}
    ri = [row_pos[k] for k in row_keys]
    ci = [col_pos[k] for k in col_keys]
    out[np.ix_(ri, ci)] = matrix
    return out


def _pair_average(first: AbsorbingChain, w1: float, second: AbsorbingChain, w2: float) -> AbsorbingChain:
    """Combine two chains with relative weights w1 + w2 = 1."""
    union_t = _union_order([first.transient, second.transient])
    union_a = _union_order([first.absorbing, second.absorbing])
    union_cols = union_t + union_a
    n1 = expected_counts(first)
    n2 = expected_counts(second)
    n_avg = w1 * _embed(n1.n, n1.origins, n1.dests, union_t, union_cols)
    n_avg += w2 * _embed(n2.n, n2.origins, n2.dests, union_t, union_cols)

    row_sums = n_avg.sum(axis=1)
    dead = np.flatnonzero(row_sums <= 0)
    if dead.size:
        raise DegenerateStateError(tuple(union_t[i] for i in dead))
    p_avg = n_avg / row_sums[:, None]

    start = w1 * _embed(first.start[None, :], ("s",), first.transient, ("s",), union_t)[0]
    start += w2 * _embed(second.start[None, :], ("s",), second.transient, ("s",), union_t)[0]

    nt = len(union_t)
    return AbsorbingChain(
        transient=union_t,
        absorbing=union_a,
        q=p_avg[:, :nt],
        r=p_avg[:, nt:],
        start=start,
        weight=min(first.weight + second.weight, 1.0),
    )


def average_chain(chains: Sequence[AbsorbingChain]) -> AbsorbingChain:
    """Fold chains into one whose expected counts are the weighted sum.

    Uses the two-chain combination recursively, carrying the cumulative
    weight of the already-folded chains, which reproduces the flat weighted
    sum exactly.
    """
    if not chains:
        raise RejectedInputError("need at least one chain")
    total_w = sum(c.weight for c in chains)
    if abs(total_w - 1.0) > 1e-9:
        raise RejectedInputError(f"chain weights must sum to 1, got {total_w}")
    if len(chains) == 1:
        return replace(chains[0], weight=1.0)
    acc = chains[0]
    cum_w = chains[0].weight
    for nxt in chains[1:]:
        denom = cum_w + nxt.weight
        acc = _pair_average(acc, cum_w / denom, nxt, nxt.weight / denom)
        cum_w = denom
    return acc


def average_chain_per_slice(
    chains_by_slice: Mapping[int, Sequence[AbsorbingChain]]
) -> dict[int, AbsorbingChain]:
    """Average independently within each clock slice of a tensor family."""
    return {k: average_chain(v) for k, v in sorted(chains_by_slice.items())}
