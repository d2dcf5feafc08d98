"""Hierarchical transition-tensor model.

Conditional on not shooting, the next state follows a multinomial over the
origin's supported destinations (other states plus the turnover sentinel).
Destination logits are length-8 curves over clock slices with AR(1) priors,
shrinking player pairs toward position pairs toward region pairs. The
turnover destination is the fixed zero-logit reference at every level,
which identifies the softmax.

Structural zeros: destination pairs with no geometric support that were
never observed are excluded from the parameter set entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from tmdp.config import ModelConfig
from tmdp.errors import RejectedInputError
from tmdp.hier_models.ar1 import (
    ar1_grad_rho,
    ar1_grad_sd,
    ar1_grad_x,
    ar1_logpdf,
    gamma_grad,
    gamma_logpdf,
)
from tmdp.mcmc_blocks import (
    AdaptState,
    ParamLayout,
    mh_alpha,
    mh_group_update,
    mh_scalar_update,
    mh_scale_move,
    precision_shaped_noise,
)
from tmdp.state_model.events import Action
from tmdp.state_model.states import N_SLICES, CourtRegion, StateSpace

# Regions the ball can move to within one event without a pass.
REGION_ADJACENCY: dict[CourtRegion, frozenset[CourtRegion]] = {
    CourtRegion.RIM: frozenset({CourtRegion.PAINT}),
    CourtRegion.PAINT: frozenset({CourtRegion.RIM, CourtRegion.MID_RANGE}),
    CourtRegion.MID_RANGE: frozenset(
        {CourtRegion.PAINT, CourtRegion.CORNER_3, CourtRegion.ARC_3}
    ),
    CourtRegion.CORNER_3: frozenset({CourtRegion.MID_RANGE, CourtRegion.ARC_3}),
    CourtRegion.ARC_3: frozenset(
        {CourtRegion.MID_RANGE, CourtRegion.CORNER_3, CourtRegion.BACKCOURT}
    ),
    CourtRegion.BACKCOURT: frozenset({CourtRegion.ARC_3}),
}

# Pairs deemed physically impossible even for passes.
PASS_BLACKLIST: frozenset[tuple[CourtRegion, CourtRegion]] = frozenset(
    {(CourtRegion.BACKCOURT, CourtRegion.RIM)}
)

TURNOVER_SLOT = 0


def cell_label(key: Hashable) -> str:
    if key is None:
        return "turnover"
    if isinstance(key, tuple):
        parts = []
        for item in key:
            if isinstance(item, CourtRegion):
                parts.append(item.value)
            elif isinstance(item, bool):
                parts.append("c" if item else "o")
            else:
                parts.append(str(item))
        return ":".join(parts)
    return str(key)


@dataclass
class TransitionData:
    """Transition counts over a supported destination structure.

    origin_keys double as the destination key space; slot 0 of every origin
    is the turnover sentinel, and dest_slots holds the origin-space index of
    each further slot.
    """

    origin_keys: list[Hashable]
    dest_slots: list[list[int]]      # per origin, slots >= 1
    counts: np.ndarray               # (n_origins, max_slots, 8)
    mask: np.ndarray                 # (n_origins, max_slots) bool, slot 0 always True
    totals: np.ndarray               # (n_origins, 8)

    @property
    def n_origins(self) -> int:
        return len(self.origin_keys)

    @property
    def max_slots(self) -> int:
        return self.counts.shape[1]

    def dest_key(self, origin: int, slot: int) -> Hashable:
        if slot == TURNOVER_SLOT:
            return None
        return self.origin_keys[self.dest_slots[origin][slot - 1]]

    def pair_list(self) -> list[tuple[int, int]]:
        """(origin index, slot) for every sampled destination curve."""
        return [
            (i, s)
            for i in range(self.n_origins)
            for s in range(1, len(self.dest_slots[i]) + 1)
        ]


def _supported_dests(
    space: StateSpace, origin_idx: int, observed: set[tuple[int, int]]
) -> list[int]:
    origin = space.states[origin_idx]
    dests: set[int] = set()
    for j, dest in enumerate(space.states):
        if dest.player_id == origin.player_id:
            ok = dest.region is origin.region or dest.region in REGION_ADJACENCY[origin.region]
        else:
            ok = (origin.region, dest.region) not in PASS_BLACKLIST
        if ok:
            dests.add(j)
    dests |= {j for (i, j) in observed if i == origin_idx}
    return sorted(dests)


def observed_pairs(episodes, space: StateSpace) -> set[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    for ep in episodes:
        for a, b in zip(ep.steps, ep.steps[1:]):
            if a.action is Action.NO_SHOOT:
                pairs.add((space.index(a.state), space.index(b.state)))
    return pairs


def player_transition_data(episodes, space: StateSpace) -> TransitionData:
    obs = observed_pairs(episodes, space)
    dest_slots = [_supported_dests(space, i, obs) for i in range(space.n_states)]
    max_slots = 1 + max((len(d) for d in dest_slots), default=0)
    n = space.n_states
    counts = np.zeros((n, max_slots, N_SLICES))
    mask = np.zeros((n, max_slots), dtype=bool)
    mask[:, TURNOVER_SLOT] = True
    slot_of = []
    for i, dests in enumerate(dest_slots):
        mask[i, 1 : 1 + len(dests)] = True
        slot_of.append({j: s + 1 for s, j in enumerate(dests)})
    for ep in episodes:
        for k, step in enumerate(ep.steps):
            if step.action is not Action.NO_SHOOT:
                continue
            i = space.index(step.state)
            t = step.slice_index - 1
            if k + 1 < len(ep.steps):
                j = space.index(ep.steps[k + 1].state)
                counts[i, slot_of[i][j], t] += 1
            else:
                counts[i, TURNOVER_SLOT, t] += 1
    totals = counts.sum(axis=1)
    return TransitionData(
        origin_keys=[s.label() for s in space.states],
        dest_slots=dest_slots,
        counts=counts,
        mask=mask,
        totals=totals,
    )


def position_cell_of(space: StateSpace, state_idx: int) -> tuple[str, CourtRegion, bool]:
    s = space.states[state_idx]
    return (space.position_of(s.player_id), s.region, s.contested)


def aggregate_to_positions(data: TransitionData, space: StateSpace) -> TransitionData:
    """Collapse a player-level structure to position cells."""
    cells: list[tuple] = []
    cell_idx: dict[tuple, int] = {}
    for i in range(space.n_states):
        c = position_cell_of(space, i)
        if c not in cell_idx:
            cell_idx[c] = len(cells)
            cells.append(c)
    n = len(cells)
    dest_sets: list[set[int]] = [set() for _ in range(n)]
    for i in range(data.n_origins):
        ci = cell_idx[position_cell_of(space, i)]
        for j in data.dest_slots[i]:
            dest_sets[ci].add(cell_idx[position_cell_of(space, j)])
    dest_slots = [sorted(d) for d in dest_sets]
    max_slots = 1 + max(len(d) for d in dest_slots)
    counts = np.zeros((n, max_slots, N_SLICES))
    mask = np.zeros((n, max_slots), dtype=bool)
    mask[:, TURNOVER_SLOT] = True
    slot_of = []
    for i, dests in enumerate(dest_slots):
        mask[i, 1 : 1 + len(dests)] = True
        slot_of.append({j: s + 1 for s, j in enumerate(dests)})
    for i in range(data.n_origins):
        ci = cell_idx[position_cell_of(space, i)]
        counts[ci, TURNOVER_SLOT] += data.counts[i, TURNOVER_SLOT]
        for s, j in enumerate(data.dest_slots[i]):
            cj = cell_idx[position_cell_of(space, j)]
            counts[ci, slot_of[ci][cj]] += data.counts[i, s + 1]
    return TransitionData(
        origin_keys=cells,
        dest_slots=dest_slots,
        counts=counts,
        mask=mask,
        totals=counts.sum(axis=1),
    )


@dataclass
class FixedPairPrior:
    """Stage-two prior: per-pair AR(1) mean curves with fixed scale/correlation."""

    means: np.ndarray  # (n_pairs, 8)
    sd: float
    rho: float


class TransitionModel:
    """Log-posterior evaluator and Gibbs sweeper for one transition tensor.

    parent_key_fn maps (origin_key, dest_key) to the mid-level cell; when
    grandparent_key_fn is given the model has three levels, otherwise two.
    With fixed_prior set, only the pair curves are sampled.
    """

    def __init__(
        self,
        data: TransitionData,
        parent_key_fn: Callable[[Hashable, Hashable], Hashable],
        grandparent_key_fn: Callable[[Hashable], Hashable] | None = None,
        config: ModelConfig | None = None,
        fixed_prior: FixedPairPrior | None = None,
    ):
        self.data = data
        self.config = config or ModelConfig()
        self.fixed_prior = fixed_prior
        self.pairs = data.pair_list()
        self.n_pairs = len(self.pairs)

        # Mid-level cells in deterministic first-encounter order.
        self.group_keys: list[Hashable] = []
        gidx: dict[Hashable, int] = {}
        pair_parent = []
        for i, s in self.pairs:
            key = parent_key_fn(data.origin_keys[i], data.dest_key(i, s))
            if key not in gidx:
                gidx[key] = len(self.group_keys)
                self.group_keys.append(key)
            pair_parent.append(gidx[key])
        self.pair_parent = np.array(pair_parent, dtype=np.intp)

        self.has_groups = fixed_prior is None
        self.has_base = self.has_groups and grandparent_key_fn is not None
        if self.has_base:
            self.base_keys: list[Hashable] = []
            bidx: dict[Hashable, int] = {}
            group_parent = []
            for key in self.group_keys:
                bkey = grandparent_key_fn(key)
                if bkey not in bidx:
                    bidx[bkey] = len(self.base_keys)
                    self.base_keys.append(bkey)
                group_parent.append(bidx[bkey])
            self.group_parent = np.array(group_parent, dtype=np.intp)
        else:
            self.base_keys = []
            self.group_parent = np.array([], dtype=np.intp)

        self._build_layout()
        self._prep_likelihood()

    # -- layout -----------------------------------------------------------------

    def _build_layout(self) -> None:
        data = self.data
        spec: list[tuple[str, int]] = []
        for i, s in self.pairs:
            o = cell_label(data.origin_keys[i])
            d = cell_label(data.dest_key(i, s))
            spec.append((f"pair[{o}->{d}]", N_SLICES))
        if self.has_groups:
            for key in self.group_keys:
                spec.append((f"group[{cell_label(key[0])}->{cell_label(key[1])}]", N_SLICES))
            if self.has_base:
                for key in self.base_keys:
                    spec.append((f"base[{cell_label(key[0])}->{cell_label(key[1])}]", N_SLICES))
            spec.append(("sd_pair", 1))
            spec.append(("sd_group", 1))
            if self.has_base:
                spec.append(("sd_base", 1))
            spec.append(("rho_pair", 1))
            spec.append(("rho_group", 1))
            if self.has_base:
                spec.append(("rho_base", 1))
        self.layout = ParamLayout.build(spec)

        self._sl_pair = slice(0, self.n_pairs * N_SLICES)
        offset = self._sl_pair.stop
        if self.has_groups:
            self._sl_group = slice(offset, offset + len(self.group_keys) * N_SLICES)
            offset = self._sl_group.stop
            if self.has_base:
                self._sl_base = slice(offset, offset + len(self.base_keys) * N_SLICES)
                offset = self._sl_base.stop
            else:
                self._sl_base = slice(offset, offset)
            names = ["sd_pair", "sd_group"] + (["sd_base"] if self.has_base else [])
            names += ["rho_pair", "rho_group"] + (["rho_base"] if self.has_base else [])
            self._scalar_names = names
            self._scalar_offset = {n: offset + i for i, n in enumerate(names)}
        else:
            self._sl_group = slice(offset, offset)
            self._sl_base = slice(offset, offset)
            self._scalar_names = []
            self._scalar_offset = {}

    def _prep_likelihood(self) -> None:
        data = self.data
        # Row offsets of each pair curve in the flat vector, addressed by
        # (origin, slot) for the slot-vectorized sweep.
        self._pair_row = {}
        pair_index = {}
        for p, (i, s) in enumerate(self.pairs):
            self._pair_row[(i, s)] = p * N_SLICES
            pair_index[(i, s)] = p
        self._slot_origin: list[np.ndarray] = []
        self._slot_pairidx: list[np.ndarray] = []
        for s in range(1, data.max_slots):
            origins = np.array(
                [i for i in range(data.n_origins) if data.mask[i, s]], dtype=np.intp
            )
            self._slot_origin.append(origins)
            self._slot_pairidx.append(
                np.array([pair_index[(int(i), s)] for i in origins], dtype=np.intp)
            )

    # -- views ------------------------------------------------------------------

    def _pair_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_pair].reshape(self.n_pairs, N_SLICES)

    def _group_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_group].reshape(-1, N_SLICES)

    def _base_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_base].reshape(-1, N_SLICES)

    def _scalar(self, x: np.ndarray, name: str) -> float:
        return float(x[self._scalar_offset[name]])

    def _lam_padded(self, x: np.ndarray) -> np.ndarray:
        """(n_origins, max_slots, 8) logits; slot 0 fixed at 0, invalid = -inf."""
        data = self.data
        if not hasattr(self, "_pair_i"):
            self._pair_i = np.array([i for (i, _) in self.pairs], dtype=np.intp)
            self._pair_s = np.array([s for (_, s) in self.pairs], dtype=np.intp)
        lam = np.full((data.n_origins, data.max_slots, N_SLICES), -np.inf)
        lam[:, TURNOVER_SLOT, :] = 0.0
        lam[self._pair_i, self._pair_s] = self._pair_mat(x)
        return lam

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        """(n_origins, max_slots, 8) destination probabilities."""
        lam = self._lam_padded(x)
        m = lam.max(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            e = np.exp(lam - m)
        e[~np.isfinite(lam)] = 0.0
        return e / e.sum(axis=1, keepdims=True)

    # -- log posterior ------------------------------------------------------------

    def loglik(self, x: np.ndarray) -> float:
        data = self.data
        lam = self._lam_padded(x)
        m = lam.max(axis=1)  # >= 0: the turnover slot is fixed at zero
        e = np.exp(lam - m[:, None, :])  # invalid slots: exp(-inf) = 0
        lse = m + np.log(e.sum(axis=1))
        valid = np.where(np.isfinite(lam), lam, 0.0)
        contrib = (data.counts * valid).sum()
        return float(contrib - (data.totals * lse).sum())

    def logpost(self, x: np.ndarray) -> float:
        cfg = self.config
        if self.fixed_prior is not None:
            pair = self._pair_mat(x)
            fp = self.fixed_prior
            total = self.loglik(x)
            total += ar1_logpdf(pair, fp.means, fp.sd, fp.rho).sum()
            return float(total)
        for name in self._scalar_names:
            v = self._scalar(x, name)
            if name.startswith("sd_") and v <= 0:
                return -math.inf
            if name.startswith("rho_") and not (cfg.rho_lo < v < cfg.rho_hi):
                return -math.inf
        total = self.loglik(x)
        pair = self._pair_mat(x)
        group = self._group_mat(x)
        sd_pair, rho_pair = self._scalar(x, "sd_pair"), self._scalar(x, "rho_pair")
        sd_group, rho_group = self._scalar(x, "sd_group"), self._scalar(x, "rho_group")
        total += ar1_logpdf(pair, group[self.pair_parent], sd_pair, rho_pair).sum()
        total += gamma_logpdf(sd_pair, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        total += gamma_logpdf(sd_group, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        if self.has_base:
            base = self._base_mat(x)
            sd_base, rho_base = self._scalar(x, "sd_base"), self._scalar(x, "rho_base")
            total += ar1_logpdf(group, base[self.group_parent], sd_group, rho_group).sum()
            total += ar1_logpdf(base, 0.0, sd_base, rho_base).sum()
            total += gamma_logpdf(sd_base, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        else:
            total += ar1_logpdf(group, 0.0, sd_group, rho_group).sum()
        return float(total)

    def grad_logpost(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros_like(x)
        data = self.data
        probs = self.probabilities(x)
        # dL/dlam for sampled pairs.
        dl = data.counts - data.totals[:, None, :] * probs
        pair_grad = np.empty((self.n_pairs, N_SLICES))
        for p, (i, s) in enumerate(self.pairs):
            pair_grad[p] = dl[i, s]
        pair = self._pair_mat(x)
        if self.fixed_prior is not None:
            fp = self.fixed_prior
            e = pair - fp.means
            g[self._sl_pair] = (pair_grad + ar1_grad_x(e, fp.sd, fp.rho)).reshape(-1)
            return g
        cfg = self.config
        group = self._group_mat(x)
        sd_pair, rho_pair = self._scalar(x, "sd_pair"), self._scalar(x, "rho_pair")
        sd_group, rho_group = self._scalar(x, "sd_group"), self._scalar(x, "rho_group")
        e_pair = pair - group[self.pair_parent]
        gp = ar1_grad_x(e_pair, sd_pair, rho_pair)
        g[self._sl_pair] = (pair_grad + gp).reshape(-1)
        g_group = np.zeros_like(group)
        np.add.at(g_group, self.pair_parent, -gp)
        if self.has_base:
            base = self._base_mat(x)
            sd_base, rho_base = self._scalar(x, "sd_base"), self._scalar(x, "rho_base")
            e_group = group - base[self.group_parent]
            gg = ar1_grad_x(e_group, sd_group, rho_group)
            g_group += gg
            g_base = np.zeros_like(base)
            np.add.at(g_base, self.group_parent, -gg)
            g_base += ar1_grad_x(base, sd_base, rho_base)
            g[self._sl_base] = g_base.reshape(-1)
            g[self._scalar_offset["sd_base"]] = ar1_grad_sd(base, sd_base, rho_base).sum() + gamma_grad(
                sd_base, cfg.sd_hyper_shape, cfg.sd_hyper_rate
            )
            g[self._scalar_offset["rho_base"]] = ar1_grad_rho(base, sd_base, rho_base).sum()
        else:
            e_group = group
            gg = ar1_grad_x(e_group, sd_group, rho_group)
            g_group += gg
        g[self._sl_group] = g_group.reshape(-1)
        g[self._scalar_offset["sd_pair"]] = ar1_grad_sd(e_pair, sd_pair, rho_pair).sum() + gamma_grad(
            sd_pair, cfg.sd_hyper_shape, cfg.sd_hyper_rate
        )
        g[self._scalar_offset["rho_pair"]] = ar1_grad_rho(e_pair, sd_pair, rho_pair).sum()
        g[self._scalar_offset["sd_group"]] = ar1_grad_sd(e_group, sd_group, rho_group).sum() + gamma_grad(
            sd_group, cfg.sd_hyper_shape, cfg.sd_hyper_rate
        )
        g[self._scalar_offset["rho_group"]] = ar1_grad_rho(e_group, sd_group, rho_group).sum()
        return g

    # -- prior sampling (synthetic truth generation) -------------------------------

    def sample_prior(self, rng: np.random.Generator) -> np.ndarray:
        """One draw of the full parameter vector from the hierarchical prior."""
        from tmdp.hier_models.ar1 import ar1_corr

        if self.fixed_prior is not None:
            fp = self.fixed_prior
            chol = np.linalg.cholesky(ar1_corr(fp.rho, N_SLICES) + 1e-12 * np.eye(N_SLICES))
            z = rng.standard_normal((self.n_pairs, N_SLICES))
            x = np.zeros(self.layout.dim)
            x[self._sl_pair] = (fp.means + fp.sd * (z @ chol.T)).reshape(-1)
            return x
        cfg = self.config
        x = np.zeros(self.layout.dim)

        def draw_sd() -> float:
            return float(rng.gamma(cfg.sd_hyper_shape, 1.0 / cfg.sd_hyper_rate))

        def draw_rho() -> float:
            return float(rng.uniform(cfg.rho_lo, cfg.rho_hi))

        def draw_rows(n_rows: int, mean, sd: float, rho: float) -> np.ndarray:
            chol = np.linalg.cholesky(ar1_corr(rho, N_SLICES) + 1e-12 * np.eye(N_SLICES))
            z = rng.standard_normal((n_rows, N_SLICES))
            return mean + sd * (z @ chol.T)

        if self.has_base:
            sd_b, rho_b = draw_sd(), draw_rho()
            x[self._scalar_offset["sd_base"]] = sd_b
            x[self._scalar_offset["rho_base"]] = rho_b
            base = draw_rows(len(self.base_keys), 0.0, sd_b, rho_b)
            self._base_mat(x)[:] = base
            group_mean = base[self.group_parent]
        else:
            group_mean = 0.0
        sd_g, rho_g = draw_sd(), draw_rho()
        x[self._scalar_offset["sd_group"]] = sd_g
        x[self._scalar_offset["rho_group"]] = rho_g
        group = draw_rows(len(self.group_keys), group_mean, sd_g, rho_g)
        self._group_mat(x)[:] = group
        sd_p, rho_p = draw_sd(), draw_rho()
        x[self._scalar_offset["sd_pair"]] = sd_p
        x[self._scalar_offset["rho_pair"]] = rho_p
        self._pair_mat(x)[:] = draw_rows(self.n_pairs, group[self.pair_parent], sd_p, rho_p)
        return x

    # -- initialization -----------------------------------------------------------

    def init_point(self) -> np.ndarray:
        """Data-informed start: aggregated empirical logits, clipped to [-4, 4].

        Individual pairs are sparse, so curves start at their mid-level
        cell's pooled counts against the pooled turnover reference; that is
        where the shrunk posterior concentrates. Mid and top tiers start at
        the same pooled values.
        """
        x = np.zeros(self.layout.dim)
        data = self.data
        n_groups = len(self.group_keys)
        group_counts = np.zeros((n_groups, N_SLICES))
        group_ref = np.zeros((n_groups, N_SLICES))
        to_counts = data.counts[:, TURNOVER_SLOT, :]
        for p, (i, s) in enumerate(self.pairs):
            group_counts[self.pair_parent[p]] += data.counts[i, s]
            group_ref[self.pair_parent[p]] += to_counts[i]
        with np.errstate(divide="ignore"):
            group_logit = np.clip(
                np.log((group_counts + 0.5) / (group_ref + 0.5)), -4, 4
            )
        self._pair_mat(x)[:] = group_logit[self.pair_parent]
        if self.has_groups:
            self._group_mat(x)[:] = group_logit
            if self.has_base:
                base_sum = np.zeros((len(self.base_keys), N_SLICES))
                base_n = np.zeros(len(self.base_keys))
                np.add.at(base_sum, self.group_parent, group_logit)
                np.add.at(base_n, self.group_parent, 1.0)
                self._base_mat(x)[:] = base_sum / np.maximum(base_n, 1.0)[:, None]
        for name in self._scalar_names:
            x[self._scalar_offset[name]] = 1.0 if name.startswith("sd_") else 0.0
        return x

    # -- Gibbs sweep ----------------------------------------------------------

    def make_sweeper(self):
        """Sweep: slot-vectorized MH for pair curves, conjugate Gibbs for the
        location tiers, MH plus funnel scale moves for the hyperparameters.

        Pair curves of never-visited origins, groups without data-carrying
        pair children, and base cells without retained groups are collapsed
        out of every conditional and drawn exactly, top-down, at the end of
        the sweep.
        """
        from tmdp.hier_models.ar1 import ar1_corr, ar1_precision, conditional_gaussian_draws

        data = self.data
        cfg = self.config
        block_id = {b.name: i for i, b in enumerate(self.layout.blocks)}
        n_groups = len(self.group_keys)

        visited = data.totals.sum(axis=1) > 0
        data_pair_mask = np.array([visited[i] for (i, s) in self.pairs], dtype=bool)
        prior_only_pairs = np.flatnonzero(~data_pair_mask).astype(np.intp)
        retained_group = np.zeros(n_groups, dtype=bool)
        if data_pair_mask.any():
            retained_group[np.unique(self.pair_parent[data_pair_mask])] = True
        if self.has_base:
            retained_base = np.zeros(len(self.base_keys), dtype=bool)
            if retained_group.any():
                retained_base[np.unique(self.group_parent[retained_group])] = True
        prior_only_rows = (
            np.stack([
                np.arange(p * N_SLICES, (p + 1) * N_SLICES) for p in prior_only_pairs
            ])
            if prior_only_pairs.size
            else np.empty((0, N_SLICES), dtype=np.intp)
        )
        data_pair_rows = (
            np.stack([
                np.arange(p * N_SLICES, (p + 1) * N_SLICES)
                for p in np.flatnonzero(data_pair_mask)
            ])
            if data_pair_mask.any()
            else np.empty((0, N_SLICES), dtype=np.intp)
        )
        ppd = self.pair_parent[data_pair_mask]
        # Children-per-group tallies and scatter helpers for conjugate draws.
        rg_idx = np.flatnonzero(retained_group)
        n_child_group = np.bincount(ppd, minlength=n_groups)[rg_idx].astype(float)
        if self.has_base:
            rb_idx = np.flatnonzero(retained_base)
            rg_parent = self.group_parent[rg_idx]
            n_child_base = np.bincount(
                rg_parent, minlength=len(self.base_keys)
            )[rb_idx].astype(float)
            base_pos = np.full(len(self.base_keys), -1, dtype=np.intp)
            base_pos[rb_idx] = np.arange(rb_idx.size)

        # Slot-group indices over visited origins; preconditioners shrink
        # proposal coordinates that carry heavy multinomial information.
        counts_pre = data.counts
        slot_origins = []
        slot_rows = []
        pair_block_ids = []
        slot_hess = []
        for s in range(1, data.max_slots):
            origins = np.array(
                [i for i in self._slot_origin[s - 1] if visited[i]], dtype=np.intp
            )
            pidx = np.array(
                [p for p, i in zip(self._slot_pairidx[s - 1], self._slot_origin[s - 1])
                 if visited[i]],
                dtype=np.intp,
            )
            rows = np.array(
                [
                    np.arange(self._pair_row[(int(i), s)], self._pair_row[(int(i), s)] + N_SLICES)
                    for i in origins
                ],
                dtype=np.intp,
            ) if origins.size else np.empty((0, N_SLICES), dtype=np.intp)
            slot_origins.append(origins)
            slot_rows.append(rows)
            pair_block_ids.append(pidx)
            slot_hess.append(
                0.25 * counts_pre[origins, s] if origins.size else np.empty((0, N_SLICES))
            )
        if self.has_groups:
            group_rows = np.arange(self._sl_group.start, self._sl_group.stop).reshape(-1, N_SLICES)
            group_ids = np.arange(n_groups, dtype=np.intp) + self.n_pairs
            if self.has_base:
                base_rows = np.arange(self._sl_base.start, self._sl_base.stop).reshape(-1, N_SLICES)
                base_ids = np.arange(len(self.base_keys), dtype=np.intp) + self.n_pairs + n_groups

        fp = self.fixed_prior
        counts = data.counts
        totals = data.totals
        pair_i_idx = np.array([i for (i, _) in self.pairs], dtype=np.intp)

        # Cluster-translation plan: groups sharing a destination cell touch
        # disjoint origins, so one vectorized MH translation per destination
        # cell can move each (group + data pairs) cluster jointly.
        if self.has_groups:
            dest_of_group = {}
            for gi, key in enumerate(self.group_keys):
                dest_of_group[gi] = key[1]
            plans = []
            dest_cells = sorted({str(v) for v in dest_of_group.values()})
            pair_rows_of = {
                p: np.arange(p * N_SLICES, (p + 1) * N_SLICES)
                for p in range(self.n_pairs)
            }
            for d_label in dest_cells:
                member = [gi for gi in range(n_groups)
                          if str(dest_of_group[gi]) == d_label and retained_group[gi]]
                if not member:
                    continue
                gpos_of = {gi: k for k, gi in enumerate(member)}
                per_origin: dict[int, dict] = {}
                for p in np.flatnonzero(data_pair_mask):
                    gi = int(self.pair_parent[p])
                    if gi not in gpos_of:
                        continue
                    i, slot = self.pairs[p]
                    rec = per_origin.setdefault(int(i), {"gpos": gpos_of[gi], "pairs": [],
                                                          "countsum": np.zeros(N_SLICES)})
                    rec["pairs"].append(int(p))
                    rec["countsum"] += counts[int(i), slot]
                if not per_origin:
                    continue
                origins_d = np.array(sorted(per_origin), dtype=np.intp)
                gpos_d = np.array([per_origin[i]["gpos"] for i in origins_d], dtype=np.intp)
                countsum_d = np.stack([per_origin[i]["countsum"] for i in origins_d])
                max_m = max(len(per_origin[i]["pairs"]) for i in origins_d)
                pair_rows_d = np.zeros((len(origins_d), max_m, N_SLICES), dtype=np.intp)
                pair_mask_d = np.zeros((len(origins_d), max_m), dtype=bool)
                for r, i in enumerate(origins_d):
                    for m, pp in enumerate(per_origin[i]["pairs"]):
                        pair_rows_d[r, m] = pair_rows_of[pp]
                        pair_mask_d[r, m] = True
                member_ids = np.array(member, dtype=np.intp)
                plans.append({
                    "origins": origins_d,
                    "gpos": gpos_d,
                    "countsum": countsum_d,
                    "pair_rows": pair_rows_d,
                    "pair_mask": pair_mask_d,
                    "member": member_ids,
                })
        else:
            plans = []

        def chol_of(rho_v: float) -> np.ndarray:
            return np.linalg.cholesky(ar1_corr(rho_v, N_SLICES) + 1e-12 * np.eye(N_SLICES))

        def sweep(x: np.ndarray, adapt: AdaptState, rng: np.random.Generator) -> None:
            pair = self._pair_mat(x)
            if self.has_groups:
                group = self._group_mat(x)
                sd_pair, rho_pair = self._scalar(x, "sd_pair"), self._scalar(x, "rho_pair")
                pair_means = group[self.pair_parent]
                prior_sd, prior_rho = sd_pair, rho_pair
            else:
                pair_means = fp.means
                prior_sd, prior_rho = fp.sd, fp.rho
            chol_pair = chol_of(prior_rho)
            from tmdp.hier_models.ar1 import ar1_precision as _ar1_prec
            prior_prec_pair = _ar1_prec(prior_rho, N_SLICES) / (prior_sd * prior_sd)

            # Softmax denominators, maintained incrementally across slot updates.
            with np.errstate(over="ignore"):
                exp_pair = np.exp(pair)
            sumexp = np.ones((data.n_origins, N_SLICES))
            np.add.at(sumexp, pair_i_idx, exp_pair)

            for s in range(1, data.max_slots):
                origins = slot_origins[s - 1]
                if origins.size == 0:
                    continue
                rows = slot_rows[s - 1]
                pidx = pair_block_ids[s - 1]
                cur = x[rows]
                means = pair_means[pidx]

                def slot_delta(cur_v, prop_v, _origins=origins, _s=s, _pidx=pidx, _means=means):
                    with np.errstate(over="ignore"):
                        e_cur = np.exp(cur_v)
                        e_prop = np.exp(prop_v)
                    new_sum = sumexp[_origins] - e_cur + e_prop
                    ok = np.all(np.isfinite(new_sum) & (new_sum > 0), axis=1)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        d = (counts[_origins, _s] * (prop_v - cur_v)).sum(axis=1)
                        d -= (totals[_origins] * (np.log(new_sum) - np.log(sumexp[_origins]))).sum(axis=1)
                    d += ar1_logpdf(prop_v, _means, prior_sd, prior_rho)
                    d -= ar1_logpdf(cur_v, _means, prior_sd, prior_rho)
                    return np.where(ok, d, -np.inf)

                noise = precision_shaped_noise(
                    rng, slot_hess[s - 1], prior_prec_pair
                )
                mh_group_update(x, rows, pidx, slot_delta, adapt, rng, prop_noise=noise)
                with np.errstate(over="ignore"):
                    sumexp[origins] += np.exp(x[rows]) - np.exp(cur)

            if not self.has_groups:
                if prior_only_pairs.size:
                    z = rng.standard_normal((prior_only_pairs.size, N_SLICES))
                    x[prior_only_rows] = fp.means[prior_only_pairs] + prior_sd * (z @ chol_pair.T)
                    adapt.accept_sum[prior_only_pairs] += 1.0
                    adapt.accept_n[prior_only_pairs] += 1.0
                return

            # Cluster translations: move each retained group with its data
            # pairs; pair-to-group residuals are invariant, so only the group
            # prior and the moved origins' multinomial terms react. Reuses the
            # group blocks' adaptive step scales.
            if plans:
                sd_g_t = self._scalar(x, "sd_group")
                rho_g_t = self._scalar(x, "rho_group")
                chol_t = chol_of(rho_g_t)
                base_mat_t = self._base_mat(x) if self.has_base else None
                for plan in plans:
                    member = plan["member"]
                    k = member.size
                    z = rng.standard_normal((k, N_SLICES))
                    if adapt.iteration % 2 == 1:
                        z = z @ chol_t.T  # whole-curve moves on odd sweeps
                    deltas = adapt.scales[group_ids[member]][:, None] * z
                    g_rows = group_rows[member]
                    g_cur = x[g_rows]
                    means_t = (
                        base_mat_t[self.group_parent[member]] if self.has_base else 0.0
                    )
                    d_prior = ar1_logpdf(g_cur + deltas, means_t, sd_g_t, rho_g_t)
                    d_prior -= ar1_logpdf(g_cur, means_t, sd_g_t, rho_g_t)
                    origins = plan["origins"]
                    gpos = plan["gpos"]
                    lam_moved = x[plan["pair_rows"]]
                    with np.errstate(over="ignore"):
                        e_old = np.where(plan["pair_mask"][:, :, None], np.exp(lam_moved), 0.0)
                        e_new = np.where(
                            plan["pair_mask"][:, :, None],
                            np.exp(lam_moved + deltas[gpos][:, None, :]),
                            0.0,
                        )
                    sum_old = e_old.sum(axis=1)
                    sum_new = e_new.sum(axis=1)
                    new_sumexp = sumexp[origins] - sum_old + sum_new
                    ok = np.all(np.isfinite(new_sumexp) & (new_sumexp > 0), axis=1)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        lik = (plan["countsum"] * deltas[gpos]).sum(axis=1)
                        lik -= (totals[origins] * (np.log(new_sumexp) - np.log(sumexp[origins]))).sum(axis=1)
                    lik = np.where(ok, lik, -np.inf)
                    d_total = d_prior + np.bincount(gpos, weights=lik, minlength=k)
                    alpha = mh_alpha(d_total)
                    accept = rng.random(k) < alpha
                    adapt.record(group_ids[member], alpha)
                    if accept.any():
                        x[g_rows[accept]] = g_cur[accept] + deltas[accept]
                        acc_by_origin = accept[gpos]
                        if acc_by_origin.any():
                            rows_sel = plan["pair_rows"][acc_by_origin]
                            mask_sel = plan["pair_mask"][acc_by_origin]
                            shift_sel = deltas[gpos][acc_by_origin]
                            flat_rows = rows_sel[mask_sel]
                            x[flat_rows] = x[flat_rows] + np.repeat(
                                shift_sel, mask_sel.sum(axis=1), axis=0
                            )
                            sumexp[origins[acc_by_origin]] += (
                                sum_new[acc_by_origin] - sum_old[acc_by_origin]
                            )

            # Hierarchy updates (conjugate location tiers, hyper MH, deep
            # funnel moves) are cheap next to the slot updates; repeating
            # them sharpens mixing of scales and correlations.
            def hierarchy_updates() -> None:
                sd_group, rho_group = self._scalar(x, "sd_group"), self._scalar(x, "rho_group")
                if self.has_base:
                    sd_base, rho_base = self._scalar(x, "sd_base"), self._scalar(x, "rho_base")
                if rg_idx.size:
                    pair_now = self._pair_mat(x)[data_pair_mask]
                    child_sums = np.zeros((n_groups, N_SLICES))
                    np.add.at(child_sums, ppd, pair_now)
                    child_prec = ar1_precision(rho_pair, N_SLICES) / (sd_pair * sd_pair)
                    prior_prec = ar1_precision(rho_group, N_SLICES) / (sd_group * sd_group)
                    prior_mean = (
                        self._base_mat(x)[self.group_parent[rg_idx]]
                        if self.has_base
                        else np.zeros((rg_idx.size, N_SLICES))
                    )
                    draws = conditional_gaussian_draws(
                        n_child_group, child_sums[rg_idx], child_prec, prior_mean, prior_prec, rng
                    )
                    x[group_rows[rg_idx]] = draws
                    adapt.accept_sum[group_ids[rg_idx]] += 1.0
                    adapt.accept_n[group_ids[rg_idx]] += 1.0
                if self.has_base and rb_idx.size:
                    group_now = self._group_mat(x)[rg_idx]
                    child_sums = np.zeros((len(self.base_keys), N_SLICES))
                    np.add.at(child_sums, rg_parent, group_now)
                    child_prec = ar1_precision(rho_group, N_SLICES) / (sd_group * sd_group)
                    prior_prec = ar1_precision(rho_base, N_SLICES) / (sd_base * sd_base)
                    draws = conditional_gaussian_draws(
                        n_child_base, child_sums[rb_idx], child_prec,
                        np.zeros((rb_idx.size, N_SLICES)), prior_prec, rng,
                    )
                    x[base_rows[rb_idx]] = draws
                    adapt.accept_sum[base_ids[rb_idx]] += 1.0
                    adapt.accept_n[base_ids[rb_idx]] += 1.0

                # Hyperparameter MH over retained residuals.
                def level_terms(name: str, value: float) -> float:
                    if name.startswith("sd_") and value <= 0:
                        return -math.inf
                    if name.startswith("rho_") and not (cfg.rho_lo < value < cfg.rho_hi):
                        return -math.inf
                    level = name.split("_", 1)[1]
                    if level == "pair":
                        e = self._pair_mat(x)[data_pair_mask]
                        mean = self._group_mat(x)[ppd]
                        sd_v = value if name == "sd_pair" else self._scalar(x, "sd_pair")
                        rho_v = value if name == "rho_pair" else self._scalar(x, "rho_pair")
                    elif level == "group":
                        e = self._group_mat(x)[retained_group]
                        mean = (
                            self._base_mat(x)[self.group_parent[retained_group]]
                            if self.has_base else 0.0
                        )
                        sd_v = value if name == "sd_group" else self._scalar(x, "sd_group")
                        rho_v = value if name == "rho_group" else self._scalar(x, "rho_group")
                    else:
                        e = self._base_mat(x)[retained_base]
                        mean = 0.0
                        sd_v = value if name == "sd_base" else self._scalar(x, "sd_base")
                        rho_v = value if name == "rho_base" else self._scalar(x, "rho_base")
                    if e.shape[0] == 0:
                        total = 0.0
                    else:
                        total = float(ar1_logpdf(e, mean, sd_v, rho_v).sum())
                    if name.startswith("sd_"):
                        total += gamma_logpdf(value, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
                    return total

                for name in self._scalar_names:
                    idx = self._scalar_offset[name]

                    def delta(cur: float, prop: float, _name=name) -> float:
                        after = level_terms(_name, prop)
                        if not np.isfinite(after):
                            return -math.inf
                        return after - level_terms(_name, cur)

                    mh_scalar_update(x, idx, block_id[name], delta, adapt, rng)

                # Funnel moves: rescale each level's spread with its residuals.
                def hyper_delta(cur_s: float, prop_s: float) -> float:
                    return gamma_logpdf(prop_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate) - gamma_logpdf(
                        cur_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate
                    )

                if data_pair_rows.size:
                    group_now = self._group_mat(x)
                    parents_now = group_now[ppd]

                    def ext_pair(cur, prop):
                        x_tmp = x.copy()
                        x_tmp[data_pair_rows] = prop
                        return self.loglik(x_tmp) - self.loglik(x)

                    mh_scale_move(
                        x, self._scalar_offset["sd_pair"], data_pair_rows,
                        parents_now, ext_pair, hyper_delta, rng,
                    )

                # Deep funnel moves: rescale a tier's spread and residuals while
                # translating every descendant pair along, so only the data-pair
                # likelihood (and the hyperprior, and one +log c) reacts.
                def deep_scale(sigma_name: str, tier_rows, tier_residual_parents,
                               pair_shift_of, mid_rows=None, mid_shift_of=None) -> None:
                    eps = 0.25 * float(rng.standard_normal())
                    c = float(np.exp(eps))
                    sigma = self._scalar(x, sigma_name)
                    cur_tier = x[tier_rows]
                    shift = (c - 1.0) * (cur_tier - tier_residual_parents)
                    x_tmp = x.copy()
                    x_tmp[tier_rows] = cur_tier + shift
                    if mid_rows is not None and mid_rows.size:
                        x_tmp[mid_rows] = x[mid_rows] + mid_shift_of(shift)
                    if data_pair_rows.size:
                        x_tmp[data_pair_rows] = x[data_pair_rows] + pair_shift_of(shift)
                    delta = hyper_delta(sigma, c * sigma) + eps
                    delta += self.loglik(x_tmp) - self.loglik(x)
                    if np.log(rng.random() + 1e-300) < delta:
                        x[tier_rows] = x_tmp[tier_rows]
                        if mid_rows is not None and mid_rows.size:
                            x[mid_rows] = x_tmp[mid_rows]
                        if data_pair_rows.size:
                            x[data_pair_rows] = x_tmp[data_pair_rows]
                        x[self._scalar_offset[sigma_name]] = c * sigma
                        # Collapsed descendants are redrawn below from the new
                        # scales, so only retained coordinates move here.

                if rg_idx.size:
                    base_mean_sel = (
                        self._base_mat(x)[self.group_parent[rg_idx]] if self.has_base else 0.0
                    )
                    sub_g = np.full(n_groups, -1, dtype=np.intp)
                    sub_g[rg_idx] = np.arange(rg_idx.size)

                    deep_scale(
                        "sd_group", group_rows[rg_idx], base_mean_sel,
                        lambda shift: shift[sub_g[ppd]],
                    )

                if self.has_base and rb_idx.size:
                    sub_b = np.full(len(self.base_keys), -1, dtype=np.intp)
                    sub_b[rb_idx] = np.arange(rb_idx.size)

                    deep_scale(
                        "sd_base", base_rows[rb_idx], 0.0,
                        lambda shift: shift[sub_b[self.group_parent[ppd]]],
                        mid_rows=group_rows[rg_idx],
                        mid_shift_of=lambda shift: shift[sub_b[self.group_parent[rg_idx]]],
                    )

                # Correlation remaps for the upper tiers: residuals re-correlate
                # under the proposed rho while descendants translate along, so
                # only the data likelihood reacts (determinant cancels Jacobian).
                def tier_rho_remap(rho_name: str, tier_rows_sel, parents_sel,
                                   child_rows, child_shift_map) -> None:
                    rho_cur2 = self._scalar(x, rho_name)
                    rho_prop2 = rho_cur2 + 0.15 * float(rng.standard_normal())
                    u2 = float(rng.random())
                    if not (cfg.rho_lo < rho_prop2 < cfg.rho_hi):
                        return
                    l_c = chol_of(rho_cur2)
                    l_p = chol_of(rho_prop2)
                    remap_m = l_p @ np.linalg.inv(l_c)
                    cur_t = x[tier_rows_sel]
                    new_t = parents_sel + (cur_t - parents_sel) @ remap_m.T
                    shift_t = new_t - cur_t
                    x_tmp = x.copy()
                    x_tmp[tier_rows_sel] = new_t
                    for rows2, mapping in ((child_rows, child_shift_map),):
                        if rows2 is not None and rows2.size:
                            x_tmp[rows2] = x[rows2] + shift_t[mapping]
                    d2 = self.loglik(x_tmp) - self.loglik(x)
                    if np.log(u2 + 1e-300) < d2:
                        x[tier_rows_sel] = x_tmp[tier_rows_sel]
                        if child_rows is not None and child_rows.size:
                            x[child_rows] = x_tmp[child_rows]
                        x[self._scalar_offset[rho_name]] = rho_prop2

                if rg_idx.size:
                    sub_rg = np.full(n_groups, -1, dtype=np.intp)
                    sub_rg[rg_idx] = np.arange(rg_idx.size)
                    parents_g = (
                        self._base_mat(x)[self.group_parent[rg_idx]]
                        if self.has_base else np.zeros((rg_idx.size, N_SLICES))
                    )
                    tier_rho_remap(
                        "rho_group", group_rows[rg_idx], parents_g,
                        data_pair_rows, sub_rg[ppd],
                    )
                if self.has_base and rb_idx.size:
                    sub_rb = np.full(len(self.base_keys), -1, dtype=np.intp)
                    sub_rb[rb_idx] = np.arange(rb_idx.size)
                    # Base remap translates groups AND pairs: do groups via a
                    # combined child set (single translation map suffices since
                    # pair shifts equal their base cell's shift too).
                    rho_cur3 = self._scalar(x, "rho_base")
                    rho_prop3 = rho_cur3 + 0.15 * float(rng.standard_normal())
                    u3 = float(rng.random())
                    if cfg.rho_lo < rho_prop3 < cfg.rho_hi:
                        l_c = chol_of(rho_cur3)
                        l_p = chol_of(rho_prop3)
                        remap_m = l_p @ np.linalg.inv(l_c)
                        cur_b = x[base_rows[rb_idx]]
                        new_b = cur_b @ remap_m.T
                        shift_b = new_b - cur_b
                        x_tmp = x.copy()
                        x_tmp[base_rows[rb_idx]] = new_b
                        x_tmp[group_rows[rg_idx]] = (
                            x[group_rows[rg_idx]] + shift_b[sub_rb[self.group_parent[rg_idx]]]
                        )
                        if data_pair_rows.size:
                            x_tmp[data_pair_rows] = (
                                x[data_pair_rows]
                                + shift_b[sub_rb[self.group_parent[ppd]]]
                            )
                        d3 = self.loglik(x_tmp) - self.loglik(x)
                        if np.log(u3 + 1e-300) < d3:
                            x[base_rows[rb_idx]] = x_tmp[base_rows[rb_idx]]
                            x[group_rows[rg_idx]] = x_tmp[group_rows[rg_idx]]
                            if data_pair_rows.size:
                                x[data_pair_rows] = x_tmp[data_pair_rows]
                            x[self._scalar_offset["rho_base"]] = rho_prop3

                # Correlation remap for the pair tier: re-correlate residuals
                # deterministically under a proposed rho; the own prior term is
                # invariant up to the determinant, so only the hyperprior
                # bounds, the data likelihood, and the Jacobian react.
                if data_pair_rows.size:
                    rho_cur = self._scalar(x, "rho_pair")
                    rho_prop = rho_cur + 0.15 * float(rng.standard_normal())
                    u = float(rng.random())
                    if cfg.rho_lo < rho_prop < cfg.rho_hi:
                        l_cur = chol_of(rho_cur)
                        l_prop = chol_of(rho_prop)
                        remap = l_prop @ np.linalg.inv(l_cur)
                        group_now4 = self._group_mat(x)
                        means4 = group_now4[ppd]
                        resid = x[data_pair_rows] - means4
                        x_tmp = x.copy()
                        x_tmp[data_pair_rows] = means4 + resid @ remap.T
                        # The own-prior determinant change cancels the map's
                        # Jacobian exactly, leaving only the likelihood.
                        delta = self.loglik(x_tmp) - self.loglik(x)
                        if np.log(u + 1e-300) < delta:
                            x[data_pair_rows] = x_tmp[data_pair_rows]
                            x[self._scalar_offset["rho_pair"]] = rho_prop


            for _ in range(3):
                hierarchy_updates()

            # Exact top-down conditional draws for all collapsed tiers.
            if self.has_base and not retained_base.all():
                free_b = np.flatnonzero(~retained_base)
                sd_b2 = self._scalar(x, "sd_base")
                z = rng.standard_normal((free_b.size, N_SLICES))
                x[base_rows[free_b]] = sd_b2 * (z @ chol_of(self._scalar(x, "rho_base")).T)
                adapt.accept_sum[base_ids[free_b]] += 1.0
                adapt.accept_n[base_ids[free_b]] += 1.0
            if not retained_group.all():
                free_g = np.flatnonzero(~retained_group)
                sd_g2 = self._scalar(x, "sd_group")
                z = rng.standard_normal((free_g.size, N_SLICES))
                means_g = (
                    self._base_mat(x)[self.group_parent[free_g]] if self.has_base else 0.0
                )
                x[group_rows[free_g]] = means_g + sd_g2 * (z @ chol_of(self._scalar(x, "rho_group")).T)
                adapt.accept_sum[group_ids[free_g]] += 1.0
                adapt.accept_n[group_ids[free_g]] += 1.0
            if prior_only_pairs.size:
                sd_now = self._scalar(x, "sd_pair")
                means_po = self._group_mat(x)[self.pair_parent[prior_only_pairs]]
                z = rng.standard_normal((prior_only_pairs.size, N_SLICES))
                x[prior_only_rows] = means_po + sd_now * (z @ chol_of(self._scalar(x, "rho_pair")).T)
                adapt.accept_sum[prior_only_pairs] += 1.0
                adapt.accept_n[prior_only_pairs] += 1.0

        return sweep


# -- standard parent maps ------------------------------------------------------


def player_parent_maps(space: StateSpace):
    """Parent key functions for a player-level model keyed by state labels."""

    cell_of_label = {
        s.label(): position_cell_of(space, i) for i, s in enumerate(space.states)
    }

    def parent(origin_key, dest_key):
        o = cell_of_label[origin_key]
        d = None if dest_key is None else cell_of_label[dest_key]
        return (o, d)

    def grandparent(group_key):
        (og, oreg, oz), d = group_key
        dd = None if d is None else (d[1], d[2])
        return ((oreg, oz), dd)

    return parent, grandparent


def position_parent_map():
    """Parent key function for a position-level (two-tier) model."""

    def parent(origin_key, dest_key):
        g, r, z = origin_key
        dd = None if dest_key is None else (dest_key[1], dest_key[2])
        return ((r, z), dd)

    return parent
