"""Hierarchical shot-efficiency model and the expected-points reward.

Make probability is a logit of a player/region skill plus a region-specific
additive contest penalty; skills shrink through crossed shot groups to
region baselines. Skills are scalars: shooting ability is treated as
constant over the shot clock. Expected points scale make probability by the
2/3-point value of the region. Backcourt shots skip the player tier and use
the shot-group level directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tmdp.config import ModelConfig
from tmdp.errors import RejectedInputError
from tmdp.hier_models.ar1 import gamma_grad, gamma_logpdf
from tmdp.mcmc_blocks import (
    AdaptState,
    ParamLayout,
    mh_alpha,
    mh_group_update,
    mh_scalar_update,
    mh_scale_move,
)
from tmdp.state_model.events import Action
from tmdp.state_model.states import CourtRegion, StateId, StateSpace, Terminal, shot_value

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _norm_logpdf(x: np.ndarray, mean, sd: float) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - mean) / sd
    return -_LOG_SQRT_2PI - math.log(sd) - 0.5 * z * z


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softplus(x):
    return np.logaddexp(0.0, x)


@dataclass
class RewardData:
    """Shot outcomes aggregated by (player, region, pressure)."""

    space: StateSpace
    attempts: np.ndarray  # (n_players, n_regions, 2)
    makes: np.ndarray

    @classmethod
    def from_episodes(cls, episodes, space: StateSpace) -> "RewardData":
        np_, nr = len(space.players), len(space.regions)
        attempts = np.zeros((np_, nr, 2))
        makes = np.zeros((np_, nr, 2))
        pidx = {p.player_id: i for i, p in enumerate(space.players)}
        ridx = {r: i for i, r in enumerate(space.regions)}
        for ep in episodes:
            if not ep.steps or ep.steps[-1].action is not Action.SHOOT:
                continue
            s = ep.steps[-1].state
            z = 1 if s.contested else 0
            attempts[pidx[s.player_id], ridx[s.region], z] += 1
            if ep.terminal is Terminal.MADE_SHOT:
                makes[pidx[s.player_id], ridx[s.region], z] += 1
        return cls(space, attempts, makes)


class RewardModel:
    """Log-posterior evaluator and Gibbs sweeper for shot efficiency."""

    def __init__(self, data: RewardData, config: ModelConfig | None = None):
        self.data = data
        self.config = config or ModelConfig()
        space = data.space
        self.regions = list(space.regions)
        self.n_regions = len(self.regions)
        self._ridx = {r: i for i, r in enumerate(self.regions)}

        groups = sorted({p.shot_group or 0 for p in space.players})
        self.groups = groups
        self._gidx = {g: i for i, g in enumerate(groups)}
        self.player_group = np.array(
            [self._gidx[p.shot_group or 0] for p in space.players], dtype=np.intp
        )

        self.bc_region = (
            self._ridx[CourtRegion.BACKCOURT] if CourtRegion.BACKCOURT in self._ridx else -1
        )
        # Player-level skill cells: (player, region) for non-backcourt regions.
        self.skill_regions = [i for i, r in enumerate(self.regions) if r is not CourtRegion.BACKCOURT]
        self.n_players = len(space.players)
        self._build_layout()

    def _build_layout(self) -> None:
        space = self.data.space
        spec: list[tuple[str, int]] = []
        for p in space.players:
            for ri in self.skill_regions:
                spec.append((f"skill[{p.player_id}:{self.regions[ri].value}]", 1))
        for g in self.groups:
            for r in self.regions:
                spec.append((f"group_skill[h{g}:{r.value}]", 1))
        for r in self.regions:
            spec.append((f"region_skill[{r.value}]", 1))
        for r in self.regions:
            spec.append((f"contest_effect[{r.value}]", 1))
        spec += [("sd_skill", 1), ("sd_group", 1), ("sd_region", 1)]
        self.layout = ParamLayout.build(spec)

        n_skill = self.n_players * len(self.skill_regions)
        n_group = len(self.groups) * self.n_regions
        self._sl_skill = slice(0, n_skill)
        self._sl_group = slice(n_skill, n_skill + n_group)
        self._sl_region = slice(self._sl_group.stop, self._sl_group.stop + self.n_regions)
        self._sl_contest = slice(self._sl_region.stop, self._sl_region.stop + self.n_regions)
        self._off_sd = {
            "sd_skill": self._sl_contest.stop,
            "sd_group": self._sl_contest.stop + 1,
            "sd_region": self._sl_contest.stop + 2,
        }
        # Parent group cell of each (player, skill-region) cell.
        self.skill_parent = np.array(
            [
                self.player_group[p] * self.n_regions + ri
                for p in range(self.n_players)
                for ri in self.skill_regions
            ],
            dtype=np.intp,
        )
        self.group_parent = np.array(
            [ri for _ in self.groups for ri in range(self.n_regions)], dtype=np.intp
        )

    # -- views ----------------------------------------------------------------

    def _skill(self, x):
        return x[self._sl_skill].reshape(self.n_players, len(self.skill_regions))

    def _group(self, x):
        return x[self._sl_group].reshape(len(self.groups), self.n_regions)

    def _region(self, x):
        return x[self._sl_region]

    def _contest(self, x):
        return x[self._sl_contest]

    def _sds(self, x):
        return (float(x[self._off_sd["sd_skill"]]),
                float(x[self._off_sd["sd_group"]]),
                float(x[self._off_sd["sd_region"]]))

    # -- make probabilities -----------------------------------------------------

    def eta_cells(self, x: np.ndarray) -> np.ndarray:
        """Make logits over (player, region, pressure)."""
        eta = np.empty((self.n_players, self.n_regions, 2))
        skill = self._skill(x)
        group = self._group(x)
        contest = self._contest(x)
        full = np.empty((self.n_players, self.n_regions))
        for j, ri in enumerate(self.skill_regions):
            full[:, ri] = skill[:, j]
        if self.bc_region >= 0:
            full[:, self.bc_region] = group[self.player_group, self.bc_region]
        eta[:, :, 0] = full
        eta[:, :, 1] = full + contest[None, :]
        return eta

    def make_probability(self, x: np.ndarray, state: StateId) -> float:
        if isinstance(state, Terminal):
            raise RejectedInputError("terminal sentinels have no make probability")
        space = self.data.space
        p = [pl.player_id for pl in space.players].index(state.player_id)
        r = self._ridx[state.region]
        z = 1 if state.contested else 0
        return float(_sigmoid(self.eta_cells(x)[p, r, z]))

    def expected_points(self, x: np.ndarray, state: StateId) -> float:
        """Make probability scaled by the 2/3-point value of the region."""
        if isinstance(state, Terminal):
            raise RejectedInputError("terminal sentinels carry no reward")
        return self.make_probability(x, state) * shot_value(state.region)

    def expected_points_table(self, x: np.ndarray) -> np.ndarray:
        """(n_states,) expected points per shot aligned with the state space."""
        eta = self.eta_cells(x)
        space = self.data.space
        out = np.empty(space.n_states)
        for i, s in enumerate(space.states):
            p = i // (2 * self.n_regions)
            r = self._ridx[s.region]
            z = 1 if s.contested else 0
            out[i] = _sigmoid(eta[p, r, z]) * shot_value(s.region)
        return out

    def make_prob_table(self, x: np.ndarray) -> np.ndarray:
        eta = self.eta_cells(x)
        space = self.data.space
        out = np.empty(space.n_states)
        for i, s in enumerate(space.states):
            p = i // (2 * self.n_regions)
            out[i] = _sigmoid(eta[p, self._ridx[s.region], 1 if s.contested else 0])
        return out

    # -- log posterior ----------------------------------------------------------

    def loglik(self, x: np.ndarray) -> float:
        eta = self.eta_cells(x)
        m, n = self.data.makes, self.data.attempts
        return float((m * eta - n * _softplus(eta)).sum())

    def logpost(self, x: np.ndarray) -> float:
        sd_skill, sd_group, sd_region = self._sds(x)
        if min(sd_skill, sd_group, sd_region) <= 0:
            return -math.inf
        cfg = self.config
        total = self.loglik(x)
        skill = self._skill(x).reshape(-1)
        group = self._group(x).reshape(-1)
        region = self._region(x)
        contest = self._contest(x)
        total += _norm_logpdf(skill, group[self.skill_parent], sd_skill).sum()
        total += _norm_logpdf(group, region[self.group_parent], sd_group).sum()
        total += _norm_logpdf(region, 0.0, sd_region).sum()
        total += _norm_logpdf(contest, 0.0, sd_region).sum()
        for sd in (sd_skill, sd_group, sd_region):
            total += gamma_logpdf(sd, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        return float(total)

    def grad_logpost(self, x: np.ndarray) -> np.ndarray:
        sd_skill, sd_group, sd_region = self._sds(x)
        if min(sd_skill, sd_group, sd_region) <= 0:
            raise RejectedInputError("gradient outside support")
        g = np.zeros_like(x)
        eta = self.eta_cells(x)
        g_eta = self.data.makes - self.data.attempts * _sigmoid(eta)  # (P, R, 2)

        # Likelihood gradients.
        g_full = g_eta.sum(axis=2)  # d/d(base logit per (player, region))
        skill_grad = np.zeros((self.n_players, len(self.skill_regions)))
        for j, ri in enumerate(self.skill_regions):
            skill_grad[:, j] = g_full[:, ri]
        group_grad = np.zeros((len(self.groups), self.n_regions))
        if self.bc_region >= 0:
            np.add.at(group_grad[:, self.bc_region], self.player_group, g_full[:, self.bc_region])
        contest_grad = g_eta[:, :, 1].sum(axis=0)

        skill = self._skill(x).reshape(-1)
        group = self._group(x).reshape(-1)
        region = self._region(x)
        contest = self._contest(x)

        e_skill = skill - group[self.skill_parent]
        skill_prior = -e_skill / sd_skill**2
        g[self._sl_skill] = skill_grad.reshape(-1) + skill_prior
        back_to_group = np.zeros_like(group)
        np.add.at(back_to_group, self.skill_parent, e_skill / sd_skill**2)

        e_group = group - region[self.group_parent]
        g[self._sl_group] = group_grad.reshape(-1) - e_group / sd_group**2 + back_to_group
        back_to_region = np.zeros_like(region)
        np.add.at(back_to_region, self.group_parent, e_group / sd_group**2)

        g[self._sl_region] = -region / sd_region**2 + back_to_region
        g[self._sl_contest] = contest_grad - contest / sd_region**2

        cfg = self.config
        g[self._off_sd["sd_skill"]] = (
            (e_skill**2 / sd_skill**3 - 1.0 / sd_skill).sum()
            + gamma_grad(sd_skill, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        )
        g[self._off_sd["sd_group"]] = (
            (e_group**2 / sd_group**3 - 1.0 / sd_group).sum()
            + gamma_grad(sd_group, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        )
        g[self._off_sd["sd_region"]] = (
            (region**2 / sd_region**3 - 1.0 / sd_region).sum()
            + (contest**2 / sd_region**3 - 1.0 / sd_region).sum()
            + gamma_grad(sd_region, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        )
        return g

    def sample_prior(self, rng: np.random.Generator) -> np.ndarray:
        """One draw of the full parameter vector from the hierarchical prior."""
        cfg = self.config
        x = np.zeros(self.layout.dim)
        sds = {
            name: float(rng.gamma(cfg.sd_hyper_shape, 1.0 / cfg.sd_hyper_rate))
            for name in ("sd_skill", "sd_group", "sd_region")
        }
        for name, v in sds.items():
            x[self._off_sd[name]] = v
        region = sds["sd_region"] * rng.standard_normal(self.n_regions)
        self._region(x)[:] = region
        self._contest(x)[:] = sds["sd_region"] * rng.standard_normal(self.n_regions)
        group = region[self.group_parent] + sds["sd_group"] * rng.standard_normal(
            len(self.groups) * self.n_regions
        )
        x[self._sl_group] = group
        x[self._sl_skill] = group[self.skill_parent] + sds["sd_skill"] * rng.standard_normal(
            self.n_players * len(self.skill_regions)
        )
        return x

    def init_point(self) -> np.ndarray:
        x = np.zeros(self.layout.dim)
        m, n = self.data.makes, self.data.attempts
        with np.errstate(divide="ignore", invalid="ignore"):
            p = (m.sum(axis=2) + 0.5) / (n.sum(axis=2) + 1.0)
            logit = np.clip(np.log(p / (1 - p)), -4, 4)
        logit = np.where(n.sum(axis=2) > 0, logit, 0.0)
        skill = self._skill(x)
        for j, ri in enumerate(self.skill_regions):
            skill[:, j] = logit[:, ri]
        for name in self._off_sd:
            x[self._off_sd[name]] = 1.0
        return x

    # -- Gibbs sweep ---------------------------------------------------------

    def make_sweeper(self):
        """Sweep: MH for data-carrying skills and contest effects, conjugate
        Gaussian draws for the group and region tiers, cluster translations
        per region, and deep scale moves for the spreads. Attempt-free
        skills are collapsed and redrawn exactly at the end.
        """
        block_id = {b.name: i for i, b in enumerate(self.layout.blocks)}
        skill_rows = np.arange(self._sl_skill.start, self._sl_skill.stop).reshape(-1, 1)
        skill_ids = np.arange(len(skill_rows), dtype=np.intp)
        group_rows = np.arange(self._sl_group.start, self._sl_group.stop)
        group_ids = np.arange(len(group_rows), dtype=np.intp) + len(skill_rows)
        region_rows = np.arange(self._sl_region.start, self._sl_region.stop)
        region_ids = np.arange(self.n_regions, dtype=np.intp) + len(skill_rows) + len(group_rows)
        contest_rows = np.arange(self._sl_contest.start, self._sl_contest.stop).reshape(-1, 1)
        contest_ids = region_ids + self.n_regions
        cfg = self.config
        n_groups = len(self.groups) * self.n_regions

        sk_att = np.stack(
            [self.data.attempts[:, self.skill_regions, z] for z in (0, 1)], axis=-1
        ).reshape(-1, 2)
        sk_mk = np.stack(
            [self.data.makes[:, self.skill_regions, z] for z in (0, 1)], axis=-1
        ).reshape(-1, 2)
        contest_of_skill = np.array(
            [ri for _ in range(self.n_players) for ri in self.skill_regions], dtype=np.intp
        )
        region_of_skill = contest_of_skill
        if self.bc_region >= 0:
            bc_att = np.zeros((len(self.groups), 2))
            bc_mk = np.zeros((len(self.groups), 2))
            for pl in range(self.n_players):
                bc_att[self.player_group[pl]] += self.data.attempts[pl, self.bc_region]
                bc_mk[self.player_group[pl]] += self.data.makes[pl, self.bc_region]
            bc_cells = np.array(
                [gi * self.n_regions + self.bc_region for gi in range(len(self.groups))],
                dtype=np.intp,
            )
            bc_has_data = bc_att.sum(axis=1) > 0
        att_z1 = self.data.attempts[:, :, 1]
        mk_z1 = self.data.makes[:, :, 1]

        has_data = sk_att.sum(axis=1) > 0
        data_skill_rows = skill_rows[has_data]
        data_skill_ids = skill_ids[has_data]
        free_skill_rows = skill_rows[~has_data].reshape(-1)
        free_skill_ids = skill_ids[~has_data]
        free_parents = self.skill_parent[~has_data]
        sk_att_d = sk_att[has_data]
        sk_mk_d = sk_mk[has_data]
        contest_of_skill_d = contest_of_skill[has_data]
        skill_parent_d = self.skill_parent[has_data]
        region_of_skill_d = region_of_skill[has_data]

        n_child_group = np.bincount(skill_parent_d, minlength=n_groups).astype(float)
        group_has_bc = np.zeros(n_groups, dtype=bool)
        if self.bc_region >= 0:
            group_has_bc[bc_cells[bc_has_data]] = True
        group_retained = (n_child_group > 0) | group_has_bc
        group_conjugate = (n_child_group > 0) & ~group_has_bc
        n_child_region = np.bincount(
            self.group_parent[group_retained], minlength=self.n_regions
        ).astype(float)

        def bern_delta(mk, att, eta_cur, eta_prop):
            return mk * (eta_prop - eta_cur) - att * (_softplus(eta_prop) - _softplus(eta_cur))

        def sweep(x: np.ndarray, adapt: AdaptState, rng: np.random.Generator) -> None:
            sd_skill, sd_group, sd_region = self._sds(x)

            # ---- data skills MH ---------------------------------------------
            group_flat = x[self._sl_group]
            contest = self._contest(x)

            def skill_delta(cur, prop):
                c = cur[:, 0]
                pr = prop[:, 0]
                xi = contest[contest_of_skill_d]
                d = bern_delta(sk_mk_d[:, 0], sk_att_d[:, 0], c, pr)
                d += bern_delta(sk_mk_d[:, 1], sk_att_d[:, 1], c + xi, pr + xi)
                mean = group_flat[skill_parent_d]
                d += _norm_logpdf(pr, mean, sd_skill) - _norm_logpdf(c, mean, sd_skill)
                return d

            if data_skill_rows.size:
                mh_group_update(x, data_skill_rows, data_skill_ids, skill_delta, adapt, rng)

            def hierarchy_updates() -> None:
                nonlocal sd_skill, sd_group, sd_region
                # Conjugate group draws (no backcourt likelihood on the cell).
                conj = np.flatnonzero(group_conjugate)
                region = self._region(x)
                if conj.size:
                    skills = x[self._sl_skill]
                    sums = np.zeros(n_groups)
                    np.add.at(sums, skill_parent_d, skills[has_data])
                    prec = n_child_group[conj] / sd_skill**2 + 1.0 / sd_group**2
                    mean = (sums[conj] / sd_skill**2 + region[self.group_parent[conj]] / sd_group**2) / prec
                    x[group_rows[conj]] = mean + rng.standard_normal(conj.size) / np.sqrt(prec)
                    adapt.accept_sum[group_ids[conj]] += 1.0
                    adapt.accept_n[group_ids[conj]] += 1.0
                # MH for groups that carry backcourt likelihood.
                bc_sel = np.flatnonzero(group_retained & group_has_bc)
                if bc_sel.size:
                    sub = np.full(n_groups, -1, dtype=np.intp)
                    sub[bc_sel] = np.arange(bc_sel.size)

                    def group_bc_delta(cur, prop):
                        c, pr = cur[:, 0], prop[:, 0]
                        d = np.zeros(bc_sel.size)
                        skills = x[self._sl_skill][has_data]
                        in_sel = sub[skill_parent_d] >= 0
                        if in_sel.any():
                            cc = _norm_logpdf(skills[in_sel], c[sub[skill_parent_d[in_sel]]], sd_skill)
                            cp = _norm_logpdf(skills[in_sel], pr[sub[skill_parent_d[in_sel]]], sd_skill)
                            d += np.bincount(sub[skill_parent_d[in_sel]], weights=cp - cc,
                                             minlength=bc_sel.size).astype(np.float64)
                        mean = region[self.group_parent[bc_sel]]
                        d += _norm_logpdf(pr, mean, sd_group) - _norm_logpdf(c, mean, sd_group)
                        xi = contest[self.bc_region]
                        gi_of_cell = bc_sel // self.n_regions
                        for z in (0, 1):
                            shift = xi if z else 0.0
                            d += bern_delta(
                                bc_mk[gi_of_cell, z], bc_att[gi_of_cell, z],
                                c + shift, pr + shift,
                            )
                        return d

                    mh_group_update(x, group_rows[bc_sel].reshape(-1, 1), group_ids[bc_sel],
                                    group_bc_delta, adapt, rng)
                # Conjugate region draws (children: retained groups).
                groups_now = x[self._sl_group]
                sums_r = np.zeros(self.n_regions)
                np.add.at(sums_r, self.group_parent[group_retained], groups_now[group_retained])
                prec_r = n_child_region / sd_group**2 + 1.0 / sd_region**2
                mean_r = (sums_r / sd_group**2) / prec_r
                x[region_rows] = mean_r + rng.standard_normal(self.n_regions) / np.sqrt(prec_r)
                adapt.accept_sum[region_ids] += 1.0
                adapt.accept_n[region_ids] += 1.0

                # Contest effects MH (likelihood over contested cells).
                base = np.empty((self.n_players, self.n_regions))
                skill_m = self._skill(x)
                group_m = self._group(x)
                for j, ri in enumerate(self.skill_regions):
                    base[:, ri] = skill_m[:, j]
                if self.bc_region >= 0:
                    base[:, self.bc_region] = group_m[self.player_group, self.bc_region]

                def contest_delta(cur, prop):
                    c, pr = cur[:, 0], prop[:, 0]
                    eta_c = base + c[None, :]
                    eta_p = base + pr[None, :]
                    d = bern_delta(mk_z1, att_z1, eta_c, eta_p).sum(axis=0)
                    d += _norm_logpdf(pr, 0.0, sd_region) - _norm_logpdf(c, 0.0, sd_region)
                    return d

                mh_group_update(x, contest_rows, contest_ids, contest_delta, adapt, rng)

                # Scale hyperparameters (retained residuals only).
                region2 = self._region(x)
                groups2 = x[self._sl_group]
                e_skill = (x[self._sl_skill] - groups2[self.skill_parent])[has_data]
                e_group = (groups2 - region2[self.group_parent])[group_retained]
                contest2 = self._contest(x)

                def sd_delta_factory(err_sq_sum: float, count: int, extra_sq: float = 0.0,
                                     extra_n: int = 0):
                    def delta(cur: float, prop: float) -> float:
                        if prop <= 0:
                            return -math.inf
                        tot_n = count + extra_n
                        tot_sq = err_sq_sum + extra_sq
                        before = -tot_n * math.log(cur) - tot_sq / (2 * cur * cur) + gamma_logpdf(
                            cur, cfg.sd_hyper_shape, cfg.sd_hyper_rate
                        )
                        after = -tot_n * math.log(prop) - tot_sq / (2 * prop * prop) + gamma_logpdf(
                            prop, cfg.sd_hyper_shape, cfg.sd_hyper_rate
                        )
                        return after - before

                    return delta

                mh_scalar_update(
                    x, self._off_sd["sd_skill"], block_id["sd_skill"],
                    sd_delta_factory(float((e_skill**2).sum()), e_skill.size), adapt, rng,
                )
                mh_scalar_update(
                    x, self._off_sd["sd_group"], block_id["sd_group"],
                    sd_delta_factory(float((e_group**2).sum()), e_group.size), adapt, rng,
                )
                mh_scalar_update(
                    x, self._off_sd["sd_region"], block_id["sd_region"],
                    sd_delta_factory(
                        float((region2**2).sum()), region2.size,
                        float((contest2**2).sum()), contest2.size,
                    ),
                    adapt, rng,
                )
                sd_skill, sd_group, sd_region = self._sds(x)

                # Deep scale moves: descendants translate along.
                def hyper_delta(cur_s: float, prop_s: float) -> float:
                    return gamma_logpdf(prop_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate) - gamma_logpdf(
                        cur_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate
                    )

                if data_skill_rows.size:
                    group_now = x[self._sl_group]
                    contest_now = self._contest(x)

                    def ext_skill(cur, prop):
                        c, pr = cur[:, 0], prop[:, 0]
                        xi = contest_now[contest_of_skill_d]
                        d = bern_delta(sk_mk_d[:, 0], sk_att_d[:, 0], c, pr)
                        d += bern_delta(sk_mk_d[:, 1], sk_att_d[:, 1], c + xi, pr + xi)
                        return float(d.sum())

                    mh_scale_move(
                        x, self._off_sd["sd_skill"], data_skill_rows,
                        group_now[skill_parent_d][:, None], ext_skill, hyper_delta, rng,
                    )
                    sd_skill = float(x[self._off_sd["sd_skill"]])

                # Deep group scale: groups rescale around regions, data skills follow.
                rg = np.flatnonzero(group_retained)
                if rg.size:
                    eps = 0.25 * float(rng.standard_normal())
                    c_mult = float(np.exp(eps))
                    region3 = self._region(x)
                    cur_g = x[group_rows[rg]]
                    shift_g = (c_mult - 1.0) * (cur_g - region3[self.group_parent[rg]])
                    sub = np.full(n_groups, -1, dtype=np.intp)
                    sub[rg] = np.arange(rg.size)
                    d = hyper_delta(sd_group, c_mult * sd_group) + eps
                    in_rg = sub[skill_parent_d] >= 0
                    if in_rg.any():
                        sk = x[data_skill_rows.reshape(-1)[in_rg]]
                        sh = shift_g[sub[skill_parent_d[in_rg]]]
                        xi = self._contest(x)[contest_of_skill_d[in_rg]]
                        d += float(bern_delta(
                            sk_mk_d[in_rg, 0], sk_att_d[in_rg, 0], sk, sk + sh
                        ).sum())
                        d += float(bern_delta(
                            sk_mk_d[in_rg, 1], sk_att_d[in_rg, 1], sk + xi, sk + sh + xi
                        ).sum())
                    if self.bc_region >= 0 and bc_has_data.any():
                        gi = np.flatnonzero(bc_has_data)
                        cells = bc_cells[gi]
                        ok = sub[cells] >= 0
                        if ok.any():
                            eta = x[group_rows[cells[ok]]]
                            sh = shift_g[sub[cells[ok]]]
                            xi = self._contest(x)[self.bc_region]
                            d += float(bern_delta(bc_mk[gi[ok], 0], bc_att[gi[ok], 0], eta, eta + sh).sum())
                            d += float(bern_delta(bc_mk[gi[ok], 1], bc_att[gi[ok], 1], eta + xi, eta + sh + xi).sum())
                    if np.log(rng.random() + 1e-300) < d:
                        x[group_rows[rg]] = cur_g + shift_g
                        if in_rg.any():
                            x[data_skill_rows.reshape(-1)[in_rg]] += shift_g[sub[skill_parent_d[in_rg]]]
                        x[self._off_sd["sd_group"]] = c_mult * sd_group
                        sd_group = c_mult * sd_group

                # Cluster translations per region: region + groups + skills.
                deltas = 0.8 * adapt.scales[region_ids] * rng.standard_normal(self.n_regions)
                region4 = self._region(x)
                d = _norm_logpdf(region4 + deltas, 0.0, sd_region)
                d -= _norm_logpdf(region4, 0.0, sd_region)
                if data_skill_rows.size:
                    sk = x[data_skill_rows.reshape(-1)]
                    sh = deltas[region_of_skill_d]
                    xi = self._contest(x)[contest_of_skill_d]
                    lik = bern_delta(sk_mk_d[:, 0], sk_att_d[:, 0], sk, sk + sh)
                    lik += bern_delta(sk_mk_d[:, 1], sk_att_d[:, 1], sk + xi, sk + sh + xi)
                    d += np.bincount(region_of_skill_d, weights=lik,
                                     minlength=self.n_regions).astype(np.float64)
                if self.bc_region >= 0 and bc_has_data.any():
                    gi = np.flatnonzero(bc_has_data)
                    eta = x[group_rows[bc_cells[gi]]]
                    sh = deltas[self.bc_region]
                    xi = self._contest(x)[self.bc_region]
                    lik = bern_delta(bc_mk[gi, 0], bc_att[gi, 0], eta, eta + sh)
                    lik += bern_delta(bc_mk[gi, 1], bc_att[gi, 1], eta + xi, eta + sh + xi)
                    d[self.bc_region] += float(lik.sum())
                alpha = mh_alpha(d)
                accept = rng.random(self.n_regions) < alpha
                adapt.record(region_ids, alpha)
                if accept.any():
                    x[region_rows[accept]] += deltas[accept]
                    moved_groups = accept[self.group_parent]
                    x[group_rows[moved_groups]] += deltas[self.group_parent[moved_groups]]
                    if data_skill_rows.size:
                        moved_sk = accept[region_of_skill_d]
                        if moved_sk.any():
                            x[data_skill_rows.reshape(-1)[moved_sk]] += deltas[
                                region_of_skill_d[moved_sk]
                            ]

            for _ in range(3):
                hierarchy_updates()

            # Exact conditional draws for the collapsed attempt-free curves.
            sd_skill, sd_group, sd_region = self._sds(x)
            if not group_retained.all():
                free_g = np.flatnonzero(~group_retained)
                region5 = self._region(x)
                x[group_rows[free_g]] = (
                    region5[self.group_parent[free_g]]
                    + sd_group * rng.standard_normal(free_g.size)
                )
                adapt.accept_sum[group_ids[free_g]] += 1.0
                adapt.accept_n[group_ids[free_g]] += 1.0
            if free_skill_rows.size:
                group_now = x[self._sl_group]
                x[free_skill_rows] = (
                    group_now[free_parents] + sd_skill * rng.standard_normal(free_skill_rows.size)
                )
                adapt.accept_sum[free_skill_ids] += 1.0
                adapt.accept_n[free_skill_ids] += 1.0

        return sweep
