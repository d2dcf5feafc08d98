"""Hierarchical shot-policy model.

Each non-backcourt state carries a length-8 logit curve over clock slices;
curves shrink toward position-level curves, which shrink toward league-level
region/pressure curves. All three levels use AR(1) priors across slices.
Backcourt states are too thin for player curves and attach directly to the
position level. Level variants ("position", "region") drop the lower tiers
and are used for the model-complexity ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

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
)
from tmdp.state_model.events import Action
from tmdp.state_model.states import N_SLICES, CourtRegion, StateSpace

LEVELS = ("player", "position", "region")


@dataclass
class PolicyData:
    """Per-(state, slice) shot and event counts."""

    space: StateSpace
    shots: np.ndarray   # (n_states, 8)
    events: np.ndarray  # (n_states, 8)

    @classmethod
    def from_episodes(cls, episodes, space: StateSpace) -> "PolicyData":
        shots = np.zeros((space.n_states, N_SLICES))
        events = np.zeros((space.n_states, N_SLICES))
        for ep in episodes:
            for step in ep.steps:
                i = space.index(step.state)
                t = step.slice_index - 1
                events[i, t] += 1
                if step.action is Action.SHOOT:
                    shots[i, t] += 1
        return cls(space, shots, events)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _empirical_logit(shots: np.ndarray, events: np.ndarray, clip: float = 4.0) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (shots + 0.5) / (events + 1.0)
        logit = np.log(p / (1.0 - p))
    logit = np.where(events > 0, logit, 0.0)
    return np.clip(logit, -clip, clip)


class PolicyModel:
    """Log-posterior evaluator and Gibbs sweeper for the shot-policy tensor."""

    def __init__(self, data: PolicyData, config: ModelConfig | None = None,
                 levels: str = "player"):
        if levels not in LEVELS:
            raise RejectedInputError(f"levels must be one of {LEVELS}")
        self.data = data
        self.config = config or ModelConfig()
        self.levels = levels
        space = data.space

        self.league_cells = [(r, z) for r in space.regions for z in (False, True)]
        self._league_index = {c: i for i, c in enumerate(self.league_cells)}
        self.position_cells = [
            (g, r, z) for g in space.positions for r in space.regions for z in (False, True)
        ]
        self._position_index = {c: i for i, c in enumerate(self.position_cells)}
        self.position_parent = np.array(
            [self._league_index[(r, z)] for (_, r, z) in self.position_cells], dtype=np.intp
        )

        # State -> position cell / league cell.
        self.state_pos_cell = np.array(
            [
                self._position_index[(space.position_of(s.player_id), s.region, s.contested)]
                for s in space.states
            ],
            dtype=np.intp,
        )
        self.state_league_cell = np.array(
            [self._league_index[(s.region, s.contested)] for s in space.states], dtype=np.intp
        )

        if levels == "player":
            self.player_states = np.array(
                [i for i, s in enumerate(space.states) if s.region is not CourtRegion.BACKCOURT],
                dtype=np.intp,
            )
            self.backcourt_states = np.array(
                [i for i, s in enumerate(space.states) if s.region is CourtRegion.BACKCOURT],
                dtype=np.intp,
            )
        else:
            self.player_states = np.array([], dtype=np.intp)
            self.backcourt_states = np.array([], dtype=np.intp)
        self.player_parent = self.state_pos_cell[self.player_states]
        self.backcourt_parent = self.state_pos_cell[self.backcourt_states]

        self._build_layout()
        self._data_rows = np.flatnonzero(data.events.sum(axis=1) > 0)

    # -- layout ---------------------------------------------------------------

    def _build_layout(self) -> None:
        spec: list[tuple[str, int]] = []
        space = self.data.space
        if self.levels == "player":
            for i in self.player_states:
                spec.append((f"player[{space.states[i].label()}]", N_SLICES))
        if self.levels in ("player", "position"):
            for g, r, z in self.position_cells:
                zl = "c" if z else "o"
                spec.append((f"position[{g}:{r.value}:{zl}]", N_SLICES))
        for r, z in self.league_cells:
            zl = "c" if z else "o"
            spec.append((f"league[{r.value}:{zl}]", N_SLICES))
        if self.levels == "player":
            spec.append(("sd_player", 1))
        if self.levels in ("player", "position"):
            spec.append(("sd_position", 1))
        spec.append(("sd_league", 1))
        if self.levels == "player":
            spec.append(("rho_player", 1))
        if self.levels in ("player", "position"):
            spec.append(("rho_position", 1))
        spec.append(("rho_league", 1))
        self.layout = ParamLayout.build(spec)

        n_player = len(self.player_states)
        n_pos = len(self.position_cells)
        n_league = len(self.league_cells)
        offset = 0
        if self.levels == "player":
            self._sl_player = slice(0, n_player * N_SLICES)
            offset = self._sl_player.stop
        else:
            self._sl_player = slice(0, 0)
        if self.levels in ("player", "position"):
            self._sl_position = slice(offset, offset + n_pos * N_SLICES)
            offset = self._sl_position.stop
        else:
            self._sl_position = slice(offset, offset)
        self._sl_league = slice(offset, offset + n_league * N_SLICES)
        offset = self._sl_league.stop
        self._scalar_names = [b.name for b in self.layout.blocks if b.size == 1]
        self._scalar_offset = {n: offset + i for i, n in enumerate(self._scalar_names)}

    # -- views ----------------------------------------------------------------

    def _player_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_player].reshape(-1, N_SLICES)

    def _position_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_position].reshape(-1, N_SLICES)

    def _league_mat(self, x: np.ndarray) -> np.ndarray:
        return x[self._sl_league].reshape(-1, N_SLICES)

    def _scalar(self, x: np.ndarray, name: str) -> float:
        return float(x[self._scalar_offset[name]])

    def _scalars_ok(self, x: np.ndarray) -> bool:
        cfg = self.config
        for name in self._scalar_names:
            v = self._scalar(x, name)
            if name.startswith("sd_") and v <= 0:
                return False
            if name.startswith("rho_") and not (cfg.rho_lo < v < cfg.rho_hi):
                return False
        return True

    # -- likelihood -----------------------------------------------------------

    def eta(self, x: np.ndarray) -> np.ndarray:
        """Shot logits per (state, slice)."""
        if self.levels == "player":
            eta = np.empty((self.data.space.n_states, N_SLICES))
            eta[self.player_states] = self._player_mat(x)
            if self.backcourt_states.size:
                eta[self.backcourt_states] = self._position_mat(x)[self.backcourt_parent]
            return eta
        if self.levels == "position":
            return self._position_mat(x)[self.state_pos_cell]
        return self._league_mat(x)[self.state_league_cell]

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(self.eta(x))

    def predictive_probs(self, draw_matrix: np.ndarray) -> np.ndarray:
        """Posterior-mean shot probabilities per (state, slice)."""
        total = np.zeros((self.data.space.n_states, N_SLICES))
        for row in draw_matrix:
            total += self.probabilities(row)
        return total / len(draw_matrix)

    def _loglik_rows(self, eta_rows: np.ndarray, rows: np.ndarray) -> np.ndarray:
        s = self.data.shots[rows]
        n = self.data.events[rows]
        return (s * eta_rows - n * _softplus(eta_rows)).sum(axis=-1)

    def loglik(self, x: np.ndarray) -> float:
        eta = self.eta(x)[self._data_rows]
        return float(self._loglik_rows(eta, self._data_rows).sum())

    # -- log posterior ----------------------------------------------------------

    def logpost(self, x: np.ndarray) -> float:
        if not self._scalars_ok(x):
            return -math.inf
        cfg = self.config
        total = self.loglik(x)
        league = self._league_mat(x)
        sd_le, rho_le = self._scalar(x, "sd_league"), self._scalar(x, "rho_league")
        total += ar1_logpdf(league, 0.0, sd_le, rho_le).sum()
        total += gamma_logpdf(sd_le, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        if self.levels in ("player", "position"):
            pos = self._position_mat(x)
            sd_po, rho_po = self._scalar(x, "sd_position"), self._scalar(x, "rho_position")
            total += ar1_logpdf(pos, league[self.position_parent], sd_po, rho_po).sum()
            total += gamma_logpdf(sd_po, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        if self.levels == "player":
            player = self._player_mat(x)
            sd_pl, rho_pl = self._scalar(x, "sd_player"), self._scalar(x, "rho_player")
            total += ar1_logpdf(player, pos[self.player_parent], sd_pl, rho_pl).sum()
            total += gamma_logpdf(sd_pl, cfg.sd_hyper_shape, cfg.sd_hyper_rate)
        return float(total)

    # -- gradient (exposed for finite-difference checks) -----------------------

    def grad_logpost(self, x: np.ndarray) -> np.ndarray:
        if not self._scalars_ok(x):
            raise RejectedInputError("gradient requested outside the support")
        g = np.zeros_like(x)
        eta = self.eta(x)
        g_eta = self.data.shots - self.data.events * _sigmoid(eta)

        league = self._league_mat(x)
        sd_le, rho_le = self._scalar(x, "sd_league"), self._scalar(x, "rho_league")
        g_league = np.zeros_like(league)

        if self.levels == "region":
            np.add.at(g_league, self.state_league_cell, g_eta)
        if self.levels in ("player", "position"):
            pos = self._position_mat(x)
            sd_po, rho_po = self._scalar(x, "sd_position"), self._scalar(x, "rho_position")
            e_pos = pos - league[self.position_parent]
            g_pos = np.zeros_like(pos)
            if self.levels == "position":
                np.add.at(g_pos, self.state_pos_cell, g_eta)
            else:
                if self.backcourt_states.size:
                    np.add.at(g_pos, self.backcourt_parent, g_eta[self.backcourt_states])
            grad_pos_prior = ar1_grad_x(e_pos, sd_po, rho_po)
            g_pos += grad_pos_prior
            np.add.at(g_league, self.position_parent, -grad_pos_prior)
            g[self._sl_position] = g_pos.reshape(-1)
            g[self._scalar_offset["sd_position"]] = ar1_grad_sd(e_pos, sd_po, rho_po).sum() + gamma_grad(
                sd_po, self.config.sd_hyper_shape, self.config.sd_hyper_rate
            )
            g[self._scalar_offset["rho_position"]] = ar1_grad_rho(e_pos, sd_po, rho_po).sum()
        if self.levels == "player":
            player = self._player_mat(x)
            sd_pl, rho_pl = self._scalar(x, "sd_player"), self._scalar(x, "rho_player")
            e_pl = player - pos[self.player_parent]
            grad_pl_prior = ar1_grad_x(e_pl, sd_pl, rho_pl)
            g_player = g_eta[self.player_states] + grad_pl_prior
            g[self._sl_player] = g_player.reshape(-1)
            g_pos2 = np.zeros_like(pos)
            np.add.at(g_pos2, self.player_parent, -grad_pl_prior)
            g[self._sl_position] += g_pos2.reshape(-1)
            g[self._scalar_offset["sd_player"]] = ar1_grad_sd(e_pl, sd_pl, rho_pl).sum() + gamma_grad(
                sd_pl, self.config.sd_hyper_shape, self.config.sd_hyper_rate
            )
            g[self._scalar_offset["rho_player"]] = ar1_grad_rho(e_pl, sd_pl, rho_pl).sum()

        e_league = league
        grad_le_prior = ar1_grad_x(e_league, sd_le, rho_le)
        g_league += grad_le_prior
        g[self._sl_league] = g_league.reshape(-1)
        g[self._scalar_offset["sd_league"]] = ar1_grad_sd(e_league, sd_le, rho_le).sum() + gamma_grad(
            sd_le, self.config.sd_hyper_shape, self.config.sd_hyper_rate
        )
        g[self._scalar_offset["rho_league"]] = ar1_grad_rho(e_league, sd_le, rho_le).sum()
        return g

    # -- prior sampling (synthetic truth generation) -----------------------------

    def sample_prior(self, rng: np.random.Generator) -> np.ndarray:
        """One draw of the full parameter vector from the hierarchical prior."""
        from tmdp.hier_models.ar1 import ar1_corr

        cfg = self.config
        x = np.zeros(self.layout.dim)

        def draw_sd() -> float:
            return float(rng.gamma(cfg.sd_hyper_shape, 1.0 / cfg.sd_hyper_rate))

        def draw_rho() -> float:
            return float(rng.uniform(cfg.rho_lo, cfg.rho_hi))

        def draw_rows(n_rows: int, mean: np.ndarray | float, sd: float, rho: float) -> np.ndarray:
            chol = np.linalg.cholesky(ar1_corr(rho, N_SLICES) + 1e-12 * np.eye(N_SLICES))
            z = rng.standard_normal((n_rows, N_SLICES))
            return mean + sd * (z @ chol.T)

        sd_le, rho_le = draw_sd(), draw_rho()
        x[self._scalar_offset["sd_league"]] = sd_le
        x[self._scalar_offset["rho_league"]] = rho_le
        league = draw_rows(len(self.league_cells), 0.0, sd_le, rho_le)
        self._league_mat(x)[:] = league
        if self.levels in ("player", "position"):
            sd_po, rho_po = draw_sd(), draw_rho()
            x[self._scalar_offset["sd_position"]] = sd_po
            x[self._scalar_offset["rho_position"]] = rho_po
            pos = draw_rows(len(self.position_cells), league[self.position_parent], sd_po, rho_po)
            self._position_mat(x)[:] = pos
        if self.levels == "player":
            sd_pl, rho_pl = draw_sd(), draw_rho()
            x[self._scalar_offset["sd_player"]] = sd_pl
            x[self._scalar_offset["rho_player"]] = rho_pl
            self._player_mat(x)[:] = draw_rows(
                len(self.player_states), pos[self.player_parent], sd_pl, rho_pl
            )
        return x

    # -- initialization ---------------------------------------------------------

    def init_point(self) -> np.ndarray:
        x = np.zeros(self.layout.dim)
        shots, events = self.data.shots, self.data.events
        if self.levels == "player":
            self._player_mat(x)[:] = _empirical_logit(
                shots[self.player_states], events[self.player_states]
            )
        elif self.levels == "position":
            n_pos = len(self.position_cells)
            s = np.zeros((n_pos, N_SLICES))
            n = np.zeros((n_pos, N_SLICES))
            np.add.at(s, self.state_pos_cell, shots)
            np.add.at(n, self.state_pos_cell, events)
            self._position_mat(x)[:] = _empirical_logit(s, n)
        else:
            n_le = len(self.league_cells)
            s = np.zeros((n_le, N_SLICES))
            n = np.zeros((n_le, N_SLICES))
            np.add.at(s, self.state_league_cell, shots)
            np.add.at(n, self.state_league_cell, events)
            self._league_mat(x)[:] = _empirical_logit(s, n)
        for name in self._scalar_names:
            x[self._scalar_offset[name]] = 1.0 if name.startswith("sd_") else 0.0
        return x

    def _league_conjugate_draw(self, x, league_rows, league_ids, pos_retained,
                               sd, rho, adapt, rng, ar1_precision,
                               conditional_gaussian_draws, n_league):
        rp = np.flatnonzero(pos_retained)
        child_prec = ar1_precision(rho["rho_position"], N_SLICES) / (
            sd["sd_position"] ** 2
        )
        prior_prec = ar1_precision(rho["rho_league"], N_SLICES) / (
            sd["sd_league"] ** 2
        )
        pos_mat = self._position_mat(x)
        child_sums = np.zeros((n_league, N_SLICES))
        if rp.size:
            np.add.at(child_sums, self.position_parent[rp], pos_mat[rp])
        n_child = (
            np.bincount(self.position_parent[rp], minlength=n_league).astype(float)
            if rp.size else np.zeros(n_league)
        )
        draws = conditional_gaussian_draws(
            n_child, child_sums, child_prec,
            np.zeros((n_league, N_SLICES)), prior_prec, rng,
        )
        x[league_rows] = draws
        adapt.accept_sum[league_ids] += 1.0
        adapt.accept_n[league_ids] += 1.0

    # -- Gibbs sweep ---------------------------------------------------------

    def make_sweeper(self):
        """Sweep built around binomial independence per state.

        Bottom-level curves update by vectorized adaptive MH; data-free
        curves are collapsed and drawn exactly. Location tiers without
        direct likelihood resample from their conjugate Gaussian
        conditionals; tiers with data (backcourt cells, or the bottom tier
        of level variants) keep MH. Cluster translations move a cell with
        its bottom-tier children jointly, and deep scale moves rescale a
        tier while translating descendants, which keeps the hierarchy
        mixing when the data are thin.
        """
        from tmdp.hier_models.ar1 import (
            ar1_corr,
            ar1_precision,
            conditional_gaussian_draws,
        )

        blocks = self.layout.blocks
        block_id = {b.name: i for i, b in enumerate(blocks)}
        space = self.data.space
        n_pos = len(self.position_cells)
        n_league = len(self.league_cells)
        cfg = self.config

        pos_shots = np.zeros((n_pos, N_SLICES))
        pos_events = np.zeros((n_pos, N_SLICES))
        np.add.at(pos_shots, self.state_pos_cell, self.data.shots)
        np.add.at(pos_events, self.state_pos_cell, self.data.events)
        league_shots = np.zeros((n_league, N_SLICES))
        league_events = np.zeros((n_league, N_SLICES))
        np.add.at(league_shots, self.state_league_cell, self.data.shots)
        np.add.at(league_events, self.state_league_cell, self.data.events)

        if self.levels == "player":
            all_rows = np.arange(self._sl_player.start, self._sl_player.stop).reshape(
                -1, N_SLICES
            )
            all_ids = np.array(
                [block_id[f"player[{space.states[i].label()}]"] for i in self.player_states],
                dtype=np.intp,
            )
            has_data = self.data.events[self.player_states].sum(axis=1) > 0
            player_rows = all_rows[has_data]
            player_ids = all_ids[has_data]
            player_data_states = self.player_states[has_data]
            data_parent = self.player_parent[has_data]
            # Proposal preconditioner: unit scale where slices carry no data,
            # shrinking with the binomial information n/4 where they do.
            player_precond = 1.0 / np.sqrt(
                1.0 + 0.25 * self.data.events[player_data_states]
            )
            free_rows = all_rows[~has_data]
            free_ids = all_ids[~has_data]
            free_parents = self.player_parent[~has_data]
            n_child_pos = np.bincount(data_parent, minlength=n_pos).astype(float)
            bc_cells_mask = np.zeros(n_pos, dtype=bool)
            if self.backcourt_states.size:
                bc_cells_mask[np.unique(self.backcourt_parent)] = True
            # Retained positions: those with data children or backcourt data.
            pos_retained = (n_child_pos > 0) | bc_cells_mask
            # Conjugate-updatable positions: retained, no backcourt likelihood.
            pos_conjugate = (n_child_pos > 0) & ~bc_cells_mask
        pos_rows = np.arange(self._sl_position.start, self._sl_position.stop).reshape(
            -1, N_SLICES
        )
        pos_ids = np.array(
            [
                block_id[f"position[{g}:{r.value}:{'c' if z else 'o'}]"]
                for (g, r, z) in self.position_cells
            ],
            dtype=np.intp,
        ) if self.levels in ("player", "position") else np.array([], dtype=np.intp)
        league_rows = np.arange(self._sl_league.start, self._sl_league.stop).reshape(
            -1, N_SLICES
        )
        league_ids = np.array(
            [
                block_id[f"league[{r.value}:{'c' if z else 'o'}]"]
                for (r, z) in self.league_cells
            ],
            dtype=np.intp,
        )
        if self.levels == "position":
            pos_retained = pos_events.sum(axis=1) > 0
        if self.levels == "region":
            league_has_data = league_events.sum(axis=1) > 0

        def lik_delta(rows_idx: np.ndarray, cur: np.ndarray, prop: np.ndarray) -> np.ndarray:
            s = self.data.shots[rows_idx]
            n = self.data.events[rows_idx]
            return (s * (prop - cur) - n * (_softplus(prop) - _softplus(cur))).sum(axis=1)

        def level_chol(rho_v: float) -> np.ndarray:
            return np.linalg.cholesky(
                ar1_corr(rho_v, N_SLICES) + 1e-12 * np.eye(N_SLICES)
            )

        def sweep(x: np.ndarray, adapt: AdaptState, rng: np.random.Generator) -> None:
            sd = {n: self._scalar(x, n) for n in self._scalar_names if n.startswith("sd_")}
            rho = {n: self._scalar(x, n) for n in self._scalar_names if n.startswith("rho_")}

            def refresh_scalars():
                for n in self._scalar_names:
                    (sd if n.startswith("sd_") else rho)[n] = self._scalar(x, n)

            def hyper_delta(cur_s: float, prop_s: float) -> float:
                return gamma_logpdf(prop_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate) - gamma_logpdf(
                    cur_s, cfg.sd_hyper_shape, cfg.sd_hyper_rate
                )

            # ---- bottom tier MH -------------------------------------------------
            if self.levels == "player" and player_rows.size:
                pos_mat = self._position_mat(x)
                parents = pos_mat[data_parent]
                chol = level_chol(rho["rho_player"])

                def player_delta(cur, prop):
                    d = lik_delta(player_data_states, cur, prop)
                    d += ar1_logpdf(prop, parents, sd["sd_player"], rho["rho_player"])
                    d -= ar1_logpdf(cur, parents, sd["sd_player"], rho["rho_player"])
                    return d

                # Two proposal shapes: AR(1)-correlated for whole-curve moves,
                # and a curvature-preconditioned pass for per-slice freedom
                # (binomial information differs hugely across clock slices).
                mh_group_update(x, player_rows, player_ids, player_delta, adapt, rng,
                                prop_chol=chol)

                cur_theta = x[player_rows].copy()
                z = rng.standard_normal(cur_theta.shape)
                prop = cur_theta + adapt.scales[player_ids][:, None] * z * player_precond
                d = player_delta(cur_theta, prop)
                alpha = mh_alpha(d)
                accept = rng.random(len(player_ids)) < alpha
                if accept.any():
                    x[player_rows[accept]] = prop[accept]
                adapt.record(player_ids, alpha)
            elif self.levels == "position":
                sel = pos_retained
                league_mat = self._league_mat(x)
                parents_sel = league_mat[self.position_parent[sel]]

                def position_delta_data(cur, prop):
                    d = ar1_logpdf(prop, parents_sel, sd["sd_position"], rho["rho_position"])
                    d -= ar1_logpdf(cur, parents_sel, sd["sd_position"], rho["rho_position"])
                    d += (
                        pos_shots[sel] * (prop - cur)
                        - pos_events[sel] * (_softplus(prop) - _softplus(cur))
                    ).sum(axis=1)
                    return d

                if sel.any():
                    mh_group_update(x, pos_rows[sel], pos_ids[sel], position_delta_data,
                                    adapt, rng, prop_chol=level_chol(rho["rho_position"]))
            elif self.levels == "region":
                sel = league_has_data
                if sel.any():
                    def league_delta_data(cur, prop):
                        d = ar1_logpdf(prop, 0.0, sd["sd_league"], rho["rho_league"])
                        d -= ar1_logpdf(cur, 0.0, sd["sd_league"], rho["rho_league"])
                        d += (
                            league_shots[sel] * (prop - cur)
                            - league_events[sel] * (_softplus(prop) - _softplus(cur))
                        ).sum(axis=1)
                        return d

                    mh_group_update(x, league_rows[sel], league_ids[sel], league_delta_data,
                                    adapt, rng, prop_chol=level_chol(rho["rho_league"]))

            # ---- hierarchy block (repeated: cheap and drives mixing) ----------
            def hierarchy_updates() -> None:
                if self.levels == "player":
                    league_mat = self._league_mat(x)
                    player_mat = self._player_mat(x)
                    # Conjugate draws for non-backcourt retained positions.
                    conj = np.flatnonzero(pos_conjugate)
                    if conj.size:
                        child_prec = ar1_precision(rho["rho_player"], N_SLICES) / (
                            sd["sd_player"] ** 2
                        )
                        prior_prec = ar1_precision(rho["rho_position"], N_SLICES) / (
                            sd["sd_position"] ** 2
                        )
                        child_sums = np.zeros((n_pos, N_SLICES))
                        np.add.at(child_sums, data_parent, player_mat[has_data])
                        draws = conditional_gaussian_draws(
                            n_child_pos[conj], child_sums[conj], child_prec,
                            league_mat[self.position_parent[conj]], prior_prec, rng,
                        )
                        x[pos_rows[conj]] = draws
                        adapt.accept_sum[pos_ids[conj]] += 1.0
                        adapt.accept_n[pos_ids[conj]] += 1.0
                    # MH for retained backcourt cells.
                    bc_sel = np.flatnonzero(pos_retained & bc_cells_mask)
                    if bc_sel.size:
                        pos_mat2 = self._position_mat(x)
                        parents_bc = league_mat[self.position_parent[bc_sel]]
                        sub = np.full(n_pos, -1, dtype=np.intp)
                        sub[bc_sel] = np.arange(bc_sel.size)

                        def bc_delta(cur, prop):
                            d = ar1_logpdf(prop, parents_bc, sd["sd_position"], rho["rho_position"])
                            d -= ar1_logpdf(cur, parents_bc, sd["sd_position"], rho["rho_position"])
                            player_sub = player_mat[has_data]
                            in_sel = sub[data_parent] >= 0
                            if in_sel.any():
                                child_cur = ar1_logpdf(
                                    player_sub[in_sel], cur[sub[data_parent[in_sel]]],
                                    sd["sd_player"], rho["rho_player"],
                                )
                                child_prop = ar1_logpdf(
                                    player_sub[in_sel], prop[sub[data_parent[in_sel]]],
                                    sd["sd_player"], rho["rho_player"],
                                )
                                d += np.bincount(
                                    sub[data_parent[in_sel]],
                                    weights=child_prop - child_cur, minlength=bc_sel.size,
                                ).astype(np.float64)
                            bc_states_sel = self.backcourt_states
                            bc_par = sub[self.backcourt_parent]
                            ok = bc_par >= 0
                            if ok.any():
                                d_bc = lik_delta(
                                    bc_states_sel[ok], cur[bc_par[ok]], prop[bc_par[ok]]
                                )
                                d += np.bincount(
                                    bc_par[ok], weights=d_bc, minlength=bc_sel.size
                                ).astype(np.float64)
                            return d

                        mh_group_update(x, pos_rows[bc_sel], pos_ids[bc_sel], bc_delta,
                                        adapt, rng,
                                        prop_chol=level_chol(rho["rho_position"]))
                    # Conjugate draws for the league tier; cells without
                    # retained children collapse to their exact prior.
                    self._league_conjugate_draw(
                        x, league_rows, league_ids, pos_retained, sd, rho, adapt, rng,
                        ar1_precision, conditional_gaussian_draws, n_league,
                    )
                elif self.levels == "position":
                    self._league_conjugate_draw(
                        x, league_rows, league_ids, pos_retained, sd, rho, adapt, rng,
                        ar1_precision, conditional_gaussian_draws, n_league,
                    )

                # Scalar hyperparameters over retained residuals.
                def scalar_terms(name: str, value: float) -> float:
                    if name.startswith("sd_") and value <= 0:
                        return -math.inf
                    if name.startswith("rho_") and not (cfg.rho_lo < value < cfg.rho_hi):
                        return -math.inf
                    level = name.split("_", 1)[1]
                    if level == "player":
                        e = self._player_mat(x)[has_data]
                        mean = self._position_mat(x)[data_parent]
                        sd_v = value if name == "sd_player" else sd["sd_player"]
                        rho_v = value if name == "rho_player" else rho["rho_player"]
                    elif level == "position":
                        sel = pos_retained
                        e = self._position_mat(x)[sel]
                        mean = self._league_mat(x)[self.position_parent[sel]]
                        sd_v = value if name == "sd_position" else sd["sd_position"]
                        rho_v = value if name == "rho_position" else rho["rho_position"]
                    else:
                        sel = league_has_data if self.levels == "region" else slice(None)
                        e = self._league_mat(x)[sel]
                        mean = 0.0
                        sd_v = value if name == "sd_league" else sd["sd_league"]
                        rho_v = value if name == "rho_league" else rho["rho_league"]
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
                        after = scalar_terms(_name, prop)
                        if not np.isfinite(after):
                            return -math.inf
                        return after - scalar_terms(_name, cur)

                    mh_scalar_update(x, idx, block_id[name], delta, adapt, rng)
                    refresh_scalars()

                # League-subtree translations: one additive drift per league
                # cell, moving its positions and data players along; only the
                # league prior and the moved states' likelihood react. Gives
                # weakly identified clock-slice columns their diffusion.
                if self.levels == "player":
                    chol_le2 = level_chol(rho["rho_league"])
                    z = rng.standard_normal((n_league, N_SLICES))
                    deltas = 0.5 * sd["sd_league"] * (z @ chol_le2.T)
                    league_cur = self._league_mat(x).copy()
                    d = ar1_logpdf(league_cur + deltas, 0.0, sd["sd_league"], rho["rho_league"])
                    d -= ar1_logpdf(league_cur, 0.0, sd["sd_league"], rho["rho_league"])
                    if player_rows.size:
                        cells_t = self.state_league_cell[player_data_states]
                        theta = x[player_rows]
                        lik = lik_delta(player_data_states, theta, theta + deltas[cells_t])
                        d += np.bincount(cells_t, weights=lik, minlength=n_league).astype(np.float64)
                    if self.backcourt_states.size:
                        cells_b = self.state_league_cell[self.backcourt_states]
                        eta = self._position_mat(x)[self.backcourt_parent]
                        lik = lik_delta(self.backcourt_states, eta, eta + deltas[cells_b])
                        d += np.bincount(cells_b, weights=lik, minlength=n_league).astype(np.float64)
                    accept = rng.random(n_league) < mh_alpha(d)
                    if accept.any():
                        x[league_rows[accept]] += deltas[accept]
                        moved_pos = accept[self.position_parent]
                        x[pos_rows[moved_pos]] += deltas[self.position_parent[moved_pos]]
                        if player_rows.size:
                            cells_t = self.state_league_cell[player_data_states]
                            moved_th = accept[cells_t]
                            if moved_th.any():
                                x[player_rows[moved_th]] += deltas[cells_t[moved_th]]

                # Deep funnel scale moves (descendants translate along).
                if self.levels == "player" and player_rows.size:
                    pos_mat4 = self._position_mat(x)

                    def ext_player_scale(cur, prop):
                        return float(lik_delta(player_data_states, cur, prop).sum())

                    mh_scale_move(
                        x, self._scalar_offset["sd_player"], player_rows,
                        pos_mat4[data_parent], ext_player_scale, hyper_delta, rng,
                    )
                    refresh_scalars()

                if self.levels == "player":
                    rp2 = np.flatnonzero(pos_retained)
                    if rp2.size:
                        league_mat2 = self._league_mat(x)
                        sub2 = np.full(n_pos, -1, dtype=np.intp)
                        sub2[rp2] = np.arange(rp2.size)
                        eps = 0.25 * float(rng.standard_normal())
                        c = float(np.exp(eps))
                        sigma = sd["sd_position"]
                        cur_pos = x[pos_rows[rp2]]
                        shift = (c - 1.0) * (cur_pos - league_mat2[self.position_parent[rp2]])
                        d = hyper_delta(sigma, c * sigma) + eps
                        if player_rows.size:
                            in_rp = sub2[data_parent] >= 0
                            theta = x[player_rows[in_rp]]
                            d += float(lik_delta(
                                player_data_states[in_rp], theta,
                                theta + shift[sub2[data_parent[in_rp]]],
                            ).sum())
                        if self.backcourt_states.size:
                            bc_par2 = sub2[self.backcourt_parent]
                            okb = bc_par2 >= 0
                            if okb.any():
                                eta = self._position_mat(x)[self.backcourt_parent[okb]]
                                d += float(lik_delta(
                                    self.backcourt_states[okb], eta, eta + shift[bc_par2[okb]]
                                ).sum())
                        if np.log(rng.random() + 1e-300) < d:
                            x[pos_rows[rp2]] = cur_pos + shift
                            x[self._scalar_offset["sd_position"]] = c * sigma
                            if player_rows.size:
                                in_rp = sub2[data_parent] >= 0
                                x[player_rows[in_rp]] += shift[sub2[data_parent[in_rp]]]
                            refresh_scalars()

                    # League deep scale: scale league, translate subtree.
                    eps = 0.25 * float(rng.standard_normal())
                    c = float(np.exp(eps))
                    sigma = sd["sd_league"]
                    cur_le = x[league_rows]
                    shift = (c - 1.0) * cur_le
                    d = hyper_delta(sigma, c * sigma) + eps
                    if player_rows.size:
                        cells = self.state_league_cell[player_data_states]
                        theta = x[player_rows]
                        d += float(lik_delta(player_data_states, theta, theta + shift[cells]).sum())
                    if self.backcourt_states.size:
                        bc_cells2 = self.state_league_cell[self.backcourt_states]
                        eta = self._position_mat(x)[self.backcourt_parent]
                        d += float(lik_delta(self.backcourt_states, eta, eta + shift[bc_cells2]).sum())
                    if np.log(rng.random() + 1e-300) < d:
                        x[league_rows] = cur_le + shift
                        x[pos_rows] = x[pos_rows] + shift[self.position_parent]
                        if player_rows.size:
                            cells = self.state_league_cell[player_data_states]
                            x[player_rows] += shift[cells]
                        x[self._scalar_offset["sd_league"]] = c * sigma
                        refresh_scalars()
                elif self.levels == "position":
                    sel = pos_retained
                    if sel.any():
                        league_mat2 = self._league_mat(x)

                        def ext_pos_scale(cur, prop):
                            return float((
                                pos_shots[sel] * (prop - cur)
                                - pos_events[sel] * (_softplus(prop) - _softplus(cur))
                            ).sum())

                        mh_scale_move(
                            x, self._scalar_offset["sd_position"], pos_rows[sel],
                            league_mat2[self.position_parent[sel]], ext_pos_scale,
                            hyper_delta, rng,
                        )
                        refresh_scalars()
                    # League deep scale with position+nothing below.
                    eps = 0.25 * float(rng.standard_normal())
                    c = float(np.exp(eps))
                    sigma = sd["sd_league"]
                    cur_le = x[league_rows]
                    shift = (c - 1.0) * cur_le
                    d = hyper_delta(sigma, c * sigma) + eps
                    if pos_retained.any():
                        sel2 = pos_retained
                        eta = x[pos_rows[sel2]]
                        shifted = eta + shift[self.position_parent[sel2]]
                        d += float((
                            pos_shots[sel2] * (shifted - eta)
                            - pos_events[sel2] * (_softplus(shifted) - _softplus(eta))
                        ).sum())
                    if np.log(rng.random() + 1e-300) < d:
                        x[league_rows] = cur_le + shift
                        x[pos_rows] = x[pos_rows] + shift[self.position_parent]
                        x[self._scalar_offset["sd_league"]] = c * sigma
                        refresh_scalars()
                elif self.levels == "region":
                    sel = league_has_data
                    if sel.any():
                        def ext_league_scale(cur, prop):
                            return float((
                                league_shots[sel] * (prop - cur)
                                - league_events[sel] * (_softplus(prop) - _softplus(cur))
                            ).sum())

                        mh_scale_move(
                            x, self._scalar_offset["sd_league"], league_rows[sel],
                            0.0, ext_league_scale, hyper_delta, rng,
                        )
                        refresh_scalars()

            def rho_remap(rho_name: str, rows, parents, lik_of_shift, extra_rows=None,
                          extra_parent_map=None) -> None:
                """Re-correlate a tier's residuals under a proposed rho.

                rows hold the tier's curves (k, 8); descendants named in
                extra_rows translate along so their residuals stay fixed.
                The own-prior determinant cancels the map's Jacobian, so the
                acceptance needs only bound checks and the likelihood.
                """
                rho_cur = rho[rho_name]
                rho_prop = rho_cur + 0.15 * float(rng.standard_normal())
                u = float(rng.random())
                if not (cfg.rho_lo < rho_prop < cfg.rho_hi):
                    return
                l_cur = level_chol(rho_cur)
                l_prop = level_chol(rho_prop)
                remap = l_prop @ np.linalg.inv(l_cur)
                cur = x[rows]
                resid = cur - parents
                new = parents + resid @ remap.T
                shift = new - cur
                d = lik_of_shift(shift)
                if np.log(u + 1e-300) < d:
                    x[rows] = new
                    if extra_rows is not None and extra_rows.size:
                        x[extra_rows] += shift[extra_parent_map]
                    x[self._scalar_offset[rho_name]] = rho_prop
                    refresh_scalars()

            if self.levels == "player":
                if player_rows.size:
                    pos_now = self._position_mat(x)

                    def lik_player_shift(shift):
                        theta = x[player_rows]
                        return float(lik_delta(player_data_states, theta, theta + shift).sum())

                    rho_remap("rho_player", player_rows, pos_now[data_parent], lik_player_shift)

                rp4 = np.flatnonzero(pos_retained)
                if rp4.size:
                    sub4 = np.full(n_pos, -1, dtype=np.intp)
                    sub4[rp4] = np.arange(rp4.size)
                    league_now = self._league_mat(x)
                    in_rp4 = sub4[data_parent] >= 0

                    def lik_pos_shift(shift):
                        d = 0.0
                        if player_rows.size and in_rp4.any():
                            theta = x[player_rows[in_rp4]]
                            d += float(lik_delta(
                                player_data_states[in_rp4], theta,
                                theta + shift[sub4[data_parent[in_rp4]]],
                            ).sum())
                        if self.backcourt_states.size:
                            bc_par = sub4[self.backcourt_parent]
                            ok = bc_par >= 0
                            if ok.any():
                                eta = self._position_mat(x)[self.backcourt_parent[ok]]
                                d += float(lik_delta(
                                    self.backcourt_states[ok], eta, eta + shift[bc_par[ok]]
                                ).sum())
                        return d

                    rho_remap(
                        "rho_position", pos_rows[rp4],
                        league_now[self.position_parent[rp4]], lik_pos_shift,
                        extra_rows=player_rows[in_rp4] if player_rows.size else np.array([], dtype=np.intp),
                        extra_parent_map=sub4[data_parent[in_rp4]] if player_rows.size else None,
                    )

                def lik_league_shift(shift):
                    d = 0.0
                    if player_rows.size:
                        cells = self.state_league_cell[player_data_states]
                        theta = x[player_rows]
                        d += float(lik_delta(player_data_states, theta, theta + shift[cells]).sum())
                    if self.backcourt_states.size:
                        cells = self.state_league_cell[self.backcourt_states]
                        eta = self._position_mat(x)[self.backcourt_parent]
                        d += float(lik_delta(self.backcourt_states, eta, eta + shift[cells]).sum())
                    return d

                # League remap also translates positions and data players.
                rho_cur = rho["rho_league"]
                rho_prop = rho_cur + 0.15 * float(rng.standard_normal())
                u = float(rng.random())
                if cfg.rho_lo < rho_prop < cfg.rho_hi:
                    l_cur = level_chol(rho_cur)
                    l_prop = level_chol(rho_prop)
                    remap_m = l_prop @ np.linalg.inv(l_cur)
                    cur_le = x[league_rows]
                    new_le = cur_le @ remap_m.T
                    shift = new_le - cur_le
                    d = lik_league_shift(shift)
                    if np.log(u + 1e-300) < d:
                        x[league_rows] = new_le
                        x[pos_rows] = x[pos_rows] + shift[self.position_parent]
                        if player_rows.size:
                            cells = self.state_league_cell[player_data_states]
                            x[player_rows] += shift[cells]
                        x[self._scalar_offset["rho_league"]] = rho_prop
                        refresh_scalars()

            for _ in range(3):
                hierarchy_updates()

            # ---- cluster translations (player level) --------------------------
            if self.levels == "player" and player_rows.size:
                rp3 = np.flatnonzero(pos_retained)
                if rp3.size:
                    sub3 = np.full(n_pos, -1, dtype=np.intp)
                    sub3[rp3] = np.arange(rp3.size)
                    chol_t = level_chol(rho["rho_position"])
                    z = rng.standard_normal((rp3.size, N_SLICES))
                    deltas = adapt.scales[pos_ids[rp3]][:, None] * (z @ chol_t.T)
                    league_mat3 = self._league_mat(x)
                    cur_pos = x[pos_rows[rp3]]
                    means3 = league_mat3[self.position_parent[rp3]]
                    d = ar1_logpdf(cur_pos + deltas, means3, sd["sd_position"], rho["rho_position"])
                    d -= ar1_logpdf(cur_pos, means3, sd["sd_position"], rho["rho_position"])
                    in_rp = sub3[data_parent] >= 0
                    if in_rp.any():
                        theta = x[player_rows[in_rp]]
                        lik = lik_delta(
                            player_data_states[in_rp], theta,
                            theta + deltas[sub3[data_parent[in_rp]]],
                        )
                        d += np.bincount(
                            sub3[data_parent[in_rp]], weights=lik, minlength=rp3.size
                        ).astype(np.float64)
                    if self.backcourt_states.size:
                        bc_par3 = sub3[self.backcourt_parent]
                        okb = bc_par3 >= 0
                        if okb.any():
                            eta = self._position_mat(x)[self.backcourt_parent[okb]]
                            lik = lik_delta(
                                self.backcourt_states[okb], eta, eta + deltas[bc_par3[okb]]
                            )
                            d += np.bincount(
                                bc_par3[okb], weights=lik, minlength=rp3.size
                            ).astype(np.float64)
                    alpha = mh_alpha(d)
                    accept = rng.random(rp3.size) < alpha
                    adapt.record(pos_ids[rp3], alpha)
                    if accept.any():
                        x[pos_rows[rp3[accept]]] = cur_pos[accept] + deltas[accept]
                        acc_theta = accept[sub3[data_parent]] & (sub3[data_parent] >= 0)
                        if acc_theta.any():
                            x[player_rows[acc_theta]] += deltas[sub3[data_parent[acc_theta]]]

            # ---- exact conditional draws for collapsed curves ------------------
            if self.levels == "player":
                if not pos_retained.all():
                    free_pos = np.flatnonzero(~pos_retained)
                    chol_p = level_chol(rho["rho_position"])
                    z = rng.standard_normal((free_pos.size, N_SLICES))
                    x[pos_rows[free_pos]] = (
                        self._league_mat(x)[self.position_parent[free_pos]]
                        + sd["sd_position"] * (z @ chol_p.T)
                    )
                    adapt.accept_sum[pos_ids[free_pos]] += 1.0
                    adapt.accept_n[pos_ids[free_pos]] += 1.0
                if free_rows.size:
                    chol = level_chol(rho["rho_player"])
                    z = rng.standard_normal((len(free_rows), N_SLICES))
                    x[free_rows] = (
                        self._position_mat(x)[free_parents]
                        + sd["sd_player"] * (z @ chol.T)
                    )
                    adapt.accept_sum[free_ids] += 1.0
                    adapt.accept_n[free_ids] += 1.0
            if self.levels == "position" and not pos_retained.all():
                sel = ~pos_retained
                chol = level_chol(rho["rho_position"])
                z = rng.standard_normal((int(sel.sum()), N_SLICES))
                x[pos_rows[sel]] = (
                    self._league_mat(x)[self.position_parent[sel]]
                    + sd["sd_position"] * (z @ chol.T)
                )
                adapt.accept_sum[pos_ids[sel]] += 1.0
                adapt.accept_n[pos_ids[sel]] += 1.0
            if self.levels == "region" and not league_has_data.all():
                sel = ~league_has_data
                chol = level_chol(rho["rho_league"])
                z = rng.standard_normal((int(sel.sum()), N_SLICES))
                x[league_rows[sel]] = sd["sd_league"] * (z @ chol.T)
                adapt.accept_sum[league_ids[sel]] += 1.0
                adapt.accept_n[league_ids[sel]] += 1.0

        return sweep
