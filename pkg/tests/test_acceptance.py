"""Acceptance suite: every primary criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` for the per-criterion
pass/fail lines. The sampler-calibration criterion is tiered: the default
smoke tier runs 5 prior-predictive replicates; set TMDP_ACCEPT_FULL=1 for
the full 50-replicate tier (hours-scale).
"""

from __future__ import annotations

import contextlib
import json
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner

from tmdp.chain_algebra import average_chain, expected_counts, fundamental_matrix
from tmdp.config import McmcConfig, ModelConfig
from tmdp.hier_models.policy import PolicyData, PolicyModel
from tmdp.hier_models.reward import RewardData, RewardModel
from tmdp.hier_models.transition import (
    TransitionModel,
    player_parent_maps,
    player_transition_data,
)
from tmdp.inference_engine.diagnostics import diagnostics
from tmdp.inference_engine.ladder import policy_ladder
from tmdp.inference_engine.sampler import sample
from tmdp.play_simulator.calibration import calibration_report
from tmdp.play_simulator.simulate import PlayStart, iter_seasons, simulate_play, simulate_season
from tmdp.play_simulator.tensors import TruthTensorBundle
from tmdp.policy_lab.alterations import PolicyAlteration, apply_alteration
from tmdp.policy_lab.compare import compare_policies
from tmdp.service_cli.cli import main as cli_main
from tmdp.service_cli.synthetic import build_preset, generate_synthetic

from chainutil import mc_visits_from_start, random_chain, random_overlapping_family
from simutil import const_lapses, some_starts, spread_lapses, truth_bundle
from modelutil import tiny_space

FULL_TIER = os.environ.get("TMDP_ACCEPT_FULL", "0") == "1"


@contextlib.contextmanager
def criterion(name: str):
    t0 = time.time()
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] {name}: FAIL ({time.time() - t0:.1f}s)")
        raise
    print(f"[ACCEPTANCE] {name}: PASS ({time.time() - t0:.1f}s)")


# ---------------------------------------------------------------------------
# 1. Average-chain count preservation
# ---------------------------------------------------------------------------


def test_average_chain_theorem():
    with criterion("average-chain count preservation (200 families, 1e-10)"):
        t0 = time.time()
        for seed in range(200):
            rng = np.random.default_rng(9_000 + seed)
            n_chains = int(rng.integers(2, 6))
            overlap = float(rng.uniform(0.3, 0.7))
            family = random_overlapping_family(rng, n_chains, (4, 12), overlap)
            avg = average_chain(family)
            n_avg = expected_counts(avg)
            expected = np.zeros_like(n_avg.n)
            for member in family:
                n_l = expected_counts(member)
                for j, origin in enumerate(n_l.origins):
                    for k, dest in enumerate(n_l.dests):
                        expected[
                            n_avg.origins.index(origin), n_avg.dests.index(dest)
                        ] += member.weight * n_l.n[j, k]
            assert np.max(np.abs(n_avg.n - expected)) < 1e-10, f"seed {seed}"
        assert time.time() - t0 < 60.0


# ---------------------------------------------------------------------------
# 2. Fundamental-matrix Monte Carlo oracle
# ---------------------------------------------------------------------------


def test_fundamental_matrix_oracle():
    with criterion("fundamental matrix vs 1e6-episode Monte Carlo (20 chains, 3 SE)"):
        t0 = time.time()
        for seed in range(20):
            rng = np.random.default_rng(5_000 + seed)
            nt = int(rng.integers(3, 9))
            chain = random_chain(rng, nt)
            s = fundamental_matrix(chain)
            start = int(rng.integers(nt))
            mean, se = mc_visits_from_start(chain, start, 1_000_000, seed=seed)
            assert np.all(np.abs(s[start] - mean) <= 3 * se + 1e-9), f"seed {seed}"
        assert time.time() - t0 < 120.0


# ---------------------------------------------------------------------------
# 3. Sampler calibration (tiered) + Table-3 diagnostics gate
# ---------------------------------------------------------------------------


def _interval_coverage(draw_set, truth):
    stacked = draw_set.stacked()
    lo = np.quantile(stacked, 0.05, axis=0)
    hi = np.quantile(stacked, 0.95, axis=0)
    return (truth >= lo) & (truth <= hi)


def test_sampler_calibration_and_diagnostics():
    n_reps = 50 if FULL_TIER else 5
    tier = "full" if FULL_TIER else "smoke"
    with criterion(
        f"sampler calibration ({tier}: {n_reps} reps, coverage 90% +/- 7%) "
        "+ max R-hat < 1.1, min ESS >= 47"
    ):
        mcmc = McmcConfig(chains=2, iterations=1400, burn_in=500, seed=11)
        cov = {"policy": [], "reward": [], "transition": []}
        for k in range(n_reps):
            spec = build_preset("desk_prior", n_plays=2000, seed=700 + k)
            out = generate_synthetic(spec)
            cfg = spec.prior_config
            pm = PolicyModel(PolicyData.from_episodes(out.episodes, out.space), cfg)
            cov["policy"].append(
                _interval_coverage(sample(pm, mcmc, "policy"), out.truth["params"]["policy"])
            )
            rm = RewardModel(RewardData.from_episodes(out.episodes, out.space), cfg)
            cov["reward"].append(
                _interval_coverage(sample(rm, mcmc, "reward"), out.truth["params"]["reward"])
            )
            data = player_transition_data(out.episodes, out.space)
            parent, grandparent = player_parent_maps(out.space)
            tm = TransitionModel(data, parent, grandparent, cfg)
            cov["transition"].append(
                _interval_coverage(
                    sample(tm, mcmc, "transition"), out.truth["params"]["transition"]
                )
            )
        for tag, chunks in cov.items():
            pooled = float(np.concatenate(chunks).mean())
            print(f"    coverage[{tag}] = {pooled:.3f}")
            assert 0.83 <= pooled <= 0.97, f"{tag} coverage {pooled:.3f} outside band"

        # Diagnostics gate on a fixed desk-scale fit of each model.
        spec = build_preset("desk", n_plays=2000, seed=51)
        out = generate_synthetic(spec)
        cfg = ModelConfig(sd_hyper_shape=3.0, sd_hyper_rate=5.0, rho_lo=-0.5, rho_hi=0.9)
        gate = McmcConfig(chains=2, iterations=1400, burn_in=500, seed=3)
        fits = {
            "policy": sample(
                PolicyModel(PolicyData.from_episodes(out.episodes, out.space), cfg),
                gate, "policy",
            ),
            "reward": sample(
                RewardModel(RewardData.from_episodes(out.episodes, out.space), cfg),
                gate, "reward",
            ),
        }
        data = player_transition_data(out.episodes, out.space)
        parent, grandparent = player_parent_maps(out.space)
        fits["transition"] = sample(
            TransitionModel(data, parent, grandparent, cfg), gate, "transition"
        )
        for tag, ds in fits.items():
            report = diagnostics(ds)
            print(f"    diagnostics[{tag}]: max R-hat {report.max_rhat:.3f}, "
                  f"min ESS {report.min_ess:.0f}")
            assert report.max_rhat < 1.1, f"{tag} max R-hat {report.max_rhat}"
            assert report.min_ess >= 47, f"{tag} min ESS {report.min_ess}"


# ---------------------------------------------------------------------------
# 4. Model ladder (held-out log-likelihood ordering)
# ---------------------------------------------------------------------------


def test_model_ladder():
    with criterion("policy model ladder: held-out loglik D >= C >= A"):
        spec = build_preset("desk", n_plays=2600, seed=23)
        out = generate_synthetic(spec)
        bundle = TruthTensorBundle(out.space, out.tensors)
        train, heldout = [], []
        for r, _, eps in iter_seasons(out.starts, bundle, out.lapses, 2, seed=29,
                                      collect_episodes=True):
            (train if r == 0 else heldout).extend(eps)
        rng = np.random.default_rng(31)
        sparse = {"g3", "b2", "b3"}
        train = [
            ep for ep in train
            if ep.initial_state.player_id not in sparse or rng.random() < 0.15
        ]
        cfg = ModelConfig(sd_hyper_shape=3.0, sd_hyper_rate=5.0, rho_lo=-0.5, rho_hi=0.9)
        mcmc = McmcConfig(chains=2, iterations=600, burn_in=250, seed=41)
        ladder = policy_ladder(train, heldout, out.space, cfg, mcmc)
        ll = ladder.logliks
        print(f"    heldout loglik: A={ll['A']:.1f} B={ll['B']:.1f} "
              f"C={ll['C']:.1f} D={ll['D']:.1f}")
        assert ll["D"] >= ll["C"] >= ll["A"], ll


# ---------------------------------------------------------------------------
# 5. Self-calibration (Figure-6 analog)
# ---------------------------------------------------------------------------


def test_self_calibration():
    with criterion(
        "self-calibration: 300 on-policy seasons, corr >= 0.95 "
        "(2pt/3pt/turnover), >= 95% of nonzero cells in envelope"
    ):
        t0 = time.time()
        spec = build_preset("paper_calibrated", n_plays=8000, seed=17)
        out = generate_synthetic(spec)
        bundle = TruthTensorBundle(out.space, out.tensors)
        sims = simulate_season(out.starts, bundle, out.lapses, 300, seed=404)
        report = calibration_report(sims, out.counts)
        print(f"    correlations: {{k: None if v is None else round(v, 4) for k, v in report.correlations.items()}}")
        print(f"    envelope coverage of nonzero cells: {report.coverage_nonzero:.4f}")
        for cat in ("two_pt", "three_pt", "turnover"):
            assert report.correlations[cat] is not None
            assert report.correlations[cat] >= 0.95, (cat, report.correlations[cat])
        assert report.coverage_nonzero >= 0.95
        assert time.time() - t0 < 900.0


# ---------------------------------------------------------------------------
# 6. Simulator invariants
# ---------------------------------------------------------------------------


def test_simulator_invariants():
    with criterion(
        "simulator invariants: no negative-clock events, "
        "shots + turnovers = plays, degenerate policies exact"
    ):
        space = tiny_space(3)
        # Always-shoot: every play is a single shot.
        bundle = truth_bundle(space, shoot_prob=1.0)
        starts = some_starts(space, 80, seed=1)
        counts = simulate_season(starts, bundle, const_lapses(1.0), 1, seed=2)[0]
        assert counts.shot_total() == 80
        assert counts.turnover_total() == 0
        assert counts.movement_total() == 0
        # Never-shoot with 25s lapses: every play is a clock violation.
        bundle0 = truth_bundle(space, shoot_prob=0.0)
        counts0 = simulate_season(starts, bundle0, const_lapses(25.0), 1, seed=3)[0]
        assert counts0.turnover_total() == 80
        assert int(counts0.counts[:, :, counts0.col_violation].sum()) == 80
        assert counts0.expected_points_total() == 0.0
        # Conservation and positive clocks on a generic team.
        bundle2 = truth_bundle(space, shoot_prob=0.25, turnover_prob=0.06)
        for _, c, _ in iter_seasons(starts, bundle2, spread_lapses(), 5, seed=4):
            assert c.shot_total() + c.turnover_total() == len(starts)
        rng = np.random.default_rng(5)
        for k in range(150):
            ep = simulate_play(
                PlayStart(space.states[k % space.n_states], 24.0),
                bundle2.get(0), spread_lapses(k), rng, space,
            )
            assert all(s.t_clock > 0 for s in ep.steps)


# ---------------------------------------------------------------------------
# 7. Alteration anchors on the paper-calibrated preset
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def paper_team():
    spec = build_preset("paper_calibrated", n_plays=1500, seed=17)
    out = generate_synthetic(spec)
    return out, TruthTensorBundle(out.space, out.tensors)


def test_alteration_mix_shift_anchor(paper_team):
    with criterion(
        "alteration anchor: contested-mid x0.3 + all-3pt x2 raises EPPS "
        "(+0.024 +/- 50%) and EPPP (+0.030 +/- 50%); baseline EPPS ~ 1.100"
    ):
        out, bundle = paper_team
        alt = PolicyAlteration.from_json({"rules": [
            {"players": None, "regions": ["mid_range"], "pressure": ["contested"],
             "slices": None, "kind": "scale_shot_prob", "factor": 0.3},
            {"players": None, "regions": ["corner_3", "arc_3", "backcourt"],
             "pressure": None, "slices": None, "kind": "scale_shot_prob", "factor": 2.0},
        ]})
        altered, _ = apply_alteration(bundle, alt)
        report = compare_policies(bundle, altered, out.starts, out.lapses,
                                  replicates=300, seed=59)
        s = report.summary
        print(f"    EPPS {s['mean_baseline_epps']:.4f} -> {s['mean_altered_epps']:.4f} "
              f"(delta {s['mean_delta_epps']:+.4f})")
        print(f"    EPPP {s['mean_baseline_eppp']:.4f} -> {s['mean_altered_eppp']:.4f} "
              f"(delta {s['mean_delta_eppp']:+.4f})")
        assert abs(s["mean_baseline_epps"] - 1.100) <= 0.02
        assert abs(s["mean_baseline_eppp"] - 1.004) <= 0.03
        assert 0.024 * 0.5 <= s["mean_delta_epps"] <= 0.024 * 1.5
        assert 0.030 * 0.5 <= s["mean_delta_eppp"] <= 0.030 * 1.5


def test_alteration_pass_cut_anchor(paper_team):
    with criterion(
        "alteration anchor: star pass cut x0.1 shifts shot totals "
        "(+17%/-14% sign and order of magnitude), |delta EPPP| < 0.01"
    ):
        out, bundle = paper_team
        alt = PolicyAlteration.from_json({"rules": [
            {"players": ["star_guard"], "regions": None, "pressure": None,
             "slices": None, "kind": "scale_transition_prob", "factor": 0.1,
             "dest": {"players": ["star_wing"], "regions": None, "pressure": None}},
        ]})
        altered, _ = apply_alteration(bundle, alt)
        report = compare_policies(bundle, altered, out.starts, out.lapses,
                                  replicates=300, seed=61)
        guard_b = float(np.mean(report.per_player["star_guard"]["baseline"]))
        guard_a = float(np.mean(report.per_player["star_guard"]["altered"]))
        wing_b = float(np.mean(report.per_player["star_wing"]["baseline"]))
        wing_a = float(np.mean(report.per_player["star_wing"]["altered"]))
        guard_pct = (guard_a / guard_b - 1.0) * 100
        wing_pct = (wing_a / wing_b - 1.0) * 100
        d_eppp = report.summary["mean_delta_eppp"]
        print(f"    passer shots {guard_pct:+.1f}% (anchor +17%), "
              f"receiver shots {wing_pct:+.1f}% (anchor -14%), "
              f"delta EPPP {d_eppp:+.4f}")
        assert 17.0 / 3 <= guard_pct <= 17.0 * 3
        assert -14.0 * 3 <= wing_pct <= -14.0 / 3
        assert abs(d_eppp) < 0.01


# ---------------------------------------------------------------------------
# 8. CLI determinism
# ---------------------------------------------------------------------------


def test_cli_determinism(tmp_path):
    with criterion("CLI determinism: identical seeds give byte-identical artifacts"):
        runner = CliRunner()
        cfg = ModelConfig(
            sd_hyper_shape=3.0, sd_hyper_rate=5.0, rho_lo=-0.5, rho_hi=0.9,
            interlude_plays=60,
            mcmc=McmcConfig(chains=2, iterations=160, burn_in=60, seed=0),
        )
        cfg.save(tmp_path / "model.cfg")
        outputs = {}
        for run in ("a", "b"):
            root = tmp_path / run
            r = runner.invoke(cli_main, ["generate", "--preset", "tiny", "--plays", "120",
                                         "--seed", "5", "--out", str(root / "data")])
            assert r.exit_code == 0, r.output
            r = runner.invoke(cli_main, ["ingest", "--events", str(root / "data" / "events.jsonl"),
                                         "--out", str(root / "ing")])
            assert r.exit_code == 0, r.output
            r = runner.invoke(cli_main, ["fit", "--model", "policy",
                                         "--events", str(root / "ing"),
                                         "--config", str(tmp_path / "model.cfg"),
                                         "--seed", "7", "--out", str(root / "draws")])
            assert r.exit_code == 0, r.output
            outputs[run] = root
        for rel in ("data/events.jsonl", "data/starts.jsonl", "ing/counts.bin",
                    "ing/lapses.bin", "draws/draws_policy.bin"):
            a = (outputs["a"] / rel).read_bytes()
            b = (outputs["b"] / rel).read_bytes()
            assert a == b, f"{rel} differs between identical runs"
