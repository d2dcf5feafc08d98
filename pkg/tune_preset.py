"""Scratch harness for tuning the paper_calibrated preset (not shipped)."""

import time
from collections import defaultdict

import numpy as np

from tmdp.service_cli.synthetic import build_preset, generate_synthetic, sample_lapses, sample_starts
from tmdp.play_simulator.simulate import iter_seasons
from tmdp.play_simulator.tensors import TruthTensorBundle
from tmdp.policy_lab.alterations import PolicyAlteration, apply_alteration
from tmdp.policy_lab.compare import compare_policies


def season_stats(spec, n_plays=40000, seed=29):
    spec.n_plays = n_plays
    out = generate_synthetic(spec)
    c = out.counts
    shots, tos, ep = c.shot_total(), c.turnover_total(), c.expected_points_total()
    viol = int(c.counts[:, :, c.col_violation].sum())
    n_events = sum(len(e.steps) for e in out.episodes)
    per_state = c.shots_by_state().sum(axis=0)
    mix = defaultdict(float)
    for i, s in enumerate(out.space.states):
        mix[s.region.value] += per_state[i]
    total = sum(mix.values())
    print(f"plays {c.n_plays} events/play {n_events/c.n_plays:.2f} "
          f"shots/plays {shots/c.n_plays:.4f} TO {tos/c.n_plays:.4f} viol {viol/c.n_plays:.4f}")
    print(f"EPPS {ep/shots:.4f} EPPP {ep/c.n_plays:.4f}")
    print("mix:", {k: round(v / total, 3) for k, v in sorted(mix.items())})
    return out


def anchor_check(spec, n_plays=1500, replicates=120, seed=31):
    spec.n_plays = n_plays
    out = generate_synthetic(spec)
    bundle = TruthTensorBundle(out.space, out.tensors)
    alt2 = PolicyAlteration.from_json({"rules": [
        {"players": None, "regions": ["mid_range"], "pressure": ["contested"],
         "slices": None, "kind": "scale_shot_prob", "factor": 0.3},
        {"players": None, "regions": ["corner_3", "arc_3", "backcourt"], "pressure": None,
         "slices": None, "kind": "scale_shot_prob", "factor": 2.0},
    ]})
    altered2, app = apply_alteration(bundle, alt2)
    t0 = time.time()
    rep2 = compare_policies(bundle, altered2, out.starts, out.lapses, replicates, seed)
    print(f"[alt2] clip={app.total_clipped} time={time.time()-t0:.1f}s "
          f"EPPS {rep2.summary['mean_baseline_epps']:.4f}->{rep2.summary['mean_altered_epps']:.4f} "
          f"dEPPS {rep2.summary['mean_delta_epps']:+.4f} "
          f"EPPP {rep2.summary['mean_baseline_eppp']:.4f}->{rep2.summary['mean_altered_eppp']:.4f} "
          f"dEPPP {rep2.summary['mean_delta_eppp']:+.4f}")
    alt3 = PolicyAlteration.from_json({"rules": [
        {"players": ["star_guard"], "regions": None, "pressure": None, "slices": None,
         "kind": "scale_transition_prob", "factor": 0.1,
         "dest": {"players": ["star_wing"], "regions": None, "pressure": None}},
    ]})
    altered3, _ = apply_alteration(bundle, alt3)
    rep3 = compare_policies(bundle, altered3, out.starts, out.lapses, replicates, seed)
    g_b = np.mean(rep3.per_player["star_guard"]["baseline"])
    g_a = np.mean(rep3.per_player["star_guard"]["altered"])
    w_b = np.mean(rep3.per_player["star_wing"]["baseline"])
    w_a = np.mean(rep3.per_player["star_wing"]["altered"])
    print(f"[alt3] guard {g_b:.1f}->{g_a:.1f} ({(g_a/g_b-1)*100:+.1f}%) "
          f"wing {w_b:.1f}->{w_a:.1f} ({(w_a/w_b-1)*100:+.1f}%) "
          f"dEPPP {rep3.summary['mean_delta_eppp']:+.4f}")


if __name__ == "__main__":
    spec = build_preset("paper_calibrated")
    season_stats(spec)
    anchor_check(build_preset("paper_calibrated"))
