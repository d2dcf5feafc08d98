"""Policy alterations: exact scaling, identity, renormalization, composition."""

from __future__ import annotations

import numpy as np
import pytest

from tmdp.errors import ConfigError
from tmdp.policy_lab.alterations import (
    AlterationRule,
    PolicyAlteration,
    StatePredicate,
    apply_alteration,
    resolve_targets,
    slices_for_remaining_above,
)
from tmdp.play_simulator.simulate import iter_seasons
from tmdp.play_simulator.tensors import TransformedTensorBundle
from tmdp.state_model.states import CourtRegion

from modelutil import tiny_space
from simutil import heterogeneous_bundle, heterogeneous_tensors, some_starts, spread_lapses


def rule_doc(**kw):
    doc = {
        "players": None,
        "regions": None,
        "pressure": None,
        "slices": None,
        "kind": "scale_shot_prob",
        "factor": 1.0,
    }
    doc.update(kw)
    return doc


def bundle_of(space, n_draws=3):
    return TransformedTensorBundle(
        space, [heterogeneous_tensors(space, seed=i) for i in range(n_draws)]
    )


class TestIdentity:
    def test_factor_one_is_bitwise_noop(self):
        space = tiny_space(2)
        bundle = bundle_of(space)
        alt = PolicyAlteration.from_json({"rules": [rule_doc(factor=1.0)]})
        out, app = apply_alteration(bundle, alt)
        for i in range(bundle.n_draws):
            a, b = bundle.get(i), out.get(i)
            assert np.array_equal(a.policy_p, b.policy_p)
            assert np.array_equal(a.trans_p, b.trans_p)
        assert app.total_clipped == 0


class TestShotScaling:
    def test_targeted_cells_scaled_exactly(self):
        space = tiny_space(2)
        bundle = bundle_of(space)
        alt = PolicyAlteration.from_json(
            {"rules": [rule_doc(regions=["mid_range"], pressure=["contested"],
                                slices=[1, 2, 3, 4], factor=0.8)]}
        )
        out, _ = apply_alteration(bundle, alt)
        targets = [
            i for i, s in enumerate(space.states)
            if s.region is CourtRegion.MID_RANGE and s.contested
        ]
        for d in range(bundle.n_draws):
            before = bundle.get(d).policy_p
            after = out.get(d).policy_p
            for i in range(space.n_states):
                for t in range(8):
                    if i in targets and t < 4:
                        assert after[i, t] == 0.8 * before[i, t]
                    else:
                        assert after[i, t] == before[i, t]

    def test_clipping_counted(self):
        space = tiny_space(2)
        bundle = bundle_of(space, n_draws=1)
        alt = PolicyAlteration.from_json({"rules": [rule_doc(factor=50.0)]})
        out, app = apply_alteration(bundle, alt)
        assert app.total_clipped > 0
        assert np.all(out.get(0).policy_p <= 1.0)

    def test_every_draw_transformed_identically(self):
        space = tiny_space(2)
        bundle = bundle_of(space, n_draws=4)
        alt = PolicyAlteration.from_json({"rules": [rule_doc(factor=0.5)]})
        out, _ = apply_alteration(bundle, alt)
        for d in range(4):
            assert np.allclose(out.get(d).policy_p, 0.5 * bundle.get(d).policy_p)


class TestTransitionScaling:
    def test_row_renormalized_and_ratios_preserved(self):
        space = tiny_space(2)
        bundle = bundle_of(space, n_draws=1)
        dest = {"players": ["p1"], "regions": None, "pressure": None}
        alt = PolicyAlteration.from_json(
            {"rules": [rule_doc(kind="scale_transition_prob", players=["p0"],
                                factor=0.1, dest=dest)]}
        )
        out, _ = apply_alteration(bundle, alt)
        before = bundle.get(0).trans_p
        after = out.get(0).trans_p
        p1_cols = [i for i, s in enumerate(space.states) if s.player_id == "p1"]
        other_cols = [i for i, s in enumerate(space.states) if s.player_id != "p1"]
        origin_rows = [i for i, s in enumerate(space.states) if s.player_id == "p0"]
        sums = after.sum(axis=2)
        assert np.max(np.abs(sums - 1.0)) < 1e-12
        for t in range(8):
            for i in origin_rows:
                # Direct renormalization oracle.
                row = before[t, i].copy()
                row[p1_cols] *= 0.1
                row /= row.sum()
                assert np.allclose(after[t, i], row, atol=1e-15)
                # Untargeted destination ratios survive.
                for a in other_cols[:3]:
                    for b in other_cols[3:6]:
                        if before[t, i, b] > 0 and after[t, i, b] > 0:
                            assert after[t, i, a] / after[t, i, b] == pytest.approx(
                                before[t, i, a] / before[t, i, b]
                            )

    def test_untouched_rows_bit_identical(self):
        space = tiny_space(2)
        bundle = bundle_of(space, n_draws=1)
        alt = PolicyAlteration.from_json(
            {"rules": [rule_doc(kind="scale_transition_prob", players=["p0"], factor=0.3,
                                dest={"players": ["p1"], "regions": None, "pressure": None})]}
        )
        out, _ = apply_alteration(bundle, alt)
        rows_p1 = [i for i, s in enumerate(space.states) if s.player_id == "p1"]
        assert np.array_equal(
            bundle.get(0).trans_p[:, rows_p1], out.get(0).trans_p[:, rows_p1]
        )


class TestComposition:
    def test_disjoint_rules_commute_exactly(self):
        space = tiny_space(2)
        bundle = bundle_of(space, n_draws=1)
        r1 = rule_doc(players=["p0"], factor=0.7)
        r2 = rule_doc(players=["p1"], factor=1.4)
        ab = PolicyAlteration.from_json({"rules": [r1, r2]})
        ba = PolicyAlteration.from_json({"rules": [r2, r1]})
        out_ab, _ = apply_alteration(bundle, ab)
        out_ba, _ = apply_alteration(bundle, ba)
        assert np.array_equal(out_ab.get(0).policy_p, out_ba.get(0).policy_p)
        assert np.array_equal(out_ab.get(0).trans_p, out_ba.get(0).trans_p)


class TestValidation:
    def test_zero_target_rule_rejected(self):
        space = tiny_space(2)
        alt = PolicyAlteration.from_json({"rules": [rule_doc(players=["nobody"])]})
        with pytest.raises(ConfigError):
            resolve_targets(alt, space)

    def test_bad_factor_rejected(self):
        with pytest.raises(ConfigError):
            AlterationRule(kind="scale_shot_prob", factor=0.0)

    def test_bad_kind_rejected(self):
        with pytest.raises(ConfigError):
            PolicyAlteration.from_json({"rules": [rule_doc(kind="warp_reality")]})

    def test_bad_region_rejected(self):
        with pytest.raises(ValueError):
            PolicyAlteration.from_json({"rules": [rule_doc(regions=["parking_lot"])]})


class TestClockBoundaryRule:
    def test_more_than_ten_seconds_includes_slice_five(self):
        assert slices_for_remaining_above(10.0) == (1, 2, 3, 4, 5)

    def test_more_than_twelve_seconds_is_four_slices(self):
        assert slices_for_remaining_above(12.0) == (1, 2, 3, 4)

    def test_json_round_trip(self):
        alt = PolicyAlteration.from_json(
            {"rules": [rule_doc(regions=["mid_range"], pressure=["contested"],
                                slices=[1, 2, 3, 4], factor=0.8)]}
        )
        text = alt.canonical_text()
        again = PolicyAlteration.from_json(__import__("json").loads(text))
        assert again.canonical_text() == text


class TestMonotonicity:
    def test_upscaling_raises_targeted_shot_counts(self):
        """Paired one-sided check across 300 replicates at alpha = 0.01."""
        from scipy import stats as sp_stats

        space = tiny_space(2)
        triples = []
        for i in range(5):
            t = heterogeneous_tensors(space, seed=i)
            t.policy_p = np.minimum(t.policy_p, 0.6)  # keep 1.5x inside [0, 1]
            triples.append(t)
        bundle = TransformedTensorBundle(space, triples)
        target_state = space.states[0]
        alt = PolicyAlteration.from_json(
            {"rules": [rule_doc(players=[target_state.player_id],
                                regions=[target_state.region.value],
                                pressure=["contested" if target_state.contested else "open"],
                                factor=1.5)]}
        )
        out, app = apply_alteration(bundle, alt)
        assert app.total_clipped == 0
        starts = some_starts(space, 60, seed=3)
        lapses = spread_lapses()
        idx = space.index(target_state)
        deltas = []
        base_iter = iter_seasons(starts, bundle, lapses, 300, seed=5)
        alt_iter = iter_seasons(starts, out, lapses, 300, seed=5)
        for (_, cb, _), (_, ca, _) in zip(base_iter, alt_iter):
            b = cb.shots_by_state().sum(axis=0)[idx]
            a = ca.shots_by_state().sum(axis=0)[idx]
            deltas.append(a - b)
        deltas = np.array(deltas, dtype=float)
        assert deltas.mean() > 0
        t_stat, p_two = sp_stats.ttest_1samp(deltas, 0.0)
        p_one = p_two / 2 if t_stat > 0 else 1 - p_two / 2
        assert p_one < 0.01
