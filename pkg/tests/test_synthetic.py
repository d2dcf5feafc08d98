"""Synthetic generator: presets, determinism, ingest consistency."""

from __future__ import annotations

import numpy as np
import pytest

from tmdp.errors import ConfigError
from tmdp.service_cli.synthetic import (
    build_preset,
    generate_synthetic,
    read_starts_jsonl,
)
from tmdp.state_model.ingest import ingest_events, read_events_jsonl, serialize_episodes


class TestGenerate:
    def test_zero_plays_produces_empty_valid_artifacts(self, tmp_path):
        spec = build_preset("tiny", n_plays=0, seed=1)
        out = generate_synthetic(spec, tmp_path)
        assert (tmp_path / "events.jsonl").read_text() == ""
        assert (tmp_path / "state_space.json").exists()
        assert out.counts.n_plays == 0

    def test_deterministic_given_seed(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_synthetic(build_preset("tiny", n_plays=100, seed=5), a)
        generate_synthetic(build_preset("tiny", n_plays=100, seed=5), b)
        for name in ("events.jsonl", "starts.jsonl", "state_space.json",
                     "truth.bin", "lapses.bin", "generating_counts.bin"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_synthetic(build_preset("tiny", n_plays=100, seed=5), a)
        generate_synthetic(build_preset("tiny", n_plays=100, seed=6), b)
        assert (a / "events.jsonl").read_bytes() != (b / "events.jsonl").read_bytes()

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError):
            build_preset("galaxy_brain")

    def test_inconsistent_roster_rejected(self):
        spec = build_preset("tiny", n_plays=10, seed=1)
        spec.players[1] = spec.players[0]
        with pytest.raises(ConfigError):
            generate_synthetic(spec)


class TestIngestConsistency:
    def test_ingest_recount_matches_generating_counts(self, tmp_path):
        """The event log re-ingests to exactly the generating count tensor."""
        spec = build_preset("desk", n_plays=400, seed=9)
        out = generate_synthetic(spec, tmp_path)
        events = read_events_jsonl(tmp_path / "events.jsonl")
        result = ingest_events(events, space=out.space)
        assert len(result.episodes) == 400
        assert not result.exclusions
        merged_gen = out.counts.merged_counts()
        merged_ing = result.counts.merged_counts()
        assert np.array_equal(merged_gen, merged_ing)

    def test_starts_round_trip(self, tmp_path):
        spec = build_preset("tiny", n_plays=50, seed=3)
        out = generate_synthetic(spec, tmp_path)
        back = read_starts_jsonl(tmp_path / "starts.jsonl")
        assert [(s.state, round(s.clock, 9)) for s in back] == [
            (s.state, round(s.clock, 9)) for s in out.starts
        ]


class TestTruthDraws:
    def test_truth_draw_sets_reconstruct_tensors(self, tmp_path):
        from tmdp.service_cli.pipeline import load_bundle

        spec = build_preset("tiny", n_plays=30, seed=2)
        out = generate_synthetic(spec, tmp_path, emit_truth_draws=3)
        bundle = load_bundle(tmp_path)
        tensors = bundle.get(0)
        assert np.allclose(tensors.policy_p, out.tensors.policy_p, atol=1e-7)
        assert np.allclose(tensors.trans_p, out.tensors.trans_p, atol=1e-7)
        assert np.allclose(tensors.reward_ep, out.tensors.reward_ep, atol=1e-7)

    def test_event_volume_scales_like_published_corpus(self):
        """155,656-play season lands near 1.9M events (order of magnitude)."""
        spec = build_preset("paper_calibrated", n_plays=4000, seed=31)
        out = generate_synthetic(spec)
        events_per_play = (
            sum(len(e.steps) for e in out.episodes)
            + sum(1 for e in out.episodes if e.terminal.value == "turnover")
        ) / len(out.episodes)
        projected = events_per_play * 155_656
        assert 0.6e6 < projected < 6e6
