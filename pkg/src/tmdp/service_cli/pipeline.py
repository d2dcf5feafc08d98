"""Pipeline operations shared by the CLI and the HTTP service.

Every operation is a plain function from input paths plus a seed to output
files, with no hidden state, so a CLI invocation and an HTTP job produce
byte-identical artifacts for the same inputs and seed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from tmdp import binio
from tmdp.config import McmcConfig, ModelConfig
from tmdp.errors import ConfigError, RejectedInputError
from tmdp.hier_models.clustering import (
    assignments_csv,
    cluster_shot_groups,
    summaries_from_episodes,
)
from tmdp.inference_engine.diagnostics import diagnostics
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.inference_engine.fits import fit_policy, fit_reward
from tmdp.inference_engine.two_stage import fit_tpt_two_stage
from tmdp.play_simulator.counts import CountTensor
from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.simulate import iter_seasons
from tmdp.play_simulator.tensors import PosteriorTensorBundle
from tmdp.policy_lab.alterations import PolicyAlteration, apply_alteration
from tmdp.policy_lab.compare import compare_policies
from tmdp.service_cli.synthetic import (
    build_preset,
    generate_synthetic,
    read_starts_jsonl,
    spec_from_config,
    write_starts_jsonl,
)
from tmdp.state_model.ingest import (
    ingest_events,
    read_events_jsonl,
    write_events_jsonl,
)
from tmdp.state_model.states import StateSpace


def _load_config(path: str | Path | None) -> ModelConfig:
    if path is None:
        return ModelConfig()
    return ModelConfig.load(path)


def run_generate(out_dir: str | Path, preset: str = "desk", n_plays: int | None = None,
                 seed: int | None = None, config_path: str | Path | None = None,
                 emit_truth_draws: int = 0) -> dict[str, Any]:
    """Generate a synthetic season and write the full artifact set."""
    out = Path(out_dir)
    if config_path is not None:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
        spec = spec_from_config(doc)
        if n_plays is not None:
            spec.n_plays = n_plays
        if seed is not None:
            spec.seed = seed
    else:
        spec = build_preset(preset, n_plays, seed)
    result = generate_synthetic(spec, out, emit_truth_draws=emit_truth_draws)
    n_events = sum(len(e.steps) for e in result.episodes) + sum(
        1 for e in result.episodes if e.terminal.value == "turnover"
    )
    return {
        "preset": spec.name,
        "n_plays": spec.n_plays,
        "n_events": n_events,
        "outputs": sorted(p.name for p in out.iterdir()),
    }


def run_ingest(events_path: str | Path, out_dir: str | Path,
               config_path: str | Path | None = None) -> dict[str, Any]:
    """Ingest an event log into episodes, counts, lapses, starts, exclusions."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events = read_events_jsonl(events_path)
    result = ingest_events(events)
    (out / "episodes.jsonl").write_text(
        "".join(e.to_json_line() + "\n" for e in result.episodes), encoding="utf-8"
    )
    result.counts.save(out / "counts.bin")
    result.lapses.save(out / "lapses.bin")
    from tmdp.play_simulator.simulate import PlayStart

    write_starts_jsonl(
        [PlayStart(s.state, s.t_clock) for s in result.starts],
        out / "starts.jsonl",
        play_ids=[s.play_id for s in result.starts],
    )
    (out / "exclusions.csv").write_text(result.exclusions_csv(), encoding="utf-8")
    binio.dump_json(result.space.to_json(), out / "state_space.json")
    summary = {
        "n_events": len(events),
        "n_plays": len(result.episodes),
        "n_excluded": len(result.exclusions),
        "n_states": result.space.n_states,
    }
    binio.dump_json(summary, out / "ingest_summary.json")
    return summary


def _episodes_from_jsonl(path: Path):
    from tmdp.state_model.events import EpisodeRecord

    episodes = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            episodes.append(EpisodeRecord.from_json(json.loads(line)))
    return episodes


def _load_ingested(ingest_dir: Path):
    space = StateSpace.from_json(
        json.loads((ingest_dir / "state_space.json").read_text(encoding="utf-8"))
    )
    episodes = _episodes_from_jsonl(ingest_dir / "episodes.jsonl")
    return space, episodes


def run_cluster(ingest_dir: str | Path, out_path: str | Path,
                config_path: str | Path | None = None) -> dict[str, Any]:
    """Cluster players into crossed shot groups and export the CSV."""
    cfg = _load_config(config_path)
    space, episodes = _load_ingested(Path(ingest_dir))
    summaries = summaries_from_episodes(episodes, space)
    assignments = cluster_shot_groups(
        summaries, k_volume=cfg.cluster_volume_k, k_propensity=cfg.cluster_propensity_k
    )
    Path(out_path).write_text(assignments_csv(assignments), encoding="utf-8")
    return {"n_players": len(assignments), "out": str(out_path)}


def _apply_shot_groups(space: StateSpace, csv_path: str | Path) -> StateSpace:
    from tmdp.state_model.states import Player

    groups = {}
    lines = Path(csv_path).read_text(encoding="utf-8").strip().splitlines()
    for line in lines[1:]:
        pid, _, _, h = line.split(",")
        groups[pid] = int(h)
    players = [
        Player(p.player_id, p.position, shot_group=groups.get(p.player_id, p.shot_group),
               attributes=p.attributes)
        for p in space.players
    ]
    return StateSpace(players, space.regions)


def run_fit(model: str, ingest_dir: str | Path, out_dir: str | Path,
            config_path: str | Path | None = None,
            seed: int | None = None) -> dict[str, Any]:
    """Fit one MDP component on an ingested corpus and persist the draws."""
    if model not in ("policy", "transition", "reward"):
        raise ConfigError(f"unknown model: {model}")
    cfg = _load_config(config_path)
    ingest_dir = Path(ingest_dir)
    space, episodes = _load_ingested(ingest_dir)
    if model == "reward" and cfg.shot_groups_csv:
        space = _apply_shot_groups(space, cfg.shot_groups_csv)
    mcmc = cfg.mcmc_for(model)
    if seed is not None:
        mcmc.seed = seed
    if model == "policy":
        ds = fit_policy(episodes, space, cfg, mcmc)
    elif model == "reward":
        ds = fit_reward(episodes, space, cfg, mcmc)
    else:
        lapses = LapseDistribution.load(ingest_dir / "lapses.bin")
        result = fit_tpt_two_stage(
            episodes, space, cfg,
            mcmc_stage1=cfg.mcmc_for("transition_stage1"),
            mcmc_stage2=mcmc,
            lapses=lapses,
        )
        ds = result.draws
    out = Path(out_dir)
    ds.save(out)
    report = diagnostics(ds)
    binio.dump_json(report.to_json(), out / f"diagnostics_{model}.json")
    return {
        "model": model,
        "dim": ds.dim,
        "kept": ds.n_kept,
        "max_rhat": report.max_rhat,
        "min_ess": report.min_ess,
    }


def load_bundle(draws_dir: str | Path, max_draws: int | None = None) -> PosteriorTensorBundle:
    d = Path(draws_dir)
    return PosteriorTensorBundle(
        PosteriorDrawSet.load(d, "policy"),
        PosteriorDrawSet.load(d, "transition"),
        PosteriorDrawSet.load(d, "reward"),
        max_draws=max_draws,
    )


def run_simulate(draws_dir: str | Path, starts_path: str | Path, lapses_path: str | Path,
                 out_dir: str | Path, replicates: int, seed: int,
                 freeze_draw: int | None = None) -> dict[str, Any]:
    """Simulate seasons from posterior draws; one binary CountTensor per replicate."""
    bundle = load_bundle(draws_dir)
    starts = read_starts_jsonl(starts_path)
    lapses = LapseDistribution.load(lapses_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    totals = {"plays": 0, "shots": 0, "turnovers": 0}
    for r, counts, _ in iter_seasons(starts, bundle, lapses, replicates, seed):
        counts.save(out / f"rep_{r}.counts")
        totals["plays"] += counts.n_plays
        totals["shots"] += counts.shot_total()
        totals["turnovers"] += counts.turnover_total()
    summary = {
        "replicates": replicates,
        "seed": seed,
        "n_starts": len(starts),
        **totals,
    }
    binio.dump_json(summary, out / "simulate_summary.json")
    return summary


def run_compare(draws_dir: str | Path, alteration_path: str | Path, starts_path: str | Path,
                lapses_path: str | Path, report_path: str | Path,
                replicates: int, seed: int) -> dict[str, Any]:
    """Paired baseline/altered simulation; writes the comparison report JSON."""
    bundle = load_bundle(draws_dir, max_draws=max(replicates, 1))
    alteration = PolicyAlteration.load(alteration_path)
    altered, application = apply_alteration(bundle, alteration)
    starts = read_starts_jsonl(starts_path)
    lapses = LapseDistribution.load(lapses_path)
    report = compare_policies(bundle, altered, starts, lapses, replicates, seed)
    doc = report.to_json()
    doc["alteration"] = alteration.to_json()
    doc["alteration_application"] = application.to_json()
    Path(report_path).parent.mkdir(parents=True, exist_ok=True)
    Path(report_path).write_text(binio.canonical_json(doc), encoding="utf-8")
    return {
        "replicates": replicates,
        "seed": seed,
        "summary": report.summary,
        "report": str(report_path),
    }
