"""Command-line interface: a thin client over the pipeline operations."""

from __future__ import annotations

import json
import os
import sys

import click

from tmdp.service_cli import pipeline


@click.group()
def main() -> None:
    """Shot-clock-aware play engine: generate, ingest, fit, simulate, compare."""


@main.command()
@click.option("--preset", default="desk", show_default=True,
              help="Synthetic preset (tiny, desk, desk_prior, paper_calibrated).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Synthetic config JSON ({preset, n_plays, seed}).")
@click.option("--plays", "n_plays", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--emit-truth-draws", type=int, default=0,
              help="Also write draw sets whose draws equal the truth (demo fixture).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def generate(preset, config_path, n_plays, seed, emit_truth_draws, out_dir):
    """Generate a synthetic season with its ground truth."""
    summary = pipeline.run_generate(
        out_dir, preset=preset, n_plays=n_plays, seed=seed,
        config_path=config_path, emit_truth_draws=emit_truth_draws,
    )
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def ingest(events_path, config_path, out_dir):
    """Ingest a ball-event log into model-ready artifacts."""
    summary = pipeline.run_ingest(events_path, out_dir, config_path)
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--ingested", "ingest_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def cluster(ingest_dir, config_path, out_path):
    """Assign crossed volume-by-propensity shot groups."""
    summary = pipeline.run_cluster(ingest_dir, out_path, config_path)
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--model", type=click.Choice(["policy", "transition", "reward"]), required=True)
@click.option("--events", "ingest_dir", required=True, type=click.Path(exists=True),
              help="Directory produced by `tmdp ingest`.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def fit(model, ingest_dir, config_path, seed, out_dir):
    """Fit one MDP component and persist its posterior draw set."""
    summary = pipeline.run_fit(model, ingest_dir, out_dir, config_path, seed)
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--draws", "draws_dir", required=True, type=click.Path(exists=True))
@click.option("--starts", "starts_path", required=True, type=click.Path(exists=True))
@click.option("--lapses", "lapses_path", required=True, type=click.Path(exists=True))
@click.option("--replicates", type=int, default=300, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--freeze-draw", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def simulate(draws_dir, starts_path, lapses_path, replicates, seed, freeze_draw, out_dir):
    """Simulate seasons from posterior draws."""
    summary = pipeline.run_simulate(
        draws_dir, starts_path, lapses_path, out_dir, replicates, seed, freeze_draw
    )
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--draws", "draws_dir", required=True, type=click.Path(exists=True))
@click.option("--alteration", "alteration_path", required=True, type=click.Path(exists=True))
@click.option("--starts", "starts_path", required=True, type=click.Path(exists=True))
@click.option("--lapses", "lapses_path", required=True, type=click.Path(exists=True))
@click.option("--replicates", type=int, default=300, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def compare(draws_dir, alteration_path, starts_path, lapses_path, replicates, seed, report_path):
    """Run a paired baseline/altered comparison."""
    summary = pipeline.run_compare(
        draws_dir, alteration_path, starts_path, lapses_path, report_path, replicates, seed
    )
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--store", "store_root", default=None,
              help="Storage root (defaults to $TMDP_STORE or ./tmdp_store).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8710, show_default=True)
@click.option("--workers", type=int, default=None,
              help="Job workers (defaults to $TMDP_WORKERS or 2).")
def serve(store_root, host, port, workers):
    """Run the HTTP service."""
    import uvicorn

    from tmdp.service_cli.api import create_app

    store_root = store_root or os.environ.get("TMDP_STORE", "./tmdp_store")
    if workers is None:
        workers = int(os.environ.get("TMDP_WORKERS", "2"))
    try:
        app = create_app(store_root, workers)
    except Exception as err:
        click.echo(f"startup error: {err}", err=True)
        sys.exit(2)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
