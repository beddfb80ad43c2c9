"""Command line entry points: train, evaluate, simulate, serve.

Exit codes: 0 on success, 1 when an evaluation check fails, 2 on usage
or data errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .evaluation import check_report, run_benchmark, summary_table, write_report
from .logio import FileFormatError, read_catalog, read_sessions, save_model, write_catalog, write_sessions
from .synthetic import ScenarioConfig, generate_synthetic_log, materialize
from .training import ModelConfig, train


def _load_model_config(path: str | None) -> ModelConfig:
    if path is None:
        return ModelConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return ModelConfig.from_dict(json.load(fh))


@click.group()
def main():
    """Soft faceted browsing: train models, run benchmarks, serve the API."""


@main.command("train")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def train_cmd(catalog_path, log_path, config_path, out_path):
    """Fit action models from a catalog and a session log."""
    try:
        catalog = read_catalog(catalog_path)
        sessions, parse_rejects = read_sessions(log_path, catalog)
        config = _load_model_config(config_path)
    except (FileFormatError, ValueError) as exc:
        raise click.UsageError(str(exc))
    model = train(catalog, sessions, config)
    save_model(model, out_path)
    skipped = parse_rejects.get("unknown_brand", 0)
    click.echo(
        f"trained {len(model.queries)} queries from {model.session_count} sessions"
        + (f" ({skipped} unknown-brand actions skipped)" if skipped else "")
    )
    click.echo(f"model written to {out_path}")


@main.command("evaluate")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--queries", "n_queries", type=int, default=None, help="Override scenario query count.")
@click.option("--sessions", "n_sessions", type=int, default=None, help="Override sessions per query.")
@click.option("--out-dir", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--check", is_flag=True, help="Exit 1 unless the scenario's thresholds pass.")
@click.option("--figures/--no-figures", default=True, show_default=True)
def evaluate_cmd(scenario_path, seed, n_queries, n_sessions, out_dir, config_path, check, figures):
    """Run the leave-one-out benchmark for a synthetic scenario."""
    try:
        scenario = ScenarioConfig.load(scenario_path)
        model_config = _load_model_config(config_path)
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc))
    report = run_benchmark(
        scenario,
        n_queries=n_queries,
        sessions_per_query=n_sessions,
        seed=seed,
        model_config=model_config,
    )
    click.echo(summary_table(report), nl=False)
    if out_dir is not None:
        for path in write_report(report, out_dir, figures=figures):
            click.echo(f"wrote {path}")
    if check:
        ok, messages = check_report(report, scenario.checks)
        for msg in messages:
            click.echo(msg)
        if not ok:
            sys.exit(1)


@main.command("simulate")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--catalog-out", "catalog_out", type=click.Path(dir_okay=False), default=None,
              help="Also write the materialized catalog (defaults to <out>.catalog.jsonl).")
def simulate_cmd(scenario_path, seed, out_path, catalog_out):
    """Generate a synthetic session log (and its catalog) from a scenario."""
    try:
        config = ScenarioConfig.load(scenario_path)
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc))
    scenario = materialize(config, config.n_queries, seed)
    sessions = generate_synthetic_log(scenario, config.sessions_per_query, seed)
    write_sessions(sessions, scenario.catalog.vocabulary, out_path)
    if catalog_out is None:
        catalog_out = str(Path(out_path).with_suffix("")) + ".catalog.jsonl"
    write_catalog(scenario.catalog, catalog_out)
    click.echo(f"wrote {len(sessions)} sessions to {out_path}")
    click.echo(f"wrote {len(scenario.catalog)} items to {catalog_out}")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def serve_cmd(config_path):
    """Start the HTTP browsing service."""
    from .service import ServiceConfig, serve

    try:
        config = ServiceConfig.load(config_path)
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc))
    serve(config)


if __name__ == "__main__":
    main()
