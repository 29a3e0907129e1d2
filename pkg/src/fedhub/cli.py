"""Command-line entry points: serve the hub, run experiments, summarize CSVs."""

from __future__ import annotations

import collections
import csv
import statistics
import sys

import click

from .service.app import ServiceConfig, serve as _serve
from .sim.config import ConfigError, load_config
from .sim.harness import run_config


@click.group()
def main():
    """Federated model hub and its simulation harness."""


@main.command()
@click.option("--data-dir", required=True, type=click.Path(file_okay=False),
              help="Directory for event logs and parameter blobs.")
@click.option("--keys", "key_file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON file of API key records.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8377, show_default=True, type=int)
def serve(data_dir: str, key_file: str, host: str, port: int):
    """Start the hub server."""
    _serve(ServiceConfig(data_dir=data_dir, key_file=key_file, host=host, port=port))


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", default=".", show_default=True,
              type=click.Path(file_okay=False))
def run(config_path: str, output_dir: str):
    """Execute an experiment config file and write its curves CSV."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    report = run_config(config, output_dir)
    click.echo(f"wrote {report['curves_csv']}")
    if report.get("train_curves_csv"):
        click.echo(f"wrote {report['train_curves_csv']}")
    for arm, median in sorted(report.get("median_rounds_to_target", {}).items()):
        click.echo(f"median rounds to target, {arm}: {median:g}")


@main.command()
@click.argument("csv_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--target", default=0.85, show_default=True, type=float,
              help="Accuracy threshold for rounds-to-target.")
def report(csv_paths: tuple[str, ...], target: float):
    """Summarize curves CSVs: median rounds-to-target and final accuracy per arm."""
    for path in csv_paths:
        by_arm_seed: dict = collections.defaultdict(dict)
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["arm"], int(row["seed"]))
                by_arm_seed[key][int(row["round"])] = float(row["test_accuracy"])

        arms: dict = collections.defaultdict(list)
        finals: dict = collections.defaultdict(list)
        for (arm, _seed), rounds in sorted(by_arm_seed.items()):
            reached = [r for r in sorted(rounds) if rounds[r] >= target]
            budget = max(rounds)
            arms[arm].append(reached[0] if reached else budget + 1)
            finals[arm].append(rounds[budget])

        click.echo(f"{path}:")
        for arm in sorted(arms):
            median_rounds = statistics.median(arms[arm])
            median_final = statistics.median(finals[arm])
            click.echo(f"  {arm}: median rounds to {target:g} = {median_rounds:g} "
                       f"(censored at budget+1), median final accuracy = {median_final:.4f}")


if __name__ == "__main__":
    sys.exit(main())
