import logging
import sys
from typing import Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from ..core.errors import ConfigError
from .config import load_config
from .runner import EXIT_CONFIG, EXIT_OK, ExperimentOutcome, run_config

console = Console(stderr=True)


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False, show_path=verbose)],
        force=True,
    )


def report(outcome: ExperimentOutcome) -> None:
    if outcome.message:
        console.print(f"[red]{escape(outcome.message)}[/red]")
    if outcome.runs:
        table = Table(title=f"Runs ({outcome.output_dir})")
        table.add_column("run")
        table.add_column("mode")
        table.add_column("status")
        for run in outcome.runs:
            status = "[green]ok[/green]" if run.ok else f"[red]failed[/red] {escape(run.error or '')}"
            table.add_row(run.name, run.mode, status)
        console.print(table)
    if outcome.exit_code == EXIT_OK:
        console.print("[green]all runs completed[/green]")
    elif outcome.exit_code == EXIT_CONFIG:
        console.print("[red]invalid config[/red]")
    else:
        console.print("[red]some runs or checks failed[/red]")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log per-step detail.")
def cli(verbose: bool):
    """Proximal worthwhile-change experiments."""
    setup_logging(verbose)


def _shared_options(command):
    command = click.option("--jobs", "-j", type=click.IntRange(min=1), default=1, show_default=True,
                           help="Runs executed concurrently.")(command)
    command = click.option("--out", "output_dir", type=click.Path(file_okay=False),
                           help="Override the output directory.")(command)
    command = click.option("--seed", type=click.IntRange(min=0), help="Override the config seed.")(command)
    return command


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@_shared_options
def run(config_path: str, seed: Optional[int], output_dir: Optional[str], jobs: int):
    """Execute every run of CONFIG_PATH."""
    outcome = run_config(config_path, seed=seed, output_dir=output_dir, jobs=jobs)
    report(outcome)
    sys.exit(outcome.exit_code)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@_shared_options
def probes(config_path: str, seed: Optional[int], output_dir: Optional[str], jobs: int):
    """Execute the property checks of CONFIG_PATH and write probes.json."""
    outcome = run_config(config_path, seed=seed, output_dir=output_dir, jobs=jobs, only_probes=True)
    report(outcome)
    sys.exit(outcome.exit_code)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
def validate(config_path: str):
    """Check CONFIG_PATH without running anything."""
    try:
        config = load_config(config_path)
    except ConfigError as e:
        console.print(f"[red]{escape(str(e))}[/red]")
        sys.exit(EXIT_CONFIG)
    console.print(f"[green]valid[/green]: {len(config.runs)} run(s), output to {escape(config.output_dir)}")
    sys.exit(EXIT_OK)


def main():
    cli(prog_name="habitprox")
