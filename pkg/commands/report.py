"""
Render the SVG charts of a finished sweep.
"""

import sys
from pathlib import Path

import click
from rich.console import Console

from analysis.report_generator import read_aggregates_csv, render_all
from utils.cli import cli_errors
from utils.json_utils import dumps

progress_console = Console(file=sys.stderr)


@click.command()
@click.option('--aggregates', 'aggregates_path', type=click.Path(path_type=Path), required=True,
              help="aggregates.csv written by the sweep")
@click.option('--out', 'out_dir', type=click.Path(path_type=Path), required=True, help="Directory for the SVGs")
@click.option('--metric', 'metrics', multiple=True, type=click.Choice(['psnr_db', 'ssim', 'clip_score_pct']),
              help="Limit to these metrics (repeatable)")
@click.option('--quiet', is_flag=True, help="Suppress per-chart progress lines")
@cli_errors
def report(aggregates_path: Path, out_dir: Path, metrics: tuple[str, ...], quiet: bool):
    """
    Draw one chart per (metric, error type) from an aggregates file.

    Missing cells become gaps and are listed under "warnings".
    """
    if not aggregates_path.exists():
        raise FileNotFoundError(f"aggregates file not found: {aggregates_path}")
    rows = read_aggregates_csv(aggregates_path)
    if not rows:
        raise ValueError(f"{aggregates_path}: no aggregate rows")

    def _progress(kind: str, path: str):
        if not quiet:
            progress_console.print(f"[dim]{kind}:[/dim] {path}")

    result = render_all(rows, out_dir, metrics=list(metrics) or None, progress_cb=_progress)
    click.echo(dumps({
        "charts": [str(p) for p in result.charts],
        "warnings": result.warnings,
        "manifest": str(result.manifest) if result.manifest else None,
    }))
