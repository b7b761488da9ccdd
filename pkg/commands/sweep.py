"""
Sweep commands: run the error-ratio experiment and write a fixture dataset.
"""

import sys
import uuid
from pathlib import Path

import click
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from analysis.debug_logger import DebugLogger
from analysis.experiment import SweepResult, run_sweep
from analysis.report_generator import write_aggregates_csv, write_records_csv
from backends.unified_client import build_providers
from imaging.imagecore import is_image_file, save_image
from imaging.synthetic import builtin_control, synthetic_dataset
from utils.cli import EXIT_OK, EXIT_PARTIAL_FAILURE, EXIT_UNREACHABLE, cli_errors
from utils.config_loader import AquasemSettings, load_config, resolve_sweep_config, verbose_enabled
from utils.json_utils import dumps

console = Console()
# Progress goes to stderr so stdout stays machine-readable.
progress_console = Console(file=sys.stderr)


def _csv_list(value: str | None, cast) -> list | None:
    if value is None:
        return None
    try:
        return [cast(part.strip()) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise click.UsageError(f"bad list value {value!r}: {e}") from e


def _count_images(dataset_dir: Path) -> int:
    if not dataset_dir.is_dir():
        return 0
    return sum(1 for p in dataset_dir.iterdir() if p.is_file() and is_image_file(p))


def _exit_code(result: SweepResult) -> int:
    if result.unreachable:
        return EXIT_UNREACHABLE
    if result.failures:
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def _print_summary(result: SweepResult):
    table = Table(title="Mean CLIPScore vs original (%)")
    table.add_column("Ratio", justify="right")
    types = sorted({row.error_type for row in result.aggregates})
    for t in types:
        table.add_column(f"Type {t}", justify="right")
    means = {
        (row.error_type, row.ratio): row.mean
        for row in result.aggregates
        if row.metric == "clip_score_pct" and row.series == "vs_original"
    }
    for ratio in sorted({row.ratio for row in result.aggregates}):
        cells = []
        for t in types:
            mean = means.get((t, ratio))
            cells.append("-" if mean is None else f"{mean:.2f}")
        table.add_row(f"{ratio:.2f}", *cells)
    console.print(table)
    for t, ratio in sorted(result.breakpoints.items()):
        where = "none" if ratio is None else f"{ratio:.2f}"
        console.print(f"[bold]Breakpoint[/bold] type {t}: {where}")
    counts = result.counts()
    style = "green" if not counts["failed"] else "yellow"
    console.print(f"[{style}]{counts['ok']}/{counts['records']} trials ok[/{style}]"
                  f" ({counts['cells_resumed']} cells resumed)")


@click.command()
@click.option('--config', 'config_path', type=click.Path(path_type=Path), help="YAML/JSON file with SweepConfig fields")
@click.option('--mock', is_flag=True, help="Force offline mock backends")
@click.option('--dataset', 'dataset_dir', type=click.Path(path_type=Path), help="Dataset directory")
@click.option('--out', 'output_dir', type=click.Path(path_type=Path), help="Output directory")
@click.option('--control', 'control_image', help='Control image path, or "builtin"')
@click.option('--types', help="Comma-separated error types, e.g. 1,2,3")
@click.option('--ratios', help="Comma-separated ascending ratios, e.g. 0,0.1,0.2")
@click.option('--generations', type=int, help="Generations per caption")
@click.option('--seed-base', type=int, help="Channel seed base")
@click.option('--jobs', type=int, help="Trial parallelism (default: logical CPUs)")
@click.option('--width', type=int, help="Generation width")
@click.option('--height', type=int, help="Generation height")
@click.option('--save-generated', is_flag=True, default=None, help="Keep generated images as PPM")
@click.option('--debug', is_flag=True, help="Log every backend interaction")
@click.option('--pretty', is_flag=True, help="Summary table instead of JSON")
@click.option('--quiet', is_flag=True, help="No progress bar")
@cli_errors
def sweep(config_path: Path | None, mock: bool, dataset_dir: Path | None, output_dir: Path | None,
          control_image: str | None, types: str | None, ratios: str | None, generations: int | None,
          seed_base: int | None, jobs: int | None, width: int | None, height: int | None,
          save_generated: bool | None, debug: bool, pretty: bool, quiet: bool):
    """Sweep error types and ratios over a dataset; writes CSVs and manifest.json."""
    settings = AquasemSettings()
    file_data = load_config(config_path or settings.config)
    flags = {
        "dataset_dir": dataset_dir,
        "output_dir": output_dir,
        "control_image": control_image,
        "error_types": _csv_list(types, int),
        "ratios": _csv_list(ratios, float),
        "generations_per_caption": generations,
        "channel_seed_base": seed_base,
        "jobs": jobs,
        "generation_width": width,
        "generation_height": height,
        "save_generated": save_generated or None,
        "backends": "mock" if mock else None,
    }
    cfg = resolve_sweep_config(file_data, flags, settings)

    debug_logger = None
    if debug:
        debug_dir = settings.debug_dir or (Path(cfg.output_dir) / ".aquasem_debug")
        debug_logger = DebugLogger(f"sweep_{uuid.uuid4().hex[:8]}", debug_dir)
    providers = build_providers(cfg.backends, verbose=verbose_enabled(file_data, settings),
                                debug_logger=debug_logger)

    total = len(cfg.error_types) * len(cfg.ratios) * cfg.generations_per_caption * _count_images(
        Path(cfg.dataset_dir))
    try:
        if quiet:
            result = run_sweep(cfg, providers, debug_logger=debug_logger, command_args=sys.argv[1:])
        else:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                TaskProgressColumn(),
                console=progress_console,
                transient=True,
            ) as progress:
                task = progress.add_task("Running trials...", total=total or None)
                result = run_sweep(cfg, providers, debug_logger=debug_logger, command_args=sys.argv[1:],
                                   on_trial=lambda rec: progress.advance(task))
    finally:
        providers.close()

    out = Path(cfg.output_dir)
    records_path = write_records_csv(result.records, out / "records.csv")
    aggregates_path = write_aggregates_csv(result.aggregates, out / "aggregates.csv")
    log_path = debug_logger.finalize({"counts": result.counts()}) if debug_logger else None

    if pretty:
        _print_summary(result)
    else:
        click.echo(dumps({
            "records": str(records_path),
            "aggregates": str(aggregates_path),
            "manifest": str(out / "manifest.json"),
            "debug_log": str(log_path) if log_path else None,
            "counts": result.counts(),
            "breakpoints": {str(k): v for k, v in result.breakpoints.items()},
            "providers": result.providers,
        }))
    for rec in result.failures[:5]:
        progress_console.print(f"[red]{rec.image_id} type {rec.error_type} r={rec.requested_ratio:g} "
                               f"g={rec.gen_seed}: {rec.status}[/red] {rec.error_message}")
    code = _exit_code(result)
    if code != EXIT_OK:
        sys.exit(code)


@click.command()
@click.option('--out', 'out_dir', type=click.Path(path_type=Path), required=True, help="Target directory")
@click.option('--count', type=click.IntRange(min=1), default=2, show_default=True, help="Number of scenes")
@click.option('--size', type=click.IntRange(min=11), default=64, show_default=True, help="Square image size")
@cli_errors
def fixtures(out_dir: Path, count: int, size: int):
    """Write a synthetic dataset plus the builtin control image."""
    images = synthetic_dataset(count, out_dir / "dataset", size)
    control = save_image(builtin_control(), out_dir / "control.ppm")
    click.echo(dumps({"dataset": [str(p) for p in images], "control": str(control)}))
