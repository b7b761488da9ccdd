#!/usr/bin/env python3
"""Aquasem - resilience evaluation for caption-based semantic links."""

import sys
from pathlib import Path

import typer
from rich.console import Console

_BASE_DIR_STR = str(Path(__file__).resolve().parent)
if sys.path[0] != _BASE_DIR_STR:
    try:
        sys.path.remove(_BASE_DIR_STR)
    except ValueError:
        pass
    sys.path.insert(0, _BASE_DIR_STR)

from analysis.run_tracker import toolkit_version  # noqa: E402

app = typer.Typer(
    name="aquasem",
    help="Corrupt captions, regenerate images and score the damage",
    add_completion=False,
)
console = Console()


# Helper to invoke Click command functions without noisy tracebacks
def _invoke_click(cmd_func, params: dict):
    import click
    ctx = click.Context(cmd_func)
    ctx.params = params or {}
    try:
        cmd_func.invoke(ctx)
    except SystemExit as e:
        # Normalize Click exits to Typer exits (quiet)
        code = e.code if isinstance(e.code, int) else 1
        raise typer.Exit(code)
    except Exception as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)


@app.command("corrupt")
def corrupt(
    error_type: str = typer.Option(..., "--type", help="1 char substitution, 2 char deletion, 3 word deletion"),
    ratio: float = typer.Option(..., "--ratio", help="Error ratio in [0, 1]"),
    seed: int = typer.Option(0, "--seed", min=0, help="Channel seed"),
    text: str | None = typer.Option(None, "--text", help="Caption text to corrupt"),
    from_stdin: bool = typer.Option(False, "--stdin", help="Read the text from stdin"),
    pretty: bool = typer.Option(False, "--pretty", help="Human-readable output"),
):
    """Corrupt a text message with one channel impairment."""
    from commands.channel import corrupt_cmd
    if error_type not in ("1", "2", "3"):
        from utils.cli import EXIT_USAGE, fail
        fail("usage", f"--type must be 1, 2 or 3, got {error_type!r}", EXIT_USAGE)
    _invoke_click(corrupt_cmd, {
        'error_type': error_type, 'ratio': ratio, 'seed': seed,
        'text': text, 'from_stdin': from_stdin, 'pretty': pretty,
    })


@app.command("ber")
def ber(
    cer: float = typer.Option(..., "--cer", help="Character error ratio in [0, 1]"),
    bits: int = typer.Option(8, "--bits", help="Bits per character"),
    pretty: bool = typer.Option(False, "--pretty", help="Human-readable output"),
):
    """Bit error ratio bounds implied by a character error ratio."""
    from commands.channel import ber as ber_cmd
    _invoke_click(ber_cmd, {'cer': cer, 'bits': bits, 'pretty': pretty})


@app.command("payload")
def payload(
    image: Path = typer.Option(..., "--image", help="Image file"),
    text: str | None = typer.Option(None, "--text", help="Caption to send instead of the image"),
    mock_caption: bool = typer.Option(False, "--mock-caption", help="Caption the image with the offline captioner"),
    bits: int = typer.Option(8, "--bits", help="Bits per character"),
    bitrate: float = typer.Option(1000.0, "--bitrate", help="Raw link bitrate in bit/s"),
    pretty: bool = typer.Option(False, "--pretty", help="Table instead of JSON"),
):
    """Compare sending an image against sending its caption."""
    from commands.channel import payload as payload_cmd
    _invoke_click(payload_cmd, {
        'image_path': image, 'text': text, 'mock_caption': mock_caption,
        'bits': bits, 'bitrate': bitrate, 'pretty': pretty,
    })


@app.command("metrics")
def metrics(
    a: Path = typer.Option(..., "--a", help="Reference image"),
    b: Path = typer.Option(..., "--b", help="Image to score"),
    embedder: str | None = typer.Option(None, "--embedder", help='"mock" or an embedding server URL'),
    token: str | None = typer.Option(None, "--token", help="Bearer token"),
    resize: bool = typer.Option(False, "--resize", help="Resize B to A's dimensions first"),
    pretty: bool = typer.Option(False, "--pretty", help="Indented JSON"),
):
    """PSNR, SSIM and CLIPScore between two images."""
    from commands.score import metrics as metrics_cmd
    _invoke_click(metrics_cmd, {
        'path_a': a, 'path_b': b, 'embedder': embedder, 'token': token,
        'resize': resize, 'pretty': pretty,
    })


@app.command("trial")
def trial(
    image: Path = typer.Option(..., "--image", help="Original image"),
    control: Path = typer.Option(..., "--control", help="Control image"),
    error_type: str = typer.Option(..., "--type", help="Channel error type (1, 2 or 3)"),
    ratio: float = typer.Option(..., "--ratio", help="Error ratio in [0, 1]"),
    seed: int = typer.Option(0, "--seed", min=0, help="Channel seed"),
    gen_seed: int = typer.Option(0, "--gen-seed", min=0, help="Generation seed"),
    backends: str | None = typer.Option(None, "--backends", help='"mock" or a model server URL'),
    token: str | None = typer.Option(None, "--token", help="Bearer token"),
    width: int = typer.Option(512, "--width", min=16, help="Generation width"),
    height: int = typer.Option(512, "--height", min=16, help="Generation height"),
    pretty: bool = typer.Option(False, "--pretty", help="Indented JSON"),
):
    """Caption, corrupt, regenerate and score one image."""
    from commands.score import trial as trial_cmd
    if error_type not in ("1", "2", "3"):
        from utils.cli import EXIT_USAGE, fail
        fail("usage", f"--type must be 1, 2 or 3, got {error_type!r}", EXIT_USAGE)
    _invoke_click(trial_cmd, {
        'image_path': image, 'control_path': control, 'error_type': error_type,
        'ratio': ratio, 'seed': seed, 'gen_seed': gen_seed, 'backends': backends,
        'token': token, 'width': width, 'height': height, 'pretty': pretty,
    })


@app.command("sweep")
def sweep(
    config: Path | None = typer.Option(None, "--config", help="YAML/JSON file with SweepConfig fields"),
    mock: bool = typer.Option(False, "--mock", help="Force offline mock backends"),
    dataset: Path | None = typer.Option(None, "--dataset", help="Dataset directory"),
    out: Path | None = typer.Option(None, "--out", help="Output directory"),
    control: str | None = typer.Option(None, "--control", help='Control image path, or "builtin"'),
    types: str | None = typer.Option(None, "--types", help="Comma-separated error types"),
    ratios: str | None = typer.Option(None, "--ratios", help="Comma-separated ascending ratios"),
    generations: int | None = typer.Option(None, "--generations", help="Generations per caption"),
    seed_base: int | None = typer.Option(None, "--seed-base", help="Channel seed base"),
    jobs: int | None = typer.Option(None, "--jobs", help="Trial parallelism"),
    width: int | None = typer.Option(None, "--width", help="Generation width"),
    height: int | None = typer.Option(None, "--height", help="Generation height"),
    save_generated: bool = typer.Option(False, "--save-generated", help="Keep generated images"),
    debug: bool = typer.Option(False, "--debug", help="Log every backend interaction"),
    pretty: bool = typer.Option(False, "--pretty", help="Summary table instead of JSON"),
    quiet: bool = typer.Option(False, "--quiet", help="No progress bar"),
):
    """Sweep error types and ratios over a dataset."""
    from commands.sweep import sweep as sweep_cmd
    _invoke_click(sweep_cmd, {
        'config_path': config, 'mock': mock, 'dataset_dir': dataset, 'output_dir': out,
        'control_image': control, 'types': types, 'ratios': ratios, 'generations': generations,
        'seed_base': seed_base, 'jobs': jobs, 'width': width, 'height': height,
        'save_generated': save_generated or None, 'debug': debug, 'pretty': pretty, 'quiet': quiet,
    })


@app.command("report")
def report(
    aggregates: Path = typer.Option(..., "--aggregates", help="aggregates.csv written by the sweep"),
    out: Path = typer.Option(..., "--out", help="Directory for the SVGs"),
    metric: list[str] | None = typer.Option(None, "--metric", help="Limit to these metrics (repeatable)"),
    quiet: bool = typer.Option(False, "--quiet", help="Suppress per-chart progress lines"),
):
    """Render one SVG per metric and error type."""
    from commands.report import report as report_cmd
    _invoke_click(report_cmd, {
        'aggregates_path': aggregates, 'out_dir': out, 'metrics': tuple(metric or ()), 'quiet': quiet,
    })


@app.command("fixtures")
def fixtures(
    out: Path = typer.Option(..., "--out", help="Target directory"),
    count: int = typer.Option(2, "--count", min=1, help="Number of scenes"),
    size: int = typer.Option(64, "--size", min=11, help="Square image size"),
):
    """Write a synthetic dataset plus the builtin control image."""
    from commands.sweep import fixtures as fixtures_cmd
    _invoke_click(fixtures_cmd, {'out_dir': out, 'count': count, 'size': size})


@app.command("stub-server")
def stub_server(
    port: int = typer.Option(8765, "--port", min=0, max=65535, help="Port on 127.0.0.1"),
    caption: str | None = typer.Option(None, "--caption", help="Fixed caption text"),
    token: str | None = typer.Option(None, "--token", help="Require this bearer token"),
):
    """Run the local model-server stand-in."""
    from commands.serve import stub_server as stub_cmd
    _invoke_click(stub_cmd, {'port': port, 'caption': caption, 'token': token})


@app.command()
def version():
    """Show Aquasem version."""
    console.print(f"[bold]Aquasem[/bold] v{toolkit_version()}")
    console.print("Resilience evaluation for caption-based semantic links")


def main():
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
