"""
Scoring commands: compare two images, or run one end-to-end trial.
"""

import sys
from pathlib import Path

import click
from rich.console import Console

from analysis.metrics import score_pair
from analysis.pipeline import TrialRecord, run_trial
from backends.unified_client import build_embedder, build_providers, endpoint_from_url
from channel.text_channel import ErrorSpec
from imaging.imagecore import load_image, resize_bilinear
from utils.cli import EXIT_PARTIAL_FAILURE, EXIT_UNREACHABLE, cli_errors
from utils.config_loader import AquasemSettings
from utils.json_utils import dumps

progress_console = Console(file=sys.stderr)


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


@click.command()
@click.option('--a', 'path_a', type=click.Path(path_type=Path), required=True, help="Reference image")
@click.option('--b', 'path_b', type=click.Path(path_type=Path), required=True, help="Image to score")
@click.option('--embedder', help='"mock" or an embedding server URL (default: AQUASEM_BACKEND_URL, else mock)')
@click.option('--token', help="Bearer token for the embedding server")
@click.option('--resize', is_flag=True, help="Resize B to A's dimensions first")
@click.option('--pretty', is_flag=True, help="Indented JSON")
@cli_errors
def metrics(path_a: Path, path_b: Path, embedder: str | None, token: str | None, resize: bool, pretty: bool):
    """PSNR, SSIM and CLIPScore between two images."""
    a = load_image(_require(path_a, "image"))
    b = load_image(_require(path_b, "image"))
    if resize and (a.width, a.height) != (b.width, b.height):
        b = resize_bilinear(b, a.width, a.height)

    settings = AquasemSettings()
    emb = build_embedder(embedder or settings.backend_url, token or settings.token)
    try:
        report = score_pair(a, b, emb)
    finally:
        close = getattr(emb, "close", None)
        if close:
            close()
    click.echo(dumps(report.to_dict(), pretty=pretty))


@click.command()
@click.option('--image', 'image_path', type=click.Path(path_type=Path), required=True, help="Original image")
@click.option('--control', 'control_path', type=click.Path(path_type=Path), required=True, help="Control image")
@click.option('--type', 'error_type', type=click.Choice(['1', '2', '3']), required=True, help="Channel error type")
@click.option('--ratio', type=float, required=True, help="Error ratio in [0, 1]")
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True, help="Channel seed")
@click.option('--gen-seed', type=click.IntRange(min=0), default=0, show_default=True, help="Generation seed")
@click.option('--backends', help='"mock" or a model server URL (default: AQUASEM_BACKEND_URL, else mock)')
@click.option('--token', help="Bearer token for the model server")
@click.option('--width', type=click.IntRange(min=16), default=512, show_default=True, help="Generation width")
@click.option('--height', type=click.IntRange(min=16), default=512, show_default=True, help="Generation height")
@click.option('--pretty', is_flag=True, help="Indented JSON")
@cli_errors
def trial(image_path: Path, control_path: Path, error_type: str, ratio: float, seed: int, gen_seed: int,
          backends: str | None, token: str | None, width: int, height: int, pretty: bool):
    """Caption, corrupt, regenerate and score one image."""
    original = load_image(_require(image_path, "image"))
    control = load_image(_require(control_path, "control image"))
    spec = ErrorSpec(int(error_type), ratio, seed)
    settings = AquasemSettings()
    setting = endpoint_from_url(backends or settings.backend_url, token or settings.token)
    providers = build_providers(setting)
    try:
        record: TrialRecord = run_trial(original, control, spec, gen_seed, providers,
                                        image_id=image_path.stem, generation_size=(width, height))
    finally:
        providers.close()

    click.echo(dumps(record.to_dict(), pretty=pretty))
    if not record.ok:
        progress_console.print(f"[red]Trial {record.status}:[/red] {record.error_message}")
        sys.exit(EXIT_UNREACHABLE if record.error_kind == "unreachable" else EXIT_PARTIAL_FAILURE)
