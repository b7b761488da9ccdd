"""
Channel commands: corrupt a caption, BER bounds, payload accounting.
"""

import math
from pathlib import Path

import click
from rich.console import Console
from rich.table import Table

from backends.mock_provider import MockCaptioner
from channel.linkmath import DEFAULT_BITS_PER_CHAR, airtime_seconds, ber_bounds, payload_stats
from channel.text_channel import ErrorSpec, corrupt, sanitize
from imaging.imagecore import load_image
from utils.cli import cli_errors
from utils.json_utils import dumps

console = Console()

DEFAULT_BITRATE_BPS = 1000.0


@click.command()
@click.option('--type', 'error_type', type=click.Choice(['1', '2', '3']), required=True,
              help="1 char substitution, 2 char deletion, 3 word deletion")
@click.option('--ratio', type=float, required=True, help="Error ratio in [0, 1]")
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True, help="Channel seed")
@click.option('--text', help="Caption text to corrupt")
@click.option('--stdin', 'from_stdin', is_flag=True, help="Read the text from stdin")
@click.option('--pretty', is_flag=True, help="Human-readable output")
@cli_errors
def corrupt_cmd(error_type: str, ratio: float, seed: int, text: str | None, from_stdin: bool, pretty: bool):
    """Corrupt a text message with one channel impairment."""
    if (text is None) == (not from_stdin):
        raise click.UsageError("give exactly one of --text or --stdin")
    if from_stdin:
        text = click.get_text_stream('stdin').read().rstrip("\r\n")
    msg = sanitize(text)
    outcome = corrupt(msg, ErrorSpec(int(error_type), ratio, seed))
    if pretty:
        console.print(f"[bold]clean:[/bold]     {msg.content}")
        console.print(f"[bold]corrupted:[/bold] {outcome.corrupted.content}")
        console.print(f"[dim]{outcome.affected_units}/{outcome.total_units} units "
                      f"(realized {outcome.realized_ratio:.4f})[/dim]")
        return
    click.echo(dumps({
        "corrupted": outcome.corrupted.content,
        "realized_ratio": outcome.realized_ratio,
        "affected_units": outcome.affected_units,
        "total_units": outcome.total_units,
    }))


@click.command()
@click.option('--cer', type=float, required=True, help="Character error ratio in [0, 1]")
@click.option('--bits', type=int, default=DEFAULT_BITS_PER_CHAR, show_default=True, help="Bits per character")
@click.option('--pretty', is_flag=True, help="Human-readable output")
@cli_errors
def ber(cer: float, bits: int, pretty: bool):
    """Bit error ratio bounds implied by a character error ratio."""
    bounds = ber_bounds(cer, bits)
    if pretty:
        console.print(f"CER {bounds.cer:.4f} at {bounds.bits_per_char} bits/char → "
                      f"BER in [{bounds.lower:.6f}, {bounds.upper:.6f}]")
        return
    click.echo(dumps({"lower": bounds.lower, "upper": bounds.upper}))


@click.command()
@click.option('--image', 'image_path', type=click.Path(path_type=Path), required=True, help="Image file")
@click.option('--text', help="Caption to send instead of the image")
@click.option('--mock-caption', is_flag=True, help="Caption the image with the offline captioner")
@click.option('--bits', type=int, default=DEFAULT_BITS_PER_CHAR, show_default=True, help="Bits per character")
@click.option('--bitrate', type=float, default=DEFAULT_BITRATE_BPS, show_default=True,
              help="Raw link bitrate in bit/s")
@click.option('--pretty', is_flag=True, help="Human-readable output")
@cli_errors
def payload(image_path: Path, text: str | None, mock_caption: bool, bits: int, bitrate: float, pretty: bool):
    """Compare sending an image against sending its caption."""
    if (text is None) == (not mock_caption):
        raise click.UsageError("give exactly one of --text or --mock-caption")
    if not image_path.exists():
        raise FileNotFoundError(f"image not found: {image_path}")
    if bits < 1:
        raise ValueError(f"bits per character must be positive, got {bits}")
    msg = MockCaptioner().caption(load_image(image_path)) if mock_caption else sanitize(text)
    image_bytes = image_path.stat().st_size
    stats = payload_stats(image_bytes, msg)
    text_payload = math.ceil(msg.char_count * bits / 8)
    result = {
        **stats.to_dict(),
        "caption": msg.content,
        "bitrate_bps": bitrate,
        "airtime_image_s": airtime_seconds(image_bytes, bitrate),
        "airtime_text_s": airtime_seconds(text_payload, bitrate),
    }
    if pretty:
        table = Table(title="Payload")
        table.add_column("Field")
        table.add_column("Value", justify="right")
        for key, value in result.items():
            table.add_row(key, f"{value:.4f}" if isinstance(value, float) else str(value))
        console.print(table)
        return
    click.echo(dumps(result))
