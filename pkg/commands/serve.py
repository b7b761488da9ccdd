"""
Local model-server stand-in for live-mode dry runs.
"""

import sys

import click
from rich.console import Console

from backends.stub_server import StubModelServer
from utils.cli import cli_errors

progress_console = Console(file=sys.stderr)


@click.command('stub-server')
@click.option('--port', type=click.IntRange(min=0, max=65535), default=8765, show_default=True,
              help="Port on 127.0.0.1 (0 picks a free one)")
@click.option('--caption', help="Answer every /caption with this fixed text")
@click.option('--token', help="Require this bearer token")
@cli_errors
def stub_server(port: int, caption: str | None, token: str | None):
    """Serve /caption, /generate and /embed backed by the offline mocks."""
    server = StubModelServer(port=port, caption=caption, token=token).bind()
    progress_console.print(f"[bold green]Stub model server[/bold green] listening on {server.url}")
    progress_console.print(f"[dim]Try: AQUASEM_BACKEND_URL={server.url} aquasem sweep --dataset DIR[/dim]")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        progress_console.print("[yellow]Stopped[/yellow]")
