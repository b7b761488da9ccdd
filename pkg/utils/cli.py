"""CLI utility functions."""

import functools
import sys

import click
from pydantic import ValidationError

from backends.base_provider import BackendError
from utils.json_utils import error_payload

EXIT_OK = 0
EXIT_PARTIAL_FAILURE = 1
EXIT_USAGE = 2
EXIT_UNREACHABLE = 3


def fail(kind: str, message: str, exit_code: int):
    """Print the error JSON on stderr and exit."""
    click.echo(error_payload(kind, message, exit_code), err=True)
    sys.exit(exit_code)


def exit_code_for_kind(kind: str | None) -> int:
    if kind in ("unreachable",):
        return EXIT_UNREACHABLE
    if kind in ("domain", "usage"):
        return EXIT_USAGE
    return EXIT_PARTIAL_FAILURE


def cli_errors(func):
    """Map toolkit exceptions to the error JSON and exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BackendError as e:
            fail(e.kind, str(e), exit_code_for_kind(e.kind))
        except click.UsageError as e:
            fail("usage", e.format_message(), EXIT_USAGE)
        except ValidationError as e:
            fail("usage", _first_validation_error(e), EXIT_USAGE)
        except FileNotFoundError as e:
            fail("io", str(e), EXIT_USAGE)
        except ValueError as e:
            fail("domain", str(e), EXIT_USAGE)
        except OSError as e:
            fail("io", str(e), EXIT_PARTIAL_FAILURE)

    return wrapper


def _first_validation_error(e) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ()))
    return f"{where}: {err.get('msg')}" if where else str(err.get("msg"))
