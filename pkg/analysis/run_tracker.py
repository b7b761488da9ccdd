"""Sweep manifest: resolved config, versions, provider identities and outcome, kept current on disk."""
import sys
import time
from datetime import datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from threading import Lock
from typing import Any

import orjson


def toolkit_version() -> str:
    try:
        return version("aquasem")
    except PackageNotFoundError:
        return "0.1.0"


def _default(obj: Any):
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, set | frozenset | tuple):
        return list(obj)
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


class RunTracker:
    """Tracks one sweep and rewrites manifest.json after every update."""

    def __init__(self, output_file: Path):
        self.output_file = output_file
        self.start_time = time.time()
        self.data: dict[str, Any] = {
            'toolkit_version': toolkit_version(),
            'command_args': [],
            'config': None,
            'providers': {},
            'start_time': datetime.now().isoformat(),
            'end_time': None,
            'runtime_seconds': 0,
            'status': 'running',
            'counts': {},
            'cells_resumed': [],
            'call_stats': {},
            'breakpoints': {},
            'control_baseline': {},
            'errors': [],
        }
        self._lock = Lock()
        self._save()

    def set_run_info(self, command_args: list[str], config: dict[str, Any], providers: dict[str, str]):
        with self._lock:
            self.data['command_args'] = list(command_args)
            self.data['config'] = config
            self.data['providers'] = providers
            self._save()

    def add_resumed_cell(self, cell: str):
        with self._lock:
            self.data['cells_resumed'].append(cell)
            self._update_runtime()
            self._save()

    def update_call_stats(self, summary: dict[str, Any]):
        with self._lock:
            self.data['call_stats'] = summary
            self._update_runtime()
            self._save()

    def set_results(self, counts: dict[str, int], breakpoints: dict[str, Any], control_baseline: dict[str, Any]):
        with self._lock:
            self.data['counts'] = counts
            self.data['breakpoints'] = breakpoints
            self.data['control_baseline'] = control_baseline
            self._update_runtime()
            self._save()

    def add_error(self, error: str):
        with self._lock:
            self.data['errors'].append({'timestamp': datetime.now().isoformat(), 'error': error})
            self._update_runtime()
            self._save()

    def finalize(self, status: str = 'completed'):
        with self._lock:
            self.data['status'] = status
            self.data['end_time'] = datetime.now().isoformat()
            self._update_runtime()
            self._save()

    def _update_runtime(self):
        self.data['runtime_seconds'] = round(time.time() - self.start_time, 2)

    def _save(self):
        """Called within lock."""
        try:
            self.output_file.parent.mkdir(parents=True, exist_ok=True)
            self.output_file.write_bytes(orjson.dumps(self.data, option=orjson.OPT_INDENT_2, default=_default))
        except OSError as e:
            print(f"Warning: Could not save manifest: {e}", file=sys.stderr)
