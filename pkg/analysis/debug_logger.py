"""
Debug logger for model-server interactions.
Writes a readable running log plus one JSON file per request.
"""

from __future__ import annotations

import os
from datetime import datetime
from pathlib import Path
from threading import Lock
from typing import Any

import orjson


def _dump(obj: Any) -> str:
    return orjson.dumps(obj, option=orjson.OPT_INDENT_2, default=str).decode()


class DebugLogger:
    """Logs provider requests and responses for one sweep or command."""

    def __init__(self, session_id: str, output_dir: Path | None = None):
        """
        Args:
            session_id: Identifier stamped into file names
            output_dir: Where logs go; falls back to $AQUASEM_DEBUG_DIR, then ./.aquasem_debug
        """
        self.session_id = session_id
        self.output_dir = output_dir
        if not self.output_dir:
            env_dir = os.environ.get("AQUASEM_DEBUG_DIR")
            self.output_dir = Path(env_dir) if env_dir else Path.cwd() / ".aquasem_debug"
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            self.output_dir = Path.cwd() / ".aquasem_debug"
            self.output_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.log_file: Path | None = self.output_dir / f"debug_{session_id}_{timestamp}.log"
        self.interactions_dir = self.output_dir / "interactions"
        self.interactions_dir.mkdir(parents=True, exist_ok=True)

        try:
            self._init_log()
        except OSError:
            self.log_file = None

        self.interaction_count = 0
        self._lock = Lock()

    def _init_log(self):
        header = f"""
================================================================================
AQUASEM DEBUG LOG
Session ID: {self.session_id}
Started: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}
================================================================================

"""
        with open(self.log_file, 'w') as f:
            f.write(header)

    def log_interaction(
        self,
        role: str,
        endpoint: str,
        request: dict | None,
        response: Any,
        duration: float | None = None,
        error: str | None = None,
        attempt: int = 1,
    ):
        """
        Record a single provider request.

        Image payloads should already be summarised by the caller (size, not bytes).
        """
        if not self.log_file:
            return

        with self._lock:
            self.interaction_count += 1
            idx = self.interaction_count

        response_str = response if isinstance(response, str) else _dump(response)
        entry = f"""
--------------------------------------------------------------------------------
INTERACTION #{idx} [{role}] attempt {attempt}
Time: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}
Endpoint: {endpoint}
{f'Duration: {duration:.3f}s' if duration is not None else ''}

REQUEST:
{_dump(request)}

RESPONSE:
{response_str if not error else f'ERROR: {error}'}

"""
        with self._lock:
            with open(self.log_file, 'a') as f:
                f.write(entry)

        record = {
            'time': datetime.now().isoformat(),
            'session_id': self.session_id,
            'role': role,
            'endpoint': endpoint,
            'attempt': attempt,
            'request': request,
            'response': response,
            'duration_seconds': duration,
            'error': error,
        }
        try:
            fname = self.interactions_dir / f"{idx:05d}_{role}.json"
            fname.write_bytes(orjson.dumps(record, option=orjson.OPT_INDENT_2, default=str))
        except OSError:
            pass

    def log_event(self, event_type: str, message: str, details: dict | None = None):
        if not self.log_file:
            return
        details_str = f"\nDetails: {_dump(details)}" if details else ""
        event_log = f"""
--------------------------------------------------------------------------------
EVENT: {event_type}
Time: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}
Message: {message}{details_str}

"""
        with self._lock:
            with open(self.log_file, 'a') as f:
                f.write(event_log)

    def finalize(self, summary: dict | None = None) -> Path | None:
        """Close the log with summary statistics; returns the log path."""
        if not self.log_file:
            return None
        summary_str = ""
        if summary:
            summary_str = "\nSESSION SUMMARY:\n"
            for key, value in summary.items():
                summary_str += f"  {key.replace('_', ' ').title()}: {value}\n"
        footer = f"""
================================================================================
{summary_str}
Completed: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}
Total Interactions: {self.interaction_count}
================================================================================
"""
        with self._lock:
            with open(self.log_file, 'a') as f:
                f.write(footer)
        return self.log_file
