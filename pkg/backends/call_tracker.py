"""Call accounting for model providers."""
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from threading import Lock

import orjson


@dataclass
class ProviderCall:
    """One provider request."""
    timestamp: str
    provider: str
    role: str  # caption / generate / embed
    duration_s: float
    ok: bool
    attempts: int = 1
    error_kind: str | None = None

    def to_dict(self) -> dict:
        return {
            'timestamp': self.timestamp,
            'provider': self.provider,
            'role': self.role,
            'duration_s': self.duration_s,
            'ok': self.ok,
            'attempts': self.attempts,
            'error_kind': self.error_kind,
        }


class CallTracker:
    """Tracks calls, failures and time spent per provider role."""

    def __init__(self):
        self.history: list[ProviderCall] = []
        self.by_role: dict[str, dict[str, float]] = {}
        self._lock = Lock()
        self._output_file: Path | None = None

    def set_output_file(self, file_path: Path):
        self._output_file = file_path
        with self._lock:
            self._save_to_file()

    def track_call(self, provider: str, role: str, duration_s: float, ok: bool,
                   attempts: int = 1, error_kind: str | None = None):
        with self._lock:
            self.history.append(ProviderCall(
                timestamp=datetime.now().isoformat(),
                provider=provider,
                role=role,
                duration_s=duration_s,
                ok=ok,
                attempts=attempts,
                error_kind=error_kind,
            ))
            key = f"{provider}:{role}"
            agg = self.by_role.setdefault(key, {'call_count': 0, 'failures': 0, 'attempts': 0, 'seconds': 0.0})
            agg['call_count'] += 1
            agg['attempts'] += attempts
            agg['seconds'] += duration_s
            if not ok:
                agg['failures'] += 1
            if self._output_file:
                self._save_to_file()

    def _save_to_file(self):
        """Called within lock."""
        if not self._output_file:
            return
        self._output_file.write_bytes(orjson.dumps(self._summary_unlocked(), option=orjson.OPT_INDENT_2))

    def _summary_unlocked(self) -> dict:
        return {
            'total': {
                'call_count': len(self.history),
                'failures': sum(1 for c in self.history if not c.ok),
                'seconds': sum(c.duration_s for c in self.history),
            },
            'by_role': {k: dict(v) for k, v in self.by_role.items()},
        }

    def get_summary(self) -> dict:
        with self._lock:
            return self._summary_unlocked()

    def reset(self):
        with self._lock:
            self.history.clear()
            self.by_role.clear()
            if self._output_file:
                self._save_to_file()


_call_tracker = CallTracker()


def get_call_tracker() -> CallTracker:
    """Process-wide tracker."""
    return _call_tracker
