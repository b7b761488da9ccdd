"""
Text-level channel error simulator.

Three independent impairments act on a sanitized caption:

1. random character substitution
2. character deletion
3. whole-word deletion

The error ratio selects an exact number of affected units (characters for
types 1 and 2, words for type 3). Positions come from a partial Fisher–Yates
shuffle driven by splitmix64, so a (text, type, ratio, seed) tuple always
yields the same received message.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import IntEnum

from .rng import SplitMix64, partial_shuffle

PRINTABLE_MIN = 0x20
PRINTABLE_MAX = 0x7E
ALPHABET_SIZE = PRINTABLE_MAX - PRINTABLE_MIN + 1

_NON_PRINTABLE_RUN = re.compile(r"[^\x20-\x7e]+")


class ChannelDomainError(ValueError):
    """Raised for ratios, counts or error types outside their domain."""
    pass


class ErrorType(IntEnum):
    CHAR_SUBSTITUTION = 1
    CHAR_DELETION = 2
    WORD_DELETION = 3

    @property
    def unit(self) -> str:
        return "word" if self is ErrorType.WORD_DELETION else "char"


@dataclass(frozen=True)
class TextMessage:
    """A sanitized caption as carried over the link."""

    content: str

    def __post_init__(self):
        if _NON_PRINTABLE_RUN.search(self.content):
            raise ChannelDomainError("TextMessage content must be printable ASCII; call sanitize() first")

    @property
    def char_count(self) -> int:
        return len(self.content)

    @property
    def byte_count(self) -> int:
        return len(self.content.encode("ascii"))

    def words(self) -> list[str]:
        """Maximal runs of non-space characters."""
        return self.content.split()


@dataclass(frozen=True)
class ErrorSpec:
    """Channel configuration: which impairment, how much, and the seed."""

    error_type: ErrorType
    ratio: float
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.error_type, float) and not self.error_type.is_integer():
            raise ChannelDomainError(f"error type must be a whole number, got {self.error_type!r}")
        try:
            object.__setattr__(self, "error_type", ErrorType(int(self.error_type)))
        except (TypeError, ValueError) as e:
            raise ChannelDomainError(f"unknown error type: {self.error_type!r}") from e
        _check_ratio(self.ratio)
        if self.seed < 0:
            raise ChannelDomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class CorruptionOutcome:
    corrupted: TextMessage
    affected_units: int
    total_units: int

    @property
    def realized_ratio(self) -> float:
        if self.total_units <= 0:
            return 0.0
        return self.affected_units / self.total_units


def _check_ratio(ratio: float) -> None:
    if not isinstance(ratio, (int, float)) or math.isnan(ratio) or ratio < 0.0 or ratio > 1.0:
        raise ChannelDomainError(f"error ratio must be in [0, 1], got {ratio!r}")


def sanitize(text: str) -> TextMessage:
    """Replace each run of characters outside 0x20–0x7E with one space."""
    return TextMessage(_NON_PRINTABLE_RUN.sub(" ", text))


def affected_count(total_units: int, ratio: float) -> int:
    """Number of units hit at this ratio: floor(ratio * total + 0.5), clamped."""
    _check_ratio(ratio)
    if total_units < 0:
        raise ChannelDomainError(f"total_units must be non-negative, got {total_units}")
    k = math.floor(ratio * total_units + 0.5)
    return max(0, min(total_units, k))


def select_positions(n: int, k: int, seed: int) -> tuple[int, ...]:
    """k distinct indices in [0, n), ascending, fixed for a given (n, k, seed)."""
    if n < 0 or k < 0 or k > n:
        raise ChannelDomainError(f"cannot select {k} positions out of {n}")
    return tuple(partial_shuffle(SplitMix64(seed), n, k))


def substitute_chars(msg: TextMessage, ratio: float, seed: int) -> CorruptionOutcome:
    """Replace k characters with different printable characters."""
    n = msg.char_count
    k = affected_count(n, ratio)
    rng = SplitMix64(seed)
    positions = partial_shuffle(rng, n, k)
    chars = list(msg.content)
    # Draws continue the selection stream, in ascending position order.
    for pos in positions:
        original = ord(chars[pos])
        while True:
            candidate = rng.below(ALPHABET_SIZE) + PRINTABLE_MIN
            if candidate != original:
                chars[pos] = chr(candidate)
                break
    return CorruptionOutcome(TextMessage("".join(chars)), k, n)


def delete_chars(msg: TextMessage, ratio: float, seed: int) -> CorruptionOutcome:
    """Remove k characters, keeping the survivors in order."""
    n = msg.char_count
    k = affected_count(n, ratio)
    dropped = set(select_positions(n, k, seed))
    survivors = "".join(ch for i, ch in enumerate(msg.content) if i not in dropped)
    return CorruptionOutcome(TextMessage(survivors), k, n)


def delete_words(msg: TextMessage, ratio: float, seed: int) -> CorruptionOutcome:
    """Remove k whole words; survivors are re-joined with single spaces."""
    words = msg.words()
    total = len(words)
    k = affected_count(total, ratio)
    dropped = set(select_positions(total, k, seed))
    survivors = " ".join(w for i, w in enumerate(words) if i not in dropped)
    return CorruptionOutcome(TextMessage(survivors), k, total)


_DISPATCH = {
    ErrorType.CHAR_SUBSTITUTION: substitute_chars,
    ErrorType.CHAR_DELETION: delete_chars,
    ErrorType.WORD_DELETION: delete_words,
}


def corrupt(msg: TextMessage, spec: ErrorSpec) -> CorruptionOutcome:
    """Apply exactly one impairment, selected by spec.error_type."""
    try:
        fn = _DISPATCH[ErrorType(int(spec.error_type))]
    except (ValueError, KeyError) as e:
        raise ChannelDomainError(f"unknown error type: {spec.error_type!r}") from e
    return fn(msg, spec.ratio, spec.seed)
