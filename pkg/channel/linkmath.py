"""CER/BER bound arithmetic and payload accounting for the acoustic link."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .text_channel import TextMessage

DEFAULT_BITS_PER_CHAR = 8


class LinkDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BerBounds:
    """BER range implied by a character error ratio.

    The lower bound assumes one flipped bit per corrupted character, the
    upper bound assumes every bit of a corrupted character is wrong.
    """

    cer: float
    bits_per_char: int
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PayloadStats:
    image_bytes: int
    text_bytes: int
    compression_ratio: float
    ratio_defined: bool

    def to_dict(self) -> dict:
        return asdict(self)


def ber_bounds(cer: float, bits_per_char: int = DEFAULT_BITS_PER_CHAR) -> BerBounds:
    """BER ∈ [cer / b, cer] for b bits per character."""
    if not isinstance(cer, (int, float)) or math.isnan(cer) or cer < 0.0 or cer > 1.0:
        raise LinkDomainError(f"CER must be in [0, 1], got {cer!r}")
    if int(bits_per_char) != bits_per_char or bits_per_char < 1:
        raise LinkDomainError(f"bits per character must be a positive integer, got {bits_per_char!r}")
    b = int(bits_per_char)
    return BerBounds(cer=float(cer), bits_per_char=b, lower=cer / b, upper=float(cer))


def payload_stats(image_bytes: int, msg: TextMessage) -> PayloadStats:
    """Compression achieved by sending the caption instead of the image."""
    if image_bytes < 0:
        raise LinkDomainError(f"image size must be non-negative, got {image_bytes}")
    text_bytes = msg.byte_count
    if text_bytes == 0:
        return PayloadStats(image_bytes, 0, 0.0, ratio_defined=False)
    return PayloadStats(image_bytes, text_bytes, image_bytes / text_bytes, ratio_defined=True)


def airtime_seconds(payload_bytes: int, bitrate_bps: float) -> float:
    """Seconds to push payload_bytes over a link with the given raw bitrate."""
    if bitrate_bps <= 0:
        raise LinkDomainError(f"bitrate must be positive, got {bitrate_bps}")
    if payload_bytes < 0:
        raise LinkDomainError(f"payload size must be non-negative, got {payload_bytes}")
    return payload_bytes * 8 / bitrate_bps
