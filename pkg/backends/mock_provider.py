"""
Deterministic offline providers.

The three mocks form a small closed vision–language loop: the captioner
describes brightness and per-quadrant colour, the generator understands
that same vocabulary (with fuzzy matching, so lightly corrupted words still
register), and the embedder reduces an image to colour histograms plus a
gray thumbnail. Corrupting the caption therefore degrades reconstructions
gradually, which is what offline sweeps need to show a trend.
"""
from __future__ import annotations

import colorsys
import difflib
from functools import lru_cache
from threading import Lock

import numpy as np

from analysis.metrics import Embedding
from channel.rng import SplitMix64, hash_text, mix_seed
from channel.text_channel import TextMessage, sanitize
from imaging.imagecore import ImageBuffer, resize_bilinear, to_gray
from imaging.synthetic import PALETTE

from .base_provider import BaseCaptioner, BaseEmbedder, BaseGenerator, GenerationRequest

CAPTION_TEMPLATE = (
    "a {brightness} scene with {ul} upper left {ur} upper right {ll} lower left and {lr} lower right"
)

BRIGHTNESS_TONES: dict[str, int] = {"dark": 48, "dim": 112, "bright": 200}
VERTICAL = {"upper": 0, "lower": 1}
HORIZONTAL = {"left": 0, "right": 1}
STOP_WORDS = ("a", "scene", "with", "and")

MATCH_THRESHOLD = 0.6
MID_GRAY = 128
HISTOGRAM_BINS = 8
THUMBNAIL_SIZE = 8
EMBEDDING_LENGTH = 3 * HISTOGRAM_BINS + THUMBNAIL_SIZE * THUMBNAIL_SIZE

# Hue buckets in degrees, upper bound exclusive.
_HUE_BUCKETS = (
    (20.0, "red"),
    (45.0, "orange"),
    (70.0, "yellow"),
    (160.0, "green"),
    (200.0, "cyan"),
    (260.0, "blue"),
    (330.0, "purple"),
    (360.0, "red"),
)
_GRAY_SATURATION = 0.2

_VOCABULARY: tuple[tuple[str, str], ...] = (
    tuple((w, "brightness") for w in BRIGHTNESS_TONES)
    + tuple((w, "hue") for w in PALETTE)
    + tuple((w, "vertical") for w in VERTICAL)
    + tuple((w, "horizontal") for w in HORIZONTAL)
    + tuple((w, "stop") for w in STOP_WORDS)
)


def hue_name(rgb: tuple[float, float, float]) -> str:
    """Name the colour of a mean RGB triple (0–255 floats)."""
    h, s, _ = colorsys.rgb_to_hsv(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0)
    if s < _GRAY_SATURATION:
        return "gray"
    degrees = h * 360.0
    for upper, name in _HUE_BUCKETS:
        if degrees < upper:
            return name
    return "red"


def brightness_word(mean_luma: float) -> str:
    if mean_luma < 85:
        return "dark"
    if mean_luma < 170:
        return "dim"
    return "bright"


def _halves(size: int) -> tuple[slice, slice]:
    return slice(0, max(1, size // 2)), slice(min(size // 2, size - 1), size)


@lru_cache(maxsize=8192)
def match_word(token: str) -> tuple[str, str, float]:
    """Best vocabulary entry for a token: (word, role, confidence in [0, 1]).

    Role is "unknown" when nothing clears the match threshold.
    """
    lowered = token.lower()
    best_word, best_role, best_ratio = "", "unknown", 0.0
    for word, role in _VOCABULARY:
        ratio = difflib.SequenceMatcher(None, lowered, word).ratio()
        if ratio > best_ratio:
            best_word, best_role, best_ratio = word, role, ratio
    if best_ratio < MATCH_THRESHOLD:
        return "", "unknown", 0.0
    return best_word, best_role, (best_ratio - MATCH_THRESHOLD) / (1.0 - MATCH_THRESHOLD)


def hash_color(text: str) -> np.ndarray:
    h = hash_text(text)
    return np.array([(h >> 16) & 0xFF, (h >> 8) & 0xFF, h & 0xFF], dtype=np.float64)


class _CountingMixin:
    def _init_counter(self):
        self._lock = Lock()
        self.call_count = 0

    def _count(self):
        with self._lock:
            self.call_count += 1


class MockCaptioner(_CountingMixin, BaseCaptioner):
    """Template captioner: brightness word plus the dominant colour of each quadrant."""

    def __init__(self):
        self._init_counter()

    @property
    def provider_name(self) -> str:
        return "mock"

    def caption(self, img: ImageBuffer) -> TextMessage:
        self._count()
        px = img.pixels.astype(np.float64)
        if img.channels == 1:
            px = np.repeat(px, 3, axis=2)
        top, bottom = _halves(img.height)
        left, right = _halves(img.width)
        names = []
        for rows, cols in ((top, left), (top, right), (bottom, left), (bottom, right)):
            mean = px[rows, cols].reshape(-1, 3).mean(axis=0)
            names.append(hue_name((mean[0], mean[1], mean[2])))
        luma = float(to_gray(img).pixels.mean())
        text = CAPTION_TEMPLATE.format(
            brightness=brightness_word(luma), ul=names[0], ur=names[1], ll=names[2], lr=names[3]
        )
        return sanitize(text)


class MockGenerator(_CountingMixin, BaseGenerator):
    """Renders the mock vocabulary back into a quadrant scene.

    Every word owns a horizontal band whose height is proportional to its
    length. Recognised words leave their band transparent and add meaning
    (background tone, quadrant colours); unrecognised words paint their band
    with the word's hash colour.
    """

    def __init__(self):
        self._init_counter()

    @property
    def provider_name(self) -> str:
        return "mock"

    def generate(self, req: GenerationRequest) -> ImageBuffer:
        self._count()
        width, height = req.width, req.height
        tokens = req.prompt.words()
        if not tokens:
            return ImageBuffer.filled(width, height, (MID_GRAY, MID_GRAY, MID_GRAY))

        matches = [match_word(t) for t in tokens]
        background = hash_color(" ".join(sorted(tokens)))
        for word, role, conf in matches:
            if role == "brightness":
                tone = np.full(3, float(BRIGHTNESS_TONES[word]))
                background = conf * tone + (1.0 - conf) * background
                break

        quadrants = self._place_hues(matches, background)

        rng = SplitMix64(mix_seed(req.seed, hash_text(req.prompt.content)))
        jitter_y = max(1, height // 16)
        jitter_x = max(1, width // 16)
        split_y = height // 2 + rng.below(2 * jitter_y + 1) - jitter_y
        split_x = width // 2 + rng.below(2 * jitter_x + 1) - jitter_x
        offset = float(rng.below(13)) - 6.0

        canvas = np.empty((height, width, 3), dtype=np.float64)
        canvas[:, :] = background
        regions = (
            (slice(0, split_y), slice(0, split_x)),
            (slice(0, split_y), slice(split_x, width)),
            (slice(split_y, height), slice(0, split_x)),
            (slice(split_y, height), slice(split_x, width)),
        )
        for color, (rows, cols) in zip(quadrants, regions):
            if color is not None:
                canvas[rows, cols] = color

        total_chars = sum(len(t) for t in tokens)
        consumed = 0
        for token, (_, role, _) in zip(tokens, matches):
            top = consumed * height // total_chars
            consumed += len(token)
            bottom = consumed * height // total_chars
            if role == "unknown" and bottom > top:
                canvas[top:bottom, :] = hash_color(token)

        canvas += offset
        return ImageBuffer(np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8))

    @staticmethod
    def _place_hues(matches: list[tuple[str, str, float]], background: np.ndarray) -> list[np.ndarray | None]:
        quadrants: list[np.ndarray | None] = [None, None, None, None]
        for i, (word, role, conf) in enumerate(matches):
            if role != "hue":
                continue
            vertical = horizontal = None
            for follower, follower_role, _ in matches[i + 1:i + 3]:
                if follower_role == "vertical" and vertical is None:
                    vertical = VERTICAL[follower]
                elif follower_role == "horizontal" and horizontal is None:
                    horizontal = HORIZONTAL[follower]
            slot = None
            if vertical is not None and horizontal is not None and quadrants[2 * vertical + horizontal] is None:
                slot = 2 * vertical + horizontal
            else:
                slot = next((q for q in range(4) if quadrants[q] is None), None)
            if slot is None:
                continue
            hue = np.array(PALETTE[word], dtype=np.float64)
            quadrants[slot] = conf * hue + (1.0 - conf) * background
        return quadrants


class MockEmbedder(_CountingMixin, BaseEmbedder):
    """Per-channel 8-bin histograms (each summing to 1) + 8×8 gray thumbnail, L2-normalised."""

    def __init__(self):
        self._init_counter()

    @property
    def provider_name(self) -> str:
        return "mock"

    def embed(self, img: ImageBuffer) -> Embedding:
        self._count()
        px = img.pixels
        if img.channels == 1:
            px = np.repeat(px, 3, axis=2)
        n_pixels = img.width * img.height
        hist = [
            np.bincount(px[:, :, c].reshape(-1) // (256 // HISTOGRAM_BINS), minlength=HISTOGRAM_BINS) / n_pixels
            for c in range(3)
        ]
        thumb = resize_bilinear(to_gray(img), THUMBNAIL_SIZE, THUMBNAIL_SIZE).pixels.reshape(-1) / 255.0
        vec = np.concatenate(hist + [thumb]).astype(np.float64)
        return Embedding(vec / np.linalg.norm(vec))
