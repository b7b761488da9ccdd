"""
Similarity metrics between a reference image and a reconstruction.

PSNR and SSIM measure pixel fidelity; CLIPScore measures semantic closeness
through an embedding provider. All pixel metrics work in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from imaging.imagecore import ImageBuffer, to_gray

if TYPE_CHECKING:
    from backends.base_provider import BaseEmbedder

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2

PSNR_INFINITY = math.inf


class MetricDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    clip_score_pct: float

    def to_dict(self) -> dict:
        return {"psnr_db": self.psnr_db, "ssim": self.ssim, "clip_score_pct": self.clip_score_pct}


@dataclass(frozen=True, eq=False)
class Embedding:
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def is_zero(self) -> bool:
        return self.norm == 0.0

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


def _check_same_shape(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.shape != b.shape:
        raise MetricDomainError(f"image dimensions differ: {a.shape} vs {b.shape}")


def mse(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean squared sample difference over every stored channel."""
    _check_same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """10·log10(255² / MSE) in dB; +inf for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_INFINITY
    return 10.0 * math.log10(PEAK * PEAK / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalised 1-D Gaussian taps; the 2-D window is their outer product."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    taps = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _valid_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    size = taps.size
    rows = np.lib.stride_tricks.sliding_window_view(x, size, axis=1) @ taps
    return np.lib.stride_tricks.sliding_window_view(rows, size, axis=0) @ taps


def ssim_map(a: ImageBuffer, b: ImageBuffer) -> np.ndarray:
    """Per-window SSIM over every window lying fully inside the luma planes."""
    _check_same_shape(a, b)
    if a.width < SSIM_WINDOW or a.height < SSIM_WINDOW:
        raise MetricDomainError(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {a.width}x{a.height}")
    x = to_gray(a).pixels[:, :, 0].astype(np.float64)
    y = to_gray(b).pixels[:, :, 0].astype(np.float64)
    taps = gaussian_window()

    mu_x = _valid_filter(x, taps)
    mu_y = _valid_filter(y, taps)
    sigma_xx = _valid_filter(x * x, taps) - mu_x * mu_x
    sigma_yy = _valid_filter(y * y, taps) - mu_y * mu_y
    sigma_xy = _valid_filter(x * y, taps) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * sigma_xy + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (sigma_xx + sigma_yy + SSIM_C2)
    return num / den


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean SSIM (11×11 Gaussian window, σ=1.5) on Rec.601 luma."""
    return float(np.mean(ssim_map(a, b)))


def cosine(u: Embedding, v: Embedding) -> float:
    if len(u) != len(v):
        raise MetricDomainError(f"embedding lengths differ: {len(u)} vs {len(v)}")
    if u.is_zero or v.is_zero:
        raise MetricDomainError("cosine is undefined for a zero vector")
    value = float(np.dot(u.values, v.values) / (u.norm * v.norm))
    return max(-1.0, min(1.0, value))


def clip_score(img_a: ImageBuffer, img_b: ImageBuffer, embedder: BaseEmbedder) -> float:
    """100 · max(0, cosine) between the two image embeddings."""
    return clip_score_from_embeddings(embedder.embed(img_a), embedder.embed(img_b))


def clip_score_from_embeddings(u: Embedding, v: Embedding) -> float:
    return 100.0 * max(0.0, cosine(u, v))


def score_pair(reference: ImageBuffer, candidate: ImageBuffer, embedder: BaseEmbedder,
               reference_embedding: Embedding | None = None) -> MetricReport:
    """All three metrics for one image pair; shapes must already match."""
    ref_vec = reference_embedding if reference_embedding is not None else embedder.embed(reference)
    return MetricReport(
        psnr_db=psnr(reference, candidate),
        ssim=ssim(reference, candidate),
        clip_score_pct=clip_score_from_embeddings(ref_vec, embedder.embed(candidate)),
    )
