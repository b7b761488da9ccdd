"""
Deterministic synthetic images.

- the builtin control image: a semantically unrelated checkerboard over
  colour gradients, used as the fixed reference for the control series;
- quadrant scenes: four flat named colours with a light stripe texture,
  used as a stand-in dataset for offline sweeps and tests.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from channel.rng import SplitMix64, mix_seed

from .imagecore import ImageBuffer, save_image

# Named colours shared with the mock captioner/generator vocabulary.
PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (200, 40, 40),
    "orange": (230, 130, 30),
    "yellow": (220, 210, 60),
    "green": (50, 170, 70),
    "cyan": (40, 190, 200),
    "blue": (40, 80, 200),
    "purple": (130, 60, 170),
    "gray": (128, 128, 128),
}

_SCENE_SALT = 0x5CE7E
_SCALES = (0.5, 0.8, 1.0)
_STRIPE_AMPLITUDE = 12

DEFAULT_CONTROL_SIZE = 128


def builtin_control(width: int = DEFAULT_CONTROL_SIZE, height: int = DEFAULT_CONTROL_SIZE) -> ImageBuffer:
    """Checkerboard-plus-gradient control image."""
    ys, xs = np.mgrid[0:height, 0:width]
    red = np.floor(xs * 255 / max(1, width - 1) + 0.5)
    green = np.floor(ys * 255 / max(1, height - 1) + 0.5)
    checker = ((xs // 8 + ys // 8) % 2).astype(np.float64)
    blue = 64 + 128 * checker
    return ImageBuffer(np.stack([red, green, blue], axis=-1).astype(np.uint8))


def scene_colors(index: int) -> tuple[list[str], float]:
    """Quadrant colour names (UL, UR, LL, LR) and brightness scale for scene `index`."""
    rng = SplitMix64(mix_seed(_SCENE_SALT, index))
    names = list(PALETTE)
    quads = [names[rng.below(len(names))] for _ in range(4)]
    return quads, _SCALES[rng.below(len(_SCALES))]


def synthetic_scene(index: int, width: int = 64, height: int = 64) -> ImageBuffer:
    """Four flat quadrants of named colours with a zero-mean diagonal stripe texture."""
    quads, scale = scene_colors(index)
    img = np.zeros((height, width, 3), dtype=np.float64)
    half_h, half_w = height // 2, width // 2
    regions = [
        (slice(0, half_h), slice(0, half_w)),
        (slice(0, half_h), slice(half_w, width)),
        (slice(half_h, height), slice(0, half_w)),
        (slice(half_h, height), slice(half_w, width)),
    ]
    for name, (rows, cols) in zip(quads, regions):
        img[rows, cols] = np.array(PALETTE[name], dtype=np.float64) * scale
    ys, xs = np.mgrid[0:height, 0:width]
    stripes = np.where((xs + ys) % 8 < 4, _STRIPE_AMPLITUDE, -_STRIPE_AMPLITUDE)
    img += stripes[:, :, None]
    return ImageBuffer(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def synthetic_dataset(count: int, out_dir: str | Path, size: int = 64) -> list[Path]:
    """Write `count` synthetic scenes as PPM files named scene_000.ppm, scene_001.ppm, ..."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [save_image(synthetic_scene(i, size, size), out / f"scene_{i:03d}.ppm") for i in range(count)]
