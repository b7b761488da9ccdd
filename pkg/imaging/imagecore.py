"""
Image container and bit-exact pixmap I/O.

Binary PPM (P6) and PGM (P5) with maxval 255 are the interchange format:
they are trivially portable and round-trip byte-for-byte. PNG is supported
when pypng is installed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import png  # pypng
    HAS_PNG = True
except ImportError:  # pragma: no cover - optional extra
    png = None
    HAS_PNG = False

_WHITESPACE = b" \t\n\r\x0b\x0c"
PNM_SUFFIXES = {".ppm", ".pgm", ".pnm"}
PNG_SUFFIXES = {".png"}


class PixmapParseError(ValueError):
    """Malformed pixmap; `offset` is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnsupportedImageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """W×H×C grid of 8-bit samples, stored row-major as a (H, W, C) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"expected a (height, width, channels) array, got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ValueError(f"image dimensions must be positive, got {w}x{h}")
        if c not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {c}")
        if arr.dtype != np.uint8:
            if arr.min(initial=0) < 0 or arr.max(initial=0) > 255:
                raise ValueError("samples must fit in 8 bits")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, samples) -> ImageBuffer:
        data = np.frombuffer(bytes(samples), dtype=np.uint8)
        if data.size != width * height * channels:
            raise ValueError(
                f"expected {width * height * channels} samples for {width}x{height}x{channels}, got {data.size}"
            )
        return cls(data.reshape(height, width, channels))

    @classmethod
    def filled(cls, width: int, height: int, value: int | tuple[int, int, int]) -> ImageBuffer:
        if isinstance(value, int):
            return cls(np.full((height, width, 1), value, dtype=np.uint8))
        return cls(np.broadcast_to(np.array(value, dtype=np.uint8), (height, width, 3)).copy())

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def samples(self) -> bytes:
        return self.pixels.tobytes()

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.width, self.height, self.channels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self) -> int:
        return hash((self.pixels.shape, self.samples))

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


# ---------------------------------------------------------------------------
# PPM / PGM
# ---------------------------------------------------------------------------

def _skip_space_and_comments(data: bytes, pos: int) -> int:
    n = len(data)
    while pos < n:
        if data[pos] in _WHITESPACE:
            pos += 1
        elif data[pos] == 0x23:  # '#' comment runs to end of line
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    return pos


def _read_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    pos = _skip_space_and_comments(data, pos)
    start = pos
    while pos < len(data) and 0x30 <= data[pos] <= 0x39:
        pos += 1
    if pos == start:
        raise PixmapParseError(f"expected {what}", start)
    return int(data[start:pos]), pos


def read_ppm(data: bytes) -> ImageBuffer:
    """Decode a binary P6 or P5 pixmap with maxval 255."""
    magic = data[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise PixmapParseError(f"unsupported magic {magic!r}", 0)

    width, pos = _read_int(data, 2, "width")
    if width < 1:
        raise PixmapParseError("width must be positive", pos)
    height, pos = _read_int(data, pos, "height")
    if height < 1:
        raise PixmapParseError("height must be positive", pos)
    maxval_start = _skip_space_and_comments(data, pos)
    maxval, pos = _read_int(data, pos, "maxval")
    if maxval != 255:
        raise PixmapParseError(f"maxval must be 255, got {maxval}", maxval_start)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise PixmapParseError("expected a single whitespace byte after maxval", pos)
    pos += 1

    need = width * height * channels
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise PixmapParseError(f"truncated payload: need {need} bytes, have {len(payload)}", pos + len(payload))
    return ImageBuffer.from_samples(width, height, channels, payload)


def write_ppm(img: ImageBuffer) -> bytes:
    """Canonical encoding: "P6\\n<w> <h>\\n255\\n" (P5 for one channel) + raw samples."""
    magic = "P6" if img.channels == 3 else "P5"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.samples


# ---------------------------------------------------------------------------
# Pixel transforms
# ---------------------------------------------------------------------------

def to_gray(img: ImageBuffer) -> ImageBuffer:
    """Integer Rec.601 luma, round half up; identity for one-channel input."""
    if img.channels == 1:
        return img
    px = img.pixels.astype(np.int64)
    y = (299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2] + 500) // 1000
    return ImageBuffer(y.astype(np.uint8)[:, :, None])


def _axis_weights(in_size: int, out_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel centres: src = (dst + 0.5) * in / out - 0.5
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_size - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(img: ImageBuffer, out_w: int, out_h: int) -> ImageBuffer:
    """Bilinear resampling per channel; output rounded half up and clamped."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be positive, got {out_w}x{out_h}")
    if (out_w, out_h) == (img.width, img.height):
        return img
    src = img.pixels.astype(np.float64)
    x0, x1, fx = _axis_weights(img.width, out_w)
    y0, y1, fy = _axis_weights(img.height, out_h)
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    return ImageBuffer(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# File entry points
# ---------------------------------------------------------------------------

def _read_png(path: Path) -> ImageBuffer:
    if not HAS_PNG:
        raise UnsupportedImageError(f"{path.name}: PNG support requires the optional 'pypng' package")
    width, height, rows, info = png.Reader(filename=str(path)).asDirect()
    if info.get("bitdepth") != 8:
        raise UnsupportedImageError(f"{path.name}: only 8-bit PNG is supported, got {info.get('bitdepth')}-bit")
    planes = int(info.get("planes", 1))
    arr = np.vstack([np.asarray(row, dtype=np.uint8) for row in rows]).reshape(height, width, planes)
    if info.get("alpha"):
        arr = arr[:, :, : planes - 1]
    return ImageBuffer(arr)


def load_image(path: str | Path) -> ImageBuffer:
    """Load a pixmap (always supported) or an 8-bit PNG (when pypng is present)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in PNM_SUFFIXES:
        return read_ppm(path.read_bytes())
    if suffix in PNG_SUFFIXES:
        if not path.exists():
            raise FileNotFoundError(f"No such file: '{path}'")
        return _read_png(path)
    raise UnsupportedImageError(f"unsupported image format: {path.suffix or path.name}")


def save_image(img: ImageBuffer, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()
    if suffix in PNM_SUFFIXES:
        path.write_bytes(write_ppm(img))
    elif suffix in PNG_SUFFIXES:
        if not HAS_PNG:
            raise UnsupportedImageError("PNG output requires the optional 'pypng' package")
        writer = png.Writer(width=img.width, height=img.height, greyscale=img.channels == 1, bitdepth=8)
        with open(path, "wb") as f:
            writer.write(f, img.pixels.reshape(img.height, img.width * img.channels).tolist())
    else:
        raise UnsupportedImageError(f"unsupported image format: {path.suffix or path.name}")
    return path


def is_image_file(path: Path) -> bool:
    return path.suffix.lower() in PNM_SUFFIXES | PNG_SUFFIXES
