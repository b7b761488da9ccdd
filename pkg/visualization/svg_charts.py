"""
Dependency-free SVG line charts of sweep aggregates.

One chart per (metric, error type): x is the error percentage, two series
(original vs generated in blue, control vs generated in red), optional std
whiskers. Output bytes are a pure function of the ChartSpec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

SERIES_ORDER = ("vs_original", "vs_control")
SERIES_COLORS = {"vs_original": "#1f77b4", "vs_control": "#d62728"}
SERIES_LABELS = {"vs_original": "Original vs generated", "vs_control": "Control vs generated"}
METRIC_LABELS = {"psnr_db": "PSNR", "ssim": "SSIM", "clip_score_pct": "CLIPScore"}
METRIC_UNITS = {"psnr_db": "dB", "ssim": "", "clip_score_pct": "%"}
Y_RANGES: dict[str, tuple[float, float]] = {
    "psnr_db": (0.0, 80.0),
    "ssim": (0.0, 1.0),
    "clip_score_pct": (0.0, 100.0),
}

WIDTH = 760
HEIGHT = 460
MARGIN_LEFT = 80
MARGIN_RIGHT = 210
MARGIN_TOP = 60
MARGIN_BOTTOM = 70
Y_TICKS = 5


class ChartSpecError(ValueError):
    pass


def _esc(text: str) -> str:
    return (
        (text or "")
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


@dataclass(frozen=True)
class SeriesPoint:
    mean: float | None
    std: float | None = None


@dataclass(frozen=True)
class ChartSpec:
    metric_name: str
    error_type: int
    x: tuple[float, ...]
    series: dict[str, tuple[SeriesPoint, ...]]
    y_range: tuple[float, float] | None = None
    show_whiskers: bool = True
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "series", {k: tuple(v) for k, v in self.series.items()})
        for a, b in zip(self.x, self.x[1:]):
            if not a < b:
                raise ChartSpecError("x values must be strictly ascending")
        for name, points in self.series.items():
            if len(points) != len(self.x):
                raise ChartSpecError(f"series {name!r} has {len(points)} points for {len(self.x)} x values")
        if self.y_range is None:
            object.__setattr__(self, "y_range", Y_RANGES.get(self.metric_name, (0.0, 1.0)))

    @property
    def title(self) -> str:
        label = METRIC_LABELS.get(self.metric_name, self.metric_name)
        return f"Average {label} vs Error Percentage (Error Type {self.error_type})"


@dataclass(frozen=True)
class PlotArea:
    """Data → pixel transform of the plotting rectangle."""
    left: float
    top: float
    width: float
    height: float
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def right(self) -> float:
        return self.left + self.width

    def x_px(self, x: float) -> float:
        span = self.x_max - self.x_min
        if span == 0:
            return self.left + self.width / 2
        return self.left + (x - self.x_min) / span * self.width

    def y_px(self, y: float) -> float:
        return self.bottom - (y - self.y_min) / (self.y_max - self.y_min) * self.height


def plot_area(spec: ChartSpec) -> PlotArea:
    y_min, y_max = spec.y_range
    return PlotArea(
        left=MARGIN_LEFT,
        top=MARGIN_TOP,
        width=WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        height=HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        x_min=spec.x[0],
        x_max=spec.x[-1],
        y_min=y_min,
        y_max=y_max,
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:g}"


def render_chart(spec: ChartSpec) -> bytes:
    """Standalone SVG document for one metric / error type."""
    if len(spec.x) < 2:
        raise ChartSpecError("a chart needs at least two x values")
    area = plot_area(spec)
    unit = METRIC_UNITS.get(spec.metric_name, "")
    y_label = METRIC_LABELS.get(spec.metric_name, spec.metric_name) + (f" ({unit})" if unit else "")

    lines: list[str] = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" role="img" aria-label="{_esc(spec.title)}" '
        f'data-x-min="{_tick_label(area.x_min)}" data-x-max="{_tick_label(area.x_max)}" '
        f'data-y-min="{_tick_label(area.y_min)}" data-y-max="{_tick_label(area.y_max)}">',
        f"<title>{_esc(spec.title)}</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{_fmt(WIDTH / 2)}" y="32" text-anchor="middle" font-size="17" '
        f'font-family="Arial">{_esc(spec.title)}</text>',
        f'<rect class="plot-area" x="{_fmt(area.left)}" y="{_fmt(area.top)}" width="{_fmt(area.width)}" '
        f'height="{_fmt(area.height)}" fill="none" stroke="#000000" stroke-width="1"/>',
    ]

    for i in range(Y_TICKS + 1):
        value = area.y_min + (area.y_max - area.y_min) * i / Y_TICKS
        y = area.y_px(value)
        lines.append(f'<line x1="{_fmt(area.left)}" y1="{_fmt(y)}" x2="{_fmt(area.right)}" y2="{_fmt(y)}" '
                     'stroke="#dddddd" stroke-width="1"/>')
        lines.append(f'<text x="{_fmt(area.left - 8)}" y="{_fmt(y + 4)}" text-anchor="end" font-size="12" '
                     f'font-family="Arial">{_tick_label(round(value, 6))}</text>')

    for value in spec.x:
        x = area.x_px(value)
        lines.append(f'<line x1="{_fmt(x)}" y1="{_fmt(area.bottom)}" x2="{_fmt(x)}" y2="{_fmt(area.bottom + 5)}" '
                     'stroke="#000000" stroke-width="1"/>')
        lines.append(f'<text x="{_fmt(x)}" y="{_fmt(area.bottom + 20)}" text-anchor="middle" font-size="12" '
                     f'font-family="Arial">{_tick_label(round(value, 6))}</text>')

    names = [n for n in SERIES_ORDER if n in spec.series] + sorted(n for n in spec.series if n not in SERIES_ORDER)
    for idx, name in enumerate(names):
        color = SERIES_COLORS.get(name, "#555555")
        present = [(x, p) for x, p in zip(spec.x, spec.series[name]) if p.mean is not None and math.isfinite(p.mean)]
        points = " ".join(f"{_fmt(area.x_px(x))},{_fmt(area.y_px(p.mean))}" for x, p in present)
        lines.append(f'<polyline class="series" data-series="{_esc(name)}" fill="none" stroke="{color}" '
                     f'stroke-width="2" points="{points}"/>')
        for x, p in present:
            cx, cy = area.x_px(x), area.y_px(p.mean)
            lines.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" fill="{color}"/>')
            if spec.show_whiskers and p.std:
                lo, hi = area.y_px(p.mean - p.std), area.y_px(p.mean + p.std)
                lines.append(f'<line class="whisker" x1="{_fmt(cx)}" y1="{_fmt(lo)}" x2="{_fmt(cx)}" '
                             f'y2="{_fmt(hi)}" stroke="{color}" stroke-opacity="0.6" stroke-width="1"/>')

        ly = area.top + 20 + idx * 24
        lx = area.right + 16
        lines.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 24)}" y2="{_fmt(ly)}" '
                     f'stroke="{color}" stroke-width="2"/>')
        lines.append(f'<text x="{_fmt(lx + 30)}" y="{_fmt(ly + 4)}" font-size="12" font-family="Arial">'
                     f'{_esc(SERIES_LABELS.get(name, name))}</text>')

    lines.append(f'<text x="{_fmt((area.left + area.right) / 2)}" y="{HEIGHT - 22}" text-anchor="middle" '
                 'font-size="14" font-family="Arial">Error Percentage (%)</text>')
    mid_y = _fmt((area.top + area.bottom) / 2)
    lines.append(f'<text x="24" y="{mid_y}" text-anchor="middle" font-size="14" font-family="Arial" '
                 f'transform="rotate(-90 24 {mid_y})">{_esc(y_label)}</text>')
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")
