"""
Sweep artifacts: records.csv, aggregates.csv and the per-metric SVG charts.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import orjson

from visualization.svg_charts import ChartSpec, SeriesPoint, render_chart

from .experiment import METRICS, SERIES, AggregateRow
from .pipeline import TrialRecord

RECORDS_HEADER = (
    "image_id", "error_type", "requested_ratio", "realized_ratio", "gen_seed",
    "caption_clean", "caption_corrupted",
    "psnr_db_orig", "ssim_orig", "clip_orig",
    "psnr_db_ctrl", "ssim_ctrl", "clip_ctrl",
    "status",
)
AGGREGATES_HEADER = ("error_type", "ratio", "metric", "series", "mean", "std", "n", "excluded")
INF_TOKEN = "inf"


def format_float(value: float | None) -> str:
    """Six decimals, "inf" for the PSNR sentinel, empty for missing."""
    if value is None:
        return ""
    if math.isinf(value):
        return INF_TOKEN if value > 0 else f"-{INF_TOKEN}"
    return f"{value:.6f}"


def parse_float(text: str) -> float | None:
    if text == "":
        return None
    return float(text)


def _writer(buf: io.StringIO):
    return csv.writer(buf, lineterminator="\n")


def records_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(RECORDS_HEADER)
    for rec in sorted(records, key=TrialRecord.sort_key):
        orig, ctrl = rec.metrics_vs_original, rec.metrics_vs_control
        w.writerow([
            rec.image_id,
            rec.error_type,
            format_float(rec.requested_ratio),
            format_float(rec.realized_ratio),
            rec.gen_seed,
            rec.caption_clean,
            rec.caption_corrupted,
            format_float(orig.psnr_db if orig else None),
            format_float(orig.ssim if orig else None),
            format_float(orig.clip_score_pct if orig else None),
            format_float(ctrl.psnr_db if ctrl else None),
            format_float(ctrl.ssim if ctrl else None),
            format_float(ctrl.clip_score_pct if ctrl else None),
            rec.status,
        ])
    return buf.getvalue()


def aggregates_csv(rows: list[AggregateRow]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(AGGREGATES_HEADER)
    metric_rank = {m: i for i, m in enumerate(METRICS)}
    series_rank = {s: i for i, s in enumerate(SERIES)}
    ordered = sorted(rows, key=lambda r: (r.error_type, r.ratio, metric_rank.get(r.metric, 99),
                                          series_rank.get(r.series, 99)))
    for row in ordered:
        w.writerow([
            row.error_type,
            format_float(row.ratio),
            row.metric,
            row.series,
            format_float(row.mean),
            format_float(row.std),
            row.n,
            row.excluded,
        ])
    return buf.getvalue()


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_records_csv(records: list[TrialRecord], path: str | Path) -> Path:
    return _write_text(Path(path), records_csv(records))


def write_aggregates_csv(rows: list[AggregateRow], path: str | Path) -> Path:
    return _write_text(Path(path), aggregates_csv(rows))


@dataclass
class RecordRow:
    """One parsed records.csv line."""
    image_id: str
    error_type: int
    requested_ratio: float
    realized_ratio: float
    gen_seed: int
    caption_clean: str
    caption_corrupted: str
    psnr_db_orig: float | None
    ssim_orig: float | None
    clip_orig: float | None
    psnr_db_ctrl: float | None
    ssim_ctrl: float | None
    clip_ctrl: float | None
    status: str


def _check_header(found: list[str], expected: tuple[str, ...], path: Path):
    if tuple(found) != expected:
        raise ValueError(f"{path}: unexpected CSV header {found!r}")


def read_records_csv(path: str | Path) -> list[RecordRow]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        _check_header(next(reader, []), RECORDS_HEADER, path)
        rows = []
        for r in reader:
            rows.append(RecordRow(
                image_id=r[0], error_type=int(r[1]),
                requested_ratio=float(r[2]), realized_ratio=float(r[3]), gen_seed=int(r[4]),
                caption_clean=r[5], caption_corrupted=r[6],
                psnr_db_orig=parse_float(r[7]), ssim_orig=parse_float(r[8]), clip_orig=parse_float(r[9]),
                psnr_db_ctrl=parse_float(r[10]), ssim_ctrl=parse_float(r[11]), clip_ctrl=parse_float(r[12]),
                status=r[13],
            ))
        return rows


def read_aggregates_csv(path: str | Path) -> list[AggregateRow]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        _check_header(next(reader, []), AGGREGATES_HEADER, path)
        return [
            AggregateRow(
                error_type=int(r[0]), ratio=float(r[1]), metric=r[2], series=r[3],
                mean=parse_float(r[4]), std=parse_float(r[5]), n=int(r[6]), excluded=int(r[7]),
            )
            for r in reader
        ]


@dataclass
class ReportResult:
    charts: list[Path] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    manifest: Path | None = None


def chart_spec(rows: list[AggregateRow], metric: str, error_type: int,
               ratios: list[float] | None = None) -> ChartSpec:
    """Build the chart for one (metric, error type); missing cells become gaps and warnings."""
    mine = [r for r in rows if r.metric == metric and r.error_type == error_type]
    grid = sorted(ratios if ratios is not None else {r.ratio for r in mine})
    by_key = {(r.ratio, r.series): r for r in mine}
    warnings: list[str] = []
    series: dict[str, list[SeriesPoint]] = {s: [] for s in SERIES}
    for ratio in grid:
        for s in SERIES:
            row = by_key.get((ratio, s))
            if row is None or row.mean is None:
                warnings.append(f"{metric} type {error_type}: no {s} data at ratio {ratio:g}")
                series[s].append(SeriesPoint(None, None))
            else:
                series[s].append(SeriesPoint(row.mean, row.std))
    return ChartSpec(
        metric_name=metric,
        error_type=error_type,
        x=tuple(round(r * 100.0, 6) for r in grid),
        series={k: tuple(v) for k, v in series.items()},
        warnings=tuple(warnings),
    )


def render_all(rows: list[AggregateRow], out_dir: str | Path, *,
               metrics: list[str] | None = None, error_types: list[int] | None = None,
               progress_cb: Callable[[str, str], None] | None = None) -> ReportResult:
    """
    One SVG per (metric, error type) under `out_dir`, plus report_manifest.json.

    The ratio grid is the union of ratios seen in `rows`; a ratio missing for
    one chart is drawn as a gap and listed as a warning. Charts with fewer
    than two ratios are skipped with a warning.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = ReportResult()
    grid = sorted({r.ratio for r in rows})
    metrics = metrics or [m for m in METRICS if any(r.metric == m for r in rows)]
    error_types = error_types or sorted({r.error_type for r in rows})

    for etype in error_types:
        for metric in metrics:
            name = f"{metric}_type{etype}.svg"
            if len(grid) < 2:
                result.warnings.append(f"{name}: skipped, fewer than two ratios")
                continue
            spec = chart_spec(rows, metric, etype, grid)
            present = sum(1 for p in spec.series["vs_original"] if p.mean is not None)
            result.warnings.extend(spec.warnings)
            if present == 0:
                result.warnings.append(f"{name}: skipped, no data")
                continue
            path = out / name
            path.write_bytes(render_chart(spec))
            result.charts.append(path)
            if progress_cb:
                progress_cb("chart", str(path))

    manifest = {
        "charts": [p.name for p in result.charts],
        "warnings": result.warnings,
        "ratios": grid,
        "metrics": metrics,
        "error_types": error_types,
    }
    result.manifest = out / "report_manifest.json"
    result.manifest.write_bytes(orjson.dumps(manifest, option=orjson.OPT_INDENT_2))
    return result
