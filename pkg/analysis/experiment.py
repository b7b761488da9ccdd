"""
Error-type × ratio sweeps over an image dataset.

Every cell (error type, ratio) corrupts each image's caption once and
generates G images from the corrupted text with seeds 0..G-1. Cells are
written to ``<output_dir>/cells/`` as they complete so an interrupted sweep
resumes where it stopped.
"""

from __future__ import annotations

import math
import os
import tempfile
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import orjson
from pydantic import BaseModel, Field, field_validator

from backends.base_provider import BackendEndpoint, BackendError, BackendSet, BaseEmbedder
from backends.call_tracker import get_call_tracker
from backends.unified_client import ProviderSet, build_providers
from channel.rng import MASK64, mix_seed
from channel.text_channel import ErrorSpec, ErrorType
from imaging.imagecore import ImageBuffer, is_image_file, load_image, resize_bilinear, save_image
from imaging.synthetic import builtin_control
from utils.json_utils import json_safe

from .metrics import MetricReport, score_pair
from .pipeline import CaptionCache, EmbeddingCache, TrialRecord, run_trial
from .run_tracker import RunTracker

METRICS = ("psnr_db", "ssim", "clip_score_pct")
SERIES = ("vs_original", "vs_control")
DEFAULT_RATIOS = tuple(round(i * 0.05, 2) for i in range(11))
DEFAULT_GENERATIONS = 10
BUILTIN_CONTROL = "builtin"


def default_grid() -> dict[str, Any]:
    """Default sweep grid: 0–50 % in 5 % steps, all three error types, 10 generations."""
    return {
        "ratios": list(DEFAULT_RATIOS),
        "error_types": [int(t) for t in ErrorType],
        "generations_per_caption": DEFAULT_GENERATIONS,
    }


class SweepConfig(BaseModel):
    """Fully resolved sweep settings; field names double as config-file keys."""
    model_config = {"extra": "forbid"}

    dataset_dir: Path = Field(description="Directory of PPM/PGM/PNG images")
    control_image: str = Field(BUILTIN_CONTROL, description='Path to the control image, or "builtin"')
    error_types: list[int] = Field(default_factory=lambda: [1, 2, 3])
    ratios: list[float] = Field(default_factory=lambda: list(DEFAULT_RATIOS))
    generations_per_caption: int = Field(DEFAULT_GENERATIONS, ge=1)
    channel_seed_base: int = Field(0, ge=0, le=MASK64)
    output_dir: Path = Field(Path("aquasem_out"))
    backends: Literal["mock"] | BackendEndpoint | BackendSet = "mock"
    generation_width: int = Field(512, ge=16)
    generation_height: int = Field(512, ge=16)
    jobs: int | None = Field(None, ge=1, description="Trial parallelism; defaults to the CPU count")
    save_generated: bool = False
    breakpoint_drop: float = Field(10.0, gt=0, description="Metric drop (points) that marks a breakpoint")

    @field_validator("error_types")
    @classmethod
    def _check_types(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("error_types must not be empty")
        bad = [t for t in v if t not in (1, 2, 3)]
        if bad:
            raise ValueError(f"unknown error types {bad}; expected a subset of 1, 2, 3")
        return sorted(set(v))

    @field_validator("ratios")
    @classmethod
    def _check_ratios(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("ratios must not be empty")
        for r in v:
            if not (0.0 <= r <= 1.0) or math.isnan(r):
                raise ValueError(f"ratio {r} outside [0, 1]")
        for a, b in zip(v, v[1:]):
            if not a < b:
                raise ValueError("ratios must be strictly ascending")
        return v

    @property
    def generation_size(self) -> tuple[int, int]:
        return (self.generation_width, self.generation_height)

    def worker_count(self, providers: ProviderSet | None = None) -> int:
        jobs = self.jobs or os.cpu_count() or 1
        bound = providers.max_parallel if providers else None
        return max(1, min(jobs, bound) if bound else jobs)


@dataclass
class AggregateRow:
    error_type: int
    ratio: float
    metric: str
    series: str
    mean: float | None
    std: float | None
    n: int
    excluded: int = 0

    @property
    def empty(self) -> bool:
        return self.n == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "error_type": self.error_type,
            "ratio": self.ratio,
            "metric": self.metric,
            "series": self.series,
            "mean": self.mean,
            "std": self.std,
            "n": self.n,
            "excluded": self.excluded,
        }


@dataclass
class SweepResult:
    records: list[TrialRecord]
    aggregates: list[AggregateRow]
    providers: dict[str, str] = field(default_factory=dict)
    breakpoints: dict[int, float | None] = field(default_factory=dict)
    control_baseline: dict[str, MetricReport] = field(default_factory=dict)
    resumed_cells: list[str] = field(default_factory=list)

    @property
    def failures(self) -> list[TrialRecord]:
        return [r for r in self.records if not r.ok]

    @property
    def unreachable(self) -> bool:
        return any(r.error_kind == "unreachable" for r in self.records)

    def counts(self) -> dict[str, int]:
        return {
            "records": len(self.records),
            "ok": len(self.records) - len(self.failures),
            "failed": len(self.failures),
            "cells_resumed": len(self.resumed_cells),
        }


def channel_seed(base: int, error_type: int, ratio_index: int, image_index: int) -> int:
    """Channel seed of one (cell, image): one corruption shared by the cell's G generations."""
    return mix_seed(base, error_type, ratio_index, image_index)


def load_dataset(dataset_dir: str | Path) -> list[tuple[str, ImageBuffer]]:
    """Images in `dataset_dir`, sorted by file name; the id is the file stem."""
    root = Path(dataset_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    files = sorted(p for p in root.iterdir() if p.is_file() and is_image_file(p))
    if not files:
        raise ValueError(f"dataset is empty: {root}")
    return [(p.stem, load_image(p)) for p in files]


def load_control(control: str | Path) -> ImageBuffer:
    if str(control) == BUILTIN_CONTROL:
        return builtin_control()
    return load_image(control)


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def aggregate(records: list[TrialRecord]) -> list[AggregateRow]:
    """
    Mean and sample std (n−1) per (error type, ratio, metric, series).

    Failed trials are skipped; +inf PSNR values are left out of the mean and
    counted in `excluded`. A cell whose trials all failed yields rows with
    n == 0 and no mean.
    """
    if not records:
        raise ValueError("aggregate needs at least one record")
    cells: dict[tuple[int, float], list[TrialRecord]] = {}
    for rec in sorted(records, key=TrialRecord.sort_key):
        cells.setdefault((rec.error_type, rec.requested_ratio), []).append(rec)

    rows: list[AggregateRow] = []
    for (etype, ratio), cell in sorted(cells.items()):
        done = [r for r in cell if r.ok]
        for metric in METRICS:
            for series in SERIES:
                attr = "metrics_vs_original" if series == "vs_original" else "metrics_vs_control"
                values = [getattr(getattr(r, attr), metric) for r in done]
                finite = [v for v in values if not math.isinf(v)]
                mean, std = _mean_std(finite)
                rows.append(AggregateRow(etype, ratio, metric, series, mean, std,
                                         n=len(finite), excluded=len(values) - len(finite)))
    return rows


def find_breakpoints(rows: list[AggregateRow], metric: str = "clip_score_pct",
                     drop: float = 10.0) -> dict[int, float | None]:
    """Smallest ratio per error type whose vs_original mean sits `drop` points below the first ratio's."""
    out: dict[int, float | None] = {}
    by_type: dict[int, list[AggregateRow]] = {}
    for row in rows:
        if row.metric == metric and row.series == "vs_original":
            by_type.setdefault(row.error_type, []).append(row)
    for etype, series in sorted(by_type.items()):
        series.sort(key=lambda r: r.ratio)
        baseline = series[0].mean
        out[etype] = None
        if baseline is None:
            continue
        for row in series[1:]:
            if row.mean is not None and row.mean <= baseline - drop:
                out[etype] = row.ratio
                break
    return out


def control_baseline(images: list[tuple[str, ImageBuffer]], control: ImageBuffer,
                     embedder: BaseEmbedder) -> dict[str, MetricReport]:
    """Similarity of each original to the control image (resized to control dimensions)."""
    ref_vec = embedder.embed(control)
    out = {}
    for image_id, img in images:
        candidate = img
        if (img.width, img.height) != (control.width, control.height):
            candidate = resize_bilinear(img, control.width, control.height)
        out[image_id] = score_pair(control, candidate, embedder, reference_embedding=ref_vec)
    return out


def _cell_name(error_type: int, ratio_index: int) -> str:
    return f"type{error_type}_r{ratio_index:02d}"


def _cell_fingerprint(cfg: SweepConfig, image_ids: list[str], error_type: int, ratio: float,
                      providers: dict[str, str], control_id: str) -> dict[str, Any]:
    return {
        "error_type": error_type,
        "ratio": ratio,
        "images": image_ids,
        "generations_per_caption": cfg.generations_per_caption,
        "channel_seed_base": cfg.channel_seed_base,
        "generation_size": list(cfg.generation_size),
        "control": control_id,
        "providers": providers,
    }


def _load_cell(path: Path, fingerprint: dict[str, Any]) -> list[TrialRecord] | None:
    if not path.exists():
        return None
    try:
        data = orjson.loads(path.read_bytes())
    except (OSError, orjson.JSONDecodeError):
        return None
    if data.get("fingerprint") != fingerprint:
        return None
    return [TrialRecord.from_dict(d) for d in data.get("records", [])]


def _write_cell(path: Path, fingerprint: dict[str, Any], records: list[TrialRecord]):
    payload = orjson.dumps(
        {"fingerprint": fingerprint, "records": [r.to_dict() for r in records]},
        option=orjson.OPT_INDENT_2,
    )
    with tempfile.NamedTemporaryFile('wb', dir=str(path.parent), prefix=path.stem + '.', suffix='.tmp',
                                     delete=False) as tf:
        tf.write(payload)
        tmp_name = Path(tf.name)
    tmp_name.replace(path)


def run_sweep(cfg: SweepConfig, providers: ProviderSet | None = None, *,
              on_trial: Callable[[TrialRecord], None] | None = None,
              tracker: RunTracker | None = None,
              debug_logger=None,
              command_args: list[str] | None = None) -> SweepResult:
    """
    Run every (error type, ratio, image, generation) trial of the grid.

    Stage failures are recorded per trial and the sweep continues. Output
    ordering is (type, ratio, image_id, gen_seed) regardless of scheduling.
    """
    images = load_dataset(cfg.dataset_dir)
    control = load_control(cfg.control_image)
    own_providers = providers is None
    if providers is None:
        providers = build_providers(cfg.backends, debug_logger=debug_logger)
    identities = providers.identities()
    if debug_logger is not None:
        debug_logger.log_event("providers", "offline mock backends" if providers.is_offline else "remote backends",
                               identities)
    image_ids = [image_id for image_id, _ in images]

    out_dir = Path(cfg.output_dir)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    tracker = tracker or RunTracker(out_dir / "manifest.json")
    tracker.set_run_info(command_args or [], cfg.model_dump(mode="json"), identities)

    captions = CaptionCache(providers.captioner)
    embeddings = EmbeddingCache()
    result = SweepResult(records=[], aggregates=[], providers=identities)

    pending: list[tuple[str, Path, dict, list[tuple]]] = []
    for etype in cfg.error_types:
        for r_idx, ratio in enumerate(cfg.ratios):
            name = _cell_name(etype, r_idx)
            path = cells_dir / f"{name}.json"
            fingerprint = _cell_fingerprint(cfg, image_ids, etype, ratio, identities, str(cfg.control_image))
            done = _load_cell(path, fingerprint)
            if done is not None:
                result.records.extend(done)
                result.resumed_cells.append(name)
                tracker.add_resumed_cell(name)
                if debug_logger is not None:
                    debug_logger.log_event("cell", f"resumed {name}", {"records": len(done)})
                continue
            jobs = []
            for i_idx, (image_id, img) in enumerate(images):
                spec = ErrorSpec(etype, ratio, channel_seed(cfg.channel_seed_base, etype, r_idx, i_idx))
                for g in range(cfg.generations_per_caption):
                    jobs.append((image_id, img, spec, g, r_idx))
            pending.append((name, path, fingerprint, jobs))

    def _run(job: tuple) -> TrialRecord:
        image_id, img, spec, g, r_idx = job
        keep: dict[str, ImageBuffer] | None = {} if cfg.save_generated else None
        rec = run_trial(img, control, spec, g, providers, image_id=image_id,
                        generation_size=cfg.generation_size, caption_cache=captions,
                        embedding_cache=embeddings, keep_generated=keep)
        if keep and "generated" in keep:
            target = out_dir / "generated" / f"type{int(spec.error_type)}" / f"r{r_idx:02d}" / f"{image_id}_g{g}.ppm"
            target.parent.mkdir(parents=True, exist_ok=True)
            save_image(keep["generated"], target)
        if on_trial:
            on_trial(rec)
        return rec

    try:
        with ThreadPoolExecutor(max_workers=cfg.worker_count(providers)) as pool:
            for name, path, fingerprint, jobs in pending:
                cell_records = list(pool.map(_run, jobs))
                result.records.extend(cell_records)
                failed = [r for r in cell_records if not r.ok]
                if failed:
                    for rec in failed[:3]:
                        tracker.add_error(f"{name}/{rec.image_id}/g{rec.gen_seed}: {rec.status}: {rec.error_message}")
                else:
                    _write_cell(path, fingerprint, sorted(cell_records, key=TrialRecord.sort_key))
        try:
            result.control_baseline = control_baseline(images, control, providers.embedder)
        except (BackendError, ValueError) as exc:
            tracker.add_error(f"control baseline: {exc}")
    finally:
        if own_providers:
            providers.close()

    result.records.sort(key=TrialRecord.sort_key)
    result.aggregates = aggregate(result.records)
    result.breakpoints = find_breakpoints(result.aggregates, drop=cfg.breakpoint_drop)

    tracker.update_call_stats(get_call_tracker().get_summary())
    tracker.set_results(
        result.counts(),
        {str(k): v for k, v in result.breakpoints.items()},
        json_safe({k: v.to_dict() for k, v in result.control_baseline.items()}),
    )
    tracker.finalize("completed" if not result.failures else "completed_with_failures")
    return result
