"""
One end-to-end transmission trial.

caption(original) → corrupt(caption) → generate(corrupted) → score the
generated image against the original and against the control image.
Only the caption text crosses the simulated channel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from threading import Lock
from typing import TYPE_CHECKING, Any

import numpy as np

from backends.base_provider import BackendError, BaseCaptioner, GenerationRequest
from channel.text_channel import ErrorSpec, TextMessage, corrupt
from imaging.imagecore import ImageBuffer, resize_bilinear, to_gray

from .metrics import Embedding, MetricDomainError, MetricReport, score_pair

if TYPE_CHECKING:
    from backends.unified_client import ProviderSet

STATUS_OK = "ok"
DEFAULT_GENERATION_SIZE = 512
INF_TOKEN = "inf"


def _encode_report(report: MetricReport | None) -> dict[str, Any] | None:
    """JSON-safe report; an infinite PSNR becomes the "inf" token."""
    if report is None:
        return None
    return {k: (INF_TOKEN if isinstance(v, float) and math.isinf(v) else v) for k, v in report.to_dict().items()}


def _decode_report(data: dict[str, Any] | None) -> MetricReport | None:
    if not data:
        return None
    return MetricReport(**{k: float(v) for k, v in data.items()})


@dataclass
class TrialRecord:
    """Inputs, outputs and timings of one trial.

    A failed trial keeps whatever stages completed; `status` is
    ``failed:<stage>`` and both metric reports are None.
    """
    image_id: str
    error_type: int
    requested_ratio: float
    realized_ratio: float = 0.0
    gen_seed: int = 0
    channel_seed: int = 0
    caption_clean: str = ""
    caption_corrupted: str = ""
    metrics_vs_original: MetricReport | None = None
    metrics_vs_control: MetricReport | None = None
    timings: dict[str, float] = field(default_factory=dict)
    generation_size: tuple[int, int] = (DEFAULT_GENERATION_SIZE, DEFAULT_GENERATION_SIZE)
    status: str = STATUS_OK
    error_kind: str | None = None
    error_message: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    @property
    def failed_stage(self) -> str | None:
        return None if self.ok else self.status.split(":", 1)[1]

    def sort_key(self) -> tuple:
        return (self.error_type, self.requested_ratio, self.image_id, self.gen_seed)

    def to_dict(self, include_timings: bool = True) -> dict[str, Any]:
        data = {
            "image_id": self.image_id,
            "error_type": self.error_type,
            "requested_ratio": self.requested_ratio,
            "realized_ratio": self.realized_ratio,
            "gen_seed": self.gen_seed,
            "channel_seed": self.channel_seed,
            "caption_clean": self.caption_clean,
            "caption_corrupted": self.caption_corrupted,
            "metrics_vs_original": _encode_report(self.metrics_vs_original),
            "metrics_vs_control": _encode_report(self.metrics_vs_control),
            "generation_size": list(self.generation_size),
            "status": self.status,
            "error_kind": self.error_kind,
            "error_message": self.error_message,
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrialRecord:
        report = _decode_report
        return cls(
            image_id=data["image_id"],
            error_type=int(data["error_type"]),
            requested_ratio=float(data["requested_ratio"]),
            realized_ratio=float(data["realized_ratio"]),
            gen_seed=int(data["gen_seed"]),
            channel_seed=int(data.get("channel_seed", 0)),
            caption_clean=data["caption_clean"],
            caption_corrupted=data["caption_corrupted"],
            metrics_vs_original=report(data.get("metrics_vs_original")),
            metrics_vs_control=report(data.get("metrics_vs_control")),
            timings=dict(data.get("timings") or {}),
            generation_size=tuple(data.get("generation_size") or (DEFAULT_GENERATION_SIZE, DEFAULT_GENERATION_SIZE)),
            status=data.get("status", STATUS_OK),
            error_kind=data.get("error_kind"),
            error_message=data.get("error_message"),
        )


def error_kind(exc: BaseException) -> str:
    if isinstance(exc, BackendError):
        return exc.kind
    if isinstance(exc, OSError):
        return "io"
    return "domain"


class CaptionCache:
    """Concurrent caption map with compute-once semantics per image id."""

    def __init__(self, captioner: BaseCaptioner):
        self.captioner = captioner
        self._captions: dict[str, TextMessage] = {}
        self._errors: dict[str, Exception] = {}
        self._locks: dict[str, Lock] = {}
        self._guard = Lock()

    def _lock_for(self, image_id: str) -> Lock:
        with self._guard:
            lock = self._locks.get(image_id)
            if lock is None:
                lock = self._locks[image_id] = Lock()
            return lock

    def get(self, image_id: str, original: ImageBuffer) -> TextMessage:
        with self._lock_for(image_id):
            if image_id in self._captions:
                return self._captions[image_id]
            if image_id in self._errors:
                raise self._errors[image_id]
            try:
                caption = self.captioner.caption(original)
            except Exception as exc:
                self._errors[image_id] = exc
                raise
            self._captions[image_id] = caption
            return caption

    def __len__(self) -> int:
        with self._guard:
            return len(self._captions)


def caption_once(image_id: str, original: ImageBuffer, cache: CaptionCache) -> TextMessage:
    """Caption for `image_id`, computed at most once per cache."""
    return cache.get(image_id, original)


class EmbeddingCache:
    """Reference embeddings (originals, control) computed once per key."""

    def __init__(self):
        self._values: dict[str, Embedding] = {}
        self._lock = Lock()

    def get(self, key: str, img: ImageBuffer, embedder) -> Embedding:
        with self._lock:
            if key in self._values:
                return self._values[key]
        vec = embedder.embed(img)
        with self._lock:
            return self._values.setdefault(key, vec)


def _ms(start: float) -> float:
    return round((time.perf_counter() - start) * 1000.0, 3)


def run_trial(original: ImageBuffer, control: ImageBuffer, spec: ErrorSpec, gen_seed: int,
              providers: ProviderSet, *, image_id: str = "image",
              generation_size: tuple[int, int] = (DEFAULT_GENERATION_SIZE, DEFAULT_GENERATION_SIZE),
              caption_cache: CaptionCache | None = None,
              embedding_cache: EmbeddingCache | None = None,
              keep_generated: dict[str, ImageBuffer] | None = None) -> TrialRecord:
    """
    Run one trial and never raise for stage failures.

    The caption comes from `caption_cache` when given, so repeated trials on
    one image share a single captioner call. When `keep_generated` is a dict,
    the generated image is stored under "generated".
    """
    record = TrialRecord(
        image_id=image_id,
        error_type=int(spec.error_type),
        requested_ratio=spec.ratio,
        gen_seed=gen_seed,
        channel_seed=spec.seed,
        generation_size=generation_size,
    )
    cache = caption_cache if caption_cache is not None else CaptionCache(providers.captioner)
    stage = "caption"
    try:
        t0 = time.perf_counter()
        clean = caption_once(image_id, original, cache)
        record.timings["caption"] = _ms(t0)
        record.caption_clean = clean.content

        stage = "channel"
        t0 = time.perf_counter()
        outcome = corrupt(clean, spec)
        record.timings["channel"] = _ms(t0)
        record.caption_corrupted = outcome.corrupted.content
        record.realized_ratio = outcome.realized_ratio

        stage = "generate"
        t0 = time.perf_counter()
        width, height = generation_size
        generated = providers.generator.generate(GenerationRequest(outcome.corrupted, gen_seed, width, height))
        record.timings["generate"] = _ms(t0)
        if keep_generated is not None:
            keep_generated["generated"] = generated

        stage = "metrics"
        t0 = time.perf_counter()
        record.metrics_vs_original = _score(original, generated, providers, embedding_cache, f"image:{image_id}")
        record.metrics_vs_control = _score(control, generated, providers, embedding_cache, "control")
        record.timings["metrics"] = _ms(t0)
    except (BackendError, MetricDomainError, ValueError, OSError) as exc:
        record.metrics_vs_original = None
        record.metrics_vs_control = None
        record.status = f"failed:{stage}"
        record.error_kind = error_kind(exc)
        record.error_message = str(exc)
    return record


def _score(reference: ImageBuffer, generated: ImageBuffer, providers: ProviderSet,
           embedding_cache: EmbeddingCache | None, key: str) -> MetricReport:
    candidate = generated
    if (generated.width, generated.height) != (reference.width, reference.height) \
            or generated.channels != reference.channels:
        candidate = resize_bilinear(generated, reference.width, reference.height)
        if candidate.channels != reference.channels:
            candidate = _match_channels(candidate, reference.channels)
    ref_vec = embedding_cache.get(key, reference, providers.embedder) if embedding_cache else None
    return score_pair(reference, candidate, providers.embedder, reference_embedding=ref_vec)


def _match_channels(img: ImageBuffer, channels: int) -> ImageBuffer:
    if channels == 1:
        return to_gray(img)
    return ImageBuffer(np.repeat(img.pixels, 3, axis=2))
