"""
Tests for single trials: stage order, caption economy and failure capture.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import pytest

from analysis.metrics import MetricReport
from analysis.pipeline import CaptionCache, EmbeddingCache, TrialRecord, run_trial
from backends.base_provider import BackendUnreachableError, BaseCaptioner, BaseGenerator
from backends.mock_provider import MockCaptioner, MockEmbedder, MockGenerator
from backends.unified_client import ProviderSet
from channel.text_channel import ErrorSpec
from imaging.imagecore import ImageBuffer
from imaging.synthetic import builtin_control, synthetic_scene


class _BrokenCaptioner(BaseCaptioner):
    provider_name = "broken"

    def __init__(self):
        self.calls = 0

    def caption(self, img):
        self.calls += 1
        raise BackendUnreachableError("connection refused", provider="caption", endpoint="http://127.0.0.1:9")


class _WrongSizeGenerator(BaseGenerator):
    """Returns a gray image at a fixed size regardless of the request."""
    provider_name = "wrong-size"

    def generate(self, req):
        return ImageBuffer.filled(20, 24, 90)


@pytest.fixture
def providers():
    return ProviderSet(captioner=MockCaptioner(), generator=MockGenerator(), embedder=MockEmbedder())


@pytest.fixture
def original():
    return synthetic_scene(3, 32, 32)


def test_trial_fills_record(providers, original):
    rec = run_trial(original, builtin_control(), ErrorSpec(1, 0.2, 11), 4, providers,
                    image_id="scene", generation_size=(32, 32))
    assert rec.ok
    assert rec.status == "ok"
    assert rec.gen_seed == 4
    assert rec.channel_seed == 11
    assert rec.caption_corrupted != rec.caption_clean
    assert 0.0 < rec.realized_ratio <= 0.25
    assert set(rec.timings) == {"caption", "channel", "generate", "metrics"}
    assert 0.0 <= rec.metrics_vs_original.clip_score_pct <= 100.0
    assert 0.0 <= rec.metrics_vs_control.clip_score_pct <= 100.0


def test_trial_is_deterministic(providers, original):
    spec = ErrorSpec(2, 0.3, 5)
    a = run_trial(original, builtin_control(), spec, 1, providers, generation_size=(32, 32))
    b = run_trial(original, builtin_control(), spec, 1, providers, generation_size=(32, 32))
    assert a.to_dict(include_timings=False) == b.to_dict(include_timings=False)


def test_caption_computed_once_per_image(providers, original):
    cache = CaptionCache(providers.captioner)
    embeddings = EmbeddingCache()
    control = builtin_control()

    def one(g):
        return run_trial(original, control, ErrorSpec(3, 0.1, 2), g, providers, image_id="scene",
                         generation_size=(32, 32), caption_cache=cache, embedding_cache=embeddings)

    with ThreadPoolExecutor(max_workers=8) as pool:
        records = list(pool.map(one, range(16)))
    assert all(r.ok for r in records)
    assert providers.captioner.call_count == 1
    assert len(cache) == 1
    assert len({r.caption_corrupted for r in records}) == 1


def test_caption_failure_is_recorded_not_raised(original):
    captioner = _BrokenCaptioner()
    providers = ProviderSet(captioner=captioner, generator=MockGenerator(), embedder=MockEmbedder())
    cache = CaptionCache(captioner)
    recs = [run_trial(original, builtin_control(), ErrorSpec(1, 0.1, 1), g, providers,
                      generation_size=(32, 32), caption_cache=cache) for g in range(3)]
    for rec in recs:
        assert rec.status == "failed:caption"
        assert rec.failed_stage == "caption"
        assert rec.error_kind == "unreachable"
        assert rec.metrics_vs_original is None
    assert captioner.calls == 1


def test_generated_image_is_resized_to_reference(original):
    providers = ProviderSet(captioner=MockCaptioner(), generator=_WrongSizeGenerator(), embedder=MockEmbedder())
    rec = run_trial(original, builtin_control(), ErrorSpec(1, 0.0, 0), 0, providers, generation_size=(32, 32))
    assert rec.ok
    assert rec.generation_size == (32, 32)


def test_tiny_reference_is_a_metric_failure():
    providers = ProviderSet(captioner=MockCaptioner(), generator=MockGenerator(), embedder=MockEmbedder())
    tiny = synthetic_scene(0, 8, 8)
    rec = run_trial(tiny, builtin_control(), ErrorSpec(1, 0.0, 0), 0, providers, generation_size=(16, 16))
    assert rec.status == "failed:metrics"
    assert rec.error_kind == "domain"


def test_record_dict_keeps_infinite_psnr():
    rec = TrialRecord(
        image_id="x", error_type=2, requested_ratio=0.0,
        metrics_vs_original=MetricReport(math.inf, 1.0, 100.0),
        metrics_vs_control=MetricReport(12.5, 0.1, 40.0),
        generation_size=(64, 48),
    )
    data = rec.to_dict()
    assert data["metrics_vs_original"]["psnr_db"] == "inf"
    back = TrialRecord.from_dict(data)
    assert math.isinf(back.metrics_vs_original.psnr_db)
    assert back.generation_size == (64, 48)
    assert back.metrics_vs_control == rec.metrics_vs_control


class _RecordingGenerator(MockGenerator):
    def __init__(self):
        super().__init__()
        self.prompts = []

    def generate(self, req):
        self.prompts.append(req.prompt.content)
        return super().generate(req)


@pytest.mark.parametrize("error_type,ratio", [(1, 0.0), (1, 0.3), (2, 0.5), (3, 0.4), (3, 1.0)])
def test_generator_receives_corrupted_caption(original, error_type, ratio):
    generator = _RecordingGenerator()
    providers = ProviderSet(captioner=MockCaptioner(), generator=generator, embedder=MockEmbedder())
    rec = run_trial(original, builtin_control(), ErrorSpec(error_type, ratio, 8), 2, providers,
                    generation_size=(32, 32))
    assert rec.ok
    assert generator.prompts == [rec.caption_corrupted]


def test_all_words_deleted_generates_mid_gray(providers, original):
    kept = {}
    rec = run_trial(original, builtin_control(), ErrorSpec(3, 1.0, 6), 0, providers,
                    generation_size=(32, 32), keep_generated=kept)
    assert rec.status == "ok"
    assert rec.caption_corrupted == ""
    assert rec.realized_ratio == 1.0
    generated = kept["generated"]
    assert generated.shape == (32, 32, 3)
    assert set(generated.pixels.reshape(-1).tolist()) == {128}
