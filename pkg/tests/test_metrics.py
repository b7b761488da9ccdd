"""
Tests for PSNR, SSIM and CLIPScore against naive reference computations.
"""

import math

import numpy as np
import pytest

from analysis.metrics import (
    SSIM_C1,
    SSIM_C2,
    Embedding,
    MetricDomainError,
    clip_score,
    clip_score_from_embeddings,
    cosine,
    gaussian_window,
    mse,
    psnr,
    score_pair,
    ssim,
)
from backends.mock_provider import MockEmbedder
from imaging.imagecore import ImageBuffer, to_gray
from imaging.synthetic import builtin_control, synthetic_scene


def _naive_ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    x = to_gray(a).pixels[:, :, 0].astype(np.float64)
    y = to_gray(b).pixels[:, :, 0].astype(np.float64)
    taps = gaussian_window()
    w = np.outer(taps, taps)
    values = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px, py = x[i:i + 11, j:j + 11], y[i:i + 11, j:j + 11]
            mx, my = (w * px).sum(), (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cxy = (w * (px - mx) * (py - my)).sum()
            values.append(((2 * mx * my + SSIM_C1) * (2 * cxy + SSIM_C2))
                          / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)))
    return float(np.mean(values))


def _naive_mse(a: ImageBuffer, b: ImageBuffer) -> float:
    h, w, c = a.pixels.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            for k in range(c):
                d = float(a.pixels[i, j, k]) - float(b.pixels[i, j, k])
                total += d * d
    return total / (h * w * c)


def _random_image(rng: np.random.Generator, width: int, height: int, channels: int) -> ImageBuffer:
    return ImageBuffer(rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8))


class TestPixelMetrics:

    def test_psnr_identical_is_infinite(self):
        img = synthetic_scene(1, 16, 16)
        assert math.isinf(psnr(img, img))

    def test_psnr_unit_error(self):
        a = ImageBuffer.filled(4, 4, (0, 0, 0))
        b = ImageBuffer.filled(4, 4, (1, 1, 1))
        assert mse(a, b) == 1.0
        assert psnr(a, b) == pytest.approx(20 * math.log10(255), abs=1e-9)

    def test_psnr_symmetric(self):
        a, b = synthetic_scene(1, 16, 16), synthetic_scene(2, 16, 16)
        assert psnr(a, b) == psnr(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(MetricDomainError):
            psnr(ImageBuffer.filled(4, 4, 0), ImageBuffer.filled(4, 5, 0))

    def test_ssim_identical_is_one(self):
        img = synthetic_scene(4, 24, 24)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_ssim_constant_images(self):
        a = ImageBuffer.filled(12, 12, 100)
        b = ImageBuffer.filled(12, 12, 50)
        assert ssim(a, b) == pytest.approx(0.80011, abs=1e-5)

    def test_ssim_matches_naive_windowing(self):
        a = synthetic_scene(7, 17, 13)
        b = synthetic_scene(8, 17, 13)
        assert ssim(a, b) == pytest.approx(_naive_ssim(a, b), abs=1e-9)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_ssim_needs_full_window(self):
        with pytest.raises(MetricDomainError):
            ssim(ImageBuffer.filled(10, 20, 0), ImageBuffer.filled(10, 20, 0))

    def test_black_against_white(self):
        black = ImageBuffer.filled(8, 8, 0)
        white = ImageBuffer.filled(8, 8, 255)
        assert mse(black, white) == 65025.0
        assert psnr(black, white) == 0.0


@pytest.mark.slow
class TestRandomizedOracles:

    def test_mse_and_psnr_match_pixel_loops(self):
        rng = np.random.default_rng(20240601)
        for _ in range(200):
            w, h = (int(v) for v in rng.integers(1, 17, size=2))
            c = int(rng.choice([1, 3]))
            a, b = _random_image(rng, w, h, c), _random_image(rng, w, h, c)
            expected = _naive_mse(a, b)
            assert mse(a, b) == pytest.approx(expected, abs=1e-9)
            if expected == 0.0:
                assert math.isinf(psnr(a, b))
            else:
                assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2 / expected), abs=1e-9)

    def test_ssim_matches_window_by_window(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            c = int(rng.choice([1, 3]))
            a, b = _random_image(rng, 16, 16, c), _random_image(rng, 16, 16, c)
            assert ssim(a, b) == pytest.approx(_naive_ssim(a, b), abs=1e-9)

    def test_ssim_self_similarity_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            img = _random_image(rng, 16, 16, int(rng.choice([1, 3])))
            value = ssim(img, img)
            assert 1.0 - 1e-12 <= value <= 1.0


class TestClipScore:

    def test_cosine_reference(self):
        assert cosine(Embedding([1, 2, 3]), Embedding([4, 5, 6])) == pytest.approx(0.974631846, abs=1e-9)

    def test_negative_cosine_clamps_to_zero(self):
        assert clip_score_from_embeddings(Embedding([1, 0]), Embedding([-1, 0])) == 0.0

    def test_parallel_is_hundred(self):
        assert clip_score_from_embeddings(Embedding([1, 2]), Embedding([2, 4])) == pytest.approx(100.0)

    def test_zero_vector_and_length_mismatch(self):
        with pytest.raises(MetricDomainError):
            cosine(Embedding([0, 0]), Embedding([1, 0]))
        with pytest.raises(MetricDomainError):
            cosine(Embedding([1, 0]), Embedding([1, 0, 0]))

    def test_mock_embedder_black_white_orthogonal(self):
        black = ImageBuffer.filled(16, 16, (0, 0, 0))
        white = ImageBuffer.filled(16, 16, (255, 255, 255))
        assert clip_score(black, white, MockEmbedder()) == pytest.approx(0.0, abs=1e-12)

    def test_mock_embedder_gray_oracle(self):
        a, b = 100 / 255, 120 / 255
        expected = (3 + 64 * a * b) / (math.sqrt(3 + 64 * a * a) * math.sqrt(3 + 64 * b * b))
        score = clip_score(ImageBuffer.filled(16, 16, 100), ImageBuffer.filled(16, 16, 120), MockEmbedder())
        assert score == pytest.approx(100 * expected, abs=1e-9)

    def test_score_pair_in_range(self):
        ctrl = builtin_control(32, 32)
        report = score_pair(synthetic_scene(0, 32, 32), ctrl, MockEmbedder())
        assert 0.0 <= report.clip_score_pct <= 100.0
        assert report.ssim <= 1.0
        assert report.psnr_db >= 0.0
