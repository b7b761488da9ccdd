"""
Tests for the image container, pixmap codec and pixel transforms.
"""

import tempfile
import unittest
from pathlib import Path

import numpy as np

from imaging.imagecore import (
    ImageBuffer,
    PixmapParseError,
    UnsupportedImageError,
    load_image,
    read_ppm,
    resize_bilinear,
    save_image,
    to_gray,
    write_ppm,
)
from imaging.synthetic import builtin_control, scene_colors, synthetic_dataset, synthetic_scene

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures" / "dataset"


class TestImageBuffer(unittest.TestCase):

    def test_grayscale_array_gets_channel_axis(self):
        img = ImageBuffer(np.zeros((4, 6), dtype=np.uint8))
        self.assertEqual(img.shape, (6, 4, 1))

    def test_rejects_bad_channel_count(self):
        with self.assertRaises(ValueError):
            ImageBuffer(np.zeros((2, 2, 4), dtype=np.uint8))

    def test_rejects_out_of_range_samples(self):
        with self.assertRaises(ValueError):
            ImageBuffer(np.full((2, 2, 3), 300))

    def test_pixels_are_read_only(self):
        img = ImageBuffer.filled(2, 2, (1, 2, 3))
        with self.assertRaises(ValueError):
            img.pixels[0, 0, 0] = 9

    def test_from_samples_size_check(self):
        with self.assertRaises(ValueError):
            ImageBuffer.from_samples(2, 2, 3, b"\x00" * 11)


class TestPixmapCodec(unittest.TestCase):

    def test_canonical_header(self):
        img = ImageBuffer.filled(2, 1, (10, 20, 30))
        self.assertEqual(write_ppm(img), b"P6\n2 1\n255\n" + bytes([10, 20, 30, 10, 20, 30]))
        gray = ImageBuffer.filled(3, 1, 7)
        self.assertEqual(write_ppm(gray), b"P5\n3 1\n255\n\x07\x07\x07")

    def test_header_comments_and_whitespace(self):
        data = b"P5 # a comment\n 2\t1 # more\n255\n\x01\x02"
        img = read_ppm(data)
        self.assertEqual(img.shape, (2, 1, 1))
        self.assertEqual(img.samples, b"\x01\x02")

    def test_bit_exact_reencode(self):
        for path in sorted(FIXTURES.glob("*.ppm")):
            data = path.read_bytes()
            self.assertEqual(write_ppm(read_ppm(data)), data)

    def test_parse_errors_carry_offset(self):
        with self.assertRaises(PixmapParseError) as ctx:
            read_ppm(b"P3\n1 1\n255\n")
        self.assertEqual(ctx.exception.offset, 0)

        with self.assertRaises(PixmapParseError) as ctx:
            read_ppm(b"P6\n1 1\n65535\n\x00")
        self.assertEqual(ctx.exception.offset, 7)

        with self.assertRaises(PixmapParseError) as ctx:
            read_ppm(b"P6\n2 2\n255\n\x00\x00\x00")
        self.assertEqual(ctx.exception.offset, 14)

    def test_missing_dimension(self):
        with self.assertRaises(PixmapParseError):
            read_ppm(b"P6\n \n")

    def test_file_round_trip_and_unsupported_suffix(self):
        with tempfile.TemporaryDirectory() as tmp:
            img = synthetic_scene(3, 16, 12)
            path = save_image(img, Path(tmp) / "nested" / "x.ppm")
            self.assertEqual(load_image(path), img)
            with self.assertRaises(UnsupportedImageError):
                load_image(Path(tmp) / "x.jpg")
            with self.assertRaises(FileNotFoundError):
                load_image(Path(tmp) / "missing.ppm")


class TestTransforms(unittest.TestCase):

    def test_gray_of_pure_red(self):
        img = ImageBuffer.filled(1, 1, (255, 0, 0))
        self.assertEqual(to_gray(img).samples, bytes([76]))

    def test_gray_identity_on_single_channel(self):
        img = ImageBuffer.filled(2, 2, 42)
        self.assertIs(to_gray(img), img)

    def test_resize_upsample_row(self):
        img = ImageBuffer(np.array([[0, 255]], dtype=np.uint8))
        out = resize_bilinear(img, 4, 1)
        self.assertEqual(list(out.samples), [0, 64, 191, 255])

    def test_resize_identity(self):
        img = synthetic_scene(0, 8, 8)
        self.assertIs(resize_bilinear(img, 8, 8), img)

    def test_resize_constant_stays_constant(self):
        img = ImageBuffer.filled(5, 7, (9, 99, 199))
        out = resize_bilinear(img, 13, 3)
        self.assertEqual(out, ImageBuffer.filled(13, 3, (9, 99, 199)))

    def test_resize_rejects_empty_target(self):
        with self.assertRaises(ValueError):
            resize_bilinear(ImageBuffer.filled(2, 2, 0), 0, 2)


class TestSynthetic(unittest.TestCase):

    def test_scenes_are_deterministic(self):
        self.assertEqual(synthetic_scene(5), synthetic_scene(5))
        self.assertEqual(scene_colors(5), scene_colors(5))

    def test_scenes_vary(self):
        distinct = {synthetic_scene(i, 16, 16) for i in range(10)}
        self.assertGreater(len(distinct), 5)

    def test_builtin_control_shape(self):
        ctrl = builtin_control()
        self.assertEqual(ctrl.shape, (128, 128, 3))
        self.assertEqual(tuple(ctrl.pixels[0, 0]), (0, 0, 64))

    def test_dataset_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = synthetic_dataset(3, tmp, size=16)
            self.assertEqual([p.name for p in paths], ["scene_000.ppm", "scene_001.ppm", "scene_002.ppm"])
            self.assertEqual(load_image(paths[1]), synthetic_scene(1, 16, 16))


if __name__ == "__main__":
    unittest.main()
