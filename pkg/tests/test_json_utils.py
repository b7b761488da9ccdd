"""
Tests for CLI JSON output helpers.
"""

import math
import unittest

import numpy as np
import orjson

from utils.json_utils import dumps, error_payload, json_safe


class TestJsonUtils(unittest.TestCase):
    def test_infinite_floats_become_tokens(self):
        data = {"psnr_db": math.inf, "nested": [1.0, -math.inf, {"x": math.nan}], "t": (1, 2)}
        self.assertEqual(json_safe(data), {"psnr_db": "inf", "nested": [1.0, "-inf", {"x": "nan"}], "t": [1, 2]})

    def test_dumps_compact_and_pretty(self):
        self.assertEqual(dumps({"lower": 0.0625, "upper": 0.5}), '{"lower":0.0625,"upper":0.5}')
        self.assertIn("\n  ", dumps({"a": 1}, pretty=True))

    def test_numpy_values(self):
        self.assertEqual(orjson.loads(dumps({"v": np.array([1.5, 2.0])})), {"v": [1.5, 2.0]})

    def test_error_payload(self):
        payload = orjson.loads(error_payload("usage", "ratio must be in [0, 1]", 2))
        self.assertEqual(payload, {"error": "usage", "message": "ratio must be in [0, 1]", "exit_code": 2})


if __name__ == "__main__":
    unittest.main()
