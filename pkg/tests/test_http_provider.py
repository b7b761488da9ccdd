"""
Wire-protocol tests: HTTP providers against the local stub model server.
"""

import base64
import socket
import tempfile
import unittest
from pathlib import Path

import orjson

from analysis.debug_logger import DebugLogger
from backends.base_provider import (
    BackendEndpoint,
    BackendHTTPError,
    BackendProtocolError,
    BackendTimeoutError,
    BackendUnreachableError,
    GenerationRequest,
)
from backends.call_tracker import CallTracker
from backends.http_provider import HttpCaptioner, HttpEmbedder, HttpGenerator, decode_image, encode_image
from backends.mock_provider import MockEmbedder, MockGenerator
from backends.stub_server import StubModelServer
from channel.text_channel import sanitize
from imaging.imagecore import ImageBuffer, write_ppm
from imaging.synthetic import synthetic_scene


def _free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestImageTransport(unittest.TestCase):

    def test_base64_ppm(self):
        img = ImageBuffer.filled(2, 1, (1, 2, 3))
        encoded = encode_image(img)
        self.assertEqual(base64.b64decode(encoded), write_ppm(img))
        self.assertEqual(decode_image(encoded), img)


class TestHttpProviders(unittest.TestCase):

    def setUp(self):
        self.tracker = CallTracker()
        self.image = synthetic_scene(1, 16, 16)

    def _endpoint(self, server: StubModelServer, **kwargs) -> BackendEndpoint:
        return BackendEndpoint(base_url=server.url, **kwargs)

    def test_caption_golden_body_and_fixed_text(self):
        with StubModelServer(caption="a fixed\tcaption") as server:
            captioner = HttpCaptioner(self._endpoint(server), tracker=self.tracker)
            try:
                msg = captioner.caption(self.image)
            finally:
                captioner.close()
        self.assertEqual(msg.content, "a fixed caption")
        path, body = server.requests[0]
        self.assertEqual(path, "/caption")
        self.assertEqual(body, b'{"image_ppm_b64":"' + encode_image(self.image).encode() + b'"}')

    def test_generate_golden_body_matches_mock(self):
        prompt = sanitize("a red boat")
        with StubModelServer() as server:
            generator = HttpGenerator(self._endpoint(server), tracker=self.tracker)
            try:
                img = generator.generate(GenerationRequest(prompt, 7, 32, 16))
            finally:
                generator.close()
        self.assertEqual(server.requests[0][1], b'{"prompt":"a red boat","seed":7,"width":32,"height":16}')
        self.assertEqual(img, MockGenerator().generate(GenerationRequest(prompt, 7, 32, 16)))

    def test_embed_round_trips_floats(self):
        with StubModelServer() as server:
            embedder = HttpEmbedder(self._endpoint(server), tracker=self.tracker)
            try:
                vec = embedder.embed(self.image)
            finally:
                embedder.close()
        self.assertEqual(vec, MockEmbedder().embed(self.image))
        summary = self.tracker.get_summary()
        self.assertEqual(summary["total"]["call_count"], 1)
        self.assertEqual(summary["by_role"][f"http:{server.url}:embed"]["failures"], 0)

    def test_non_200_carries_server_error_and_is_not_retried(self):
        with StubModelServer(fail_status=500, fail_message="model exploded") as server:
            captioner = HttpCaptioner(self._endpoint(server, retries=2), tracker=self.tracker)
            try:
                with self.assertRaises(BackendHTTPError) as ctx:
                    captioner.caption(self.image)
            finally:
                captioner.close()
        self.assertEqual(ctx.exception.status, 500)
        self.assertEqual(ctx.exception.server_error, "model exploded")
        self.assertEqual(ctx.exception.kind, "http")
        self.assertEqual(len(server.requests), 1)

    def test_auth_token(self):
        with StubModelServer(token="s3cret") as server:
            anonymous = HttpCaptioner(self._endpoint(server), tracker=self.tracker)
            authorised = HttpCaptioner(self._endpoint(server, auth_token="s3cret"), tracker=self.tracker)
            try:
                with self.assertRaises(BackendHTTPError) as ctx:
                    anonymous.caption(self.image)
                self.assertEqual(ctx.exception.status, 401)
                self.assertTrue(authorised.caption(self.image).content.startswith("a "))
            finally:
                anonymous.close()
                authorised.close()

    def test_malformed_json_is_protocol_error(self):
        with StubModelServer(malformed=True) as server:
            embedder = HttpEmbedder(self._endpoint(server), tracker=self.tracker)
            try:
                with self.assertRaises(BackendProtocolError):
                    embedder.embed(self.image)
            finally:
                embedder.close()

    def test_dropped_connection_is_retried_with_identical_payload(self):
        prompt = sanitize("green upper left")
        with StubModelServer(drop_first=1) as server:
            generator = HttpGenerator(self._endpoint(server, retries=2), tracker=self.tracker)
            try:
                img = generator.generate(GenerationRequest(prompt, 3, 16, 16))
            finally:
                generator.close()
        self.assertEqual(img.shape, (16, 16, 3))
        self.assertEqual(len(server.requests), 2)
        self.assertEqual(server.requests[0][1], server.requests[1][1])
        self.assertEqual(self.tracker.history[-1].attempts, 2)

    def test_timeout(self):
        with StubModelServer(delay=1.0) as server:
            captioner = HttpCaptioner(self._endpoint(server, timeout=0.1, retries=0), tracker=self.tracker)
            try:
                with self.assertRaises(BackendTimeoutError) as ctx:
                    captioner.caption(self.image)
            finally:
                captioner.close()
        self.assertEqual(ctx.exception.kind, "timeout")
        self.assertIn("caption", str(ctx.exception))

    def test_unreachable(self):
        endpoint = BackendEndpoint(base_url=f"http://127.0.0.1:{_free_port()}", retries=0)
        captioner = HttpCaptioner(endpoint, tracker=self.tracker)
        try:
            with self.assertRaises(BackendUnreachableError) as ctx:
                captioner.caption(self.image)
        finally:
            captioner.close()
        self.assertEqual(ctx.exception.kind, "unreachable")
        self.assertEqual(self.tracker.get_summary()["total"]["failures"], 1)

    def test_debug_logger_records_interactions(self):
        with tempfile.TemporaryDirectory() as tmp:
            logger = DebugLogger("proto", Path(tmp))
            with StubModelServer() as server:
                embedder = HttpEmbedder(self._endpoint(server), debug_logger=logger, tracker=self.tracker)
                try:
                    embedder.embed(self.image)
                finally:
                    embedder.close()
            log_path = logger.finalize({"calls": 1})
            files = sorted((Path(tmp) / "interactions").glob("*.json"))
            self.assertEqual([f.name for f in files], ["00001_embed.json"])
            record = orjson.loads(files[0].read_bytes())
            self.assertTrue(record["request"]["image_ppm_b64"].endswith("base64 chars>"))
            self.assertIn("AQUASEM DEBUG LOG", log_path.read_text())


if __name__ == "__main__":
    unittest.main()
