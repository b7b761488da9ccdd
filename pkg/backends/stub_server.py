"""
Local stand-in for a model server.

Serves /caption, /generate and /embed over the JSON protocol using the mock
providers, bound to 127.0.0.1. Used by protocol tests and by
`aquasem stub-server` for live-mode dry runs. Supports a fixed caption,
bearer auth, artificial latency and failure injection.
"""
from __future__ import annotations

import atexit
import threading
import time
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import orjson
from pydantic import BaseModel, ValidationError

from channel.text_channel import sanitize

from .base_provider import GenerationRequest
from .http_provider import decode_image, encode_image
from .mock_provider import MockCaptioner, MockEmbedder, MockGenerator
from .schemas import (
    CaptionRequest,
    CaptionResponse,
    EmbedRequest,
    EmbedResponse,
    ErrorResponse,
    GenerateRequest,
    GenerateResponse,
)

_ROUTES: dict[str, type[BaseModel]] = {
    "/caption": CaptionRequest,
    "/generate": GenerateRequest,
    "/embed": EmbedRequest,
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "AquasemStub/1.0"
    protocol_version = "HTTP/1.1"

    def handle(self):  # noqa: N802
        try:
            super().handle()
        except (ConnectionResetError, BrokenPipeError):
            return

    def do_POST(self):  # noqa: N802
        stub: StubModelServer = self.server.stub  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length) if length > 0 else b""
        stub._record(self.path, body)

        if stub._should_drop():
            self.close_connection = True
            return
        if stub.delay:
            time.sleep(stub.delay)
        if stub.token and self.headers.get("Authorization", "").strip() != f"Bearer {stub.token}":
            self._error(HTTPStatus.UNAUTHORIZED, "unauthorized")
            return
        model = _ROUTES.get(self.path)
        if model is None:
            self._error(HTTPStatus.NOT_FOUND, f"no such endpoint: {self.path}")
            return
        if stub.fail_status:
            self._error(stub.fail_status, stub.fail_message)
            return
        if stub.malformed:
            self._send_raw(HTTPStatus.OK, b"this is not json")
            return

        try:
            request = model.model_validate(orjson.loads(body))
        except orjson.JSONDecodeError:
            self._error(HTTPStatus.BAD_REQUEST, "request body is not JSON")
            return
        except ValidationError as exc:
            self._error(HTTPStatus.UNPROCESSABLE_ENTITY, exc.errors()[0]["msg"])
            return

        try:
            response = stub.answer(request)
        except ValueError as exc:
            self._error(HTTPStatus.BAD_REQUEST, str(exc))
            return
        self._send(HTTPStatus.OK, response.model_dump())

    def _send(self, status: int, payload: dict):
        self._send_raw(status, orjson.dumps(payload))

    def _error(self, status: int, message: str):
        self._send(status, ErrorResponse(error=message).model_dump())

    def _send_raw(self, status: int, data: bytes):
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):  # silence
        return


class StubModelServer:
    """Threaded mock model server on 127.0.0.1; port 0 picks an ephemeral port."""

    def __init__(self, port: int = 0, caption: str | None = None, token: str | None = None,
                 delay: float = 0.0, fail_status: int | None = None, fail_message: str = "injected failure",
                 malformed: bool = False, drop_first: int = 0):
        self.port = port
        self.caption = caption
        self.token = token
        self.delay = delay
        self.fail_status = fail_status
        self.fail_message = fail_message
        self.malformed = malformed
        self.drop_first = drop_first
        self.requests: list[tuple[str, bytes]] = []
        self._captioner = MockCaptioner()
        self._generator = MockGenerator()
        self._embedder = MockEmbedder()
        self._lock = threading.Lock()
        self.httpd: ThreadingHTTPServer | None = None
        self.thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def answer(self, request: BaseModel) -> BaseModel:
        if isinstance(request, CaptionRequest):
            if self.caption is not None:
                return CaptionResponse(text=self.caption)
            return CaptionResponse(text=self._captioner.caption(decode_image(request.image_ppm_b64)).content)
        if isinstance(request, GenerateRequest):
            prompt = sanitize(request.prompt)
            img = self._generator.generate(GenerationRequest(prompt, request.seed, request.width, request.height))
            return GenerateResponse(image_ppm_b64=encode_image(img))
        if isinstance(request, EmbedRequest):
            vec = self._embedder.embed(decode_image(request.image_ppm_b64))
            return EmbedResponse(vector=vec.values.tolist())
        raise ValueError(f"unsupported request {type(request).__name__}")

    def _record(self, path: str, body: bytes):
        with self._lock:
            self.requests.append((path, body))

    def _should_drop(self) -> bool:
        with self._lock:
            if self.drop_first > 0:
                self.drop_first -= 1
                return True
            return False

    def bind(self) -> StubModelServer:
        """Open the listening socket; resolves an ephemeral port."""
        if self.httpd is None:
            self.httpd = ThreadingHTTPServer(("127.0.0.1", self.port), _Handler)
            self.httpd.stub = self  # type: ignore[attr-defined]
            self.port = self.httpd.server_address[1]
        return self

    def start(self) -> StubModelServer:
        self.bind()
        self.thread = threading.Thread(target=self.httpd.serve_forever, name="aquasem-stub", daemon=True)
        self.thread.start()
        atexit.register(self.stop)
        return self

    def serve_forever(self):
        """Blocking variant for the CLI."""
        self.bind()
        try:
            self.httpd.serve_forever()
        finally:
            self.httpd.server_close()
            self.httpd = None

    def stop(self):
        if self.httpd:
            try:
                self.httpd.shutdown()
            finally:
                self.httpd.server_close()
                self.httpd = None

    def __enter__(self) -> StubModelServer:
        return self.start()

    def __exit__(self, *exc):
        self.stop()
