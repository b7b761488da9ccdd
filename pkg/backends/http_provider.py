"""HTTP clients for model servers speaking the JSON caption/generate/embed protocol."""
from __future__ import annotations

import base64
import binascii
import os
import sys
import time
from threading import BoundedSemaphore
from typing import TYPE_CHECKING, Any

import httpx
import numpy as np
import orjson
from pydantic import BaseModel, ValidationError
from rich.console import Console

from analysis.metrics import Embedding
from channel.text_channel import TextMessage, sanitize
from imaging.imagecore import ImageBuffer, PixmapParseError, read_ppm, write_ppm

from .base_provider import (
    BackendEndpoint,
    BackendHTTPError,
    BackendProtocolError,
    BackendTimeoutError,
    BackendUnreachableError,
    BaseCaptioner,
    BaseEmbedder,
    BaseGenerator,
    GenerationRequest,
)
from .call_tracker import CallTracker, get_call_tracker
from .schemas import (
    CaptionRequest,
    CaptionResponse,
    EmbedRequest,
    EmbedResponse,
    GenerateRequest,
    GenerateResponse,
)

if TYPE_CHECKING:
    from analysis.debug_logger import DebugLogger

_stderr = Console(file=sys.stderr)

BACKOFF_BASE_SECONDS = 0.1
BACKOFF_MAX_SECONDS = 2.0


def env_verbose() -> bool:
    return os.environ.get("AQUASEM_VERBOSE", "").lower() in {"1", "true", "yes", "on"}


def encode_image(img: ImageBuffer) -> str:
    return base64.b64encode(write_ppm(img)).decode("ascii")


def decode_image(data: str) -> ImageBuffer:
    return read_ppm(base64.b64decode(data, validate=True))


def _redact(body: dict[str, Any]) -> dict[str, Any]:
    """Replace base64 image payloads with their size for logs."""
    out = {}
    for key, value in body.items():
        if key == "image_ppm_b64" and isinstance(value, str):
            out[key] = f"<{len(value)} base64 chars>"
        elif key == "vector" and isinstance(value, list):
            out[key] = f"<{len(value)} floats>"
        else:
            out[key] = value
    return out


class _HttpProvider:
    """Shared request machinery: bounded in-flight pool, retries, error mapping."""

    role = "model"

    def __init__(self, endpoint: BackendEndpoint, *, verbose: bool | None = None,
                 debug_logger: DebugLogger | None = None, tracker: CallTracker | None = None):
        self.endpoint = endpoint
        self.verbose = env_verbose() if verbose is None else verbose
        self.debug_logger = debug_logger
        self.tracker = tracker or get_call_tracker()
        headers = {"Content-Type": "application/json"}
        if endpoint.auth_token:
            headers["Authorization"] = f"Bearer {endpoint.auth_token}"
        self._client = httpx.Client(
            base_url=endpoint.base_url.rstrip("/"),
            timeout=endpoint.timeout,
            headers=headers,
        )
        self._slots = BoundedSemaphore(endpoint.max_parallel)

    @property
    def provider_name(self) -> str:
        return f"http:{self.endpoint.base_url}"

    @property
    def max_parallel(self) -> int | None:
        return self.endpoint.max_parallel

    def close(self):
        self._client.close()

    def _post(self, path: str, request: BaseModel, response_model: type[BaseModel]) -> BaseModel:
        body = request.model_dump()
        payload = orjson.dumps(body)
        url = f"{self.endpoint.base_url.rstrip('/')}{path}"
        attempts = self.endpoint.retries + 1
        start = time.monotonic()
        if self.verbose:
            _stderr.print(f"[dim][{self.role}] POST {url} ({len(payload):,} bytes)[/dim]")

        for attempt in range(1, attempts + 1):
            attempt_start = time.monotonic()
            try:
                with self._slots:
                    resp = self._client.post(path, content=payload)
            except httpx.TransportError as exc:
                err = self._transport_error(exc, url)
                self._log(path, body, None, attempt_start, str(err), attempt)
                if attempt < attempts:
                    if self.verbose:
                        _stderr.print(f"[yellow][{self.role}] attempt {attempt}/{attempts} failed: {exc}[/yellow]")
                    time.sleep(min(BACKOFF_MAX_SECONDS, BACKOFF_BASE_SECONDS * 2 ** (attempt - 1)))
                    continue
                self._track(start, False, attempt, err.kind)
                raise err from exc

            try:
                result = self._parse_response(resp, response_model, url)
            except (BackendHTTPError, BackendProtocolError) as err:
                self._log(path, body, resp.text[:500], attempt_start, str(err), attempt)
                self._track(start, False, attempt, err.kind)
                raise
            self._log(path, body, _redact(result.model_dump()), attempt_start, None, attempt)
            self._track(start, True, attempt, None)
            return result

        raise AssertionError("unreachable")

    def _transport_error(self, exc: httpx.TransportError, url: str):
        if isinstance(exc, httpx.TimeoutException):
            return BackendTimeoutError(
                f"request timed out after {self.endpoint.timeout}s", provider=self.role, endpoint=url
            )
        return BackendUnreachableError(f"cannot reach server: {exc}", provider=self.role, endpoint=url)

    def _parse_response(self, resp: httpx.Response, response_model: type[BaseModel], url: str) -> BaseModel:
        if resp.status_code != 200:
            server_error = None
            try:
                data = orjson.loads(resp.content)
                if isinstance(data, dict) and isinstance(data.get("error"), str):
                    server_error = data["error"]
            except orjson.JSONDecodeError:
                pass
            detail = server_error or resp.reason_phrase
            raise BackendHTTPError(
                f"HTTP {resp.status_code}: {detail}",
                provider=self.role, endpoint=url, status=resp.status_code, server_error=server_error,
            )
        try:
            return response_model.model_validate(orjson.loads(resp.content))
        except orjson.JSONDecodeError as exc:
            raise BackendProtocolError(f"response is not JSON: {exc}", provider=self.role, endpoint=url) from exc
        except ValidationError as exc:
            raise BackendProtocolError(
                f"unexpected response shape: {exc.errors()[0]['msg']}", provider=self.role, endpoint=url
            ) from exc

    def _protocol_error(self, message: str, path: str) -> BackendProtocolError:
        return BackendProtocolError(message, provider=self.role, endpoint=f"{self.endpoint.base_url.rstrip('/')}{path}")

    def _log(self, path: str, body: dict, response: Any, started: float, error: str | None, attempt: int):
        if self.debug_logger is None:
            return
        self.debug_logger.log_interaction(
            role=self.role,
            endpoint=f"{self.endpoint.base_url.rstrip('/')}{path}",
            request=_redact(body),
            response=response,
            duration=time.monotonic() - started,
            error=error,
            attempt=attempt,
        )

    def _track(self, started: float, ok: bool, attempts: int, error_kind: str | None):
        self.tracker.track_call(
            provider=self.provider_name,
            role=self.role,
            duration_s=time.monotonic() - started,
            ok=ok,
            attempts=attempts,
            error_kind=error_kind,
        )


class HttpCaptioner(_HttpProvider, BaseCaptioner):
    role = "caption"

    def caption(self, img: ImageBuffer) -> TextMessage:
        resp = self._post("/caption", CaptionRequest(image_ppm_b64=encode_image(img)), CaptionResponse)
        return sanitize(resp.text)


class HttpGenerator(_HttpProvider, BaseGenerator):
    role = "generate"

    def generate(self, req: GenerationRequest) -> ImageBuffer:
        wire = GenerateRequest(prompt=req.prompt.content, seed=req.seed, width=req.width, height=req.height)
        resp = self._post("/generate", wire, GenerateResponse)
        try:
            return decode_image(resp.image_ppm_b64)
        except (binascii.Error, ValueError, PixmapParseError) as exc:
            raise self._protocol_error(f"generated image does not decode: {exc}", "/generate") from exc


class HttpEmbedder(_HttpProvider, BaseEmbedder):
    role = "embed"

    def embed(self, img: ImageBuffer) -> Embedding:
        resp = self._post("/embed", EmbedRequest(image_ppm_b64=encode_image(img)), EmbedResponse)
        vector = np.asarray(resp.vector, dtype=np.float64)
        if not np.all(np.isfinite(vector)):
            raise self._protocol_error("embedding contains non-finite values", "/embed")
        return Embedding(vector)
