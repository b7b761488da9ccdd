"""Provider interfaces for captioning, generation and embedding, plus the shared error taxonomy."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

from pydantic import BaseModel, Field

from channel.text_channel import TextMessage

if TYPE_CHECKING:
    from analysis.metrics import Embedding
    from imaging.imagecore import ImageBuffer

MIN_GENERATION_SIZE = 16


class BackendError(RuntimeError):
    """A provider call failed; carries the provider identity and endpoint."""

    kind = "backend"

    def __init__(self, message: str, *, provider: str, endpoint: str | None = None):
        where = f"{provider} @ {endpoint}" if endpoint else provider
        super().__init__(f"[{where}] {message}")
        self.provider = provider
        self.endpoint = endpoint


class BackendUnreachableError(BackendError):
    kind = "unreachable"


class BackendTimeoutError(BackendError):
    kind = "timeout"


class BackendHTTPError(BackendError):
    kind = "http"

    def __init__(self, message: str, *, provider: str, endpoint: str | None = None,
                 status: int, server_error: str | None = None):
        super().__init__(message, provider=provider, endpoint=endpoint)
        self.status = status
        self.server_error = server_error


class BackendProtocolError(BackendError):
    kind = "protocol"


class BackendEndpoint(BaseModel):
    """Where a model server lives and how hard to push it."""
    model_config = {"extra": "forbid"}
    base_url: str = Field(description="Server root, e.g. http://127.0.0.1:8000")
    timeout: float = Field(60.0, gt=0, description="Per-request timeout in seconds")
    max_parallel: int = Field(1, ge=1, description="Max in-flight requests to this server")
    auth_token: str | None = Field(None, description="Optional bearer token")
    retries: int = Field(2, ge=0, description="Extra attempts after a transport failure")


@dataclass(frozen=True)
class GenerationRequest:
    prompt: TextMessage
    seed: int
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.width < MIN_GENERATION_SIZE or self.height < MIN_GENERATION_SIZE:
            raise ValueError(
                f"generation size must be at least {MIN_GENERATION_SIZE}x{MIN_GENERATION_SIZE}, "
                f"got {self.width}x{self.height}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")


class _Provider(ABC):

    @property
    @abstractmethod
    def provider_name(self) -> str:
        """Identity recorded in manifests and error messages."""
        pass

    @property
    def max_parallel(self) -> int | None:
        """In-flight bound; None means unrestricted."""
        return None


class BaseCaptioner(_Provider):
    """Image-to-text provider."""

    @abstractmethod
    def caption(self, img: ImageBuffer) -> TextMessage:
        """Return a sanitized caption for the image."""
        pass


class BaseGenerator(_Provider):
    """Text-to-image provider."""

    @abstractmethod
    def generate(self, req: GenerationRequest) -> ImageBuffer:
        """Render an image for the prompt; deterministic for a fixed (prompt, seed)."""
        pass


class BaseEmbedder(_Provider):
    """Image embedding provider used by CLIPScore."""

    @abstractmethod
    def embed(self, img: ImageBuffer) -> Embedding:
        """Return a fixed-length embedding vector."""
        pass


class BackendSet(BaseModel):
    """Per-role backends; each role is either "mock" or its own server."""
    model_config = {"extra": "forbid"}
    captioner: Literal["mock"] | BackendEndpoint = "mock"
    generator: Literal["mock"] | BackendEndpoint = "mock"
    embedder: Literal["mock"] | BackendEndpoint = "mock"
