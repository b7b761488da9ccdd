"""Builds the captioner/generator/embedder trio from a backends setting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

from rich.console import Console

from .base_provider import BackendEndpoint, BackendSet, BaseCaptioner, BaseEmbedder, BaseGenerator
from .call_tracker import CallTracker
from .http_provider import HttpCaptioner, HttpEmbedder, HttpGenerator, env_verbose
from .mock_provider import MockCaptioner, MockEmbedder, MockGenerator

if TYPE_CHECKING:
    from analysis.debug_logger import DebugLogger

BackendsSetting = Literal["mock"] | BackendEndpoint | BackendSet

console = Console()


@dataclass
class ProviderSet:
    captioner: BaseCaptioner
    generator: BaseGenerator
    embedder: BaseEmbedder

    def identities(self) -> dict[str, str]:
        """Per-stage provider identity, as recorded in manifests."""
        return {
            "captioner": self.captioner.provider_name,
            "generator": self.generator.provider_name,
            "embedder": self.embedder.provider_name,
        }

    @property
    def max_parallel(self) -> int | None:
        """Tightest in-flight bound across the three providers (None when all are unrestricted)."""
        bounds = [p.max_parallel for p in (self.captioner, self.generator, self.embedder) if p.max_parallel]
        return min(bounds) if bounds else None

    @property
    def is_offline(self) -> bool:
        return all(p.provider_name == "mock" for p in (self.captioner, self.generator, self.embedder))

    def close(self):
        for p in (self.captioner, self.generator, self.embedder):
            close = getattr(p, "close", None)
            if close:
                close()


def endpoint_from_url(value: str | None, token: str | None = None, **overrides) -> Literal["mock"] | BackendEndpoint:
    """Interpret a `--backends`/`--embedder` style value: "mock" (or empty) or a server URL."""
    if not value or value.strip().lower() == "mock":
        return "mock"
    return BackendEndpoint(base_url=value.strip(), auth_token=token, **overrides)


def _as_set(setting: BackendsSetting) -> BackendSet:
    if isinstance(setting, BackendSet):
        return setting
    if setting == "mock":
        return BackendSet()
    if isinstance(setting, BackendEndpoint):
        return BackendSet(captioner=setting, generator=setting, embedder=setting)
    raise ValueError(f"Unknown backends setting: {setting!r}")


def build_providers(setting: BackendsSetting, *, verbose: bool | None = None,
                    debug_logger: DebugLogger | None = None,
                    tracker: CallTracker | None = None) -> ProviderSet:
    """
    Create one provider per role.

    A single BackendEndpoint means one server hosts all three paths; a
    BackendSet picks per role. Mock roles never touch the network.
    """
    backends = _as_set(setting)
    verbose = env_verbose() if verbose is None else verbose
    http_kwargs = {"verbose": verbose, "debug_logger": debug_logger, "tracker": tracker}

    captioner = MockCaptioner() if backends.captioner == "mock" else HttpCaptioner(backends.captioner, **http_kwargs)
    generator = MockGenerator() if backends.generator == "mock" else HttpGenerator(backends.generator, **http_kwargs)
    embedder = MockEmbedder() if backends.embedder == "mock" else HttpEmbedder(backends.embedder, **http_kwargs)

    providers = ProviderSet(captioner=captioner, generator=generator, embedder=embedder)
    if verbose:
        for role, name in providers.identities().items():
            console.print(f"[*] {role}: {name}")
    return providers


def build_embedder(value: str | None, token: str | None = None, **kwargs) -> BaseEmbedder:
    """Embedder alone, for the `metrics` command."""
    endpoint = endpoint_from_url(value, token)
    if endpoint == "mock":
        return MockEmbedder()
    return HttpEmbedder(endpoint, **kwargs)
