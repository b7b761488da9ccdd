"""
Configuration loading and precedence.

Flags override the config file, the config file overrides environment
variables, and defaults come last.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict

from analysis.experiment import SweepConfig
from backends.base_provider import BackendEndpoint

_TRUE = {"1", "true", "yes", "on"}


class AquasemSettings(BaseSettings):
    """Environment overrides (AQUASEM_*)."""
    model_config = SettingsConfigDict(env_prefix="AQUASEM_", extra="ignore")

    backend_url: str | None = None
    token: str | None = None
    verbose: bool = False
    config: Path | None = None
    debug_dir: Path | None = None
    jobs: int | None = None


def _read(path: Path) -> dict[str, Any]:
    # JSON is a subset of YAML, so one parser covers both formats.
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping, got {type(data).__name__}")
    return data


def load_config(config_path: Path | None = None) -> dict[str, Any]:
    """
    Load a YAML or JSON config file.

    Priority order:
    1. Explicitly provided config_path (must exist)
    2. AQUASEM_CONFIG environment variable
    3. aquasem.yaml, then aquasem.json, in the current directory
    4. Empty dict
    """
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return _read(path)

    env_path = os.environ.get("AQUASEM_CONFIG")
    if env_path and Path(env_path).exists():
        return _read(Path(env_path))

    for name in ("aquasem.yaml", "aquasem.json"):
        candidate = Path.cwd() / name
        if candidate.exists():
            return _read(candidate)

    return {}


def verbose_enabled(file_data: dict[str, Any] | None = None, settings: AquasemSettings | None = None) -> bool:
    logging_cfg = (file_data or {}).get("logging", {}) or {}
    if bool(logging_cfg.get("verbose", False)):
        return True
    if settings is not None:
        return settings.verbose
    return os.environ.get("AQUASEM_VERBOSE", "").lower() in _TRUE


def resolve_sweep_config(file_data: dict[str, Any] | None, flags: dict[str, Any] | None = None,
                         settings: AquasemSettings | None = None) -> SweepConfig:
    """Merge env, file and flags (later wins) and validate into a SweepConfig.

    `None` flag values mean "not given". The file's `logging` section is not
    part of the sweep config and is ignored here.
    """
    settings = settings or AquasemSettings()
    merged: dict[str, Any] = {}

    env_endpoint = endpoint_from_env(settings)
    if env_endpoint is not None:
        merged["backends"] = env_endpoint.model_dump()
    if settings.jobs:
        merged["jobs"] = settings.jobs

    file_part = {k: v for k, v in (file_data or {}).items() if k != "logging"}
    merged.update(file_part)

    merged.update({k: v for k, v in (flags or {}).items() if v is not None})

    backends = merged.get("backends")
    if isinstance(backends, dict) and "base_url" in backends and not backends.get("auth_token") and settings.token:
        merged["backends"] = {**backends, "auth_token": settings.token}

    return SweepConfig.model_validate(merged)


def endpoint_from_env(settings: AquasemSettings | None = None) -> BackendEndpoint | None:
    settings = settings or AquasemSettings()
    if not settings.backend_url:
        return None
    return BackendEndpoint(base_url=settings.backend_url, auth_token=settings.token)
