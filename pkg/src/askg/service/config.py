"""Service configuration.

Sources, in increasing precedence: built-in defaults, the JSON config
file, then ASKG_* environment variables. The provider chain always ends
with the deterministic stub so the service can answer offline.

Keys (config file / environment variable):

* snapshot (ASKG_SNAPSHOT): graph snapshot path
* host, port (ASKG_HOST, ASKG_PORT): HTTP bind address
* providers: list of {kind, endpoint, model, timeout}; kinds
  remote_primary / remote_fallback / deterministic_stub
* cache_ttl, cache_capacity, semantic_threshold
  (ASKG_CACHE_TTL, ASKG_CACHE_CAPACITY, ASKG_SEMANTIC_THRESHOLD)
* resolution_threshold (ASKG_RESOLUTION_THRESHOLD)
* default_page_size, max_page_size (ASKG_DEFAULT_PAGE_SIZE, ASKG_MAX_PAGE_SIZE)
* hop_ceiling (ASKG_HOP_CEILING)
* sessions_dir (ASKG_SESSIONS_DIR): CLI conversation state
* query_log (ASKG_QUERY_LOG): JSON-lines query log path, optional
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ProviderSpec:
    kind: str  # remote_primary | remote_fallback | deterministic_stub
    endpoint: str = ""
    model: str = ""
    timeout: float = 10.0


@dataclass
class Config:
    snapshot: str | None = None
    host: str = "127.0.0.1"
    port: int = 8080
    providers: list[ProviderSpec] = field(default_factory=list)
    cache_ttl: float = 300.0
    cache_capacity: int = 1024
    semantic_threshold: float = 0.95
    resolution_threshold: float = 0.8
    default_page_size: int = 100
    max_page_size: int = 1000
    hop_ceiling: int = 5
    sessions_dir: str = ".askg-sessions"
    query_log: str | None = None

    def __post_init__(self):
        if not 0 < self.resolution_threshold <= 1:
            raise ConfigError("resolution_threshold must be in (0, 1]")
        if not 0 < self.semantic_threshold <= 1:
            raise ConfigError("semantic_threshold must be in (0, 1]")
        if self.cache_ttl <= 0:
            raise ConfigError("cache_ttl must be positive")
        if self.cache_capacity < 1:
            raise ConfigError("cache_capacity must be positive")
        if not 1 <= self.default_page_size <= self.max_page_size:
            raise ConfigError("need 1 <= default_page_size <= max_page_size")
        if self.hop_ceiling < 1:
            raise ConfigError("hop_ceiling must be positive")
        if not self.providers or self.providers[-1].kind != "deterministic_stub":
            self.providers = list(self.providers) + [ProviderSpec(kind="deterministic_stub")]


_ENV_KEYS = {
    "ASKG_SNAPSHOT": ("snapshot", str),
    "ASKG_HOST": ("host", str),
    "ASKG_PORT": ("port", int),
    "ASKG_CACHE_TTL": ("cache_ttl", float),
    "ASKG_CACHE_CAPACITY": ("cache_capacity", int),
    "ASKG_SEMANTIC_THRESHOLD": ("semantic_threshold", float),
    "ASKG_RESOLUTION_THRESHOLD": ("resolution_threshold", float),
    "ASKG_DEFAULT_PAGE_SIZE": ("default_page_size", int),
    "ASKG_MAX_PAGE_SIZE": ("max_page_size", int),
    "ASKG_HOP_CEILING": ("hop_ceiling", int),
    "ASKG_SESSIONS_DIR": ("sessions_dir", str),
    "ASKG_QUERY_LOG": ("query_log", str),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> Config:
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text("utf-8"))
        providers = [ProviderSpec(**spec) for spec in raw.pop("providers", [])]
        unknown = set(raw) - set(Config.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
        if providers:
            values["providers"] = providers
    for env_key, (attr, cast) in _ENV_KEYS.items():
        if env_key in env:
            try:
                values[attr] = cast(env[env_key])
            except ValueError as exc:
                raise ConfigError(f"bad {env_key}: {exc}") from None
    return Config(**values)
