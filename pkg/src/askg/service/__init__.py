"""Operational shell: configuration, query service, HTTP API, CLI, reports."""

from .config import Config, load_config
from .pipeline import QueryService, build_graph, build_staging_batch

__all__ = ["Config", "load_config", "QueryService", "build_graph", "build_staging_batch"]
