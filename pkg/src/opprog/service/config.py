"""Service configuration: one file, overridable per field by environment
variables (OPPROG_*) and then by explicit keyword arguments (CLI flags)."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..evalkit import MatchConfig

ENV_PREFIX = "OPPROG_"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    dataset_path: str | None = None
    registry_path: str | None = None
    constants_path: str | None = None
    lexicon_path: str | None = None
    event_log_path: str | None = None
    abs_tol: float = 0.01
    rel_tol: float = 0.01
    trust_threshold: float = 0.8

    def gate(self) -> MatchConfig:
        return MatchConfig(abs_tol=self.abs_tol, rel_tol=self.rel_tol)


_FIELD_TYPES = {f.name: f.type for f in fields(ServiceConfig)}


def _coerce(name: str, raw: str):
    if name in ("port",):
        return int(raw)
    if name in ("abs_tol", "rel_tol", "trust_threshold"):
        return float(raw)
    return raw


def load_config(
    path: str | Path | None = None,
    env: dict[str, str] | None = None,
    **overrides,
) -> ServiceConfig:
    """Precedence: explicit overrides > environment > config file > defaults."""
    cfg = ServiceConfig()
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(doc) - set(_FIELD_TYPES)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = replace(cfg, **doc)
    env = os.environ if env is None else env
    env_updates = {}
    for name in _FIELD_TYPES:
        key = ENV_PREFIX + name.upper()
        if key in env:
            env_updates[name] = _coerce(name, env[key])
    if env_updates:
        cfg = replace(cfg, **env_updates)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg
