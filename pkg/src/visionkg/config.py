"""Project configuration, optionally read from the file named by ``VISIONKG_CONFIG``."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .sparql import DEFAULT_ROW_CAP
from .taxonomy import DEFAULT_ALIGNMENT, DEFAULT_TAXONOMY

ENV_VAR = "VISIONKG_CONFIG"

_ALIASES = {
    "storePath": "store_path",
    "alignmentPath": "alignment_path",
    "taxonomyPath": "taxonomy_path",
    "strictMode": "strict",
    "strict_mode": "strict",
    "rowCap": "row_cap",
    "endpointBind": "bind",
    "endpoint_bind": "bind",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectConfig:
    store_path: Path = Path("visionkg.nt")
    alignment_path: Path = DEFAULT_ALIGNMENT
    taxonomy_path: Path = DEFAULT_TAXONOMY
    strict: bool = True
    row_cap: int = DEFAULT_ROW_CAP
    bind: str = "127.0.0.1:8080"

    def __post_init__(self):
        for name in ("store_path", "alignment_path", "taxonomy_path"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        if not isinstance(self.row_cap, int) or self.row_cap <= 0:
            raise ConfigError(f"row_cap must be a positive integer, got {self.row_cap!r}")

    def with_overrides(self, **overrides) -> "ProjectConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @property
    def host_port(self) -> tuple[str, int]:
        return parse_bind(self.bind)


def parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"bind address must look like host:port, got {bind!r}")
    return host or "127.0.0.1", int(port)


def load_config(path=None) -> ProjectConfig:
    """Read a JSON config file; relative paths resolve against the file's directory."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return ProjectConfig()
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {f.name for f in fields(ProjectConfig)}
    values = {}
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"{path}: unknown config field {key!r}")
        if name.endswith("_path"):
            value = path.parent / value
        values[name] = value
    return ProjectConfig(**values)
