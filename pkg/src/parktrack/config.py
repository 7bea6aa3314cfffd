"""Flat JSON run configuration.

Precedence is command-line flag > config file > built-in default, and the
``PARKTRACK_DATA_DIR`` environment variable overrides ``data_dir`` from
the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import InvalidParameterError

DATA_DIR_ENV = "PARKTRACK_DATA_DIR"


@dataclass(frozen=True)
class Config:
    perimeter_m: float = 110.0
    debounce_s: float = 26.4
    match_threshold: float = 0.80
    embedding_dim: int = 512
    session_timeout_s: float = 300.0
    data_dir: str = "parktrack-data"

    def __post_init__(self):
        for f in fields(self):
            if f.name == "data_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise InvalidParameterError(f"config.{f.name} must be positive, got {value!r}")
        if isinstance(self.embedding_dim, float):
            if not self.embedding_dim.is_integer():
                raise InvalidParameterError("config.embedding_dim must be an integer")
            object.__setattr__(self, "embedding_dim", int(self.embedding_dim))
        if self.match_threshold > 1:
            raise InvalidParameterError("config.match_threshold must be <= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, **overrides) -> "Config":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path=None, env=None) -> Config:
    env = os.environ if env is None else env
    cfg = Config()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"config: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InvalidParameterError("config: expected a JSON object")
        cfg = Config.from_dict(data)
    if env.get(DATA_DIR_ENV):
        cfg = replace(cfg, data_dir=env[DATA_DIR_ENV])
    return cfg


def save_config(cfg: Config, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
