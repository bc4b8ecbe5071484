from __future__ import annotations

import hashlib
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import msgspec

from .errors import ConfigError
from .records.builder import ConfigBuilder, payload_from_config
from .records.models import ConfigPayload, RunConfig

DIGEST_LENGTH = 16


class ConfigLoader:
    """Read TOML run configurations into validated RunConfig objects."""

    def __init__(self, *, builder: ConfigBuilder | None = None) -> None:
        self._builder = builder or ConfigBuilder()

    @property
    def builder(self) -> ConfigBuilder:
        return self._builder

    def loads(self, text: str | bytes) -> RunConfig:
        try:
            payload = msgspec.toml.decode(text, type=ConfigPayload)
        except msgspec.ValidationError as exc:
            raise ConfigError(f"Invalid configuration: {exc}") from exc
        except msgspec.DecodeError as exc:
            raise ConfigError(f"Malformed TOML: {exc}") from exc
        return self._builder.build(payload)

    def load(self, path: str | Path | None = None) -> RunConfig:
        if path is None:
            return self._builder.build(ConfigPayload())
        target = Path(path)
        if not target.is_file():
            raise ConfigError(f"Config file '{target}' does not exist")
        return self.loads(target.read_bytes())


DEFAULT_LOADER = ConfigLoader()


def load_config(path: str | Path | None = None, *, loader: ConfigLoader | None = None) -> RunConfig:
    """Validated RunConfig from ``path``; all defaults when ``path`` is None."""
    return (loader or DEFAULT_LOADER).load(path)


def loads_config(text: str | bytes) -> RunConfig:
    return DEFAULT_LOADER.loads(text)


def dumps_config(config: RunConfig) -> str:
    return msgspec.toml.encode(payload_from_config(config)).decode("utf-8")


def dump_config(config: RunConfig, path: str | Path) -> Path:
    """Write ``config`` as TOML that reloads to an identical RunConfig."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps_config(config), encoding="utf-8")
    return target


def config_digest(config: RunConfig) -> str:
    encoded = msgspec.json.encode(payload_from_config(config))
    return hashlib.sha256(encoded).hexdigest()[:DIGEST_LENGTH]


def run_metadata(config: RunConfig, *, command: str, seed: int | None = None, **extra: Any) -> Mapping[str, Any]:
    """Header lines embedded in every output file."""
    system = config.system
    metadata: dict[str, Any] = {
        "command": command,
        "config_digest": config_digest(config),
        "seed": config.run.seed if seed is None else seed,
        "symbol_rate": system.symbol_rate,
        "sigma2_w": system.link.sigma2,
        "distance_mode": "geometric" if system.channel.geometric_distance else "literal",
    }
    metadata.update(extra)
    return metadata


__all__ = [
    "ConfigLoader",
    "DEFAULT_LOADER",
    "load_config",
    "loads_config",
    "dump_config",
    "dumps_config",
    "config_digest",
    "run_metadata",
]
