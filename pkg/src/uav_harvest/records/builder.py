from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Callable, Union

import msgspec

from ..channel import noise_power_from_density
from ..errors import ConfigError
from .models import ConfigPayload, LinkParams, RunConfig, RunOptions, SystemParams, SystemPayload

logger = logging.getLogger(__name__)

NoisePowerFn = Callable[[float, float], float]
RawConfig = Union[ConfigPayload, Mapping[str, Any]]


def _convert(raw: Any, target: type[Any], what: str) -> Any:
    try:
        return msgspec.convert(raw, target)
    except msgspec.ValidationError as exc:
        raise ConfigError(f"Invalid {what}: {exc}") from exc


@dataclass
class ConfigBuilder:
    """Turn a raw config payload into a validated, immutable RunConfig."""

    noise_power: NoisePowerFn = noise_power_from_density

    def build_system(self, payload: SystemPayload) -> SystemParams:
        link = payload.link
        if link.sigma2 is not None:
            sigma2 = link.sigma2
        else:
            bandwidth = link.noise_bandwidth_hz if link.noise_bandwidth_hz is not None else payload.symbol_rate
            sigma2 = self.noise_power(link.noise_density_dbm_per_hz, bandwidth)
            logger.debug(
                "derived sigma2=%.6g W from %.1f dBm/Hz over %.6g Hz",
                sigma2,
                link.noise_density_dbm_per_hz,
                bandwidth,
            )
        raw = msgspec.to_builtins(payload)
        raw["link"] = msgspec.to_builtins(LinkParams(sigma2=sigma2, gamma_ber=link.gamma_ber, tau=payload.tau))
        return _convert(raw, SystemParams, "system parameters")

    def build(self, raw: RawConfig) -> RunConfig:
        payload = raw if isinstance(raw, ConfigPayload) else _convert(raw, ConfigPayload, "configuration")
        return RunConfig(system=self.build_system(payload.system), run=payload.run)


_DEFAULT_BUILDER = ConfigBuilder()


def build_run_config(raw: RawConfig | None = None) -> RunConfig:
    return _DEFAULT_BUILDER.build(raw if raw is not None else ConfigPayload())


def build_system_params(raw: Mapping[str, Any] | None = None) -> SystemParams:
    """Validate a ``[system]`` mapping (file schema) into SystemParams."""
    payload = _convert(dict(raw or {}), SystemPayload, "system parameters")
    return _DEFAULT_BUILDER.build_system(payload)


def derive_params(params: SystemParams, **changes: Any) -> SystemParams:
    """Copy ``params`` with top-level fields replaced, re-running every validation."""
    raw = msgspec.to_builtins(params)
    for name, value in changes.items():
        if name not in raw:
            raise ConfigError(f"Unknown system parameter '{name}'")
        raw[name] = msgspec.to_builtins(value)
    if "tau" in changes:
        raw["link"]["tau"] = raw["tau"]
    return _convert(raw, SystemParams, "system parameters")


def derive_run_options(run: RunOptions, **changes: Any) -> RunOptions:
    raw = msgspec.to_builtins(run)
    unknown = set(changes) - set(RunOptions.__struct_fields__)
    if unknown:
        raise ConfigError(f"Unknown run option(s): {', '.join(sorted(unknown))}")
    raw.update(msgspec.to_builtins(changes))
    return _convert(raw, RunOptions, "run options")


def payload_from_config(config: RunConfig) -> ConfigPayload:
    """Inverse of ``ConfigBuilder.build``; noise power is written explicitly."""
    system = config.system
    raw = msgspec.to_builtins(system)
    raw["link"] = {"sigma2": system.link.sigma2, "gamma_ber": system.link.gamma_ber}
    return ConfigPayload(system=msgspec.convert(raw, SystemPayload), run=config.run)


__all__ = [
    "ConfigBuilder",
    "build_run_config",
    "build_system_params",
    "derive_params",
    "derive_run_options",
    "payload_from_config",
]
