from __future__ import annotations

from .models import (
    CertificationCase,
    CertificationReport,
    ChannelParams,
    ConfigPayload,
    FixedHeightResult,
    LinkParams,
    LinkPayload,
    LookupRow,
    MdpAction,
    MdpState,
    MonteCarloEstimate,
    PolicyEntry,
    RolloutTrace,
    RunConfig,
    RunOptions,
    SlotRecord,
    SweepPoint,
    SweepResult,
    SystemParams,
    SystemPayload,
)
from .builder import (  # noqa: I001 - models must load before builder pulls in channel
    ConfigBuilder,
    build_run_config,
    build_system_params,
    derive_params,
    derive_run_options,
    payload_from_config,
)
from .utils import height_grid, read_csv_rows, relative_gap, write_csv

__all__ = [
    "CertificationCase",
    "CertificationReport",
    "ChannelParams",
    "ConfigPayload",
    "FixedHeightResult",
    "LinkParams",
    "LinkPayload",
    "LookupRow",
    "MdpAction",
    "MdpState",
    "MonteCarloEstimate",
    "PolicyEntry",
    "RolloutTrace",
    "RunConfig",
    "RunOptions",
    "SlotRecord",
    "SweepPoint",
    "SweepResult",
    "SystemParams",
    "SystemPayload",
    "ConfigBuilder",
    "build_run_config",
    "build_system_params",
    "derive_params",
    "derive_run_options",
    "payload_from_config",
    "height_grid",
    "read_csv_rows",
    "relative_gap",
    "write_csv",
]
