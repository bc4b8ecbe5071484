from __future__ import annotations

import math
from typing import Annotated, Any, Optional

import msgspec

PositiveFloat = Annotated[float, msgspec.Meta(gt=0)]
NonNegativeFloat = Annotated[float, msgspec.Meta(ge=0)]
BerThreshold = Annotated[float, msgspec.Meta(gt=0, lt=0.2)]
AttenuationFactor = Annotated[float, msgspec.Meta(gt=0, le=1)]
SlotCount = Annotated[int, msgspec.Meta(ge=2)]
MAX_SEED = 2**63 - 1
Seed = Annotated[int, msgspec.Meta(ge=0, le=MAX_SEED)]


def _require_positive(owner: str, **values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{owner}.{name}={value!r} must be > 0")


class ChannelParams(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Air-to-ground channel: probabilistic LoS S-curve and distance path loss."""

    alpha: PositiveFloat = 3.0
    beta0: PositiveFloat = 1.0
    kappa: AttenuationFactor = 1e-3
    a_env: PositiveFloat = 1.0
    b_env: PositiveFloat = 1.0
    radius: PositiveFloat = 50.0
    geometric_distance: bool = False

    def __post_init__(self) -> None:
        _require_positive(
            "channel", alpha=self.alpha, beta0=self.beta0, a_env=self.a_env, b_env=self.b_env, radius=self.radius
        )
        if not 0 < self.kappa <= 1:
            raise ValueError(f"channel.kappa={self.kappa!r} must lie in (0, 1]")


class LinkParams(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Noise power (W), BER threshold and slot duration (s) of the sensor uplink."""

    sigma2: PositiveFloat = 1.2e-10
    gamma_ber: BerThreshold = 1e-5
    tau: PositiveFloat = 50.0

    def __post_init__(self) -> None:
        _require_positive("link", sigma2=self.sigma2, tau=self.tau)
        if not 0 < self.gamma_ber < 0.2:
            raise ValueError(f"link.gamma_ber={self.gamma_ber!r} must lie in (0, 0.2)")


class SystemParams(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Physical and MDP constants of one harvesting mission."""

    n_slots: SlotCount = 10
    tau: PositiveFloat = 50.0
    data_total: NonNegativeFloat = 3e7
    symbol_rate: PositiveFloat = 1.2e5
    height_step: PositiveFloat = 30.0
    height_max: PositiveFloat = 600.0
    mod_set: tuple[int, ...] = (1, 2)
    initial_blocked: bool = False
    channel: ChannelParams = msgspec.field(default_factory=ChannelParams)
    link: LinkParams = msgspec.field(default_factory=LinkParams)

    def __post_init__(self) -> None:
        if self.n_slots < 2:
            raise ValueError(f"n_slots={self.n_slots} must be at least 2")
        if not self.data_total >= 0:
            raise ValueError(f"data_total={self.data_total!r} bits must be >= 0")
        _require_positive(
            "system",
            tau=self.tau,
            symbol_rate=self.symbol_rate,
            height_step=self.height_step,
            height_max=self.height_max,
        )
        _check_mod_set(self.mod_set)
        if self.height_step > self.height_max:
            raise ValueError(f"height_step={self.height_step} m exceeds height_max={self.height_max} m")
        levels = self.height_max / self.height_step
        if not math.isclose(levels, round(levels), rel_tol=0.0, abs_tol=1e-9):
            raise ValueError(
                f"height_max={self.height_max} m is not a multiple of height_step={self.height_step} m"
            )
        quantum = self.symbol_rate * self.tau
        quanta = self.data_total / quantum
        if not math.isclose(quanta, round(quanta), rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(
                f"data_total={self.data_total} bits is not a multiple of the data quantum "
                f"q = symbol_rate * tau = {quantum} bits"
            )
        if not math.isclose(self.link.tau, self.tau, rel_tol=1e-12):
            raise ValueError(f"link.tau={self.link.tau} s must equal tau={self.tau} s")

    @property
    def quantum_bits(self) -> float:
        """Bits delivered per slot per bit/symbol (q = r_s * tau)."""
        return self.symbol_rate * self.tau

    @property
    def n_quanta(self) -> int:
        return round(self.data_total / self.quantum_bits)

    @property
    def n_levels(self) -> int:
        return round(self.height_max / self.height_step)

    @property
    def max_bits(self) -> int:
        return max(mod_order.bit_length() - 1 for mod_order in self.mod_set)


def _check_mod_set(mod_set: tuple[int, ...]) -> None:
    if not mod_set:
        raise ValueError("mod_set must not be empty")
    if mod_set.count(1) != 1:
        raise ValueError("mod_set must contain the muting order 1 exactly once")
    if list(mod_set) != sorted(set(mod_set)):
        raise ValueError("mod_set must be sorted ascending without duplicates")
    for mod_order in mod_set:
        if mod_order < 1 or mod_order & (mod_order - 1):
            raise ValueError(f"mod_set entry {mod_order} is not a power of two")


class MdpState(msgspec.Struct, frozen=True):
    """State at the start of slot ``t``: height (m), remaining quanta and blockage."""

    t: int
    height: float
    data_remaining: int
    blocked: bool


class MdpAction(msgspec.Struct, frozen=True):
    """Height move (m) taking effect next slot and the constellation size used now."""

    move: float
    mod_order: int


class PolicyEntry(msgspec.Struct, frozen=True):
    action: MdpAction
    value: float


class LookupRow(msgspec.Struct, frozen=True):
    t: int
    data_quanta: int
    data_bits: float
    height_m: float
    blocked: bool
    move_m: float
    mod_order: int
    value_j: float


class SlotRecord(msgspec.Struct, frozen=True):
    t: int
    blocked: bool
    mod_order: int
    height_m: float
    move_m: float
    energy_j: float
    bits: float


class RolloutTrace(msgspec.Struct):
    """Per-slot realisation of one mission plus its totals."""

    records: list[SlotRecord] = msgspec.field(default_factory=list)
    total_energy_j: float = 0.0
    bits_delivered: float = 0.0
    seed: Optional[int] = None
    stream: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return msgspec.to_builtins(self)


class MonteCarloEstimate(msgspec.Struct, frozen=True):
    mean_j: float
    stderr_j: float
    n_rollouts: int


class FixedHeightResult(msgspec.Struct, frozen=True):
    heights_m: tuple[float, ...]
    energies_j: tuple[float, ...]
    best_height_m: float
    best_energy_j: float


class SweepPoint(msgspec.Struct, frozen=True):
    x: float
    energy_j: float
    baseline_j: float
    savings_fraction: float
    feasible: bool = True


class SweepResult(msgspec.Struct, frozen=True):
    variable: str
    points: tuple[SweepPoint, ...]
    baseline_label: str
    saturation_size: Optional[int] = None


class CertificationCase(msgspec.Struct, frozen=True):
    index: int
    n_slots: int
    n_levels: int
    mod_set: tuple[int, ...]
    n_quanta: int
    kappa: float
    solver_value_j: float
    oracle_value_j: float
    relative_gap: float
    agree: bool


class CertificationReport(msgspec.Struct, frozen=True):
    seed: int
    cases: tuple[CertificationCase, ...]
    max_relative_gap: float

    @property
    def n_agree(self) -> int:
        return sum(1 for case in self.cases if case.agree)

    @property
    def all_agree(self) -> bool:
        return self.n_agree == len(self.cases)


class RunOptions(msgspec.Struct, frozen=True, forbid_unknown_fields=True, omit_defaults=True):
    """Run-level options that sit next to the system constants in a config file."""

    seed: Seed = 2021
    rollouts: Annotated[int, msgspec.Meta(ge=1)] = 100_000
    output_dir: str = "results"
    fixed_height_min: PositiveFloat = 1.0
    fixed_height_max: PositiveFloat = 400.0
    fixed_height_step: PositiveFloat = 1.0
    u_values: Annotated[tuple[PositiveFloat, ...], msgspec.Meta(min_length=1)] = (10.0, 20.0, 30.0, 40.0, 50.0)
    modset_max_size: Annotated[int, msgspec.Meta(ge=2)] = 8
    saturation_tolerance: PositiveFloat = 1e-6
    certify_instances: Annotated[int, msgspec.Meta(ge=1)] = 200
    blockage: Optional[tuple[bool, ...]] = None


class RunConfig(msgspec.Struct, frozen=True):
    """Validated system constants plus run options."""

    system: SystemParams
    run: RunOptions


class LinkPayload(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    sigma2: Optional[PositiveFloat] = None
    noise_density_dbm_per_hz: float = -120.0
    noise_bandwidth_hz: Optional[PositiveFloat] = None
    gamma_ber: BerThreshold = 1e-5


class SystemPayload(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    n_slots: SlotCount = 10
    tau: PositiveFloat = 50.0
    data_total: NonNegativeFloat = 3e7
    symbol_rate: PositiveFloat = 1.2e5
    height_step: PositiveFloat = 30.0
    height_max: PositiveFloat = 600.0
    mod_set: tuple[int, ...] = (1, 2)
    initial_blocked: bool = False
    channel: ChannelParams = msgspec.field(default_factory=ChannelParams)
    link: LinkPayload = msgspec.field(default_factory=LinkPayload)


class ConfigPayload(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """Raw TOML schema: a ``[system]`` table and a ``[run]`` table."""

    system: SystemPayload = msgspec.field(default_factory=SystemPayload)
    run: RunOptions = msgspec.field(default_factory=RunOptions)


__all__ = [
    "ChannelParams",
    "LinkParams",
    "SystemParams",
    "MdpState",
    "MdpAction",
    "PolicyEntry",
    "LookupRow",
    "SlotRecord",
    "RolloutTrace",
    "MonteCarloEstimate",
    "FixedHeightResult",
    "SweepPoint",
    "SweepResult",
    "CertificationCase",
    "CertificationReport",
    "RunOptions",
    "RunConfig",
    "LinkPayload",
    "SystemPayload",
    "ConfigPayload",
]
