from __future__ import annotations

import math
from typing import Any

import msgspec

from uav_harvest.records import SystemParams, derive_params

QUANTUM_BITS = 1.2e5 * 50.0


def make_params(*, n_quanta: int | None = None, **changes: Any) -> SystemParams:
    """Default mission with ``changes`` applied; ``n_quanta`` sets D in units of q."""
    if n_quanta is not None:
        changes["data_total"] = n_quanta * QUANTUM_BITS
    return derive_params(SystemParams(), **changes)


def single_height_params(*, n_slots: int, n_quanta: int, kappa: float = 1e-3, **changes: Any) -> SystemParams:
    """One height level (H_max = u), so the UAV can only hover and land."""
    params = make_params(n_slots=n_slots, n_quanta=n_quanta, height_max=30.0, **changes)
    return derive_params(params, channel=msgspec.structs.replace(params.channel, kappa=kappa))


def los_by_hand(height: float, params: SystemParams) -> float:
    channel = params.channel
    theta = math.atan(height / channel.radius)
    return 1.0 / (1.0 + channel.a_env * math.exp(-channel.b_env * (theta - channel.a_env)))


def gain_by_hand(height: float, blocked: bool, params: SystemParams) -> float:
    channel = params.channel
    if channel.geometric_distance:
        term = height * height + channel.radius * channel.radius
    else:
        term = height + channel.radius
    gain = channel.beta0 * term ** (-channel.alpha / 2.0)
    return channel.kappa * gain if blocked else gain


def energy_by_hand(mod_order: int, height: float, blocked: bool, params: SystemParams) -> float:
    link = params.link
    gain = gain_by_hand(height, blocked, params)
    return link.sigma2 * (mod_order - 1) * link.tau * math.log(link.gamma_ber / 0.2) / (-1.6 * gain)
