"""Air-to-ground channel and per-slot transmission energy.

All functions accept scalars or numpy arrays for heights and gains.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Union

import numpy as np
import numpy.typing as npt

from .errors import DomainError

if TYPE_CHECKING:
    from .records.models import ChannelParams, LinkParams

FloatOrArray = Union[float, npt.NDArray[np.float64]]

BER_SCALE = 0.2
BER_EXPONENT = 1.6


def _unwrap(value: npt.NDArray[np.float64]) -> FloatOrArray:
    array = np.asarray(value, dtype=np.float64)
    return float(array) if array.ndim == 0 else array


def elevation_angle(height: FloatOrArray, params: ChannelParams) -> FloatOrArray:
    """Elevation angle (rad) of the UAV seen from the sensor."""
    return _unwrap(np.arctan(np.asarray(height, dtype=np.float64) / params.radius))


def los_probability(height: FloatOrArray, params: ChannelParams) -> FloatOrArray:
    theta = elevation_angle(height, params)
    return _unwrap(1.0 / (1.0 + params.a_env * np.exp(-params.b_env * (np.asarray(theta) - params.a_env))))


def _distance_term(height: FloatOrArray, params: ChannelParams) -> FloatOrArray:
    h = np.asarray(height, dtype=np.float64)
    if params.geometric_distance:
        return h * h + params.radius * params.radius
    # literal model: (H + R) stands in for the squared distance
    return h + params.radius


def path_loss(height: FloatOrArray, blocked: bool | npt.NDArray[np.bool_], params: ChannelParams) -> FloatOrArray:
    """Channel gain; NLoS adds the ``kappa`` attenuation."""
    gain = params.beta0 * _distance_term(height, params) ** (-params.alpha / 2.0)
    return _unwrap(np.where(blocked, params.kappa * gain, gain))


def slot_energy(mod_order: int | npt.NDArray[np.int64], gain: FloatOrArray, link: LinkParams) -> FloatOrArray:
    """Energy (J) to send one slot at constellation size ``mod_order`` meeting the BER threshold."""
    g = np.asarray(gain, dtype=np.float64)
    if np.any(g <= 0.0):
        raise DomainError("channel gain must be positive")
    penalty = np.asarray(mod_order, dtype=np.float64) - 1.0
    return _unwrap(link.sigma2 * penalty * link.tau * np.log(link.gamma_ber / BER_SCALE) / (-BER_EXPONENT * g))


def transmit_power(mod_order: int, gain: float, link: LinkParams) -> float:
    """Transmit power (W) that meets the BER threshold exactly."""
    return float(slot_energy(mod_order, gain, link)) / link.tau


def bit_error_rate(power: float, gain: float, mod_order: int, link: LinkParams) -> float:
    if mod_order <= 1:
        raise DomainError("bit error rate is undefined for muting")
    return BER_SCALE * float(np.exp(-BER_EXPONENT * gain * power / (link.sigma2 * (mod_order - 1))))


def noise_power_from_density(density_dbm_per_hz: float, bandwidth: float) -> float:
    """Noise power (W) of a flat density over ``bandwidth`` Hz."""
    if bandwidth <= 0:
        raise DomainError("bandwidth must be positive")
    return 10.0 ** ((density_dbm_per_hz - 30.0) / 10.0) * bandwidth


def bits_per_symbol(mod_order: int) -> int:
    if mod_order < 1 or mod_order & (mod_order - 1):
        raise DomainError(f"constellation size {mod_order} is not a power of two")
    return mod_order.bit_length() - 1


def modulation_name(mod_order: int) -> str:
    if mod_order == 1:
        return "Muting"
    if mod_order == 2:
        return "BPSK"
    return f"{mod_order}-QAM"


__all__ = [
    "elevation_angle",
    "los_probability",
    "path_loss",
    "slot_energy",
    "transmit_power",
    "bit_error_rate",
    "noise_power_from_density",
    "bits_per_symbol",
    "modulation_name",
]
