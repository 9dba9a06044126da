"""Link budgets for laser inter-satellite links and Ka-band ground links.

All functions are pure. Gains and losses are linear ratios unless a name
says dB; helper converters are provided for scenario files that declare
gains in dBi and powers in dBm.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .constants import POWER_FLOOR_DBM


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("cannot convert non-positive ratio to dB")
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        return POWER_FLOOR_DBM
    return 10.0 * math.log10(watts * 1000.0)


@dataclass(frozen=True)
class IslParams:
    """Laser inter-satellite link parameters (linear gains, SI units)."""

    tx_power_w: float = 1.0
    tx_gain: float = 1.0
    rx_gain: float = 1.0
    wavelength_m: float = 1550e-9
    bandwidth_hz: float = 250e6
    noise_variance_w: float = 1e-13
    pointing_error_tx_rad: float = 0.0
    pointing_error_rx_rad: float = 0.0
    fixed_rate_bps: float | None = None

    def __post_init__(self):
        for name in ("tx_power_w", "tx_gain", "rx_gain", "wavelength_m", "bandwidth_hz", "noise_variance_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pointing_error_tx_rad < 0 or self.pointing_error_rx_rad < 0:
            raise ValueError("pointing errors must be non-negative")


@dataclass(frozen=True)
class MultipathComponent:
    """One propagation path: reflection coefficient, phase offset, length."""

    reflection: float
    phase_delta_rad: float
    path_length_m: float


@dataclass(frozen=True)
class SglParams:
    """Ka-band satellite-ground link parameters."""

    tx_power_w: float = 100.0  # 50 dBm
    carrier_frequency_hz: float = 20e9
    bandwidth_hz: float = 250e6
    rain_coeff: float = 0.0751  # dB/km * (mm/h)^-alpha
    rain_exponent: float = 0.083
    rain_rate_mmh: float = 0.0
    rain_path_km: float = 0.0
    multipath: tuple[MultipathComponent, ...] = ()
    noise_power_w: float = 1.76e-16
    fixed_rate_bps: float | None = None
    literal_power_combination: bool = False

    def __post_init__(self):
        for comp in self.multipath:
            if abs(comp.reflection) > 1.0:
                raise ValueError("reflection coefficient magnitude must be <= 1")
        if self.multipath:
            first = self.multipath[0]
            if first.reflection != 1.0 or first.phase_delta_rad != 0.0:
                raise ValueError("first multipath entry must be the direct path (r=1, dphi=0)")

    @property
    def wavelength_m(self) -> float:
        return 299792458.0 / self.carrier_frequency_hz


def pointing_loss(tx_gain: float, rx_gain: float, theta_tx_rad: float, theta_rx_rad: float) -> float:
    """Misalignment loss exp(-Gt*theta_t^2 - Gr*theta_r^2), in (0, 1]."""
    return math.exp(-tx_gain * theta_tx_rad**2 - rx_gain * theta_rx_rad**2)


def free_space_path_loss(wavelength_m: float, distance_m: float) -> float:
    """(lambda / 4*pi*l)^2 as a linear ratio."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return (wavelength_m / (4.0 * math.pi * distance_m)) ** 2


def isl_rate(params: IslParams, distance_m: float) -> float:
    """Achievable laser ISL data rate [bits/s] via the Shannon bound."""
    if params.fixed_rate_bps is not None:
        return params.fixed_rate_bps
    l_ps = pointing_loss(
        params.tx_gain, params.rx_gain, params.pointing_error_tx_rad, params.pointing_error_rx_rad
    )
    l_pt = free_space_path_loss(params.wavelength_m, distance_m)
    p_r = params.tx_power_w * params.tx_gain * params.rx_gain * l_ps * l_pt
    return params.bandwidth_hz * math.log2(1.0 + p_r / params.noise_variance_w)


def rain_attenuation_db(coeff: float, exponent: float, rain_rate_mmh: float, path_km: float) -> float:
    """Rain attenuation K * Rr^alpha * lr [dB]."""
    if rain_rate_mmh < 0 or path_km < 0:
        raise ValueError("rain rate and path length must be non-negative")
    if rain_rate_mmh == 0.0:
        return 0.0
    return coeff * rain_rate_mmh**exponent * path_km


def _phasor_sum(multipath: tuple[MultipathComponent, ...]) -> complex:
    return sum(
        (comp.reflection * cmath.exp(-1j * comp.phase_delta_rad) / comp.path_length_m
         for comp in multipath),
        0j,
    )


def sgl_multipath_power_dbm(params: SglParams) -> float:
    """Total multipath received power, 10*log10(Pt*(lambda/4pi)^2*|sum|^2) in dBm.

    The phasor sum runs over all declared paths (the direct path first);
    exact cancellation is reported as the documented floor value.
    """
    if not params.multipath:
        raise ValueError("multipath list must contain at least the direct path")
    amp = _phasor_sum(params.multipath)
    power_w = params.tx_power_w * (params.wavelength_m / (4.0 * math.pi)) ** 2 * abs(amp) ** 2
    return max(watts_to_dbm(power_w), POWER_FLOOR_DBM)


def _multipath_gain(params: SglParams, slant_range_m: float) -> float:
    """|sum_i r_i e^{-j dphi_i} * l_1/l_i|^2 relative to the direct path.

    Without a declared multipath profile the link is direct-path-only and
    the gain is 1.
    """
    if not params.multipath:
        return 1.0
    direct_len = params.multipath[0].path_length_m
    amp = sum(
        comp.reflection * cmath.exp(-1j * comp.phase_delta_rad) * (direct_len / comp.path_length_m)
        for comp in params.multipath
    )
    return abs(amp) ** 2


def sgl_received_power_w(params: SglParams, slant_range_m: float) -> float:
    """Received SGL power [W] after free-space loss, multipath, and rain."""
    if slant_range_m <= 0:
        raise ValueError("slant range must be positive")
    rain_db = rain_attenuation_db(
        params.rain_coeff, params.rain_exponent, params.rain_rate_mmh, params.rain_path_km
    )
    if params.literal_power_combination:
        # Paper-style dB combination: multipath power minus FSPL minus rain.
        # Double-counts the direct-path spreading loss; kept for reproduction.
        mp = params.multipath or (MultipathComponent(1.0, 0.0, slant_range_m),)
        p_mp_dbm = sgl_multipath_power_dbm(
            SglParams(
                tx_power_w=params.tx_power_w,
                carrier_frequency_hz=params.carrier_frequency_hz,
                bandwidth_hz=params.bandwidth_hz,
                multipath=mp,
                noise_power_w=params.noise_power_w,
            )
        )
        fspl_db = -linear_to_db(free_space_path_loss(params.wavelength_m, slant_range_m))
        return dbm_to_watts(max(p_mp_dbm - fspl_db - rain_db, POWER_FLOOR_DBM))
    gain = _multipath_gain(params, slant_range_m)
    p_w = (
        params.tx_power_w
        * free_space_path_loss(params.wavelength_m, slant_range_m)
        * gain
        * db_to_linear(-rain_db)
    )
    return p_w


def sgl_rate(params: SglParams, slant_range_m: float) -> float:
    """Achievable SGL data rate [bits/s]; honors a fixed-rate override."""
    if params.fixed_rate_bps is not None:
        return params.fixed_rate_bps
    p_r = sgl_received_power_w(params, slant_range_m)
    return params.bandwidth_hz * math.log2(1.0 + p_r / params.noise_power_w)
