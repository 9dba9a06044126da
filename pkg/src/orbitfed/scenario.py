"""Scenario files: sectioned key-value text with units in the key names.

The format is INI-style (configparser). Every default is either a value
from the documented workload table or a calibration recorded in the
config reference (docs/formats.md). Loading validates all invariants up
front so the simulation core never sees an inconsistent configuration.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .constellation import ConstellationSpec, GroundStation, TimeGrid
from .fedsim import STRATEGIES, WorkloadModel
from .linkbudget import IslParams, SglParams, db_to_linear, dbm_to_watts


class ScenarioError(ValueError):
    """Configuration problem; carries the offending section/key."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None):
        where = f" [{section}]" if section else ""
        where += f" {key}" if key else ""
        super().__init__(f"scenario error{where}: {message}")
        self.section = section
        self.key = key


SWEEP_AXES = ("data_volume", "sgl_rate", "isl_rate", "sats_per_plane", "planes", "blocks")


@dataclass
class Scenario:
    name: str
    seed: int
    strategy: str
    rounds: int
    consensus_factor: float
    constellation: ConstellationSpec
    grid: TimeGrid
    ground_stations: list[GroundStation]
    isl: IslParams
    sgl: SglParams
    gs_ps_rate_bps: float | None
    workload: WorkloadModel

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ScenarioError(f"unknown strategy {self.strategy!r}", "scenario", "strategy")
        if self.rounds < 1:
            raise ScenarioError("rounds must be >= 1", "scenario", "rounds")
        if self.consensus_factor < 1:
            raise ScenarioError("consensus_factor must be >= 1", "scenario", "consensus_factor")


_KNOWN_KEYS = {
    "scenario": {"name", "seed", "strategy", "rounds", "consensus_factor"},
    "constellation": {
        "total_sats", "planes", "phase_deg", "altitude_km", "inclination_deg", "raan_spread_deg",
    },
    "time": {"epoch_utc", "step_s", "steps"},
    "ground_stations": None,  # free-form gs entries
    "isl": {
        "fixed_rate_bps", "tx_power_w", "tx_gain_dbi", "rx_gain_dbi", "tx_gain", "rx_gain",
        "wavelength_m", "bandwidth_hz", "noise_variance_w",
        "pointing_error_tx_rad", "pointing_error_rx_rad",
    },
    "sgl": {
        "fixed_rate_bps", "tx_power_dbm", "tx_power_w", "carrier_frequency_hz", "bandwidth_hz",
        "noise_power_w", "rain_coeff", "rain_exponent", "rain_rate_mmh", "rain_path_km",
        "gs_ps_rate_bps",
    },
    "workload": {
        "samples_per_satellite", "embedding_bits_per_sample", "feature_bits_per_sample",
        "head_param_bits", "raw_bits_per_sample", "embedding_flops_per_sample",
        "block_flops", "blocks", "head_flops_per_sample", "satellite_flops_per_s",
        "ground_flops_per_s", "local_epochs", "backward_multiplier",
    },
}


def _check_keys(cp: configparser.ConfigParser):
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ScenarioError(f"unknown section [{section}]", section)
        allowed = _KNOWN_KEYS[section]
        if allowed is None:
            continue
        for key in cp[section]:
            if key not in allowed:
                raise ScenarioError(f"unknown key {key!r}", section, key)


def _get_float(cp, section, key, default=None) -> float | None:
    raw = cp.get(section, key, fallback=None)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"expected a number, got {raw!r}", section, key) from None


def _get_int(cp, section, key, default=None) -> int | None:
    val = _get_float(cp, section, key, default)
    if val is None:
        return None
    if val != int(val):
        raise ScenarioError(f"expected an integer, got {val}", section, key)
    return int(val)


def loads(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from None
    _check_keys(cp)

    if not cp.has_section("scenario"):
        raise ScenarioError("missing [scenario] section", "scenario")
    if cp.get("scenario", "seed", fallback=None) is None:
        raise ScenarioError("seed is mandatory", "scenario", "seed")

    try:
        spec = ConstellationSpec(
            total_sats=_get_int(cp, "constellation", "total_sats", 80),
            planes=_get_int(cp, "constellation", "planes", 4),
            phase_deg=_get_float(cp, "constellation", "phase_deg", 45.0),
            altitude_km=_get_float(cp, "constellation", "altitude_km", 590.0),
            inclination_deg=_get_float(cp, "constellation", "inclination_deg", 90.0),
            raan_spread_deg=_get_float(cp, "constellation", "raan_spread_deg", 180.0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "constellation") from None

    grid = TimeGrid(
        epoch=cp.get("time", "epoch_utc", fallback="2020-09-24T16:00:00"),
        step_s=_get_float(cp, "time", "step_s", 60.0),
        steps=_get_int(cp, "time", "steps", 1440),
    )

    stations = []
    if cp.has_section("ground_stations"):
        for i, (key, raw) in enumerate(cp["ground_stations"].items(), start=1):
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 4:
                raise ScenarioError(
                    "expected 'lat_deg, lon_deg, alt_m, min_elevation_deg'",
                    "ground_stations", key,
                )
            try:
                stations.append(
                    GroundStation(i, float(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]))
                )
            except ValueError as exc:
                raise ScenarioError(str(exc), "ground_stations", key) from None

    isl_fixed = _get_float(cp, "isl", "fixed_rate_bps")
    isl_budget_keys = [
        k for k in _KNOWN_KEYS["isl"]
        if k != "fixed_rate_bps" and cp.get("isl", k, fallback="").strip()
    ]
    if isl_fixed is not None and isl_budget_keys:
        raise ScenarioError(
            "fixed_rate_bps and link-budget keys are mutually exclusive", "isl",
        )
    # Gains may be given in dBi (human-friendly) or linear (exact round trip).
    tx_gain = _get_float(cp, "isl", "tx_gain")
    if tx_gain is None:
        tx_gain = db_to_linear(_get_float(cp, "isl", "tx_gain_dbi", 0.0))
    rx_gain = _get_float(cp, "isl", "rx_gain")
    if rx_gain is None:
        rx_gain = db_to_linear(_get_float(cp, "isl", "rx_gain_dbi", 0.0))
    try:
        isl = IslParams(
            tx_power_w=_get_float(cp, "isl", "tx_power_w", 1.0),
            tx_gain=tx_gain,
            rx_gain=rx_gain,
            wavelength_m=_get_float(cp, "isl", "wavelength_m", 1550e-9),
            bandwidth_hz=_get_float(cp, "isl", "bandwidth_hz", 250e6),
            noise_variance_w=_get_float(cp, "isl", "noise_variance_w", 1e-13),
            pointing_error_tx_rad=_get_float(cp, "isl", "pointing_error_tx_rad", 0.0),
            pointing_error_rx_rad=_get_float(cp, "isl", "pointing_error_rx_rad", 0.0),
            fixed_rate_bps=isl_fixed,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "isl") from None

    sgl_fixed = _get_float(cp, "sgl", "fixed_rate_bps")
    sgl_budget_keys = [
        k for k in ("tx_power_dbm", "carrier_frequency_hz", "noise_power_w")
        if cp.get("sgl", k, fallback="").strip()
    ]
    if sgl_fixed is not None and sgl_budget_keys:
        raise ScenarioError(
            "fixed_rate_bps and link-budget keys are mutually exclusive", "sgl",
        )
    sgl_power_w = _get_float(cp, "sgl", "tx_power_w")
    if sgl_power_w is None:
        sgl_power_w = dbm_to_watts(_get_float(cp, "sgl", "tx_power_dbm", 50.0))
    try:
        sgl = SglParams(
            tx_power_w=sgl_power_w,
            carrier_frequency_hz=_get_float(cp, "sgl", "carrier_frequency_hz", 20e9),
            bandwidth_hz=_get_float(cp, "sgl", "bandwidth_hz", 250e6),
            noise_power_w=_get_float(cp, "sgl", "noise_power_w", 1.76e-16),
            rain_coeff=_get_float(cp, "sgl", "rain_coeff", 0.0751),
            rain_exponent=_get_float(cp, "sgl", "rain_exponent", 0.083),
            rain_rate_mmh=_get_float(cp, "sgl", "rain_rate_mmh", 0.0),
            rain_path_km=_get_float(cp, "sgl", "rain_path_km", 0.0),
            fixed_rate_bps=sgl_fixed,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "sgl") from None

    try:
        workload = WorkloadModel(
            samples_per_satellite=_get_int(cp, "workload", "samples_per_satellite", 10),
            embedding_bits_per_sample=_get_float(cp, "workload", "embedding_bits_per_sample", 1.6e8),
            feature_bits_per_sample=_get_float(cp, "workload", "feature_bits_per_sample", 32_000.0),
            head_param_bits=_get_float(cp, "workload", "head_param_bits", 3.52e7),
            raw_bits_per_sample=_get_float(cp, "workload", "raw_bits_per_sample", 1.39776e9),
            embedding_flops_per_sample=_get_float(
                cp, "workload", "embedding_flops_per_sample", 1.13246208e8
            ),
            block_flops=_get_float(cp, "workload", "block_flops", 5.94542592e8),
            blocks=_get_int(cp, "workload", "blocks", 12),
            head_flops_per_sample=_get_float(cp, "workload", "head_flops_per_sample", 1.1e6),
            satellite_flops_per_s=_get_float(cp, "workload", "satellite_flops_per_s", 1e7),
            ground_flops_per_s=_get_float(cp, "workload", "ground_flops_per_s", 1e14),
            local_epochs=_get_int(cp, "workload", "local_epochs", 1),
            backward_multiplier=_get_float(cp, "workload", "backward_multiplier", 2.0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "workload") from None

    scn = Scenario(
        name=cp.get("scenario", "name", fallback="unnamed"),
        seed=_get_int(cp, "scenario", "seed"),
        strategy=cp.get("scenario", "strategy", fallback="proposed"),
        rounds=_get_int(cp, "scenario", "rounds", 1),
        consensus_factor=_get_float(cp, "scenario", "consensus_factor", 2.0),
        constellation=spec,
        grid=grid,
        ground_stations=stations,
        isl=isl,
        sgl=sgl,
        gs_ps_rate_bps=_get_float(cp, "sgl", "gs_ps_rate_bps"),
        workload=workload,
    )
    scn.validate()
    return scn


def load(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(scn: Scenario) -> str:
    """Serialize a Scenario; loads(dumps(s)) reproduces s."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["scenario"] = {
        "name": scn.name,
        "seed": repr(scn.seed),
        "strategy": scn.strategy,
        "rounds": repr(scn.rounds),
        "consensus_factor": repr(scn.consensus_factor),
    }
    c = scn.constellation
    cp["constellation"] = {
        "total_sats": repr(c.total_sats),
        "planes": repr(c.planes),
        "phase_deg": repr(c.phase_deg),
        "altitude_km": repr(c.altitude_km),
        "inclination_deg": repr(c.inclination_deg),
        "raan_spread_deg": repr(c.raan_spread_deg),
    }
    cp["time"] = {
        "epoch_utc": scn.grid.epoch,
        "step_s": repr(scn.grid.step_s),
        "steps": repr(scn.grid.steps),
    }
    cp["ground_stations"] = {
        f"gs{gs.id}": f"{gs.latitude_deg!r}, {gs.longitude_deg!r}, {gs.altitude_m!r}, {gs.min_elevation_deg!r}"
        for gs in scn.ground_stations
    }
    isl = scn.isl
    if isl.fixed_rate_bps is not None:
        cp["isl"] = {"fixed_rate_bps": repr(isl.fixed_rate_bps)}
    else:
        cp["isl"] = {
            "tx_power_w": repr(isl.tx_power_w),
            "tx_gain": repr(isl.tx_gain),
            "rx_gain": repr(isl.rx_gain),
            "wavelength_m": repr(isl.wavelength_m),
            "bandwidth_hz": repr(isl.bandwidth_hz),
            "noise_variance_w": repr(isl.noise_variance_w),
            "pointing_error_tx_rad": repr(isl.pointing_error_tx_rad),
            "pointing_error_rx_rad": repr(isl.pointing_error_rx_rad),
        }
    sgl = scn.sgl
    sgl_section: dict[str, str] = {}
    if sgl.fixed_rate_bps is not None:
        sgl_section["fixed_rate_bps"] = repr(sgl.fixed_rate_bps)
        sgl_section["rain_coeff"] = repr(sgl.rain_coeff)
        sgl_section["rain_exponent"] = repr(sgl.rain_exponent)
        sgl_section["rain_rate_mmh"] = repr(sgl.rain_rate_mmh)
        sgl_section["rain_path_km"] = repr(sgl.rain_path_km)
    else:
        sgl_section.update(
            {
                "tx_power_w": repr(sgl.tx_power_w),
                "carrier_frequency_hz": repr(sgl.carrier_frequency_hz),
                "bandwidth_hz": repr(sgl.bandwidth_hz),
                "noise_power_w": repr(sgl.noise_power_w),
                "rain_coeff": repr(sgl.rain_coeff),
                "rain_exponent": repr(sgl.rain_exponent),
                "rain_rate_mmh": repr(sgl.rain_rate_mmh),
                "rain_path_km": repr(sgl.rain_path_km),
            }
        )
    if scn.gs_ps_rate_bps is not None:
        sgl_section["gs_ps_rate_bps"] = repr(scn.gs_ps_rate_bps)
    cp["sgl"] = sgl_section
    w = scn.workload
    cp["workload"] = {
        "samples_per_satellite": repr(w.samples_per_satellite),
        "embedding_bits_per_sample": repr(w.embedding_bits_per_sample),
        "feature_bits_per_sample": repr(w.feature_bits_per_sample),
        "head_param_bits": repr(w.head_param_bits),
        "raw_bits_per_sample": repr(w.raw_bits_per_sample),
        "embedding_flops_per_sample": repr(w.embedding_flops_per_sample),
        "block_flops": repr(w.block_flops),
        "blocks": repr(w.blocks),
        "head_flops_per_sample": repr(w.head_flops_per_sample),
        "satellite_flops_per_s": repr(w.satellite_flops_per_s),
        "ground_flops_per_s": repr(w.ground_flops_per_s),
        "local_epochs": repr(w.local_epochs),
        "backward_multiplier": repr(w.backward_multiplier),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
