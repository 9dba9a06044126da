"""Walker constellation geometry: propagation, distances, visibility windows.

Circular two-body orbits with sidereal Earth rotation; no perturbations.
Positions are Earth-centered Earth-fixed (ECEF), spherical Earth of radius
R_EARTH. All angles in the public API are degrees unless noted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import MU_EARTH, R_EARTH, SIDEREAL_DAY

DEG = math.pi / 180.0


@dataclass(frozen=True)
class ConstellationSpec:
    """Walker constellation parameters (total/planes/phase, altitude, inclination)."""

    total_sats: int
    planes: int
    phase_deg: float
    altitude_km: float
    inclination_deg: float
    raan_spread_deg: float = 180.0

    def __post_init__(self):
        if self.planes <= 0:
            raise ValueError("planes must be positive")
        if self.total_sats <= 0 or self.total_sats % self.planes != 0:
            raise ValueError(
                f"total_sats ({self.total_sats}) must be a positive multiple "
                f"of planes ({self.planes})"
            )
        if not 200.0 <= self.altitude_km <= 2000.0:
            raise ValueError(f"altitude_km {self.altitude_km} outside LEO range [200, 2000]")
        if not 0.0 < self.raan_spread_deg <= 360.0:
            raise ValueError("raan_spread_deg must be in (0, 360]")

    @property
    def sats_per_plane(self) -> int:
        return self.total_sats // self.planes

    @property
    def orbit_radius_m(self) -> float:
        return R_EARTH + self.altitude_km * 1000.0

    @property
    def orbital_period_s(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.orbit_radius_m**3 / MU_EARTH)

    def sat_ids(self) -> list["SatId"]:
        """All satellites ordered by (plane, slot), both 1-based."""
        return [
            SatId(p, n)
            for p in range(1, self.planes + 1)
            for n in range(1, self.sats_per_plane + 1)
        ]


@dataclass(frozen=True, order=True)
class SatId:
    """Satellite index: slot ``n`` within plane ``p``, both 1-based."""

    plane: int
    slot: int

    def __str__(self):
        return f"S{self.plane}-{self.slot}"


@dataclass(frozen=True)
class TimeGrid:
    """Discrete simulation time grid starting at ``epoch``."""

    epoch: str = "2020-09-24T16:00:00"
    step_s: float = 60.0
    steps: int = 1440

    def __post_init__(self):
        if self.step_s <= 0:
            raise ValueError("step_s must be positive")
        if self.steps <= 0:
            raise ValueError("steps must be positive")

    def time_s(self, t: int) -> float:
        return t * self.step_s


@dataclass(frozen=True)
class GroundStation:
    id: int
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0
    min_elevation_deg: float = 10.0

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ValueError("latitude out of range")
        if not 0.0 <= self.min_elevation_deg < 90.0:
            raise ValueError("min_elevation_deg must be in [0, 90)")

    def ecef(self) -> np.ndarray:
        """Station position on the spherical Earth [m]."""
        lat = self.latitude_deg * DEG
        lon = self.longitude_deg * DEG
        r = R_EARTH + self.altitude_m
        return np.array(
            [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
        )


def _plane_raan_phase(spec: ConstellationSpec) -> tuple[np.ndarray, np.ndarray]:
    p = np.arange(spec.planes)
    raan = spec.raan_spread_deg * DEG * p / spec.planes
    phase = spec.phase_deg * DEG * p
    return raan, phase


def propagate(spec: ConstellationSpec, grid: TimeGrid, t: int) -> np.ndarray:
    """ECEF positions of all satellites at step ``t``.

    Returns an array of shape (P, N, 3) in meters, indexed by 0-based
    (plane-1, slot-1). Satellites within a plane are spaced 360/N degrees
    apart; adjacent planes are offset by raan_spread/P in RAAN and by the
    phase factor (in degrees) along-track.
    """
    if t >= grid.steps:
        raise ValueError(f"step {t} outside grid of {grid.steps} steps")
    P, N = spec.planes, spec.sats_per_plane
    a = spec.orbit_radius_m
    inc = spec.inclination_deg * DEG
    omega = math.sqrt(MU_EARTH / a**3)  # rad/s
    t_s = grid.time_s(t)

    raan, phase = _plane_raan_phase(spec)
    slots = 2.0 * math.pi * np.arange(N) / N
    # Argument of latitude per (plane, slot).
    u = slots[None, :] + phase[:, None] + omega * t_s

    cos_u, sin_u = np.cos(u), np.sin(u)
    cos_o, sin_o = np.cos(raan)[:, None], np.sin(raan)[:, None]
    cos_i, sin_i = math.cos(inc), math.sin(inc)

    x = a * (cos_o * cos_u - sin_o * sin_u * cos_i)
    y = a * (sin_o * cos_u + cos_o * sin_u * cos_i)
    z = a * sin_u * sin_i

    # Rotate inertial frame into ECEF at the sidereal rate.
    theta = 2.0 * math.pi * t_s / SIDEREAL_DAY
    ct, st = math.cos(theta), math.sin(theta)
    x_e = x * ct + y * st
    y_e = -x * st + y * ct
    return np.stack([x_e, y_e, z], axis=-1)


def position_of(positions: np.ndarray, sat: SatId) -> np.ndarray:
    return positions[sat.plane - 1, sat.slot - 1]


def satellite_distance(spec: ConstellationSpec, grid: TimeGrid, a: SatId, b: SatId, t: int) -> float:
    """Distance between two satellites [m] from the spherical closed form.

    Uses orbit radius plus the satellites' polar angles and azimuths:
    d^2 = ra^2 + rc^2 - 2*ra*rc*(cos(ta)cos(tc) + cos(ea-ec)sin(ta)sin(tc)).
    Independent cross-check for the Euclidean ECEF distance.
    """
    if a == b:
        raise ValueError("distance requires two distinct satellites")
    positions = propagate(spec, grid, t)
    return float(closed_form_distance(position_of(positions, a), position_of(positions, b)))


def closed_form_distance(pos_a: np.ndarray, pos_b: np.ndarray) -> np.ndarray:
    """Spherical-coordinate law-of-cosines distance between position vectors.

    Vectorized over leading dimensions; the last axis must be xyz.
    """
    ra = np.linalg.norm(pos_a, axis=-1)
    rc = np.linalg.norm(pos_b, axis=-1)
    theta_a = np.arccos(np.clip(pos_a[..., 2] / ra, -1.0, 1.0))  # polar angle
    theta_c = np.arccos(np.clip(pos_b[..., 2] / rc, -1.0, 1.0))
    eps_a = np.arctan2(pos_a[..., 1], pos_a[..., 0])
    eps_c = np.arctan2(pos_b[..., 1], pos_b[..., 0])
    cos_gamma = np.cos(theta_a) * np.cos(theta_c) + np.cos(eps_a - eps_c) * np.sin(
        theta_a
    ) * np.sin(theta_c)
    d2 = ra**2 + rc**2 - 2.0 * ra * rc * cos_gamma
    return np.sqrt(np.maximum(d2, 0.0))


def elevation_deg(sat_pos: np.ndarray, gs_ecef: np.ndarray) -> np.ndarray:
    """Elevation of satellite(s) above the station's local horizon [deg]."""
    vec = sat_pos - gs_ecef
    zenith = gs_ecef / np.linalg.norm(gs_ecef)
    sin_el = (vec @ zenith) / np.linalg.norm(vec, axis=-1)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def visible(sat_pos: np.ndarray, gs: GroundStation) -> bool:
    """True iff the satellite is at or above the station's elevation mask."""
    return bool(elevation_deg(sat_pos, gs.ecef()) >= gs.min_elevation_deg)


@dataclass(frozen=True)
class Window:
    """Maximal run of consecutive visible steps to one ground station."""

    start: int
    end: int  # inclusive last visible step
    gs_id: int

    def duration_steps(self) -> int:
        return self.end - self.start + 1


def visibility_masks(
    spec: ConstellationSpec, gs_list: list[GroundStation], grid: TimeGrid
) -> np.ndarray:
    """Boolean visibility array of shape (steps, P, N, G)."""
    P, N, G = spec.planes, spec.sats_per_plane, len(gs_list)
    masks = np.zeros((grid.steps, P, N, G), dtype=bool)
    gs_pos = [gs.ecef() for gs in gs_list]
    for t in range(grid.steps):
        pos = propagate(spec, grid, t)
        flat = pos.reshape(-1, 3)
        for g, gs in enumerate(gs_list):
            el = elevation_deg(flat, gs_pos[g])
            masks[t, :, :, g] = (el >= gs.min_elevation_deg).reshape(P, N)
    return masks


def connection_windows(
    spec: ConstellationSpec, gs_list: list[GroundStation], grid: TimeGrid
) -> dict[SatId, list[Window]]:
    """Per-satellite maximal visibility windows, separated per ground station."""
    windows: dict[SatId, list[Window]] = {s: [] for s in spec.sat_ids()}
    if not gs_list:
        return windows
    masks = visibility_masks(spec, gs_list, grid)
    for sat in spec.sat_ids():
        col = masks[:, sat.plane - 1, sat.slot - 1, :]
        for g, gs in enumerate(gs_list):
            vis = col[:, g]
            start = None
            for t in range(grid.steps):
                if vis[t] and start is None:
                    start = t
                elif not vis[t] and start is not None:
                    windows[sat].append(Window(start, t - 1, gs.id))
                    start = None
            if start is not None:
                windows[sat].append(Window(start, grid.steps - 1, gs.id))
        windows[sat].sort(key=lambda w: (w.start, w.gs_id))
    return windows


def window_statistics(
    windows: dict[SatId, list[Window]], grid: TimeGrid
) -> tuple[float, float]:
    """(mean window duration [s], mean revisit interval [s]).

    Revisit gaps are measured between merged visibility intervals of each
    satellite (overlapping windows to different stations count as one
    contact period).
    """
    durations = []
    gaps = []
    for sat, wins in windows.items():
        for w in wins:
            durations.append(w.duration_steps() * grid.step_s)
        merged: list[list[int]] = []
        for w in sorted(wins, key=lambda w: w.start):
            if merged and w.start <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], w.end)
            else:
                merged.append([w.start, w.end])
        for prev, nxt in zip(merged, merged[1:]):
            gaps.append((nxt[0] - prev[1] - 1) * grid.step_s)
    mean_dur = float(np.mean(durations)) if durations else 0.0
    mean_gap = float(np.mean(gaps)) if gaps else 0.0
    return mean_dur, mean_gap
