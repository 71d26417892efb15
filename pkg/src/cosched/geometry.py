"""Circular-orbit constellation propagation and visibility windows.

Two-body circular Keplerian orbits over a spherical, uniformly rotating
Earth. No J2, drag, or SGP4: the scheduling experiments depend on the
structure of the visibility windows, not on ephemeris fidelity, and the
idealized model keeps every window computation an exactly reproducible pure
function of its inputs.

All positions are Earth-fixed (ECEF) kilometers; all times are seconds since
the start of the scheduling horizon. A per-scenario ``epoch_offset_s`` shifts
the constellation along its orbits and the Earth in its rotation, which is
how randomized horizon starts are realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .intervals import TimeInterval

EARTH_RADIUS_KM = 6378.137
MU_KM3_S2 = 398600.4418
EARTH_ROT_RAD_S = 7.2921159e-5


@dataclass(frozen=True)
class OrbitalPlane:
    """One circular orbital plane; satellites are evenly spaced along it."""

    inclination_deg: float
    altitude_km: float
    raan_deg: float
    count: int
    phase0_deg: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError(f"inclination {self.inclination_deg} outside [0, 180]")
        if self.count < 1:
            raise ValueError("plane must hold at least one satellite")
        if self.altitude_km <= 0:
            raise ValueError("altitude must be positive")

    @property
    def radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.radius_km**3 / MU_KM3_S2)

    @property
    def mean_motion_rad_s(self) -> float:
        return 2.0 * math.pi / self.period_s

    def slot_phase_rad(self, slot: int) -> float:
        # evenly spaced true anomalies, 360/count apart
        return math.radians(self.phase0_deg + 360.0 * slot / self.count)


@dataclass(frozen=True)
class SatelliteSpec:
    agent_id: int
    plane_index: int
    slot: int
    max_off_nadir_deg: float
    memory_bytes: float

    def __post_init__(self):
        if not 0.0 < self.max_off_nadir_deg < 90.0:
            raise ValueError("max off-nadir angle must lie in (0, 90) degrees")
        if self.memory_bytes <= 0:
            raise ValueError("memory capacity must be positive")


@dataclass(frozen=True)
class Constellation:
    name: str
    planes: tuple[OrbitalPlane, ...]
    max_off_nadir_deg: float
    memory_bytes: float

    def satellites(self) -> list[SatelliteSpec]:
        sats = []
        agent_id = 0
        for pi, plane in enumerate(self.planes):
            for slot in range(plane.count):
                sats.append(
                    SatelliteSpec(
                        agent_id=agent_id,
                        plane_index=pi,
                        slot=slot,
                        max_off_nadir_deg=self.max_off_nadir_deg,
                        memory_bytes=self.memory_bytes,
                    )
                )
                agent_id += 1
        return sats

    @property
    def size(self) -> int:
        return sum(p.count for p in self.planes)


@dataclass(frozen=True)
class GroundStation:
    name: str
    latitude_deg: float
    longitude_deg: float
    min_elevation_deg: float
    downlink_rate_bps: float  # bytes per second

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ValueError("latitude outside [-90, 90]")
        if self.downlink_rate_bps <= 0:
            raise ValueError("downlink rate must be positive")


@dataclass(frozen=True)
class Target:
    target_id: int
    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ValueError("latitude outside [-90, 90]")


def latlon_to_ecef(lat_deg: float, lon_deg: float, radius_km: float = EARTH_RADIUS_KM) -> np.ndarray:
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    return radius_km * np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )


def propagate(
    plane: OrbitalPlane, slot: int, times, epoch_offset_s: float = 0.0
) -> np.ndarray:
    """ECEF position(s) in km of one satellite at the given time(s).

    ``times`` may be a scalar or an array; the result has shape (3,) or
    (N, 3). Deterministic pure function of its inputs.
    """
    t = np.asarray(times, dtype=float)
    scalar = t.ndim == 0
    t_abs = t + epoch_offset_s

    r = plane.radius_km
    u = plane.slot_phase_rad(slot) + plane.mean_motion_rad_s * t_abs
    inc = math.radians(plane.inclination_deg)
    raan = math.radians(plane.raan_deg)

    cu, su = np.cos(u), np.sin(u)
    # inertial frame: rotate the in-plane circle by inclination, then RAAN
    xi = r * (cu * math.cos(raan) - su * math.cos(inc) * math.sin(raan))
    yi = r * (cu * math.sin(raan) + su * math.cos(inc) * math.cos(raan))
    zi = r * (su * math.sin(inc))

    theta = EARTH_ROT_RAD_S * t_abs
    ct, st = np.cos(theta), np.sin(theta)
    xe = xi * ct + yi * st
    ye = -xi * st + yi * ct

    pos = np.stack([xe, ye, zi], axis=-1)
    return pos[()] if not scalar else pos


def off_nadir_deg(sat_pos: np.ndarray, point_ecef: np.ndarray) -> np.ndarray:
    """Angle between the nadir direction and the line of sight to a ground point."""
    to_point = point_ecef - sat_pos
    nadir = -sat_pos
    num = np.sum(to_point * nadir, axis=-1)
    den = np.linalg.norm(to_point, axis=-1) * np.linalg.norm(nadir, axis=-1)
    cosang = np.clip(num / den, -1.0, 1.0)
    return np.degrees(np.arccos(cosang))


def elevation_deg(sat_pos: np.ndarray, point_ecef: np.ndarray) -> np.ndarray:
    """Elevation of the satellite above the local horizon of a ground point."""
    up = point_ecef / np.linalg.norm(point_ecef)
    rel = sat_pos - point_ecef
    sinel = np.sum(rel * up, axis=-1) / np.linalg.norm(rel, axis=-1)
    return np.degrees(np.arcsin(np.clip(sinel, -1.0, 1.0)))


def target_visible(sat_pos: np.ndarray, point_ecef: np.ndarray, max_off_nadir_deg: float) -> np.ndarray:
    """Boolean visibility: within the off-nadir cone and above the local horizon."""
    within = off_nadir_deg(sat_pos, point_ecef) <= max_off_nadir_deg
    los = elevation_deg(sat_pos, point_ecef) >= 0.0
    return within & los


def time_grid(horizon: TimeInterval, step_s: float) -> np.ndarray:
    """Scan grid covering the horizon; last sample pinned to the horizon end."""
    if step_s <= 0:
        raise ValueError("step must be positive")
    n = int(math.ceil(horizon.duration / step_s))
    times = horizon.start + step_s * np.arange(n + 1, dtype=float)
    times[-1] = horizon.end
    return times


def mask_to_windows(mask, times, predicate, horizon: TimeInterval, tol_s: float = 1.0):
    """Extract maximal true-runs of ``mask`` and bisect their edges to <= tol_s.

    ``predicate(t)`` must be the scalar truth of the same condition that
    produced ``mask`` on ``times``. Edges abutting the horizon are pinned to
    the horizon boundary (no refinement possible beyond it).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    edges = np.flatnonzero(np.diff(mask.astype(np.int8)))
    run_starts = [0] if mask[0] else []
    run_ends = []
    for e in edges:
        if mask[e]:  # true -> false
            run_ends.append(e)
        else:  # false -> true
            run_starts.append(e + 1)
    if mask[-1]:
        run_ends.append(len(mask) - 1)

    def bisect(lo, hi, want_rising):
        # invariant: predicate(lo) != predicate(hi); returns the true-side edge
        while hi - lo > tol_s:
            mid = 0.5 * (lo + hi)
            if bool(predicate(mid)) == want_rising:
                hi = mid
            else:
                lo = mid
        return hi if want_rising else lo

    windows = []
    for i0, i1 in zip(run_starts, run_ends):
        if i0 == 0:
            w_start = times[0]
        else:
            # rising edge between times[i0-1] (false) and times[i0] (true)
            t = bisect(times[i0 - 1], times[i0], want_rising=True)
            w_start = t
        if i1 == len(times) - 1:
            w_end = times[-1]
        else:
            t = bisect(times[i1], times[i1 + 1], want_rising=False)
            w_end = t
        w_start = max(w_start, horizon.start)
        w_end = min(w_end, horizon.end)
        if w_end > w_start:
            windows.append(TimeInterval(w_start, w_end))
    return windows


def access_windows(
    plane: OrbitalPlane,
    sat: SatelliteSpec,
    target: Target,
    horizon: TimeInterval,
    step_s: float = 10.0,
    epoch_offset_s: float = 0.0,
) -> list[TimeInterval]:
    """Maximal intervals during which the target lies inside the sensor cone."""
    times = time_grid(horizon, step_s)
    tgt = latlon_to_ecef(target.latitude_deg, target.longitude_deg)
    pos = propagate(plane, sat.slot, times, epoch_offset_s)
    mask = target_visible(pos, tgt, sat.max_off_nadir_deg)

    def pred(t):
        p = propagate(plane, sat.slot, np.array([t]), epoch_offset_s)
        return bool(target_visible(p, tgt, sat.max_off_nadir_deg)[0])

    return mask_to_windows(mask, times, pred, horizon)


def downlink_windows(
    plane: OrbitalPlane,
    sat: SatelliteSpec,
    station: GroundStation,
    horizon: TimeInterval,
    step_s: float = 10.0,
    epoch_offset_s: float = 0.0,
) -> list[tuple[TimeInterval, float]]:
    """Ground-station passes with their capacities (duration x downlink rate)."""
    times = time_grid(horizon, step_s)
    stn = latlon_to_ecef(station.latitude_deg, station.longitude_deg)
    pos = propagate(plane, sat.slot, times, epoch_offset_s)
    mask = elevation_deg(pos, stn) >= station.min_elevation_deg

    def pred(t):
        p = propagate(plane, sat.slot, np.array([t]), epoch_offset_s)
        return bool(elevation_deg(p, stn)[0] >= station.min_elevation_deg)

    wins = mask_to_windows(mask, times, pred, horizon)
    return [(w, w.duration * station.downlink_rate_bps) for w in wins]


def batch_access_windows(
    constellation: Constellation,
    targets: list[Target],
    horizon: TimeInterval,
    step_s: float = 10.0,
    epoch_offset_s: float = 0.0,
) -> dict[tuple[int, int], list[TimeInterval]]:
    """Access windows for every (satellite, target) pair.

    Equivalent to calling :func:`access_windows` per pair, but propagates each
    satellite's position grid once and sweeps all targets against it.
    """
    times = time_grid(horizon, step_s)
    out: dict[tuple[int, int], list[TimeInterval]] = {}
    tgt_ecef = {t.target_id: latlon_to_ecef(t.latitude_deg, t.longitude_deg) for t in targets}
    for sat in constellation.satellites():
        plane = constellation.planes[sat.plane_index]
        pos = propagate(plane, sat.slot, times, epoch_offset_s)
        for target in targets:
            tgt = tgt_ecef[target.target_id]
            mask = target_visible(pos, tgt, sat.max_off_nadir_deg)
            if not mask.any():
                out[(sat.agent_id, target.target_id)] = []
                continue

            def pred(t, plane=plane, slot=sat.slot, tgt=tgt, lim=sat.max_off_nadir_deg):
                p = propagate(plane, slot, np.array([t]), epoch_offset_s)
                return bool(target_visible(p, tgt, lim)[0])

            out[(sat.agent_id, target.target_id)] = mask_to_windows(mask, times, pred, horizon)
    return out


def batch_downlink_windows(
    constellation: Constellation,
    stations: list[GroundStation],
    horizon: TimeInterval,
    step_s: float = 10.0,
    epoch_offset_s: float = 0.0,
) -> dict[int, list[tuple[TimeInterval, float]]]:
    """Merged, time-sorted station passes per satellite."""
    out: dict[int, list[tuple[TimeInterval, float]]] = {}
    for sat in constellation.satellites():
        plane = constellation.planes[sat.plane_index]
        passes: list[tuple[TimeInterval, float]] = []
        for station in stations:
            passes.extend(
                downlink_windows(plane, sat, station, horizon, step_s, epoch_offset_s)
            )
        passes.sort(key=lambda wc: (wc[0].start, wc[0].end))
        out[sat.agent_id] = passes
    return out


# Constellations modeled after operational low-Earth-orbit systems. The paper
# sources give plane counts and inclinations; altitudes are our defaults.
def planet_constellation(altitude_km: float = 475.0) -> Constellation:
    planes = []
    for i in range(2):
        planes.append(OrbitalPlane(95.0, altitude_km, raan_deg=180.0 * i, count=95))
    for i in range(2):
        planes.append(
            OrbitalPlane(52.0, altitude_km, raan_deg=90.0 + 180.0 * i, count=5)
        )
    return Constellation("planet", tuple(planes), max_off_nadir_deg=60.0, memory_bytes=125e9)


def walker_constellation(altitude_km: float = 500.0) -> Constellation:
    planes = []
    for i in range(6):
        planes.append(OrbitalPlane(88.0, altitude_km, raan_deg=30.0 * i, count=14))
    for i in range(2):
        planes.append(
            OrbitalPlane(51.6, altitude_km, raan_deg=15.0 + 90.0 * i, count=12)
        )
    return Constellation("walker", tuple(planes), max_off_nadir_deg=45.0, memory_bytes=125e9)


DEFAULT_STATIONS = (
    GroundStation("fairbanks", 64.86, -147.85, min_elevation_deg=5.0, downlink_rate_bps=62.5e6),
    GroundStation("guam", 13.62, 144.86, min_elevation_deg=5.0, downlink_rate_bps=62.5e6),
)
