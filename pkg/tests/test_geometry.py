import math

import numpy as np
import pytest

from cosched.geometry import (
    EARTH_ROT_RAD_S,
    Constellation,
    GroundStation,
    OrbitalPlane,
    SatelliteSpec,
    Target,
    access_windows,
    downlink_windows,
    elevation_deg,
    latlon_to_ecef,
    off_nadir_deg,
    planet_constellation,
    propagate,
    target_visible,
    time_grid,
    walker_constellation,
)
from cosched.intervals import TimeInterval, disjoint_sorted

POLAR = OrbitalPlane(inclination_deg=90.0, altitude_km=500.0, raan_deg=0.0, count=1)
EQUATORIAL = OrbitalPlane(inclination_deg=0.0, altitude_km=500.0, raan_deg=0.0, count=1)
DAY = TimeInterval(0.0, 86400.0)


def sat(plane, max_off_nadir=45.0):
    return SatelliteSpec(agent_id=0, plane_index=0, slot=0, max_off_nadir_deg=max_off_nadir, memory_bytes=1.25e11)


def ecef_to_eci(pos, t):
    theta = EARTH_ROT_RAD_S * t
    c, s = math.cos(theta), math.sin(theta)
    x, y, z = pos
    return np.array([x * c - y * s, x * s + y * c, z])


def test_initial_position_on_reference_axis():
    pos = propagate(EQUATORIAL, 0, 0.0)
    r = EQUATORIAL.radius_km
    assert pos == pytest.approx([r, 0.0, 0.0])


def test_orbit_periodic_in_inertial_frame():
    t0, t1 = 123.0, 123.0 + POLAR.period_s
    a = ecef_to_eci(propagate(POLAR, 0, t0), t0)
    b = ecef_to_eci(propagate(POLAR, 0, t1), t1)
    assert np.allclose(a, b, atol=1e-6)


def test_altitude_constant_along_orbit():
    times = np.linspace(0.0, 2 * POLAR.period_s, 500)
    radii = np.linalg.norm(propagate(POLAR, 0, times), axis=1)
    assert np.allclose(radii, POLAR.radius_km, atol=1e-9)


def test_polar_orbit_crosses_equator_twice_per_period():
    # 1 s sampling over one full period (offset avoids the exact t=0 node)
    times = np.arange(0.5, 0.5 + POLAR.period_s + 1.0, 1.0)
    z = propagate(POLAR, 0, times)[:, 2]
    crossings = int(np.sum(np.signbit(z[:-1]) != np.signbit(z[1:])))
    assert crossings == 2


def test_ground_speed_bounds_position_change():
    # consecutive positions differ by at most orbital speed x dt x 1.1
    speed = 2 * math.pi * POLAR.radius_km / POLAR.period_s
    dt = 1e-3
    times = np.array([0.0, 1000.0, 2851.7])
    for t in times:
        d = np.linalg.norm(propagate(POLAR, 0, t + dt) - propagate(POLAR, 0, t))
        assert d <= speed * dt * 1.1


def test_pole_target_invisible_from_equatorial_orbit():
    tgt = Target(0, 90.0, 0.0)
    assert access_windows(EQUATORIAL, sat(EQUATORIAL, 60.0), tgt, DAY) == []


def test_nadir_point_has_zero_off_nadir_and_90_elevation():
    pos = propagate(POLAR, 0, 0.0)
    ground = pos / np.linalg.norm(pos) * 6378.137
    assert off_nadir_deg(pos, ground) == pytest.approx(0.0, abs=1e-6)
    assert elevation_deg(pos, ground) == pytest.approx(90.0, abs=1e-6)
    assert bool(target_visible(pos, ground, 5.0))


def test_target_beyond_horizon_not_visible():
    pos = propagate(EQUATORIAL, 0, 0.0)
    antipode = latlon_to_ecef(0.0, 180.0)
    # wide cone but the planet is in the way
    assert not bool(target_visible(pos, antipode, 89.0))


def test_access_windows_match_dense_sampling():
    tgt = Target(0, 40.0, -100.0)
    s = sat(POLAR, 60.0)
    windows = access_windows(POLAR, s, tgt, DAY)
    assert windows, "mid-latitude target should be seen by a polar satellite"
    assert disjoint_sorted(windows)
    for w in windows:
        assert DAY.contains(w)

    point = latlon_to_ecef(tgt.latitude_deg, tgt.longitude_deg)
    dense = np.arange(0.0, 86400.0, 1.0)
    mask = target_visible(propagate(POLAR, 0, dense), point, 60.0)
    runs = int(np.sum(mask[1:] & ~mask[:-1])) + int(mask[0])
    assert len(windows) == runs
    # every dense-sample hit falls inside a reported window (1 s edge slack)
    hits = dense[mask]
    for t in hits:
        assert any(w.start - 1.0 <= t <= w.end + 1.0 for w in windows)
    # window edges are refined to within 1 s of the visibility flip
    for w in windows:
        mid = 0.5 * (w.start + w.end)
        assert bool(target_visible(propagate(POLAR, 0, mid), point, 60.0))


def test_wider_sensor_cone_contains_narrow_cone_windows():
    tgt = Target(0, 40.0, -100.0)
    narrow = access_windows(POLAR, sat(POLAR, 30.0), tgt, DAY)
    wide = access_windows(POLAR, sat(POLAR, 60.0), tgt, DAY)
    assert narrow, "need at least one pass to make the test meaningful"
    for w in narrow:
        assert any(
            v.start <= w.start + 1e-6 and w.end - 1e-6 <= v.end for v in wide
        ), f"{w} not contained in any wide-cone window"


def test_access_windows_deterministic():
    tgt = Target(0, 40.0, -100.0)
    s = sat(POLAR, 60.0)
    assert access_windows(POLAR, s, tgt, DAY) == access_windows(POLAR, s, tgt, DAY)


def test_downlink_capacity_is_duration_times_rate():
    station = GroundStation("fairbanks", 64.86, -147.85, 5.0, 62.5e6)
    passes = downlink_windows(POLAR, sat(POLAR), station, DAY)
    assert passes, "polar orbit must see a high-latitude station daily"
    for window, cap in passes:
        assert cap == pytest.approx(window.duration * 62.5e6)
    # arithmetic check: a 160 s pass at 62.5 MB/s carries 10 000 MB
    assert 160.0 * 62.5e6 == pytest.approx(1e10)


def test_time_grid_covers_horizon():
    grid = time_grid(TimeInterval(10.0, 95.0), 10.0)
    assert grid[0] == 10.0 and grid[-1] == 95.0
    assert np.all(np.diff(grid) > 0)


def test_constellation_enumeration_is_plane_major_and_sized():
    c = Constellation(
        name="toy",
        planes=(
            OrbitalPlane(90.0, 500.0, 0.0, 2),
            OrbitalPlane(52.0, 500.0, 40.0, 3),
        ),
        max_off_nadir_deg=45.0,
        memory_bytes=1.0,
    )
    sats = c.satellites()
    assert c.size == 5 and len(sats) == 5
    assert [s.agent_id for s in sats] == [0, 1, 2, 3, 4]
    assert [(s.plane_index, s.slot) for s in sats] == [
        (0, 0), (0, 1), (1, 0), (1, 1), (1, 2),
    ]


def test_reference_constellation_sizes():
    assert planet_constellation().size == 200
    assert walker_constellation().size == 108
