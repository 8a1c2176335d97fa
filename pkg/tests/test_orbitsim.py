"""Orbit propagation, zones, eclipse model, and pass-window generation."""
import math
from datetime import date, timedelta, timezone

import numpy as np
import pytest

from payloadsim import orbitsim as orb
from payloadsim.errors import ConfigError, InvalidTimeError


def test_orbital_period_oracle_values():
    # frozen from independent evaluation of 2*pi*sqrt(a^3/mu)
    assert orb.orbital_period(orb.OrbitConfig()) == pytest.approx(5738.99, abs=0.5)
    assert orb.orbital_period(orb.OrbitConfig(altitude_km=1e-9)) == pytest.approx(5069.34, abs=0.5)


def test_orbital_period_mu_scaling():
    base = orb.orbital_period(orb.OrbitConfig())
    quad = orb.orbital_period(orb.OrbitConfig(mu_km3_s2=4 * orb.MU_EARTH_KM3_S2))
    assert quad == pytest.approx(base / 2, rel=1e-12)


def test_config_validation():
    with pytest.raises(ConfigError):
        orb.OrbitConfig(altitude_km=0)
    with pytest.raises(ConfigError):
        orb.OrbitConfig(eclipse_fraction=1.0)
    with pytest.raises(ConfigError):
        orb.OrbitConfig(window_mode="magic")
    with pytest.raises(ConfigError):
        orb.OrbitConfig(epoch=orb.DEFAULT_EPOCH.replace(tzinfo=None))


def test_propagate_phase_anchors():
    cfg = orb.OrbitConfig()
    T = orb.orbital_period(cfg)
    assert orb.propagate(cfg, cfg.epoch).lat_deg == pytest.approx(0.0, abs=1e-9)
    quarter = orb.propagate(cfg, cfg.epoch + timedelta(seconds=T / 4))
    assert abs(quarter.lat_deg) == pytest.approx(82.4, abs=0.1)
    full = orb.propagate(cfg, cfg.epoch + timedelta(seconds=T))
    assert full.lat_deg == pytest.approx(0.0, abs=1e-6)
    drift = full.lon_deg - orb.propagate(cfg, cfg.epoch).lon_deg
    assert drift == pytest.approx(-T * 360.0 / 86164.0, abs=0.1)


def test_propagate_rejects_pre_epoch():
    cfg = orb.OrbitConfig()
    with pytest.raises(InvalidTimeError):
        orb.propagate(cfg, cfg.epoch - timedelta(seconds=1))
    with pytest.raises(InvalidTimeError):
        orb.in_eclipse(cfg, cfg.epoch - timedelta(seconds=1))


def test_propagate_is_pure_and_latitude_bounded():
    cfg = orb.OrbitConfig()
    t = cfg.epoch + timedelta(seconds=12345.678)
    first = orb.propagate(cfg, t)
    for _ in range(10_000):
        p = orb.propagate(cfg, t)
        assert (p.lat_deg, p.lon_deg) == (first.lat_deg, first.lon_deg)
    lat, _ = orb.track_arrays(cfg, 0.0, 7.3, 20_000)
    assert np.max(np.abs(lat)) <= 180.0 - cfg.inclination_deg + 1e-9


def test_geodetic_point_normalizes_longitude():
    assert orb.GeodeticPoint(10.0, 190.0).lon_deg == -170.0
    assert orb.GeodeticPoint(10.0, -180.0).lon_deg == -180.0
    assert orb.GeodeticPoint(10.0, 180.0).lon_deg == -180.0
    with pytest.raises(ConfigError):
        orb.GeodeticPoint(91.0, 0.0)


def test_classify_zone_examples_and_precedence():
    pol = orb.ZonePolicy()
    assert orb.classify_zone(pol, orb.GeodeticPoint(80, 10)) == "polar"
    assert orb.classify_zone(pol, orb.GeodeticPoint(-20, -40)) == "saa"
    assert orb.classify_zone(pol, orb.GeodeticPoint(0, 100)) == "nominal"
    # a polygon reaching poleward of the polar threshold still reports polar
    tall = orb.ZonePolicy(saa_polygon=(
        orb.GeodeticPoint(-80, -90), orb.GeodeticPoint(-80, 40),
        orb.GeodeticPoint(0, 40), orb.GeodeticPoint(0, -90)))
    assert orb.classify_zone(tall, orb.GeodeticPoint(-70, 0)) == "polar"


def test_classify_zone_partitions_globe():
    pol = orb.ZonePolicy()
    rng = np.random.default_rng(8)
    lat = rng.uniform(-90, 90, 5000)
    lon = rng.uniform(-180, 180, 5000)
    codes = orb.classify_zones(pol, lat, lon)
    assert set(np.unique(codes)) <= {0, 1, 2}
    polar = np.abs(lat) > 60.0
    assert np.all(codes[polar] == 1)
    in_rect = (~polar) & (lat >= -50) & (lat < 0) & (lon >= -90) & (lon < 40)
    assert np.all(codes[in_rect] == 2)
    assert np.all(codes[~polar & ~in_rect] == 0)


def test_zone_policy_validation():
    with pytest.raises(ConfigError):
        orb.ZonePolicy(polar_lat_deg=0.0)
    with pytest.raises(ConfigError):
        orb.ZonePolicy(saa_polygon=(orb.GeodeticPoint(0, 0), orb.GeodeticPoint(1, 1)))
    bow_tie = (orb.GeodeticPoint(0, 0), orb.GeodeticPoint(10, 10),
               orb.GeodeticPoint(10, 0), orb.GeodeticPoint(0, 10))
    with pytest.raises(ConfigError):
        orb.ZonePolicy(saa_polygon=bow_tie)


def test_eclipse_examples():
    cfg = orb.OrbitConfig()
    T = orb.orbital_period(cfg)
    none = orb.OrbitConfig(eclipse_fraction=0.0)
    assert not any(orb.eclipse_mask(none, 0.0, T / 100, 200))
    mid = cfg.epoch + timedelta(seconds=0.5 * T)
    assert orb.in_eclipse(cfg, mid)
    assert not orb.in_eclipse(cfg, cfg.epoch)


def test_eclipse_duty_cycle():
    cfg = orb.OrbitConfig()
    T = orb.orbital_period(cfg)
    one = orb.eclipse_mask(cfg, 0.0, 1.0, int(round(T)))
    assert one.mean() == pytest.approx(0.35, abs=0.001)
    ten = orb.eclipse_mask(cfg, 0.0, 1.0, int(round(10 * T)))
    assert ten.mean() == pytest.approx(0.35, abs=0.002)


def test_eclipse_is_single_contiguous_arc_per_orbit():
    cfg = orb.OrbitConfig()
    T = orb.orbital_period(cfg)
    m = orb.eclipse_mask(cfg, 0.0, 1.0, int(round(T)))
    flips = int(np.count_nonzero(np.diff(m.astype(np.int8))))
    assert flips == 2


def test_scheduled_windows_defaults():
    cfg = orb.OrbitConfig()
    ws = orb.pass_windows(cfg, orb.default_stations(), date(2026, 1, 5))
    uhf = [w for w in ws if w.channel == "uhf"]
    sband = [w for w in ws if w.channel == "sband"]
    assert len(uhf) == 4 and all(w.duration_s == 600 for w in uhf)
    assert len(sband) == 2 and all(w.duration_s == 480 for w in sband)
    assert sum(w.duration_s for w in uhf) == 2400.0
    assert ws == sorted(ws, key=lambda w: w.start)
    starts = [w.start for w in ws]
    assert all(s.tzinfo == timezone.utc for s in starts)


def test_scheduled_windows_empty_stations():
    assert orb.pass_windows(orb.OrbitConfig(), [], date(2026, 1, 5)) == []


def test_station_schedule_validation():
    with pytest.raises(ConfigError):
        orb.GroundStation("x", schedule=((0, 0),))
    with pytest.raises(ConfigError):
        orb.GroundStation("x", schedule=((100, 600), (400, 600)))
    with pytest.raises(ConfigError):
        orb.GroundStation("x", schedule=((86200, 600),))


def test_geometric_windows_mid_latitude():
    cfg = orb.OrbitConfig(window_mode="geometric")
    st = orb.GroundStation("g1", "uhf")
    for d in (2, 3, 4):
        ws = orb.pass_windows(cfg, [st], date(2026, 1, d))
        assert 2 <= len(ws) <= 6
        for w in ws:
            assert 120 <= w.duration_s <= 720
        for a, b in zip(ws, ws[1:]):
            assert a.end <= b.start


def test_geometric_windows_polar_station_every_orbit():
    cfg = orb.OrbitConfig(window_mode="geometric")
    pole = orb.GroundStation("pole", "uhf", lat_deg=89.99, lon_deg=0.0)
    ws = orb.pass_windows(cfg, [pole], date(2026, 1, 2))
    T = orb.orbital_period(cfg)
    assert len(ws) >= math.floor(86400.0 / T)


def test_geometric_windows_clamped_to_epoch():
    cfg = orb.OrbitConfig(window_mode="geometric")
    st = orb.GroundStation("g1", "uhf")
    ws = orb.pass_windows(cfg, [st], date(2025, 12, 31))
    assert all(w.start >= cfg.epoch for w in ws)
