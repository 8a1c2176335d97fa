"""Circular sun-synchronous orbit propagation, zone classification, eclipse
state, and ground-station pass windows.

All functions are pure; configs are immutable dataclasses. The ground-track
model is analytic (spherical Earth, no drag or precession within a day), which
is adequate for scheduling and zone gating.
"""
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .errors import ConfigError, InvalidTimeError

MU_EARTH_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6378.137
SIDEREAL_DAY_S = 86164.0
EARTH_ROT_DEG_S = 360.0 / SIDEREAL_DAY_S

DEFAULT_EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)

# Daily contact schedule offsets (seconds from midnight UTC) and durations.
DEFAULT_UHF_SCHEDULE = ((4200, 600), (24600, 600), (45000, 600), (65400, 600))
DEFAULT_SBAND_SCHEDULE = ((12000, 480), (55200, 480))


def _norm_lon(lon: float) -> float:
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0:
        lon += 360.0
    return lon - 180.0


@dataclass(frozen=True)
class OrbitConfig:
    altitude_km: float = 550.0
    inclination_deg: float = 97.6
    epoch: datetime = DEFAULT_EPOCH
    raan_deg: float = 0.0
    eclipse_fraction: float = 0.35
    window_mode: str = "scheduled"
    mu_km3_s2: float = MU_EARTH_KM3_S2

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ConfigError("altitude_km must be > 0")
        if not 0.0 <= self.eclipse_fraction < 1.0:
            raise ConfigError("eclipse_fraction must be in [0, 1)")
        if self.window_mode not in ("scheduled", "geometric"):
            raise ConfigError(f"unknown window_mode {self.window_mode!r}")
        if self.mu_km3_s2 <= 0:
            raise ConfigError("mu_km3_s2 must be > 0")
        if self.epoch.tzinfo is None:
            raise ConfigError("epoch must be timezone-aware UTC")


@dataclass(frozen=True)
class GeodeticPoint:
    lat_deg: float
    lon_deg: float
    alt_km: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ConfigError("lat_deg must be in [-90, 90]")
        object.__setattr__(self, "lon_deg", _norm_lon(self.lon_deg))


_DEFAULT_SAA = (
    GeodeticPoint(-50.0, -90.0),
    GeodeticPoint(-50.0, 40.0),
    GeodeticPoint(0.0, 40.0),
    GeodeticPoint(0.0, -90.0),
)


def _segments_cross(a, b, c, d) -> bool:
    # proper intersection of open segments ab and cd
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass(frozen=True)
class ZonePolicy:
    polar_lat_deg: float = 60.0
    saa_polygon: tuple = _DEFAULT_SAA

    def __post_init__(self):
        if not 0.0 < self.polar_lat_deg < 90.0:
            raise ConfigError("polar_lat_deg must be in (0, 90)")
        poly = tuple(self.saa_polygon)
        if len(poly) < 3:
            raise ConfigError("saa_polygon needs at least 3 vertices")
        pts = [(p.lon_deg, p.lat_deg) for p in poly]
        n = len(pts)
        for i in range(n):
            for j in range(i + 1, n):
                if j in (i, (i + 1) % n) or i == (j + 1) % n:
                    continue
                if _segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                    raise ConfigError("saa_polygon must be simple")
        object.__setattr__(self, "saa_polygon", poly)


@dataclass(frozen=True)
class PassWindow:
    station_id: str
    channel: str
    start: datetime
    end: datetime

    def __post_init__(self):
        if self.channel not in ("uhf", "sband"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.end <= self.start:
            raise ConfigError("window end must be after start")

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()


@dataclass(frozen=True)
class GroundStation:
    station_id: str
    channel: str = "uhf"
    lat_deg: float = 44.64
    lon_deg: float = -63.58
    min_elevation_deg: float = 10.0
    # (offset seconds from midnight UTC, duration seconds), used in scheduled mode
    schedule: tuple = ()

    def __post_init__(self):
        if self.channel not in ("uhf", "sband"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        sched = tuple((int(o), int(d)) for o, d in self.schedule)
        prev_end = -1
        for off, dur in sched:
            if dur <= 0 or off < 0 or off + dur > 86400:
                raise ConfigError("schedule entries must fit within the day")
            if off <= prev_end:
                raise ConfigError("schedule entries must be sorted and non-overlapping")
            prev_end = off + dur
        object.__setattr__(self, "schedule", sched)


def default_stations() -> list[GroundStation]:
    """One UHF duplex and one S-band simplex station sharing a site."""
    return [
        GroundStation("gs-uhf", "uhf", schedule=DEFAULT_UHF_SCHEDULE),
        GroundStation("gs-sband", "sband", schedule=DEFAULT_SBAND_SCHEDULE),
    ]


def orbital_period(config: OrbitConfig) -> float:
    """Keplerian period in seconds for the configured circular orbit."""
    a = EARTH_RADIUS_KM + config.altitude_km
    return 2.0 * math.pi * math.sqrt(a**3 / config.mu_km3_s2)


def _elapsed(config: OrbitConfig, t: datetime) -> float:
    dt = (t - config.epoch).total_seconds()
    if dt < 0:
        raise InvalidTimeError(f"{t.isoformat()} precedes the orbit epoch")
    return dt


def track_arrays(config: OrbitConfig, t0_s: float, dt_s: float, n: int):
    """Ground track sampled at t0_s + k*dt_s seconds past epoch.

    Returns (lat_deg, lon_deg) arrays; the scalar propagate() wraps this.
    """
    t = t0_s + dt_s * np.arange(n, dtype=np.float64)
    period = orbital_period(config)
    u = 2.0 * math.pi * t / period
    inc = math.radians(config.inclination_deg)
    lat = np.degrees(np.arcsin(np.sin(inc) * np.sin(u)))
    lon = np.degrees(np.arctan2(math.cos(inc) * np.sin(u), np.cos(u)))
    lon += config.raan_deg - EARTH_ROT_DEG_S * t
    lon = np.mod(lon + 180.0, 360.0) - 180.0
    return lat, lon


def propagate(config: OrbitConfig, t: datetime) -> GeodeticPoint:
    """Sub-satellite point at time t (t must not precede the epoch)."""
    dt = _elapsed(config, t)
    lat, lon = track_arrays(config, dt, 0.0, 1)
    return GeodeticPoint(float(lat[0]), float(lon[0]), config.altitude_km)


def classify_zone(policy: ZonePolicy, p: GeodeticPoint) -> str:
    """'polar', 'saa', or 'nominal'; polar takes precedence."""
    codes = classify_zones(policy, np.array([p.lat_deg]), np.array([p.lon_deg]))
    return ("nominal", "polar", "saa")[int(codes[0])]


def classify_zones(policy: ZonePolicy, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    """Vectorized zone codes: 0 nominal, 1 polar, 2 saa."""
    out = np.zeros(lat.shape, np.int8)
    inside = np.zeros(lat.shape, bool)
    pts = [(p.lon_deg, p.lat_deg) for p in policy.saa_polygon]
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if y1 == y2:
            continue
        m = ((y1 <= lat) != (y2 <= lat))
        xs = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
        inside ^= m & (lon < xs)
    out[inside] = 2
    out[np.abs(lat) > policy.polar_lat_deg] = 1
    return out


def eclipse_mask(config: OrbitConfig, t0_s: float, dt_s: float, n: int) -> np.ndarray:
    """Eclipse booleans sampled at t0_s + k*dt_s seconds past epoch."""
    if config.eclipse_fraction == 0.0:
        return np.zeros(n, bool)
    t = t0_s + dt_s * np.arange(n, dtype=np.float64)
    phase = np.mod(t / orbital_period(config), 1.0)
    half = config.eclipse_fraction / 2.0
    return (phase >= 0.5 - half) & (phase < 0.5 + half)


def in_eclipse(config: OrbitConfig, t: datetime) -> bool:
    """True inside the eclipse arc centered at orbit phase 0.5."""
    dt = _elapsed(config, t)
    return bool(eclipse_mask(config, dt, 0.0, 1)[0])


def _day_start(day: date) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc)


def _geometric_windows(config: OrbitConfig, station: GroundStation, day: date) -> list[PassWindow]:
    start = _day_start(day)
    t0 = (start - config.epoch).total_seconds()
    offset = 0.0
    if t0 < 0:
        offset = -t0
        t0 = 0.0
    n = int(86400 - offset)
    if n <= 0:
        return []
    lat, lon = track_arrays(config, t0, 1.0, n)

    lat_r = np.radians(lat)
    lon_r = np.radians(lon)
    sx = np.cos(lat_r) * np.cos(lon_r)
    sy = np.cos(lat_r) * np.sin(lon_r)
    sz = np.sin(lat_r)
    glat = math.radians(station.lat_deg)
    glon = math.radians(station.lon_deg)
    ux, uy, uz = math.cos(glat) * math.cos(glon), math.cos(glat) * math.sin(glon), math.sin(glat)

    r_sat = EARTH_RADIUS_KM + config.altitude_km
    dx = r_sat * sx - EARTH_RADIUS_KM * ux
    dy = r_sat * sy - EARTH_RADIUS_KM * uy
    dz = r_sat * sz - EARTH_RADIUS_KM * uz
    rng = np.sqrt(dx * dx + dy * dy + dz * dz)
    sin_el = (dx * ux + dy * uy + dz * uz) / rng
    vis = sin_el > math.sin(math.radians(station.min_elevation_deg))

    windows = []
    edges = np.flatnonzero(np.diff(vis.astype(np.int8)))
    bounds = np.concatenate(([0], edges + 1, [n]))
    for a, b in zip(bounds[:-1], bounds[1:]):
        if vis[a] and b - a >= 2:
            w_start = start + timedelta(seconds=float(offset + a))
            w_end = start + timedelta(seconds=float(offset + b))
            windows.append(PassWindow(station.station_id, station.channel, w_start, w_end))
    return windows


def pass_windows(config: OrbitConfig, stations: list[GroundStation], day: date) -> list[PassWindow]:
    """Contact windows for one UTC day, sorted by start time."""
    out = []
    for st in stations:
        if config.window_mode == "scheduled":
            base = _day_start(day)
            for off, dur in st.schedule:
                out.append(PassWindow(st.station_id, st.channel,
                                      base + timedelta(seconds=off),
                                      base + timedelta(seconds=off + dur)))
        else:
            out.extend(_geometric_windows(config, st, day))
    out.sort(key=lambda w: (w.start, w.station_id))
    return out
