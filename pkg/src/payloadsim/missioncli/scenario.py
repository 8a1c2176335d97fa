"""Scenario files: strict YAML with documented keys, fail-fast validation."""
import dataclasses
from dataclasses import dataclass
from datetime import datetime, timezone

import yaml

from .. import faults, orbitsim, thermal
from ..errors import ConfigError
from ..store import QuotaConfig


@dataclass(frozen=True)
class CaptureRule:
    """Fire every N orbits on one mux channel while the zone is nominal."""
    every_orbits: int
    channel: int = 0
    quality: int = 75
    lossless: bool = False
    offset_orbits: int = 0

    def __post_init__(self):
        if self.every_orbits < 1:
            raise ConfigError("every_orbits must be >= 1")
        if not 0 <= self.channel <= 15:
            raise ConfigError("channel must be 0..15")
        if not 1 <= self.quality <= 100:
            raise ConfigError("quality must be 1..100")
        if self.offset_orbits < 0:
            raise ConfigError("offset_orbits must be >= 0")


@dataclass(frozen=True)
class BudgetConfig:
    downlink_cap_bytes: int = 1_000_000
    uplink_cap_bytes: int = 150_000
    uhf_rate_bps: int = 9_600
    sband_rate_bps: int = 2_000_000

    def __post_init__(self):
        if self.downlink_cap_bytes <= 0:
            raise ConfigError("downlink_cap_bytes must be > 0")


@dataclass(frozen=True)
class AiConfig:
    # gentle per-cycle settings: a handful of labels per day must not
    # overwrite the pre-flight calibration, so few epochs at a small rate
    cadence_days: int = 1
    noise_rate: float = 0.07
    learning_rate: float = 0.05
    epochs: int = 8
    batch_size: int = 16
    eval_scenes: int = 32

    def __post_init__(self):
        if self.cadence_days < 1:
            raise ConfigError("cadence_days must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise_rate must lie in [0, 1]")
        if self.epochs < 0 or self.batch_size < 1 or self.eval_scenes < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1, eval_scenes >= 1")


@dataclass(frozen=True)
class Scenario:
    orbit: orbitsim.OrbitConfig
    zones: orbitsim.ZonePolicy
    thermal_params: thermal.ThermalParams
    limits: thermal.ThermalLimits
    see: faults.SeeModel
    quota: QuotaConfig
    budget: BudgetConfig
    capture_plan: tuple
    ai: AiConfig
    duration_days: int = 7
    master_seed: int = 0
    window_table: tuple | None = None  # daily (start_s, duration_s, channel) rows

    def __post_init__(self):
        if self.duration_days < 1:
            raise ConfigError("duration_days must be >= 1")
        for rule in self.capture_plan:
            if not isinstance(rule, CaptureRule):
                raise ConfigError("capture_plan entries must be capture rules")
        if self.window_table is not None:
            for row in self.window_table:
                start_s, duration_s, channel = row
                if start_s < 0 or start_s + duration_s > 86_400:
                    raise ConfigError("window rows must fit inside one day")
                if duration_s <= 0:
                    raise ConfigError("window duration must be > 0")
                if channel not in ("uhf", "sband"):
                    raise ConfigError(f"unknown window channel {channel!r}")


def default_scenario(days: int = 7, seed: int = 0) -> Scenario:
    return Scenario(
        orbit=orbitsim.OrbitConfig(),
        zones=orbitsim.ZonePolicy(),
        thermal_params=thermal.calibrated_defaults(),
        limits=thermal.ThermalLimits(),
        see=faults.SeeModel(rng_seed=seed ^ 0x5EE),
        quota=QuotaConfig(),
        budget=BudgetConfig(),
        capture_plan=(CaptureRule(every_orbits=2, channel=0),),
        ai=AiConfig(),
        duration_days=days,
        master_seed=seed,
    )


def _build(cls, section: dict, where: str, **fixed):
    """Construct a dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    allowed = {f.name for f in dataclasses.fields(cls)} - set(fixed)
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")
    try:
        return cls(**section, **fixed)
    except TypeError as exc:
        raise ConfigError(f"bad {where} section: {exc}") from exc


_TOP_KEYS = ("duration_days", "master_seed", "orbit", "zones", "thermal",
             "limits", "see", "quota", "budget", "capture_plan", "ai",
             "windows")


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a mapping at the top level")
    unknown = sorted(set(doc) - set(_TOP_KEYS))
    if unknown:
        raise ConfigError(f"unknown top-level key {unknown[0]!r}")

    orbit_raw = dict(doc.get("orbit", {}))
    if "epoch" in orbit_raw:
        value = orbit_raw["epoch"]
        if isinstance(value, str):
            value = datetime.fromisoformat(value)
        if not isinstance(value, datetime):
            raise ConfigError("orbit.epoch must be an ISO-8601 timestamp")
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        orbit_raw["epoch"] = value
    orbit = _build(orbitsim.OrbitConfig, orbit_raw, "orbit")

    zones_raw = dict(doc.get("zones", {}))
    if "saa_polygon" in zones_raw:
        poly = zones_raw["saa_polygon"]
        if not isinstance(poly, list):
            raise ConfigError("zones.saa_polygon must be a list of [lon, lat]")
        try:
            zones_raw["saa_polygon"] = tuple(
                orbitsim.GeodeticPoint(float(lat), float(lon))
                for lon, lat in poly)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"zones.saa_polygon entries must be [lon, lat] pairs: {exc}"
            ) from exc
    zones = _build(orbitsim.ZonePolicy, zones_raw, "zones")

    thermal_raw = doc.get("thermal", {})
    if not isinstance(thermal_raw, dict):
        raise ConfigError("thermal must be a mapping")
    base = dataclasses.asdict(thermal.calibrated_defaults())
    unknown = sorted(set(thermal_raw) - set(base))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in thermal")
    base.update(thermal_raw)
    params = thermal.ThermalParams(**base)

    plan_raw = doc.get("capture_plan", [{"every_orbits": 2}])
    if not isinstance(plan_raw, list):
        raise ConfigError("capture_plan must be a list of rules")
    plan = tuple(_build(CaptureRule, rule, f"capture_plan[{i}]")
                 for i, rule in enumerate(plan_raw))

    window_table = None
    if "windows" in doc:
        rows = doc["windows"]
        if not isinstance(rows, list):
            raise ConfigError("windows must be a list of window rows")
        table = []
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or set(row) != {"start_s", "duration_s",
                                                         "channel"}:
                raise ConfigError(
                    f"windows[{i}] needs exactly start_s, duration_s, channel")
            table.append((int(row["start_s"]), int(row["duration_s"]),
                          str(row["channel"])))
        window_table = tuple(table)

    try:
        return Scenario(
            orbit=orbit,
            zones=zones,
            thermal_params=params,
            limits=_build(thermal.ThermalLimits, doc.get("limits", {}), "limits"),
            see=_build(faults.SeeModel, doc.get("see", {}), "see"),
            quota=_build(QuotaConfig, doc.get("quota", {}), "quota"),
            budget=_build(BudgetConfig, doc.get("budget", {}), "budget"),
            capture_plan=plan,
            ai=_build(AiConfig, doc.get("ai", {}), "ai"),
            duration_days=int(doc.get("duration_days", 7)),
            master_seed=int(doc.get("master_seed", 0)),
            window_table=window_table,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario {path} is not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    return parse_scenario(doc)
