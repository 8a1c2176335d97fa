"""Single-event-effect injection: Poisson bit flips into the simulated
filesystem at a zone-dependent rate.
"""
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import ConfigError
from .simfs import SimFilesystem

ZONE_MULT_KEYS = ("nominal", "saa", "polar")


@dataclass(frozen=True)
class SeeModel:
    base_rate_per_orbit: float = 1e-2
    saa_multiplier: float = 10.0
    polar_multiplier: float = 3.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.base_rate_per_orbit < 0:
            raise ConfigError("base_rate_per_orbit must be >= 0")
        if self.saa_multiplier < 1 or self.polar_multiplier < 1:
            raise ConfigError("zone multipliers must be >= 1")


@dataclass(frozen=True)
class CorruptionEvent:
    time: datetime
    file_path: str
    byte_offset: int
    bit_index: int
    zone: str


def zone_multiplier(model: SeeModel, zone: str) -> float:
    if zone == "saa":
        return model.saa_multiplier
    if zone == "polar":
        return model.polar_multiplier
    if zone == "nominal":
        return 1.0
    raise ConfigError(f"unknown zone {zone!r}")


def instantaneous_rate(model: SeeModel, zone: str, period_s: float) -> float:
    """Events per second in the given zone for an orbit of period_s."""
    if period_s <= 0:
        raise ConfigError("period_s must be > 0")
    return model.base_rate_per_orbit / period_s * zone_multiplier(model, zone)


class SeeInjector:
    """Owns the seeded generator; injection order defines the event stream."""

    def __init__(self, model: SeeModel):
        self.model = model
        self.rng = np.random.default_rng(model.rng_seed)

    def inject(self, fs: SimFilesystem, dt: float, zone: str, period_s: float,
               time: datetime) -> list[CorruptionEvent]:
        """Flip Poisson(rate*dt) uniformly placed bits; returns applied events."""
        if dt <= 0:
            raise ConfigError("dt must be > 0")
        lam = instantaneous_rate(self.model, zone, period_s) * dt
        if lam == 0.0:
            return []
        count = int(self.rng.poisson(lam))
        if count == 0:
            return []
        targets = [p for p in fs.paths() if fs.size(p) > 0]
        if not targets:
            return []
        events = []
        for _ in range(count):
            path = targets[int(self.rng.integers(0, len(targets)))]
            offset = int(self.rng.integers(0, fs.size(path)))
            bit = int(self.rng.integers(0, 8))
            fs.flip_bit(path, offset, bit)
            events.append(CorruptionEvent(time, path, offset, bit, zone))
        return events
