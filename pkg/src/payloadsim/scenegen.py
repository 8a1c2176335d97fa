"""Synthetic Earth-observation scenes with exact cloud ground truth, plus the
9-camera/16-channel multiplexed sensor model.

All pixel math is integer/fixed-point on top of the value-noise kernel, so
identical inputs produce identical images on every platform.
"""
import struct
from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np

from . import kernels, orbitsim
from .errors import (
    ConfigError,
    FormatError,
    InvalidChannelError,
    NoSensorError,
    PayloadInactiveError,
)

_RAW_FMT = "<IIB"
_RAW_HDR = struct.calcsize(_RAW_FMT)


@dataclass(frozen=True)
class SensorSpec:
    kind: str
    native_width: int
    native_height: int
    fov_deg: tuple = (62.2, 48.8)
    spectrum_um: tuple = (0.4, 0.7)
    frame_rate_fps: float = 15.0
    scale_divisor: int = 1

    def __post_init__(self):
        if self.kind not in ("rgb", "ir"):
            raise ConfigError(f"unknown sensor kind {self.kind!r}")
        if self.native_width < 1 or self.native_height < 1:
            raise ConfigError("sensor dimensions must be >= 1")
        if self.scale_divisor < 1:
            raise ConfigError("scale_divisor must be >= 1")

    @property
    def scaled_size(self) -> tuple[int, int]:
        d = self.scale_divisor
        return (-(-self.native_width // d), -(-self.native_height // d))

    @property
    def channels(self) -> int:
        return 3 if self.kind == "rgb" else 1


# Table-of-record sensor parameters; divisor 8 is the desk-scale preset
RGB_NATIVE = SensorSpec("rgb", 3820, 2464, (62.2, 48.8), (0.4, 0.7), 15.0, 1)
RGB_DESK = replace(RGB_NATIVE, scale_divisor=8)
IR_NATIVE = SensorSpec("ir", 160, 120, (57.0, 44.0), (8.0, 14.0), 8.7, 1)
IR_TEMP_RANGE_C = (-10.0, 400.0)


@dataclass(frozen=True)
class MuxState:
    channels: tuple
    selected: int = 0

    def __post_init__(self):
        if len(self.channels) != 16:
            raise ConfigError("mux has exactly 16 channels")
        if not 0 <= self.selected <= 15:
            raise InvalidChannelError(f"channel {self.selected} out of range")


def default_mux(desk_scale: bool = True) -> MuxState:
    rgb = RGB_DESK if desk_scale else RGB_NATIVE
    return MuxState(tuple([rgb] * 6 + [IR_NATIVE] * 3 + [None] * 7), selected=0)


def select_channel(mux: MuxState, channel: int) -> MuxState:
    if not isinstance(channel, int) or not 0 <= channel <= 15:
        raise InvalidChannelError(f"channel {channel} out of range")
    return replace(mux, selected=channel)


@dataclass(frozen=True)
class SceneTruth:
    cloud_mask: np.ndarray
    cloud_fraction: float
    seed: int


@dataclass(frozen=True)
class CloudConfig:
    amplitude: float = 1.0
    threshold: float = 0.5

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("amplitude must be >= 0")


_TERRAIN_SALT = 0x1B873593_9E3779B9
_CLOUD_SALT = 0x85EBCA6B_C2B2AE35
_GRAIN_SALT = 0xC2B2AE35_27D4EB2F

# octave lattice sizes and fixed-point weights; the coarse first octave gives
# each seed its own large-scale weather so cloud cover varies scene to scene,
# and the short tail keeps cloud boundaries from going fractal
_OCTAVES_CLOUD = ((2, 2), (5, 4), (13, 9))
_WEIGHTS_CLOUD = (8, 4, 2)
_OCTAVES_TERRAIN = _OCTAVES_CLOUD
_WEIGHTS_TERRAIN = _WEIGHTS_CLOUD
# surface detail rides on top of the smooth height field, in output counts
_OCTAVES_DETAIL = ((79, 53), (199, 133))
GRAIN_COUNTS = 14  # peak white sensor grain, output counts
TEXTURE_COUNTS = 22  # peak structured surface texture, output counts

# terrain color ramp anchors: (height, r, g, b) sea to ice; the sea renders
# as one flat tone the way open water looks from orbit, gentle saturation
# keeps chroma planes cheap to code, and the ends leave headroom for
# additive surface detail so it rarely clips
_PALETTE = (
    (0, 48, 62, 96),
    (34500, 48, 62, 96),
    (36000, 158, 148, 118),
    (41500, 68, 102, 64),
    (50000, 108, 98, 78),
    (58500, 138, 136, 130),
    (65535, 198, 202, 206),
)


def _field(width: int, height: int, seed: int, octaves, weights) -> np.ndarray:
    """Multi-octave value noise, 0..65535 int64."""
    total = np.zeros((height, width), np.int64)
    wsum = 0
    for (cx, cy), w in zip(octaves, weights):
        total += w * kernels.noise_octave(width, height, cx, cy, seed)
        wsum += w
        seed = (seed * 6364136223846793005 + 1442695040888963407) % (1 << 64)
    return total // wsum


def _tile_center(g: np.ndarray, tile: int = 8) -> np.ndarray:
    """Subtract each tile's rounded mean so local brightness stays untouched."""
    height, width = g.shape
    ys = np.arange(0, height, tile)
    xs = np.arange(0, width, tile)
    sums = np.add.reduceat(np.add.reduceat(g, ys, axis=0), xs, axis=1)
    ny = np.diff(np.append(ys, height))
    nx = np.diff(np.append(xs, width))
    counts = ny[:, None] * nx[None, :]
    means = (sums + counts // 2) // counts
    return g - np.repeat(np.repeat(means, ny, axis=0), nx, axis=1)


def _grain_values(peak: int) -> np.ndarray:
    """A fixed 64-value multiset spanning -peak..peak with exact zero sum."""
    base = np.arange(-peak, peak + 1, dtype=np.int64)
    reps, r = divmod(64, base.size)
    parts = [base] * reps
    if r:
        k = r // 2
        extra = list(range(-k, 0)) + list(range(1, k + 1))
        if r % 2:
            extra.append(0)
        parts.append(np.array(extra, np.int64))
    return np.sort(np.concatenate(parts))


def _grain(width: int, height: int, seed: int) -> np.ndarray:
    """Per-pixel sensor grain, about -GRAIN_COUNTS..+GRAIN_COUNTS counts.

    Every 8x8 tile holds the same zero-sum value multiset in a seed-dependent
    order, the way calibrated readout noise looks after dark-frame
    subtraction: local means, and with them exposure statistics, stay
    untouched exactly.
    """
    wp = -(-width // 8) * 8
    hp = -(-height // 8) * 8
    # lattice cells at pixel pitch degenerate to pure white noise
    keys = kernels.noise_octave(wp, hp, wp, hp, seed)
    tiles = keys.reshape(hp // 8, 8, wp // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 64)
    order = np.argsort(tiles, axis=1, kind="stable")
    vals = np.broadcast_to(_grain_values(GRAIN_COUNTS), tiles.shape)
    out = np.empty(tiles.shape, np.int64)
    np.put_along_axis(out, order, vals, axis=1)
    full = out.reshape(hp // 8, wp // 8, 8, 8).transpose(0, 2, 1, 3).reshape(hp, wp)
    return full[:height, :width]


def _texture(width: int, height: int, seed: int) -> np.ndarray:
    """Fine structured surface detail in output counts, zero mean per tile."""
    total = np.zeros((height, width), np.int64)
    for (cx, cy) in _OCTAVES_DETAIL:
        total += kernels.noise_octave(width, height, cx, cy, seed)
        seed = (seed * 6364136223846793005 + 1442695040888963407) % (1 << 64)
    t = (total * (2 * TEXTURE_COUNTS + 1)) // (65536 * len(_OCTAVES_DETAIL)) - TEXTURE_COUNTS
    return _tile_center(t)


def _ramp(field: np.ndarray) -> np.ndarray:
    """Integer palette lookup: (h, w) heights -> (h, w, 3) uint8."""
    keys = np.array([p[0] for p in _PALETTE], np.int64)
    cols = np.array([p[1:] for p in _PALETTE], np.int64)
    idx = np.clip(np.searchsorted(keys, field, side="right") - 1, 0, len(keys) - 2)
    h0 = keys[idx]
    h1 = keys[idx + 1]
    t = field - h0
    span = h1 - h0
    c0 = cols[idx]
    c1 = cols[idx + 1]
    return ((c0 * (span - t)[..., None] + c1 * t[..., None]) // span[..., None]).astype(np.uint8)


def generate_scene(seed: int, location: orbitsim.GeodeticPoint, spec: SensorSpec,
                   cloud: CloudConfig = CloudConfig()):
    """Deterministic terrain+cloud scene; returns (image, SceneTruth)."""
    width, height = spec.scaled_size
    terrain = _field(width, height, (seed ^ _TERRAIN_SALT) % (1 << 64),
                     _OCTAVES_TERRAIN, _WEIGHTS_TERRAIN)
    raw_cloud = _field(width, height, (seed ^ _CLOUD_SALT) % (1 << 64),
                       _OCTAVES_CLOUD, _WEIGHTS_CLOUD)
    amp_q = int(round(cloud.amplitude * 256))
    opacity = (raw_cloud * amp_q) >> 8
    thr_q = int(round(cloud.threshold * 65536))
    mask = opacity > thr_q
    fraction = float(np.count_nonzero(mask)) / mask.size

    # cloud alpha ramps over +/-512 counts around the threshold, 0..256; the
    # near-binary ramp keeps cloud edges crisp with a 1px antialias fringe
    alpha = np.clip((opacity - (thr_q - 512)) * 256 // 1024, 0, 256)

    gseed = (seed ^ _GRAIN_SALT) % (1 << 64)
    if spec.kind == "rgb":
        img = _ramp(terrain).astype(np.int64)
        tint = min(160, int(abs(location.lat_deg) / 90.0 * 160))
        img = (img * (256 - tint) + np.array([206, 210, 214], np.int64) * tint) >> 8
        img = (img * (256 - alpha)[..., None] + 212 * alpha[..., None]) >> 8
        # detail lands after compositing: texture and readout grain cover
        # cloud and ground alike
        img += _texture(width, height, (gseed + 7) % (1 << 64))[..., None]
        for ch in range(3):
            img[..., ch] += _grain(width, height, (gseed + ch) % (1 << 64))
        image = np.clip(img, 0, 255).astype(np.uint8)
    else:
        # linear map of the full -10..400 degC range onto 0..255
        temp8 = (terrain * 255) // 65535
        cold = 30  # cloud tops read cold
        img = (temp8 * (256 - alpha) + cold * alpha) >> 8
        img += _texture(width, height, (gseed + 7) % (1 << 64))
        img += _grain(width, height, gseed)
        image = np.clip(img, 0, 255).astype(np.uint8)

    return image, SceneTruth(mask, fraction, seed)


@dataclass(frozen=True)
class CaptureRecord:
    time: datetime
    lat_deg: float
    lon_deg: float
    alt_km: float
    channel: int
    kind: str
    seed: int
    width: int
    height: int
    channels: int


def capture(mux: MuxState, time: datetime, orbit_cfg: orbitsim.OrbitConfig, seed: int,
            gate: str = "allow", spec_override: SensorSpec | None = None,
            cloud: CloudConfig = CloudConfig()):
    """Image the current sub-satellite point through the selected channel.

    Returns (CaptureRecord, image array, SceneTruth). The caller is
    responsible for thermal/zone gating; a non-'allow' gate raises here.
    """
    if gate != "allow":
        raise PayloadInactiveError(f"payload gated: {gate}")
    spec = spec_override or mux.channels[mux.selected]
    if spec is None:
        raise NoSensorError(f"channel {mux.selected} has no sensor bound")
    pos = orbitsim.propagate(orbit_cfg, time)
    image, truth = generate_scene(seed, pos, spec, cloud)
    width, height = spec.scaled_size
    record = CaptureRecord(time, pos.lat_deg, pos.lon_deg, pos.alt_km,
                           mux.selected, spec.kind, seed, width, height, spec.channels)
    return record, image, truth


def pack_raw(image: np.ndarray) -> bytes:
    """Trivial raw container: width u32, height u32, channels u8, row-major samples."""
    if image.ndim == 2:
        h, w, c = image.shape[0], image.shape[1], 1
    else:
        h, w, c = image.shape
    return struct.pack(_RAW_FMT, w, h, c) + image.tobytes()


def unpack_raw(buf: bytes) -> np.ndarray:
    if len(buf) < _RAW_HDR:
        raise FormatError("truncated raw header")
    w, h, c = struct.unpack_from(_RAW_FMT, buf)
    need = _RAW_HDR + w * h * c
    if len(buf) != need:
        raise FormatError(f"raw payload length {len(buf)} != expected {need}")
    arr = np.frombuffer(buf, np.uint8, offset=_RAW_HDR)
    return arr.reshape((h, w) if c == 1 else (h, w, c)).copy()
