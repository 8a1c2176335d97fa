"""Onboard image catalog with a byte quota and a journaled, recoverable index.

Encoded streams are the quota-counted payload; the catalog index (capture
metadata, priorities, labels, downlink progress) is persisted as an
append-only journal of CRC-32 guarded lines so a corrupted index can be
rebuilt, and is small enough to protect with backup copies.
"""
import json
import zlib
from dataclasses import dataclass
from datetime import datetime

from .errors import StorageFullError
from .scenegen import CaptureRecord
from .simfs import SimFilesystem

LABELS = ("none", "cloudy", "clear")
LABEL_SOURCES = ("none", "onboard_model", "gt_factory")

JOURNAL_NAME = "catalog.journal"
ASSET_DIR = "/data/assets"


@dataclass(frozen=True)
class QuotaConfig:
    capacity_bytes: int = 20_000_000
    high_watermark: float = 0.9

    def __post_init__(self):
        if self.capacity_bytes <= 0:
            raise ValueError("capacity_bytes must be positive")
        if not 0 < self.high_watermark <= 1:
            raise ValueError("high_watermark must be in (0, 1]")


@dataclass
class ImageAsset:
    record: CaptureRecord
    stream: bytes
    asset_id: int = 0
    downlinked_bytes: int = 0
    priority: int = 0
    label: str = "none"
    probability: float | None = None
    label_source: str = "none"

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if self.label_source not in LABEL_SOURCES:
            raise ValueError(f"unknown label source {self.label_source!r}")
        if (self.label == "none") != (self.label_source == "none"):
            raise ValueError("label and label_source must be set together")
        if not 0 <= self.downlinked_bytes <= len(self.stream):
            raise ValueError("downlinked_bytes outside the stream")

    @property
    def stream_length(self) -> int:
        return len(self.stream)

    @property
    def in_flight(self) -> bool:
        return 0 < self.downlinked_bytes < self.stream_length


@dataclass(frozen=True)
class AssetSummary:
    asset_id: int
    time: datetime
    kind: str
    channel: int
    width: int
    height: int
    stream_length: int
    downlinked_bytes: int
    priority: int
    label: str
    probability: float | None
    label_source: str


def _summary(a: ImageAsset) -> AssetSummary:
    r = a.record
    return AssetSummary(a.asset_id, r.time, r.kind, r.channel, r.width, r.height,
                        a.stream_length, a.downlinked_bytes, a.priority,
                        a.label, a.probability, a.label_source)


def _record_to_fields(r: CaptureRecord) -> dict:
    return {"time": r.time.isoformat(), "lat": r.lat_deg, "lon": r.lon_deg,
            "alt": r.alt_km, "channel": r.channel, "kind": r.kind, "seed": r.seed,
            "width": r.width, "height": r.height, "channels": r.channels}


def _record_from_fields(d: dict) -> CaptureRecord:
    return CaptureRecord(datetime.fromisoformat(d["time"]), d["lat"], d["lon"],
                         d["alt"], d["channel"], d["kind"], d["seed"],
                         d["width"], d["height"], d["channels"])


def _journal_line(op: str, asset_id: int, fields: dict) -> str:
    body = f"{op}\t{asset_id}\t{json.dumps(fields, sort_keys=True, separators=(',', ':'))}"
    return f"{body}\t{zlib.crc32(body.encode()):08x}"


def _parse_line(line: str) -> tuple[str, int, dict] | None:
    body, _, crc = line.rpartition("\t")
    if not body or f"{zlib.crc32(body.encode()):08x}" != crc:
        return None
    op, sid, fields = body.split("\t", 2)
    return op, int(sid), json.loads(fields)


def _asset_path(asset_id: int) -> str:
    return f"{ASSET_DIR}/{asset_id:06d}.lpc1"


class Catalog:
    """Single-writer asset store; all mutation goes through the methods here.

    When a filesystem is attached, streams are mirrored to asset files and
    every index mutation appends one journal line. Passing an integrity
    monitor protects the journal with two backup copies.
    """

    def __init__(self, quota: QuotaConfig = QuotaConfig(), fs: SimFilesystem | None = None,
                 monitor=None):
        self.quota = quota
        self.fs = fs
        self.monitor = monitor
        self.assets: dict[int, ImageAsset] = {}
        self._next_id = 1
        self._used = 0
        self._journal_lines: list[str] = []
        self._ops_since_compact = 0
        if monitor is not None and fs is None:
            raise ValueError("an integrity monitor requires a filesystem")
        if monitor is not None:
            monitor.register(JOURNAL_NAME, b"", n_backups=2)

    @property
    def used_bytes(self) -> int:
        return self._used

    @property
    def over_watermark(self) -> bool:
        return self._used > self.quota.high_watermark * self.quota.capacity_bytes

    def _persist_journal(self) -> None:
        if self.fs is None:
            return
        content = "".join(f"{ln}\n" for ln in self._journal_lines).encode()
        if self.monitor is not None:
            self.monitor.reregister(JOURNAL_NAME, content)
        else:
            self.fs.write(f"/data/{JOURNAL_NAME}", content)

    def _append(self, op: str, asset_id: int, fields: dict) -> None:
        self._journal_lines.append(_journal_line(op, asset_id, fields))
        self._ops_since_compact += 1
        # bound replay cost: fold history once it dwarfs the live index
        if self._ops_since_compact >= max(64, 4 * len(self.assets)):
            self.compact()
        else:
            self._persist_journal()

    def _state_fields(self, a: ImageAsset) -> dict:
        f = _record_to_fields(a.record)
        f.update(length=a.stream_length, downlinked=a.downlinked_bytes,
                 priority=a.priority, label=a.label, probability=a.probability,
                 source=a.label_source)
        return f

    def put(self, asset: ImageAsset) -> int:
        if not asset.stream:
            raise ValueError("asset has no encoded stream")
        if asset.downlinked_bytes:
            raise ValueError("new assets start with zero downlinked bytes")
        if self._used + asset.stream_length > self.quota.capacity_bytes:
            raise StorageFullError(
                f"{asset.stream_length} bytes will not fit "
                f"({self._used}/{self.quota.capacity_bytes} used)")
        asset.asset_id = self._next_id
        if self.fs is not None:
            self.fs.write(_asset_path(asset.asset_id), asset.stream)
        self._next_id += 1
        self.assets[asset.asset_id] = asset
        self._used += asset.stream_length
        self._append("PUT", asset.asset_id, self._state_fields(asset))
        return asset.asset_id

    def get(self, asset_id: int) -> ImageAsset:
        return self.assets[asset_id]

    def delete(self, asset_id: int) -> None:
        asset = self.assets.pop(asset_id)
        self._used -= asset.stream_length
        if self.fs is not None and self.fs.exists(_asset_path(asset_id)):
            self.fs.delete(_asset_path(asset_id))
        self._append("DEL", asset_id, {})

    def set_priority(self, asset_id: int, priority: int) -> None:
        self.assets[asset_id].priority = int(priority)
        self._append("PRI", asset_id, {"priority": int(priority)})

    def set_label(self, asset_id: int, cloudy: bool, probability: float | None,
                  source: str) -> None:
        if source not in LABEL_SOURCES[1:]:
            raise ValueError(f"unknown label source {source!r}")
        a = self.assets[asset_id]
        a.label = "cloudy" if cloudy else "clear"
        a.probability = probability
        a.label_source = source
        self._append("LBL", asset_id, {"label": a.label, "probability": probability,
                                       "source": source})

    def advance_downlink(self, asset_id: int, nbytes: int) -> int:
        """Record nbytes more on the ground; returns the new offset."""
        a = self.assets[asset_id]
        if nbytes < 0 or a.downlinked_bytes + nbytes > a.stream_length:
            raise ValueError("downlink advance outside the stream")
        a.downlinked_bytes += nbytes
        self._append("DLK", asset_id, {"downlinked": a.downlinked_bytes})
        return a.downlinked_bytes

    def _ordered(self, ids) -> list[int]:
        return sorted(ids, key=lambda i: (self.assets[i].record.time, i))

    def evict_policy(self) -> list[int]:
        """Deletion candidates, safest first; in-flight transfers are immune."""
        done = [i for i, a in self.assets.items()
                if a.downlinked_bytes == a.stream_length]
        clear = [i for i, a in self.assets.items()
                 if a.label == "clear" and a.downlinked_bytes == 0]
        return self._ordered(done) + self._ordered(clear)

    def auto_evict(self) -> list[int]:
        """Delete policy candidates until usage is back under the watermark."""
        deleted = []
        limit = self.quota.high_watermark * self.quota.capacity_bytes
        for asset_id in self.evict_policy():
            if self._used <= limit:
                break
            self.delete(asset_id)
            deleted.append(asset_id)
        return deleted

    def list_assets(self, label: str | None = None, kind: str | None = None) -> list[AssetSummary]:
        ids = self._ordered(self.assets)
        out = []
        for i in ids:
            a = self.assets[i]
            if label is not None and a.label != label:
                continue
            if kind is not None and a.record.kind != kind:
                continue
            out.append(_summary(a))
        return out

    def compact(self) -> None:
        """Rewrite the journal as one state line per live asset."""
        self._journal_lines = [
            _journal_line("PUT", i, self._state_fields(self.assets[i]))
            for i in self._ordered(self.assets)]
        self._journal_lines.append(_journal_line("SEQ", self._next_id, {}))
        self._ops_since_compact = 0
        self._persist_journal()


def load_catalog(fs: SimFilesystem, quota: QuotaConfig = QuotaConfig(),
                 monitor=None) -> tuple[Catalog, list[str]]:
    """Rebuild a catalog by replaying the journal; returns (catalog, warnings).

    Replay stops at the first line whose CRC fails (write-ahead semantics:
    everything before it is trusted, everything after is not). Streams are
    reloaded from the asset files; an asset whose file is gone is dropped.
    """
    path = f"/data/{JOURNAL_NAME}"
    content = fs.read(path) if fs.exists(path) else b""
    warnings: list[str] = []
    catalog = Catalog(quota, fs=None)
    lines = content.decode().splitlines()
    state: dict[int, dict] = {}
    next_id = 1
    for n, line in enumerate(lines):
        parsed = _parse_line(line)
        if parsed is None:
            warnings.append(f"journal line {n + 1} failed its checksum; "
                            f"dropped {len(lines) - n} trailing lines")
            break
        op, asset_id, fields = parsed
        if op == "PUT":
            state[asset_id] = fields
            next_id = max(next_id, asset_id + 1)
        elif op == "DEL":
            state.pop(asset_id, None)
        elif op == "PRI" and asset_id in state:
            state[asset_id]["priority"] = fields["priority"]
        elif op == "LBL" and asset_id in state:
            state[asset_id].update(label=fields["label"], source=fields["source"],
                                   probability=fields["probability"])
        elif op == "DLK" and asset_id in state:
            state[asset_id]["downlinked"] = fields["downlinked"]
        elif op == "SEQ":
            next_id = max(next_id, asset_id)
    for asset_id in sorted(state):
        fields = state[asset_id]
        if not fs.exists(_asset_path(asset_id)):
            warnings.append(f"asset {asset_id} stream file missing; dropped")
            continue
        stream = fs.read(_asset_path(asset_id))
        if len(stream) != fields["length"]:
            warnings.append(f"asset {asset_id} stream length mismatch; dropped")
            continue
        asset = ImageAsset(_record_from_fields(fields), stream, asset_id=asset_id,
                           downlinked_bytes=fields["downlinked"],
                           priority=fields["priority"], label=fields["label"],
                           probability=fields["probability"],
                           label_source=fields["source"])
        catalog.assets[asset_id] = asset
        catalog._used += asset.stream_length
    catalog._next_id = next_id
    catalog.fs = fs
    catalog.monitor = monitor
    if monitor is not None:
        if JOURNAL_NAME in monitor.entries:
            monitor.reregister(JOURNAL_NAME, content)
        else:
            monitor.register(JOURNAL_NAME, content, n_backups=2)
    catalog.compact()
    return catalog, warnings
