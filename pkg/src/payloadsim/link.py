"""Framed command/telemetry protocol and the budgeted downlink scheduler.

Frames are fixed-layout with a CRC-16/CCITT-FALSE trailer; big-endian
integers throughout. The scheduler fills ground-station pass windows in
time order, serves transfer sessions by priority, quantizes grants to the
chunk size, and never plans past the daily downlink cap.
"""
import struct
from dataclasses import dataclass
from datetime import date, datetime, timedelta

from . import codec
from .errors import (
    BadSyncError,
    ConfigError,
    CrcMismatchError,
    FrameError,
    RejectedUplinkError,
    TruncatedFrameError,
)

SYNC = b"\x4c\x52"
VERSION = 1
MAX_PAYLOAD = 1024
FRAME_TYPES = ("command", "ack", "telemetry", "file_chunk", "event")
# sync(2) version(1) type(1) sequence(2) length(2) payload crc(2)
_HEAD = struct.Struct(">BBHH")
_FIXED = 2 + _HEAD.size + 2

# file bytes per chunk frame; leaves room for the 8-byte chunk address
CHUNK_DATA = 1000
_CHUNK_HEAD = struct.Struct(">II")

COMMAND_RESERVE = 2048  # commands stay possible after the data budget is spent
WINDOW_EFFICIENCY = 95  # percent of raw rate left after framing overhead


def _crc_table() -> tuple:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021 if crc & 0x8000 else crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_TABLE = _crc_table()


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    crc = 0xFFFF
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _TABLE[(crc >> 8) ^ b]
    return crc


@dataclass(frozen=True)
class Frame:
    frame_type: str
    sequence: int
    payload: bytes = b""

    def __post_init__(self):
        if self.frame_type not in FRAME_TYPES:
            raise ValueError(f"unknown frame type {self.frame_type!r}")
        if not 0 <= self.sequence <= 0xFFFF:
            raise ValueError("sequence must fit in u16")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(f"payload exceeds {MAX_PAYLOAD} bytes")


def encode_frame(frame: Frame) -> bytes:
    body = _HEAD.pack(VERSION, FRAME_TYPES.index(frame.frame_type),
                      frame.sequence, len(frame.payload)) + frame.payload
    return SYNC + body + struct.pack(">H", crc16(body))


def decode_frame(buf: bytes, offset: int = 0) -> tuple[Frame, int]:
    """Parse one frame at offset; returns (frame, offset past it)."""
    if len(buf) - offset < _FIXED:
        raise TruncatedFrameError("buffer shorter than the fixed frame layout")
    if buf[offset : offset + 2] != SYNC:
        raise BadSyncError(f"expected sync {SYNC.hex()} at offset {offset}")
    version, type_code, sequence, length = _HEAD.unpack_from(buf, offset + 2)
    end = offset + _FIXED + length
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared payload of {length} bytes exceeds the cap")
    if len(buf) < end:
        raise TruncatedFrameError("declared payload runs past the buffer")
    body = buf[offset + 2 : end - 2]
    (crc,) = struct.unpack_from(">H", buf, end - 2)
    if crc16(body) != crc:
        raise CrcMismatchError(f"crc {crc:04x} does not verify")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}")
    if type_code >= len(FRAME_TYPES):
        raise FrameError(f"unknown frame type code {type_code}")
    return Frame(FRAME_TYPES[type_code], sequence, buf[offset + _FIXED - 2 : end - 2]), end


def iter_frames(buf: bytes):
    """Decode a back-to-back frame stream; raises on any malformed frame."""
    offset = 0
    while offset < len(buf):
        frame, offset = decode_frame(buf, offset)
        yield frame


def chunk_payload(asset_id: int, offset: int, data: bytes) -> bytes:
    return _CHUNK_HEAD.pack(asset_id, offset) + data


def parse_chunk(frame: Frame) -> tuple[int, int, bytes]:
    if frame.frame_type != "file_chunk":
        raise FrameError(f"not a file chunk: {frame.frame_type}")
    if len(frame.payload) < _CHUNK_HEAD.size:
        raise FrameError("chunk payload shorter than its address")
    asset_id, offset = _CHUNK_HEAD.unpack_from(frame.payload)
    return asset_id, offset, frame.payload[_CHUNK_HEAD.size :]


@dataclass
class LinkBudget:
    day: date
    downlink_cap_bytes: int = 1_000_000
    uplink_cap_bytes: int = 150_000
    uhf_rate_bps: int = 9600
    sband_rate_bps: int = 2_000_000
    downlink_used: int = 0
    uplink_used: int = 0
    reserve_used: int = 0

    def __post_init__(self):
        if self.uhf_rate_bps <= 0 or self.sband_rate_bps <= 0:
            raise ConfigError("link rates must be positive")
        if not 100_000 <= self.uplink_cap_bytes <= 200_000:
            raise ConfigError("uplink cap must lie in [100000, 200000]")
        if self.downlink_cap_bytes <= 0:
            raise ConfigError("downlink cap must be positive")

    def rate_bps(self, channel: str) -> int:
        if channel == "uhf":
            return self.uhf_rate_bps
        if channel == "sband":
            return self.sband_rate_bps
        raise ConfigError(f"unknown channel {channel!r}")

    @property
    def downlink_remaining(self) -> int:
        return self.downlink_cap_bytes - self.downlink_used

    def record_downlink(self, nbytes: int) -> None:
        if nbytes < 0 or self.downlink_used + nbytes > self.downlink_cap_bytes:
            raise ValueError("downlink accounting would exceed the daily cap")
        self.downlink_used += nbytes


def uplink_submit(budget: LinkBudget, kind: str, nbytes: int) -> str:
    """Charge an uplink against the day; returns the pool that paid for it.

    Commands may fall back to a small reserved floor so operators are never
    locked out by a spent data budget.
    """
    if kind not in ("command", "label_batch", "file_repair"):
        raise ValueError(f"unknown uplink kind {kind!r}")
    if nbytes <= 0:
        raise ValueError("uplink size must be positive")
    if budget.uplink_used + nbytes <= budget.uplink_cap_bytes:
        budget.uplink_used += nbytes
        return "budget"
    if kind == "command" and budget.reserve_used + nbytes <= COMMAND_RESERVE:
        budget.reserve_used += nbytes
        return "reserve"
    raise RejectedUplinkError(
        f"{kind} of {nbytes} bytes exceeds the remaining uplink budget")


@dataclass(frozen=True)
class PassWindow:
    start: datetime
    duration_s: int
    channel: str

    def __post_init__(self):
        if self.channel not in ("uhf", "sband"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.duration_s <= 0:
            raise ConfigError("window duration must be positive")


def window_capacity(budget: LinkBudget, window: PassWindow) -> int:
    raw = int(budget.rate_bps(window.channel) * window.duration_s) // 8
    return raw * WINDOW_EFFICIENCY // 100


TARGETS = ("thumbnail", "preview", "full")
SESSION_STATES = ("queued", "active", "paused", "complete", "aborted")


@dataclass
class TransferSession:
    asset_id: int
    target: str
    target_bytes: int
    next_offset: int = 0
    state: str = "queued"
    created: int = 0
    preview_segments: int = 0

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.state not in SESSION_STATES:
            raise ValueError(f"unknown state {self.state!r}")
        if self.next_offset >= self.target_bytes:
            self.state = "complete"

    @property
    def remaining(self) -> int:
        return max(0, self.target_bytes - self.next_offset)

    def abort(self) -> None:
        if self.state != "complete":
            self.state = "aborted"

    def skip_to(self, offset: int) -> None:
        """Skip past bytes the ground already holds from another session."""
        if self.state in ("queued", "active") and offset > self.next_offset:
            self.next_offset = min(offset, self.target_bytes)
            if self.next_offset >= self.target_bytes:
                self.state = "complete"

    def pause(self) -> None:
        if self.state in ("queued", "active"):
            self.state = "paused"

    def resume(self) -> None:
        if self.state == "paused":
            self.state = "active"


def target_boundary(stream: bytes, target: str, preview_segments: int = 0) -> int:
    """Byte offset at which a transfer target is satisfied."""
    if target == "full":
        return len(stream)
    hdr = codec.parse_header(stream)
    k = 1 if target == "thumbnail" else preview_segments
    if not 1 <= k <= hdr.segment_count:
        raise ValueError(f"preview depth {k} outside 1..{hdr.segment_count}")
    return hdr.header_size + sum(hdr.segment_lengths[:k])


def make_session(asset, target: str, preview_segments: int = 0,
                 created: int = 0) -> TransferSession:
    """New session for a stored asset, resuming at its downlinked prefix."""
    boundary = target_boundary(asset.stream, target, preview_segments)
    return TransferSession(asset.asset_id, target, boundary,
                           next_offset=asset.downlinked_bytes, created=created,
                           preview_segments=preview_segments)


@dataclass(frozen=True)
class Grant:
    window_index: int
    channel: str
    session: TransferSession
    asset_id: int
    offset: int
    nbytes: int


def _validate_windows(windows) -> None:
    last_start = None
    last_end: dict[str, datetime] = {}
    for w in windows:
        if last_start is not None and w.start < last_start:
            raise ConfigError("windows must be sorted by start time")
        last_start = w.start
        prev = last_end.get(w.channel)
        if prev is not None and w.start < prev:
            raise ConfigError(f"overlapping {w.channel} windows")
        last_end[w.channel] = w.start + timedelta(seconds=w.duration_s)


def plan_day(budget: LinkBudget, windows, sessions, catalog) -> list[Grant]:
    """Grant chunks of the day's remaining downlink budget to sessions.

    Windows are filled in time order; within a window, sessions are served
    by (priority desc, creation asc). Grants are whole chunks except for a
    session's final partial chunk. The plan mutates nothing; the caller
    applies grants with transmit_step and records the spent bytes.
    """
    _validate_windows(windows)
    cap_left = budget.downlink_remaining
    planned: dict[int, int] = {}
    grants: list[Grant] = []

    def priority(s: TransferSession) -> int:
        return catalog.get(s.asset_id).priority

    live = [s for s in sessions
            if s.state in ("queued", "active") and s.asset_id in catalog.assets]
    for wi, window in enumerate(windows):
        if cap_left <= 0:
            break
        wleft = window_capacity(budget, window)
        for s in sorted(live, key=lambda s: (-priority(s), s.created)):
            offset = planned.get(id(s), s.next_offset)
            remaining = s.target_bytes - offset
            if remaining <= 0:
                continue
            grant = min(remaining, wleft, cap_left)
            if grant < remaining:
                grant -= grant % CHUNK_DATA  # mid-session cuts stay chunk-aligned
            if grant <= 0:
                continue
            grants.append(Grant(wi, window.channel, s, s.asset_id, offset, grant))
            planned[id(s)] = offset + grant
            wleft -= grant
            cap_left -= grant
            if cap_left <= 0 or wleft <= 0:
                break
    return grants


def transmit_step(session: TransferSession, grant_bytes: int, stream: bytes,
                  seq_start: int = 0) -> tuple[list[Frame], int]:
    """Emit chunk frames for up to grant_bytes of the session's remainder.

    Returns (frames, bytes sent). Aborted, paused, and complete sessions
    transmit nothing. Completion triggers exactly when the target boundary
    is crossed, so a transfer stays resumable across windows and days.
    """
    if session.state not in ("queued", "active") or grant_bytes <= 0:
        return [], 0
    session.state = "active"
    end = min(session.next_offset + grant_bytes, session.target_bytes, len(stream))
    frames = []
    seq = seq_start
    pos = session.next_offset
    while pos < end:
        data = stream[pos : min(pos + CHUNK_DATA, end)]
        frames.append(Frame("file_chunk", seq & 0xFFFF,
                            chunk_payload(session.asset_id, pos, data)))
        seq += 1
        pos += len(data)
    sent = pos - session.next_offset
    session.next_offset = pos
    if session.next_offset >= session.target_bytes:
        session.state = "complete"
    return frames, sent
