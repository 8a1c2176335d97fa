"""Progressive DC-first block-transform image codec (LPC1 container).

The bitstream is segmented so any prefix that contains the header plus a
whole number of segments decodes to a full-resolution image; fidelity
increases with each additional segment. A lossless mode appends one final
residual segment with exact pixel-domain corrections.
"""
import math
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, InvalidComparisonError, InvalidImageError, SegmentCorruptError
from .bitstream import decode_unit, dpcm, encode_unit, undpcm
from .transform import (
    block_count,
    forward_coeffs,
    inverse_coeffs,
    quant_table,
    rct_forward,
    rct_inverse,
)

MAGIC = b"LPC1"
_HDR_FMT = "<4sIIBBBBB"
_HDR_SIZE = struct.calcsize(_HDR_FMT)

DEFAULT_BANDS = ((0, 0), (1, 5), (6, 20), (21, 62), (63, 63))


@dataclass(frozen=True)
class SegmentPlan:
    """Zigzag index ranges, one per progressive band; band 0 is DC only."""

    bands: tuple = DEFAULT_BANDS

    def __post_init__(self):
        if not self.bands or self.bands[0] != (0, 0):
            raise ValueError("band 0 must be the DC-only range (0, 0)")
        nxt = 0
        for lo, hi in self.bands:
            if lo != nxt or hi < lo:
                raise ValueError("bands must partition 0..63 in order")
            nxt = hi + 1
        if nxt != 64:
            raise ValueError("bands must cover zigzag indices 0..63")


@dataclass(frozen=True)
class LpcHeader:
    width: int
    height: int
    channels: int
    bit_depth: int
    quality: int
    segment_count: int
    lossless: bool
    segment_lengths: tuple

    @property
    def header_size(self) -> int:
        return _HDR_SIZE + 4 * self.segment_count


@dataclass
class DecodedImage:
    """Full-resolution reconstruction; pixels are channel-major uint8."""

    pixels: np.ndarray  # (channels, height, width)
    width: int
    height: int
    channels: int
    segments_used: int

    def to_array(self) -> np.ndarray:
        if self.channels == 1:
            return self.pixels[0]
        return np.moveaxis(self.pixels, 0, -1)


def _as_planes(image: np.ndarray) -> tuple[list[np.ndarray], int, int, int]:
    arr = np.asarray(image)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        channels = 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        channels = 3
    else:
        raise InvalidImageError(f"expected (h, w) or (h, w, 3) image, got {arr.shape}")
    h, w = arr.shape[0], arr.shape[1]
    if h < 1 or w < 1:
        raise InvalidImageError("image dimensions must be >= 1")
    if arr.dtype != np.uint8:
        raise InvalidImageError("8-bit samples required")
    if channels == 1:
        planes = [arr.astype(np.int64) - 128]
    else:
        y, cb, cr = rct_forward(arr)
        planes = [y - 128, cb, cr]
    return planes, h, w, channels


def _reconstruct(qcms: list[np.ndarray], qz: np.ndarray, h: int, w: int, channels: int) -> np.ndarray:
    if channels == 1:
        plane = inverse_coeffs(qcms[0], qz, h, w) + 128
        return np.clip(plane, 0, 255).astype(np.uint8)[None, :, :]
    y = inverse_coeffs(qcms[0], qz, h, w) + 128
    cb = inverse_coeffs(qcms[1], qz, h, w)
    cr = inverse_coeffs(qcms[2], qz, h, w)
    rgb = np.clip(rct_inverse(y, cb, cr), 0, 255).astype(np.uint8)
    return np.moveaxis(rgb, -1, 0)


def encode(image: np.ndarray, quality: int = 75, lossless: bool = False,
           plan: SegmentPlan | None = None) -> bytes:
    """Encode an 8-bit image into an LPC1 progressive bitstream."""
    if plan is None:
        plan = SegmentPlan()
    if not 1 <= int(quality) <= 100:
        raise InvalidImageError("quality must be in 1..100")
    planes, h, w, channels = _as_planes(image)
    qz = quant_table(quality)
    qcms = [forward_coeffs(p, qz, chroma=i > 0) for i, p in enumerate(planes)]
    blocks_x = -(-w // 8)

    segments = []
    for lo, hi in plan.bands:
        parts = []
        for qcm in qcms:
            arr = qcm[:, lo : hi + 1].reshape(-1)
            if lo == 0:
                arr = dpcm(arr, blocks_x)
            parts.append(encode_unit(arr))
        segments.append(b"".join(parts))

    if lossless:
        recon = _reconstruct(qcms, qz, h, w, channels)
        orig = image[:, :, 0][None] if (image.ndim == 3 and channels == 1) else (
            image[None] if channels == 1 else np.moveaxis(image, -1, 0))
        parts = []
        for ci in range(channels):
            resid = orig[ci].astype(np.int64) - recon[ci].astype(np.int64)
            parts.append(encode_unit(resid.reshape(-1)))
        segments.append(b"".join(parts))

    header = struct.pack(_HDR_FMT, MAGIC, w, h, channels, 8, int(quality),
                         len(segments), 1 if lossless else 0)
    header += struct.pack(f"<{len(segments)}I", *(len(s) for s in segments))
    return header + b"".join(segments)


def parse_header(buf: bytes) -> LpcHeader:
    if len(buf) < _HDR_SIZE:
        raise FormatError("truncated header")
    magic, w, h, channels, depth, quality, seg_count, lossless = struct.unpack_from(_HDR_FMT, buf)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if channels not in (1, 3) or depth != 8 or seg_count < 1 or not 1 <= quality <= 100 \
            or w < 1 or h < 1:
        raise FormatError("invalid header fields")
    if len(buf) < _HDR_SIZE + 4 * seg_count:
        raise FormatError("truncated segment table")
    lengths = struct.unpack_from(f"<{seg_count}I", buf, _HDR_SIZE)
    return LpcHeader(w, h, channels, depth, quality, seg_count, bool(lossless), lengths)


def decode(prefix: bytes) -> DecodedImage:
    """Decode an LPC1 stream prefix using every complete segment in it."""
    hdr = parse_header(prefix)
    hsize = hdr.header_size
    usable = 0
    end = hsize
    for ln in hdr.segment_lengths:
        if end + ln > len(prefix):
            break
        end += ln
        usable += 1
    if usable == 0:
        raise FormatError("prefix must contain segment 0")

    n_band_segments = hdr.segment_count - (1 if hdr.lossless else 0)
    n_blocks = block_count(hdr.height, hdr.width)
    qcms = [np.zeros((n_blocks, 64), np.int64) for _ in range(hdr.channels)]

    off = hsize
    col = 0
    blocks_x = -(-hdr.width // 8)
    for s in range(min(usable, n_band_segments)):
        seg_end = off + hdr.segment_lengths[s]
        band_w = 0
        for ci in range(hdr.channels):
            arr, off = decode_unit(prefix, off, s)
            n = arr.shape[0]
            if n == 0 or n % n_blocks:
                raise SegmentCorruptError(s, "band size not divisible by block count")
            wdt = n // n_blocks
            if ci == 0:
                band_w = wdt
                if s == 0 and band_w != 1:
                    raise SegmentCorruptError(s, "segment 0 must be DC only")
                if col + band_w > 64:
                    raise SegmentCorruptError(s, "bands exceed 64 coefficients")
            elif wdt != band_w:
                raise SegmentCorruptError(s, "inconsistent band width across channels")
            if s == 0:
                arr = undpcm(arr, blocks_x)
            qcms[ci][:, col : col + wdt] = arr.reshape(n_blocks, wdt)
        if off != seg_end:
            raise SegmentCorruptError(s, "segment length mismatch")
        col += band_w

    qz = quant_table(hdr.quality)
    pixels = _reconstruct(qcms, qz, hdr.height, hdr.width, hdr.channels)

    if hdr.lossless and usable == hdr.segment_count:
        s = hdr.segment_count - 1
        seg_end = off + hdr.segment_lengths[s]
        planes = []
        for _ in range(hdr.channels):
            arr, off = decode_unit(prefix, off, s)
            if arr.shape[0] != hdr.height * hdr.width:
                raise SegmentCorruptError(s, "residual size mismatch")
            planes.append(arr.reshape(hdr.height, hdr.width))
        if off != seg_end:
            raise SegmentCorruptError(s, "segment length mismatch")
        merged = pixels.astype(np.int64) + np.stack(planes)
        pixels = np.clip(merged, 0, 255).astype(np.uint8)

    return DecodedImage(pixels, hdr.width, hdr.height, hdr.channels, usable)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; math.inf when images are identical."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidComparisonError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def quality_curve(stream: bytes, original: np.ndarray) -> list[tuple[int, float]]:
    """(bytes_used, psnr) at every segment boundary of the stream."""
    hdr = parse_header(stream)
    points = []
    used = hdr.header_size
    for ln in hdr.segment_lengths:
        used += ln
        img = decode(stream[:used])
        points.append((used, psnr(original, img.to_array())))
    return points
