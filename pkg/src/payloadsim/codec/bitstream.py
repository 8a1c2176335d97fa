"""Byte-aligned entropy layer: zero-run + LEB128 varint coding of integer arrays.

A *unit* is one coefficient array (one channel of one band): a varint byte
length followed by (run, value) token pairs, values zigzag-mapped, with an
optional trailing run of zeros. Units are self-describing: the decoded
array length follows from the tokens alone.
"""
import numpy as np

from .. import kernels
from ..errors import SegmentCorruptError

_MAX_UNIT_LEN = 1 << 32


def zigzag_map(values: np.ndarray) -> np.ndarray:
    """Map signed int64 to unsigned so small magnitudes stay small."""
    return ((values << 1) ^ (values >> 63)).view(np.uint64)


def zigzag_unmap(tokens: np.ndarray) -> np.ndarray:
    half = (tokens >> np.uint64(1)).astype(np.int64)
    sign = (tokens & np.uint64(1)).astype(np.int64)
    return half ^ -sign


def write_varint(value: int) -> bytes:
    out = bytearray()
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)
    return bytes(out)


def read_varint(buf, offset: int, segment_index: int = -1) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if offset >= len(buf) or shift > 63:
            raise SegmentCorruptError(segment_index, "bad varint")
        b = buf[offset]
        offset += 1
        value |= (b & 0x7F) << shift
        if b < 0x80:
            return value, offset
        shift += 7


def encode_unit(arr: np.ndarray) -> bytes:
    """Encode one int64 coefficient array as a length-prefixed token unit."""
    nz = np.flatnonzero(arr)
    m = nz.shape[0]
    vals = arr[nz]
    runs = np.diff(nz, prepend=-1) - 1
    trailing = arr.shape[0] - (int(nz[-1]) + 1) if m else arr.shape[0]
    ntok = 2 * m + (1 if trailing > 0 else 0)
    tokens = np.empty(ntok, np.uint64)
    tokens[0 : 2 * m : 2] = runs.astype(np.uint64)
    tokens[1 : 2 * m : 2] = zigzag_map(vals)
    if trailing > 0:
        tokens[ntok - 1] = trailing
    body = kernels.varint_pack(tokens).tobytes()
    return write_varint(len(body)) + body


def decode_unit(buf, offset: int, segment_index: int) -> tuple[np.ndarray, int]:
    """Decode one unit starting at ``offset``; returns (array, next offset)."""
    blen, offset = read_varint(buf, offset, segment_index)
    if offset + blen > len(buf):
        raise SegmentCorruptError(segment_index, "unit truncated")
    body = np.frombuffer(buf, np.uint8, count=blen, offset=offset)
    offset += blen
    try:
        tokens = kernels.varint_unpack(body)
    except ValueError as e:
        raise SegmentCorruptError(segment_index, str(e)) from e
    ntok = tokens.shape[0]
    m = ntok // 2
    runs = tokens[0 : 2 * m : 2].astype(np.int64)
    vals = zigzag_unmap(tokens[1 : 2 * m : 2])
    if m and (int(runs.max()) >= _MAX_UNIT_LEN or np.any(vals == 0)):
        raise SegmentCorruptError(segment_index, "malformed tokens")
    trailing = 0
    if ntok % 2 == 1:
        trailing = int(tokens[ntok - 1])
        if trailing == 0 or trailing >= _MAX_UNIT_LEN:
            raise SegmentCorruptError(segment_index, "malformed trailing run")
    positions = np.cumsum(runs + 1) - 1
    total = (int(positions[-1]) + 1 if m else 0) + trailing
    arr = np.zeros(total, np.int64)
    if m:
        arr[positions] = vals
    return arr, offset


def _med(a, b, c):
    # gradient-adjusted median of left/up/upleft neighbors
    mn = np.minimum(a, b)
    mx = np.maximum(a, b)
    return np.where(c >= mx, mn, np.where(c <= mn, mx, a + b - c))


def dpcm(arr: np.ndarray, blocks_x: int = 0) -> np.ndarray:
    """Residuals against a 2D median predictor over the block grid.

    ``blocks_x`` is the grid row length; 0 falls back to 1D previous-value
    prediction. First row predicts from the left, first column from above.
    """
    if blocks_x <= 0 or arr.shape[0] % blocks_x:
        return np.diff(arr, prepend=np.int64(0))
    d = arr.reshape(-1, blocks_x)
    a = np.zeros_like(d)
    a[:, 1:] = d[:, :-1]
    b = np.zeros_like(d)
    b[1:, :] = d[:-1, :]
    c = np.zeros_like(d)
    c[1:, 1:] = d[:-1, :-1]
    pred = _med(a, b, c)
    pred[0, :] = a[0, :]
    pred[1:, 0] = b[1:, 0]
    return (d - pred).reshape(-1)


def undpcm(deltas: np.ndarray, blocks_x: int = 0) -> np.ndarray:
    if blocks_x <= 0 or deltas.shape[0] % blocks_x:
        return np.cumsum(deltas)
    r = deltas.reshape(-1, blocks_x)
    by, bx = r.shape
    d = np.zeros_like(r)
    d[0] = np.cumsum(r[0])
    for y in range(1, by):
        up = d[y - 1]
        row = d[y]
        left = int(up[0]) + int(r[y, 0])
        row[0] = left
        for x in range(1, bx):
            a, b, c = left, int(up[x]), int(up[x - 1])
            if c >= (a if a > b else b):
                pred = a if a < b else b
            elif c <= (a if a < b else b):
                pred = a if a > b else b
            else:
                pred = a + b - c
            left = pred + int(r[y, x])
            row[x] = left
    return d.reshape(-1)
