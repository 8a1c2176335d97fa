"""Pure-numpy fallback implementations of the hot kernels.

Must stay bit-identical to the numba backend: integer arithmetic only,
same operation order per element.
"""
import numpy as np

from ._tables import (
    DCT_MATRIX,
    DCT_ROUND2,
    DCT_SHIFT2,
    NOISE_X_SALT,
    NOISE_Y_SALT,
    SM_GAMMA,
    SM_MUL1,
    SM_MUL2,
)

_U7 = np.uint64(7)
_U0X7F = np.uint64(0x7F)


def fdct_blocks(blocks: np.ndarray) -> np.ndarray:
    """Forward fixed-point 8x8 DCT over a (n, 8, 8) int64 block stack."""
    t = np.matmul(DCT_MATRIX, blocks)
    return (np.matmul(t, DCT_MATRIX.T) + DCT_ROUND2) >> DCT_SHIFT2


def idct_blocks(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of fdct_blocks (up to fixed-point rounding)."""
    t = np.matmul(DCT_MATRIX.T, coeffs)
    return (np.matmul(t, DCT_MATRIX) + DCT_ROUND2) >> DCT_SHIFT2


def varint_pack(tokens: np.ndarray) -> np.ndarray:
    """LEB128-encode a uint64 token array into a uint8 byte array."""
    n = tokens.shape[0]
    if n == 0:
        return np.zeros(0, np.uint8)
    nbytes = np.ones(n, np.int64)
    t = tokens >> _U7
    while t.any():
        m = t > 0
        nbytes[m] += 1
        t = t >> _U7
    ends = np.cumsum(nbytes)
    starts = ends - nbytes
    out = np.zeros(int(ends[-1]), np.uint8)
    for b in range(int(nbytes.max())):
        m = nbytes > b
        chunk = ((tokens[m] >> np.uint64(7 * b)) & _U0X7F).astype(np.uint8)
        cont = (nbytes[m] - 1 > b).astype(np.uint8) << 7
        out[starts[m] + b] = chunk | cont
    return out


def varint_unpack(buf: np.ndarray) -> np.ndarray:
    """Decode a uint8 buffer of back-to-back LEB128 varints.

    Raises ValueError on a truncated or overlong varint.
    """
    n = buf.shape[0]
    if n == 0:
        return np.zeros(0, np.uint64)
    cont = buf >= 0x80
    if cont[-1]:
        raise ValueError("truncated varint")
    ends = ~cont
    gid = np.zeros(n, np.int64)
    np.cumsum(ends[:-1], out=gid[1:])
    starts_mask = np.ones(n, bool)
    starts_mask[1:] = ends[:-1]
    starts = np.flatnonzero(starts_mask)
    pos = np.arange(n, dtype=np.int64) - starts[gid]
    if int(pos.max()) > 9:
        raise ValueError("overlong varint")
    contrib = (buf & 0x7F).astype(np.uint64) << (_U7 * pos.astype(np.uint64))
    return np.add.reduceat(contrib, starts)


def _mix(k: np.ndarray) -> np.ndarray:
    z = k + SM_GAMMA
    z = (z ^ (z >> np.uint64(30))) * SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * SM_MUL2
    return z ^ (z >> np.uint64(31))


def noise_octave(width: int, height: int, cells_x: int, cells_y: int, seed: int) -> np.ndarray:
    """One octave of fixed-point 2-D value noise, int64 values in 0..65535.

    Lattice values come from a splitmix-style hash of (cell, seed); bilinear
    interpolation uses a quintic smoothstep with a 10-bit fraction.
    """
    sd = np.uint64(seed)
    fx = (np.arange(width, dtype=np.int64) * cells_x * 1024) // width
    fy = (np.arange(height, dtype=np.int64) * cells_y * 1024) // height
    ix = (fx >> 10).astype(np.uint64)
    iy = (fy >> 10).astype(np.uint64)
    ux = fx & 1023
    uy = fy & 1023

    kx0 = ix * NOISE_X_SALT
    kx1 = (ix + np.uint64(1)) * NOISE_X_SALT
    ky0 = (iy * NOISE_Y_SALT) ^ sd
    ky1 = ((iy + np.uint64(1)) * NOISE_Y_SALT) ^ sd

    v00 = (_mix(ky0[:, None] ^ kx0[None, :]) >> np.uint64(48)).astype(np.int64)
    v10 = (_mix(ky0[:, None] ^ kx1[None, :]) >> np.uint64(48)).astype(np.int64)
    v01 = (_mix(ky1[:, None] ^ kx0[None, :]) >> np.uint64(48)).astype(np.int64)
    v11 = (_mix(ky1[:, None] ^ kx1[None, :]) >> np.uint64(48)).astype(np.int64)

    sx = (ux * ux * ux * ((6 * ux - 15360) * ux + 10485760)) >> 30
    sy = (uy * uy * uy * ((6 * uy - 15360) * uy + 10485760)) >> 30

    a = v00 + (((v10 - v00) * sx[None, :]) >> 20)
    b = v01 + (((v11 - v01) * sx[None, :]) >> 20)
    return a + (((b - a) * sy[:, None]) >> 20)
