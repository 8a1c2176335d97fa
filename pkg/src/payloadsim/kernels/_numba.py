"""Numba-accelerated hot kernels; bit-identical to the numpy fallback."""
import numpy as np
from numba import njit

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


@njit(cache=True)
def _dct_pass(mat: np.ndarray, blocks: np.ndarray, out: np.ndarray) -> None:
    # out[n] = mat @ blocks[n], unshifted int64
    for n in range(blocks.shape[0]):
        for i in range(8):
            for j in range(8):
                acc = np.int64(0)
                for k in range(8):
                    acc += mat[i, k] * blocks[n, k, j]
                out[n, i, j] = acc


@njit(cache=True)
def _dct_pass_t(mat: np.ndarray, blocks: np.ndarray, out: np.ndarray) -> None:
    # out[n] = ((blocks[n] @ mat.T) + round) >> shift, the single rounding
    for n in range(blocks.shape[0]):
        for i in range(8):
            for j in range(8):
                acc = np.int64(0)
                for k in range(8):
                    acc += blocks[n, i, k] * mat[j, k]
                out[n, i, j] = (acc + DCT_ROUND2) >> DCT_SHIFT2


def fdct_blocks(blocks: np.ndarray) -> np.ndarray:
    t = np.empty_like(blocks)
    _dct_pass(DCT_MATRIX, blocks, t)
    out = np.empty_like(blocks)
    _dct_pass_t(DCT_MATRIX, t, out)
    return out


def idct_blocks(coeffs: np.ndarray) -> np.ndarray:
    t = np.empty_like(coeffs)
    _dct_pass(DCT_MATRIX.T.copy(), coeffs, t)
    out = np.empty_like(coeffs)
    _dct_pass_t(DCT_MATRIX.T.copy(), t, out)
    return out


@njit(cache=True)
def _varint_pack(tokens: np.ndarray) -> np.ndarray:
    total = 0
    for i in range(tokens.shape[0]):
        v = tokens[i]
        total += 1
        while v >= np.uint64(0x80):
            v >>= np.uint64(7)
            total += 1
    out = np.zeros(total, np.uint8)
    p = 0
    for i in range(tokens.shape[0]):
        v = tokens[i]
        while v >= np.uint64(0x80):
            out[p] = np.uint8((v & np.uint64(0x7F)) | np.uint64(0x80))
            v >>= np.uint64(7)
            p += 1
        out[p] = np.uint8(v)
        p += 1
    return out


def varint_pack(tokens: np.ndarray) -> np.ndarray:
    return _varint_pack(tokens)


@njit(cache=True)
def _varint_unpack(buf: np.ndarray) -> np.ndarray:
    n = buf.shape[0]
    count = 0
    for i in range(n):
        if buf[i] < 0x80:
            count += 1
    out = np.zeros(count, np.uint64)
    g = 0
    val = np.uint64(0)
    shift = 0
    for i in range(n):
        b = buf[i]
        if shift > 63:
            return np.zeros(0, np.uint64)  # overlong marker
        val |= np.uint64(b & 0x7F) << np.uint64(shift)
        if b < 0x80:
            out[g] = val
            g += 1
            val = np.uint64(0)
            shift = 0
        else:
            shift += 7
    if shift != 0:
        return np.zeros(0, np.uint64)  # truncated marker
    return out


def varint_unpack(buf: np.ndarray) -> np.ndarray:
    n = buf.shape[0]
    if n == 0:
        return np.zeros(0, np.uint64)
    out = _varint_unpack(buf)
    if out.shape[0] == 0:
        if buf[-1] >= 0x80:
            raise ValueError("truncated varint")
        raise ValueError("overlong varint")
    return out


@njit(cache=True)
def _noise_octave(width: int, height: int, cells_x: int, cells_y: int, seed: np.uint64) -> np.ndarray:
    out = np.empty((height, width), np.int64)
    for py in range(height):
        fy = (py * cells_y * 1024) // height
        iy = np.uint64(fy >> 10)
        uy = np.int64(fy & 1023)
        sy = (uy * uy * uy * ((6 * uy - 15360) * uy + 10485760)) >> 30
        ky0 = (iy * NOISE_Y_SALT) ^ seed
        ky1 = ((iy + np.uint64(1)) * NOISE_Y_SALT) ^ seed
        for px in range(width):
            fx = (px * cells_x * 1024) // width
            ix = np.uint64(fx >> 10)
            ux = np.int64(fx & 1023)
            sx = (ux * ux * ux * ((6 * ux - 15360) * ux + 10485760)) >> 30

            kx0 = ix * NOISE_X_SALT
            kx1 = (ix + np.uint64(1)) * NOISE_X_SALT

            z = (ky0 ^ kx0) + SM_GAMMA
            z = (z ^ (z >> np.uint64(30))) * SM_MUL1
            z = (z ^ (z >> np.uint64(27))) * SM_MUL2
            v00 = np.int64((z ^ (z >> np.uint64(31))) >> np.uint64(48))

            z = (ky0 ^ kx1) + SM_GAMMA
            z = (z ^ (z >> np.uint64(30))) * SM_MUL1
            z = (z ^ (z >> np.uint64(27))) * SM_MUL2
            v10 = np.int64((z ^ (z >> np.uint64(31))) >> np.uint64(48))

            z = (ky1 ^ kx0) + SM_GAMMA
            z = (z ^ (z >> np.uint64(30))) * SM_MUL1
            z = (z ^ (z >> np.uint64(27))) * SM_MUL2
            v01 = np.int64((z ^ (z >> np.uint64(31))) >> np.uint64(48))

            z = (ky1 ^ kx1) + SM_GAMMA
            z = (z ^ (z >> np.uint64(30))) * SM_MUL1
            z = (z ^ (z >> np.uint64(27))) * SM_MUL2
            v11 = np.int64((z ^ (z >> np.uint64(31))) >> np.uint64(48))

            a = v00 + (((v10 - v00) * sx) >> 20)
            b = v01 + (((v11 - v01) * sx) >> 20)
            out[py, px] = a + (((b - a) * sy) >> 20)
    return out


def noise_octave(width: int, height: int, cells_x: int, cells_y: int, seed: int) -> np.ndarray:
    return _noise_octave(width, height, cells_x, cells_y, np.uint64(seed))
