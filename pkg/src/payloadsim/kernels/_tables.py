"""Shared integer constant tables for the hot kernels.

All transform arithmetic is integer-only so both backends (numba and the
pure-numpy fallback) produce bit-identical results on every platform.
"""
import numpy as np

# Orthonormal 8x8 DCT-II basis scaled by 2**13 and rounded to integers.
# Hard-coded rather than computed from math.cos so the table can never
# drift with a platform's libm.
DCT_SHIFT = 13
DCT_ROUND = 1 << (DCT_SHIFT - 1)
# both matmul passes accumulate unshifted; one rounding at the end keeps
# the fixed-point transform within half an output count of exact
DCT_SHIFT2 = 2 * DCT_SHIFT
DCT_ROUND2 = 1 << (DCT_SHIFT2 - 1)
DCT_MATRIX = np.array([
    (2896, 2896, 2896, 2896, 2896, 2896, 2896, 2896),
    (4017, 3406, 2276, 799, -799, -2276, -3406, -4017),
    (3784, 1567, -1567, -3784, -3784, -1567, 1567, 3784),
    (3406, -799, -4017, -2276, 2276, 4017, 799, -3406),
    (2896, -2896, -2896, 2896, 2896, -2896, -2896, 2896),
    (2276, -4017, 799, 3406, -3406, -799, 4017, -2276),
    (1567, -3784, 3784, -1567, -1567, 3784, -3784, 1567),
    (799, -2276, 3406, -4017, 4017, -3406, 2276, -799),
], dtype=np.int64)

# Classic luminance quantization base table, row-major.
QUANT_BASE = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
], dtype=np.int64)

# zigzag[k] = row-major index of the k-th coefficient in zigzag scan order.
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

# splitmix64 mixing constants (value-noise lattice hash).
SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
SM_MUL2 = np.uint64(0x94D049BB133111EB)
NOISE_X_SALT = np.uint64(0x8DA6B343FD2C9B47)
NOISE_Y_SALT = np.uint64(0xD8163841E56F34A3)
