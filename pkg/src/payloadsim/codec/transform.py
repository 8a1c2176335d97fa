"""Reversible color transform, block packing and quantization."""
import numpy as np

from .. import kernels
from ..kernels._tables import QUANT_BASE, ZIGZAG


def rct_forward(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lossless lifting color transform, (H, W, 3) uint8 -> int64 planes."""
    r = rgb[..., 0].astype(np.int64)
    g = rgb[..., 1].astype(np.int64)
    b = rgb[..., 2].astype(np.int64)
    y = (r + 2 * g + b) >> 2
    cb = b - g
    cr = r - g
    return y, cb, cr


def rct_inverse(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    g = y - ((cb + cr) >> 2)
    r = cr + g
    b = cb + g
    return np.stack([r, g, b], axis=-1)


def to_blocks(plane: np.ndarray) -> np.ndarray:
    """(H, W) int64 -> (n, 8, 8) with edge-replicated padding."""
    h, w = plane.shape
    pad_h = (-h) % 8
    pad_w = (-w) % 8
    if pad_h or pad_w:
        plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
    nby = plane.shape[0] // 8
    nbx = plane.shape[1] // 8
    return plane.reshape(nby, 8, nbx, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


def from_blocks(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    nby = (height + 7) // 8
    nbx = (width + 7) // 8
    full = blocks.reshape(nby, nbx, 8, 8).transpose(0, 2, 1, 3).reshape(nby * 8, nbx * 8)
    return full[:height, :width]


def block_count(height: int, width: int) -> int:
    return ((height + 7) // 8) * ((width + 7) // 8)


def quant_table(quality: int) -> np.ndarray:
    """Quantizer steps in zigzag order for a 1..100 quality setting."""
    q = min(100, max(1, int(quality)))
    scale = 5000 // q if q < 50 else 200 - 2 * q
    tbl = (QUANT_BASE * scale + 50) // 100
    return np.clip(tbl, 1, 32767)[ZIGZAG]


# A chroma AC coefficient that barely clears the dead zone dequantizes to
# nearly double its true size, and the color inverse spreads the overshoot
# into two output channels, costing more color-space error than the plane
# gains. Keep a +-1 bin only when the raw magnitude is at least 13/16 of a
# step; bins of 2 or more always land close enough to help.
CHROMA_AC_KEEP_NUM = 13


def forward_coeffs(plane: np.ndarray, qz: np.ndarray, chroma: bool = False) -> np.ndarray:
    """Plane -> quantized coefficient matrix (n_blocks, 64), zigzag columns."""
    f = kernels.fdct_blocks(to_blocks(plane))
    cm = f.reshape(-1, 64)[:, ZIGZAG]
    mag = np.abs(cm)
    qv = (mag + (qz >> 1)) // qz
    if chroma:
        drop = (qv == 1) & (16 * mag < CHROMA_AC_KEEP_NUM * qz)
        drop[:, 0] = False
        qv = np.where(drop, 0, qv)
    return np.where(cm < 0, -qv, qv)


def inverse_coeffs(qcm: np.ndarray, qz: np.ndarray, height: int, width: int) -> np.ndarray:
    """Quantized coefficient matrix -> reconstructed int64 plane."""
    cm = qcm * qz
    blk = np.zeros((cm.shape[0], 64), np.int64)
    blk[:, ZIGZAG] = cm
    rec = kernels.idct_blocks(blk.reshape(-1, 8, 8))
    return from_blocks(rec, height, width)
