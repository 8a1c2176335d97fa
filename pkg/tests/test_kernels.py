"""Kernel backends must agree bit-for-bit and honor the fixed-point contracts."""
import importlib

import numpy as np
import pytest

from payloadsim import kernels
from payloadsim.kernels import _numpy as knp
from payloadsim.kernels._tables import DCT_MATRIX, DCT_SHIFT, ZIGZAG

try:
    from payloadsim.kernels import _numba as knb
except ImportError:  # pragma: no cover - exercised only without numba
    knb = None

needs_numba = pytest.mark.skipif(knb is None, reason="numba backend unavailable")


def test_backend_selection_is_explicit():
    assert kernels.BACKEND in ("numpy", "numba")


def test_dct_matrix_rows_are_scaled_cosines():
    # row k, col n: round(cos((2n+1)k*pi/16) / (2*sqrt(2) if k==0 else 2) * 2^13)
    n = np.arange(8)
    for k in range(8):
        scale = 1.0 / (2.0 * np.sqrt(2.0)) if k == 0 else 0.5
        row = np.round(np.cos((2 * n + 1) * k * np.pi / 16.0) * scale * (1 << DCT_SHIFT))
        assert np.array_equal(DCT_MATRIX[k], row.astype(np.int64))


def test_zigzag_order_prefix():
    assert list(ZIGZAG[:10]) == [0, 1, 8, 16, 9, 2, 3, 10, 17, 24]
    assert sorted(ZIGZAG) == list(range(64))


def test_fdct_constant_block_concentrates_dc():
    blocks = np.full((3, 8, 8), -28, np.int64)
    out = knp.fdct_blocks(blocks)
    # single end-rounding keeps the ideal DC of 8*v = -224 exact
    assert np.array_equal(out[:, 0, 0], np.full(3, -224))
    ac = out.reshape(3, 64)[:, 1:]
    assert np.all(ac == 0)


def test_dct_roundtrip_error_bound():
    rng = np.random.default_rng(11)
    blocks = rng.integers(-128, 128, (64, 8, 8)).astype(np.int64)
    back = knp.idct_blocks(knp.fdct_blocks(blocks))
    # fixed-point forward+inverse keeps every sample within 1 count
    assert int(np.abs(back - blocks).max()) <= 1


def test_varint_roundtrip():
    rng = np.random.default_rng(3)
    vals = rng.integers(0, 2**62, 500, dtype=np.uint64)
    vals[:8] = [0, 1, 127, 128, 16383, 16384, 2**32, 2**62 - 1]
    buf = knp.varint_pack(vals)
    assert np.array_equal(knp.varint_unpack(buf), vals)


def test_varint_encoding_bytes():
    buf = knp.varint_pack(np.array([0, 127, 128, 300], np.uint64))
    assert buf.tobytes() == bytes([0x00, 0x7F, 0x80, 0x01, 0xAC, 0x02])


def test_varint_unpack_rejects_truncation():
    buf = knp.varint_pack(np.array([300], np.uint64))[:1]
    with pytest.raises(ValueError):
        knp.varint_unpack(buf)


def test_varint_unpack_rejects_overlong():
    buf = np.array([0x80] * 10 + [0x01], np.uint8)
    with pytest.raises(ValueError):
        knp.varint_unpack(buf)


def test_noise_octave_deterministic_and_bounded():
    a = knp.noise_octave(96, 64, 8, 8, 42)
    b = knp.noise_octave(96, 64, 8, 8, 42)
    c = knp.noise_octave(96, 64, 8, 8, 43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() < 65536


@needs_numba
def test_numba_matches_numpy_dct():
    rng = np.random.default_rng(21)
    blocks = rng.integers(-4096, 4096, (32, 8, 8)).astype(np.int64)
    assert np.array_equal(knb.fdct_blocks(blocks), knp.fdct_blocks(blocks))
    assert np.array_equal(knb.idct_blocks(blocks), knp.idct_blocks(blocks))


@needs_numba
def test_numba_matches_numpy_varint():
    rng = np.random.default_rng(22)
    vals = rng.integers(0, 2**63, 1000, dtype=np.uint64)
    assert np.array_equal(knb.varint_pack(vals), knp.varint_pack(vals))
    buf = knp.varint_pack(vals)
    assert np.array_equal(knb.varint_unpack(buf), knp.varint_unpack(buf))
    trunc = knp.varint_pack(np.array([300], np.uint64))[:1]
    for bad in (trunc, np.array([0x80] * 10 + [0x01], np.uint8)):
        with pytest.raises(ValueError):
            knb.varint_unpack(bad)


@needs_numba
def test_numba_matches_numpy_noise():
    a = knb.noise_octave(128, 80, 16, 10, 7)
    b = knp.noise_octave(128, 80, 16, 10, 7)
    assert np.array_equal(a, b)


def test_env_flag_forces_numpy(monkeypatch):
    monkeypatch.setenv("PAYLOADSIM_NUMBA", "0")
    import payloadsim.kernels as mod

    fresh = importlib.reload(mod)
    try:
        assert fresh.BACKEND == "numpy"
    finally:
        monkeypatch.undo()
        importlib.reload(mod)
