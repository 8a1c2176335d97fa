"""Container-level codec behavior: progressivity, lossless duality, metrics."""
import math

import numpy as np
import pytest

from payloadsim import codec
from payloadsim.codec import DecodedImage, SegmentPlan, decode, encode, parse_header, psnr, quality_curve
from payloadsim.codec.bitstream import decode_unit, dpcm, encode_unit, undpcm
from payloadsim.codec.transform import quant_table
from payloadsim.errors import (
    FormatError,
    InvalidComparisonError,
    InvalidImageError,
    SegmentCorruptError,
)


def _boundaries(stream):
    hdr = parse_header(stream)
    out = []
    pos = hdr.header_size
    for ln in hdr.segment_lengths:
        pos += ln
        out.append(pos)
    return out


def test_unit_roundtrip_sparse():
    rng = np.random.default_rng(5)
    arr = np.zeros(5000, np.int64)
    idx = rng.choice(5000, 120, replace=False)
    arr[idx] = rng.integers(-(2**31), 2**31, 120)
    buf = encode_unit(arr)
    out, off = decode_unit(buf, 0, 0)
    assert off == len(buf)
    assert np.array_equal(out, arr)


def test_unit_roundtrip_all_zero_and_dense():
    for arr in (np.zeros(977, np.int64), np.arange(-300, 300, dtype=np.int64)):
        out, off = decode_unit(encode_unit(arr), 0, 0)
        assert np.array_equal(out, arr)


def test_dpcm_roundtrip():
    rng = np.random.default_rng(6)
    arr = rng.integers(-1000, 1000, 333)
    assert np.array_equal(undpcm(dpcm(arr)), arr)


def test_quant_table_midpoint_is_base_and_clipped():
    q50 = quant_table(50)
    assert q50[0] == 16  # DC entry of the base table, unscaled at quality 50
    assert quant_table(100).max() == 1
    assert quant_table(1).min() >= 1
    assert np.all(quant_table(10) >= quant_table(90))


def test_header_roundtrip_fields():
    img = np.zeros((10, 14, 3), np.uint8)
    hdr = parse_header(encode(img, quality=30, lossless=True))
    assert (hdr.width, hdr.height, hdr.channels) == (14, 10, 3)
    assert hdr.bit_depth == 8 and hdr.quality == 30
    assert hdr.lossless and hdr.segment_count == 6
    assert len(hdr.segment_lengths) == 6


def test_constant_gray_block_is_dc_only_and_exact():
    img = np.full((8, 8), 137, np.uint8)
    stream = encode(img, quality=75)
    hdr = parse_header(stream)
    # every AC band is a single empty-run unit per plane
    assert all(ln <= 3 for ln in hdr.segment_lengths[1:])
    dc_only = decode(stream[: hdr.header_size + hdr.segment_lengths[0]])
    assert dc_only.segments_used == 1
    assert np.array_equal(dc_only.to_array(), img)


def test_constant_image_compresses_below_one_percent():
    img = np.full((128, 160, 3), 201, np.uint8)
    stream = encode(img, quality=75)
    assert len(stream) <= 0.01 * img.nbytes
    assert np.array_equal(decode(stream).to_array(), img)


def test_random_noise_lossless_not_below_raw():
    rng = np.random.default_rng(9)
    img = rng.integers(0, 256, (96, 96, 3), dtype=np.uint8)
    stream = encode(img, quality=75, lossless=True)
    assert len(stream) >= 0.9 * img.nbytes


def test_lossless_roundtrip_100_random_images():
    rng = np.random.default_rng(12)
    for i in range(100):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        ch = (1, 3)[int(rng.integers(0, 2))]
        shape = (h, w) if ch == 1 else (h, w, 3)
        img = rng.integers(0, 256, shape, dtype=np.uint8)
        q = int(rng.integers(1, 101))
        out = decode(encode(img, quality=q, lossless=True))
        assert out.segments_used == 6
        assert np.array_equal(out.to_array(), img), (i, shape, q)


def test_lossless_roundtrip_extreme_values():
    for val in (0, 255):
        img = np.full((24, 24, 3), val, np.uint8)
        assert np.array_equal(decode(encode(img, lossless=True)).to_array(), img)
    # checkerboard of extremes stresses the residual path
    img = np.indices((16, 16)).sum(0) % 2 * np.uint8(255)
    img = np.stack([img, 255 - img, img], axis=-1).astype(np.uint8)
    assert np.array_equal(decode(encode(img, lossless=True)).to_array(), img)


def test_prefix_decodability_and_partial_segment_rule():
    rng = np.random.default_rng(14)
    base = rng.integers(0, 64, (40, 56, 3), dtype=np.uint8)
    img = (base.astype(np.int64) + np.arange(56)[None, :, None]).clip(0, 255).astype(np.uint8)
    stream = encode(img, quality=60, lossless=True)
    bounds = _boundaries(stream)
    prev = None
    for k, b in enumerate(bounds):
        out = decode(stream[:b])
        assert out.segments_used == k + 1
        assert out.to_array().shape == img.shape
        if prev is not None:
            # cutting mid-segment equals cutting at the previous boundary
            mid = decode(stream[: b - 1])
            assert mid.segments_used == k
            assert np.array_equal(mid.pixels, prev.pixels)
        prev = out


def test_full_stream_uses_every_segment():
    img = np.zeros((9, 9), np.uint8)
    stream = encode(img, quality=75)
    assert decode(stream).segments_used == parse_header(stream).segment_count


def test_psnr_monotone_and_curve_points():
    rng = np.random.default_rng(15)
    img = (rng.integers(0, 60, (48, 64, 3)) + np.linspace(0, 180, 64)[None, :, None]).astype(np.uint8)
    stream = encode(img, quality=75, lossless=True)
    curve = quality_curve(stream, img)
    assert len(curve) == 6
    assert [n for n, _ in curve] == _boundaries(stream)
    vals = [p for _, p in curve]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == math.inf


def test_quality_curve_constant_image_all_infinite():
    img = np.full((32, 32), 90, np.uint8)
    curve = quality_curve(encode(img, quality=75), img)
    assert all(p == math.inf for _, p in curve)


def test_psnr_oracle_values():
    a = np.zeros((16, 16), np.uint8)
    b = a.copy()
    b[3, 7] = 16  # MSE = 16^2/256 = 1 -> 10*log10(255^2)
    assert psnr(a, b) == pytest.approx(48.130803608679, abs=1e-9)
    assert psnr(a, np.full((16, 16), 255, np.uint8)) == pytest.approx(0.0, abs=1e-12)
    assert psnr(a, a) == math.inf
    with pytest.raises(InvalidComparisonError):
        psnr(a, np.zeros((8, 8), np.uint8))


def test_encode_rejects_bad_inputs():
    with pytest.raises(InvalidImageError):
        encode(np.zeros((0, 8), np.uint8))
    with pytest.raises(InvalidImageError):
        encode(np.zeros((8, 8, 2), np.uint8))
    with pytest.raises(InvalidImageError):
        encode(np.zeros((8, 8), np.float64))
    with pytest.raises(InvalidImageError):
        encode(np.zeros((8, 8), np.uint8), quality=0)


def test_segment_plan_validation():
    with pytest.raises(ValueError):
        SegmentPlan(bands=((0, 1), (2, 63)))
    with pytest.raises(ValueError):
        SegmentPlan(bands=((0, 0), (1, 40)))
    with pytest.raises(ValueError):
        SegmentPlan(bands=((0, 0), (2, 63)))
    custom = SegmentPlan(bands=((0, 0), (1, 63)))
    img = np.arange(64, dtype=np.uint8).reshape(8, 8)
    stream = encode(img, quality=90, plan=custom)
    assert parse_header(stream).segment_count == 2
    assert decode(stream).to_array().shape == (8, 8)


def test_decode_rejects_bad_magic_and_truncated_header():
    img = np.zeros((8, 8), np.uint8)
    stream = bytearray(encode(img))
    with pytest.raises(FormatError):
        decode(bytes(stream[:10]))
    stream[0] = 0x58
    with pytest.raises(FormatError):
        decode(bytes(stream))


def test_decode_requires_segment_zero():
    stream = encode(np.zeros((8, 8), np.uint8))
    hdr = parse_header(stream)
    with pytest.raises(FormatError):
        decode(stream[: hdr.header_size + hdr.segment_lengths[0] - 1])


def test_decode_reports_corrupt_segment_index():
    rng = np.random.default_rng(16)
    img = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
    stream = bytearray(encode(img, quality=40))
    hdr = parse_header(bytes(stream))
    start = hdr.header_size + hdr.segment_lengths[0]
    stream[start : start + hdr.segment_lengths[1]] = bytes([0xFF] * hdr.segment_lengths[1])
    with pytest.raises(SegmentCorruptError) as err:
        decode(bytes(stream))
    assert err.value.segment_index == 1


def test_encode_is_bit_reproducible():
    rng = np.random.default_rng(17)
    img = rng.integers(0, 256, (32, 48, 3), dtype=np.uint8)
    assert encode(img, quality=65, lossless=True) == encode(img, quality=65, lossless=True)


def test_decoded_image_shape_contract():
    img = (np.arange(300).reshape(10, 30) % 256).astype(np.uint8)
    out = decode(encode(img, lossless=True))
    assert isinstance(out, DecodedImage)
    assert out.pixels.shape == (1, 10, 30)
    assert out.pixels.size == out.width * out.height * out.channels


def test_higher_quality_not_worse_on_textured_image():
    rng = np.random.default_rng(18)
    img = (rng.integers(0, 50, (64, 64, 3)) + np.arange(64)[:, None, None] * 2).astype(np.uint8)
    p_lo = psnr(img, decode(encode(img, quality=20)).to_array())
    p_hi = psnr(img, decode(encode(img, quality=90)).to_array())
    assert p_hi >= p_lo


def test_chroma_quantizer_widens_ac_dead_zone():
    from payloadsim import kernels
    from payloadsim.codec.transform import (
        CHROMA_AC_KEEP_NUM, ZIGZAG, forward_coeffs, to_blocks)

    rng = np.random.default_rng(21)
    plane = rng.integers(-130, 131, (40, 48)).astype(np.int64)
    qz = quant_table(75)
    base = forward_coeffs(plane, qz)
    wide = forward_coeffs(plane, qz, chroma=True)

    mag = np.abs(kernels.fdct_blocks(to_blocks(plane)).reshape(-1, 64)[:, ZIGZAG])
    diff = base != wide
    assert diff.any()
    # only +-1 bins below the keep threshold change, and they go to zero
    assert np.all(np.abs(base[diff]) == 1)
    assert np.all(wide[diff] == 0)
    assert np.all(16 * mag[diff] < CHROMA_AC_KEEP_NUM * qz[None, :].repeat(mag.shape[0], 0)[diff])
    # everything at or above the threshold, and all of DC, is untouched
    keep = ~diff
    assert np.array_equal(base[keep], wide[keep])
    assert np.array_equal(base[:, 0], wide[:, 0])
