"""Compare the numba and pure-numpy kernel backends.

Imports both backend modules directly (ignoring PAYLOADSIM_NUMBA), checks
that every kernel produces bit-identical output on the benchmark inputs,
then reports median wall time per call and the speedup ratio.

Run: python3 benchmarks/bench_kernels.py [repeats]
"""
import sys
import time

import numpy as np

from payloadsim.kernels import _numpy

try:
    from payloadsim.kernels import _numba
except ImportError:
    _numba = None

KERNELS = ("fdct_blocks", "idct_blocks", "varint_pack", "varint_unpack",
           "noise_octave")


def make_workloads(rng):
    # one desk-scale RGB frame is about 7k blocks across three planes
    blocks = rng.integers(-128, 128, (7000, 8, 8)).astype(np.int64)
    coeffs = _numpy.fdct_blocks(blocks)
    tokens = rng.integers(0, 1 << 20, 400_000).astype(np.uint64)
    buf = _numpy.varint_pack(tokens)
    return {
        "fdct_blocks": (blocks,),
        "idct_blocks": (coeffs,),
        "varint_pack": (tokens,),
        "varint_unpack": (buf,),
        "noise_octave": (478, 308, 24, 16, 12345),
    }


def median_time(fn, args, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    work = make_workloads(np.random.default_rng(7))

    if _numba is None:
        print("numba backend unavailable; nothing to compare")
        for name in KERNELS:
            fn = getattr(_numpy, name)
            print(f"{name:>16}  numpy {median_time(fn, work[name], repeats) * 1e3:8.3f} ms")
        return

    for name in KERNELS:
        getattr(_numba, name)(*work[name])  # compile before timing

    print(f"{'kernel':>16}  {'numpy ms':>10}  {'numba ms':>10}  {'speedup':>8}")
    for name in KERNELS:
        ref = getattr(_numpy, name)(*work[name])
        out = getattr(_numba, name)(*work[name])
        if not (ref.dtype == out.dtype and np.array_equal(ref, out)):
            raise SystemExit(f"{name}: backends disagree")
        t_np = median_time(getattr(_numpy, name), work[name], repeats)
        t_nb = median_time(getattr(_numba, name), work[name], repeats)
        print(f"{name:>16}  {t_np * 1e3:10.3f}  {t_nb * 1e3:10.3f}  {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
