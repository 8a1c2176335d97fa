"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Backend selection, decided once at import time:

* ``PAYLOADSIM_NUMBA=0`` forces the pure-numpy fallback.
* ``PAYLOADSIM_NUMBA=1`` requires numba (ImportError if missing).
* unset: numba when importable, numpy otherwise.

Both backends are bit-identical (integer-only arithmetic); see
``benchmarks/bench_kernels.py`` for the speed comparison.
"""
import os

_flag = os.environ.get("PAYLOADSIM_NUMBA", "").strip()

if _flag == "0":
    from . import _numpy as _backend

    BACKEND = "numpy"
else:
    try:
        from . import _numba as _backend

        BACKEND = "numba"
    except ImportError:
        if _flag == "1":
            raise
        from . import _numpy as _backend

        BACKEND = "numpy"

fdct_blocks = _backend.fdct_blocks
idct_blocks = _backend.idct_blocks
varint_pack = _backend.varint_pack
varint_unpack = _backend.varint_unpack
noise_octave = _backend.noise_octave

__all__ = [
    "BACKEND",
    "fdct_blocks",
    "idct_blocks",
    "varint_pack",
    "varint_unpack",
    "noise_octave",
]
