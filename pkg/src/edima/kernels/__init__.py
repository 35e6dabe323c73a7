"""Backend selection for the hot kernels.

The env var EDIMA_BACKEND picks the implementation:

    auto  (default)  numba when importable, else pure numpy
    numba            require the JIT backend, fail if unavailable
    numpy            force the pure-numpy fallback

Both backends expose the same functions with bit-identical outputs, so the
flag only changes speed. See benchmarks/bench_kernels.py for a comparison.
"""

from __future__ import annotations

import os

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

_choice = os.environ.get("EDIMA_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"EDIMA_BACKEND must be auto, numba or numpy, got {_choice!r}")

if _choice == "numpy":
    from . import numpy_impl as _impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_impl as _impl
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def splitmix64_block(seed: int, start: int, n: int) -> np.ndarray:
    return _impl.splitmix64_block(np.uint64(seed & _MASK64), np.int64(start),
                                  np.int64(n))


def parse_frames(buf: np.ndarray, swapped: bool):
    return _impl.parse_frames(buf, swapped)


def assemble_frames(ts, src, dst, proto, sport, dport, flags, plen) -> np.ndarray:
    return _impl.assemble_frames(ts, src, dst, proto, sport, dport, flags, plen)


def group_counts(vals: np.ndarray):
    return _impl.group_counts(vals)


def knn_votes(xq, xt, y, k: int) -> np.ndarray:
    return _impl.knn_votes(xq, xt, y, np.int64(k))


def best_split(vals, labels):
    return _impl.best_split(vals, labels)
