"""Hot sweep kernels, compiled when available.

The Cython extension is used when it imports; otherwise, or when the
environment variable ``SIMPLEXTRACK_PURE`` is set to a non-empty value other
than ``0``, the numpy fallback is used. Both produce identical results.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fallback

log = logging.getLogger(__name__)

STATUS_OUTSIDE, STATUS_INSIDE, STATUS_UNDECIDED = 0, 1, 2

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_BACKENDS = {"python": _fallback}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def _default_backend():
    if os.environ.get("SIMPLEXTRACK_PURE", "") not in ("", "0"):
        return "python"
    if _ckernels is None:
        log.info("compiled kernels unavailable; using the numpy fallback")
        return "python"
    return "compiled"


_active = _default_backend()


def available_backends():
    return sorted(_BACKENDS)


def backend():
    """Name of the active backend, ``"compiled"`` or ``"python"``."""
    return _active


def set_backend(name):
    """Switch backends; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    prev, _active = _active, name
    return prev


def chunk_bounds(n, threads, min_chunk=4096):
    """Deterministic split of ``range(n)`` into contiguous chunks."""
    if n == 0:
        return []
    parts = max(1, min(threads * 4, -(-n // min_chunk)))
    edges = np.linspace(0, n, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_chunks(fn, n, threads=1):
    """Call ``fn(start, stop)`` over a split of ``range(n)``, in parallel if asked.

    Each call must write a disjoint part of the output, which keeps the
    result independent of the thread count.
    """
    bounds = chunk_bounds(n, threads)
    if threads <= 1 or len(bounds) <= 1:
        for a, b in bounds:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(fn, a, b) for a, b in bounds]:
            fut.result()


def classify_indexed(vals, robust=True, threads=1):
    """Point-in-simplex status for gathered simplex vectors ``(N, n+1, n)``."""
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    out = np.zeros(len(vals), dtype=np.uint8)
    impl = _BACKENDS[_active]
    run_chunks(lambda a, b: impl.classify_indexed(vals, out, a, b, robust), len(vals), threads)
    return out


def classify_regular(lo, hi, offsets, counts, strides, robust=True, threads=1):
    """Point-in-simplex status for one element type over a regular grid window."""
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = lo if hi is None else np.ascontiguousarray(hi, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    strides = np.ascontiguousarray(strides, dtype=np.int64)
    total = int(np.prod(counts))
    out = np.zeros(total, dtype=np.uint8)
    impl = _BACKENDS[_active]
    run_chunks(lambda a, b: impl.classify_regular(lo, hi, offsets, counts, strides, out, a, b,
                                                  robust), total, threads)
    return out


def winding(phase, ids, period, threads=1):
    """Winding numbers (-1, 0, +1) of quantized phases around triangles."""
    phase = np.ascontiguousarray(phase, dtype=np.int64)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    out = np.zeros(len(phase), dtype=np.int8)
    impl = _BACKENDS[_active]
    run_chunks(lambda a, b: impl.winding(phase, ids, int(period), out, a, b), len(phase), threads)
    return out
