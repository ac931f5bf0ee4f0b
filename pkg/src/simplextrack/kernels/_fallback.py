"""Pure numpy versions of the compiled kernels (same signatures and results)."""

from __future__ import annotations

import numpy as np

FILTER_EPS = 1e-12
_CHUNK = 1 << 16


def _minor_signs(v, skip, robust):
    rows = [j for j in range(v.shape[1]) if j != skip]
    n = v.shape[2]
    if n == 1:
        det = v[:, rows[0], 0]
        perm = np.abs(det)
    elif n == 2:
        a, b = v[:, rows[0]], v[:, rows[1]]
        det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        perm = np.abs(a[:, 0] * b[:, 1]) + np.abs(a[:, 1] * b[:, 0])
    else:
        a, b, c = v[:, rows[0]], v[:, rows[1]], v[:, rows[2]]
        m0 = b[:, 1] * c[:, 2] - b[:, 2] * c[:, 1]
        m1 = b[:, 0] * c[:, 2] - b[:, 2] * c[:, 0]
        m2 = b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]
        det = a[:, 0] * m0 - a[:, 1] * m1 + a[:, 2] * m2
        perm = (np.abs(a[:, 0]) * (np.abs(b[:, 1] * c[:, 2]) + np.abs(b[:, 2] * c[:, 1]))
                + np.abs(a[:, 1]) * (np.abs(b[:, 0] * c[:, 2]) + np.abs(b[:, 2] * c[:, 0]))
                + np.abs(a[:, 2]) * (np.abs(b[:, 0] * c[:, 1]) + np.abs(b[:, 1] * c[:, 0])))
    s = np.sign(det).astype(np.int8)
    if robust:
        s[np.abs(det) <= FILTER_EPS * perm] = 0
    return s


def _classify(v, robust):
    n = v.shape[2]
    out = np.zeros(len(v), dtype=np.uint8)
    neg = v < 0
    outside = np.any(neg.all(axis=1) | (~neg).all(axis=1), axis=1)
    live = np.flatnonzero(~outside)
    if not len(live):
        return out
    w = v[live]
    signs = np.stack([_minor_signs(w, i, robust) * (1 - 2 * (i % 2)) for i in range(n + 1)],
                     axis=1)
    pos = (signs > 0).any(axis=1)
    neg = (signs < 0).any(axis=1)
    unsure = (signs == 0).any(axis=1)
    res = np.where(pos & neg, 0, np.where(unsure, 2 if robust else 0, 1)).astype(np.uint8)
    out[live] = res
    return out


def classify_indexed(vals, out, start, stop, robust=True):
    vals = np.asarray(vals, dtype=np.float64)
    n = vals.shape[2]
    if vals.shape[1] != n + 1 or not 1 <= n <= 3:
        raise ValueError("vals must have shape (N, n+1, n) with 1 <= n <= 3")
    for a in range(start, stop, _CHUNK):
        b = min(a + _CHUNK, stop)
        out[a:b] = _classify(vals[a:b], robust)


def classify_regular(lo, hi, offsets, counts, strides, out, start, stop, robust=True):
    offsets = np.asarray(offsets, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    strides = np.asarray(strides, dtype=np.int64)
    n = lo.shape[1]
    nd = len(counts)
    if offsets.shape != (n + 1, nd + 1) or not 1 <= n <= 3:
        raise ValueError("offsets must have shape (n+1, dims+1)")
    rel = offsets[:, :nd] @ strides
    upper = offsets[:, nd].astype(bool)
    for a in range(start, stop, _CHUNK):
        b = min(a + _CHUNK, stop)
        rem = np.arange(a, b, dtype=np.int64)
        base = np.zeros(b - a, dtype=np.int64)
        for d in range(nd):
            rem, r = np.divmod(rem, counts[d])
            base += r * strides[d]
        v = np.empty((b - a, n + 1, n))
        for i in range(n + 1):
            v[:, i] = (hi if upper[i] else lo)[base + rel[i]]
        out[a:b] = _classify(v, robust)


def winding(phase, ids, period, out, start, stop):
    phase = np.asarray(phase[start:stop], dtype=np.int64)
    ids = np.asarray(ids[start:stop], dtype=np.int64)
    half = period // 2
    total = np.zeros(len(phase), dtype=np.int64)
    for a in range(3):
        b = (a + 1) % 3
        d = np.mod(phase[:, b] - phase[:, a], period)
        d = np.where(d > half, d - period, d)
        d = np.where((d == half) & (ids[:, a] > ids[:, b]), -half, d)
        total += d
    out[start:stop] = (total // period).astype(np.int8)
