"""Deterministic data-parallel sweeps over the elements of a field window.

A window ``(tau, tau+1)`` runs the ordinal sweep of ``tau + 1`` and the
interval sweep of ``tau`` (plus the ordinal sweep of layer 0 for the first
window), so a stream of ``n_t`` layers runs ``n_t`` ordinal and ``n_t - 1``
interval sweeps. Results are returned sorted by element code.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .mesh import Kind, RegularSpacetimeMesh
from .predicates import point_in_simplex_sos


def window_sweeps(window):
    """``(layer, kind)`` pairs to run for a window, in execution order."""
    out = []
    if window.tau == 0:
        out.append((0, Kind.ORDINAL))
    if window.upper is not None:
        out.append((window.tau + 1, Kind.ORDINAL))
        out.append((window.tau, Kind.INTERVAL))
    return out


def gather(mesh, window, key, gids):
    """Per-vertex ``key`` values for global vertex ids inside the window."""
    local = np.asarray(gids, dtype=np.int64) - window.tau * mesh.nspace
    return window.stacked(key)[local]


def _exact_recheck(qvals, gids, undecided):
    """Exact SoS point-in-simplex on the elements the float filter left open."""
    keep = []
    for e in undecided:
        if point_in_simplex_sos(qvals[e].tolist(), [int(g) for g in gids[e]]):
            keep.append(e)
    return np.asarray(keep, dtype=np.int64)


def _sort(codes, gids):
    order = np.argsort(codes, kind="stable")
    return codes[order], gids[order]


def zero_crossing_elements(mesh, window, k, layer, kind, qkey="qvec", robust=True, threads=1):
    """Elements whose vector samples enclose the origin.

    ``qkey`` names quantized per-vertex vectors in R^k (int64). Returns
    ``(codes, gids)`` of positive k-simplices, sorted by code. With
    ``robust=False`` plain float signs are used and zeros count as outside.
    """
    codes_out, gids_out = [], []
    regular = isinstance(mesh, RegularSpacetimeMesh)
    for tid in mesh.types(k, kind):
        if not mesh.layer_has(k, tid, layer):
            continue
        if regular:
            lo = window.layer(layer)[qkey + "_f"]
            t = mesh.tables.types[k][tid]
            hi = window.layer(layer + 1)[qkey + "_f"] if any(o[-1] for o in t.offsets) else None
            status = kernels.classify_regular(lo, hi, t.offsets, mesh.anchor_counts(k, tid),
                                              mesh.strides, robust=robust, threads=threads)
            hits = np.flatnonzero(status == kernels.STATUS_INSIDE)
            open_ = np.flatnonzero(status == kernels.STATUS_UNDECIDED)
            if len(open_):
                _, g_open = mesh.anchors_to_arrays(k, tid, layer, open_)
                q_open = gather(mesh, window, qkey, g_open)
                sel = _exact_recheck(q_open, g_open, range(len(open_)))
                hits = np.sort(np.concatenate([hits, open_[sel]]))
            if len(hits):
                c, g = mesh.anchors_to_arrays(k, tid, layer, hits)
                codes_out.append(c)
                gids_out.append(g)
        else:
            c, g = mesh.type_arrays(k, tid, layer)
            if not len(c):
                continue
            q = gather(mesh, window, qkey, g)
            status = kernels.classify_indexed(q.astype(np.float64), robust=robust, threads=threads)
            hits = np.flatnonzero(status == kernels.STATUS_INSIDE)
            open_ = np.flatnonzero(status == kernels.STATUS_UNDECIDED)
            if len(open_):
                sel = _exact_recheck(q[open_], g[open_], range(len(open_)))
                hits = np.sort(np.concatenate([hits, open_[sel]]))
            codes_out.append(c[hits])
            gids_out.append(g[hits])
    if not codes_out:
        return np.empty(0, np.int64), np.empty((0, k + 1), np.int64)
    return _sort(np.concatenate(codes_out), np.concatenate(gids_out))


def element_values(mesh, window, k, layer, kind, key):
    """All qualifying k-simplices with gathered per-vertex ``key`` values.

    Yields ``(tid, codes, gids, values)`` per element type.
    """
    for tid in mesh.types(k, kind):
        if not mesh.layer_has(k, tid, layer):
            continue
        c, g = mesh.type_arrays(k, tid, layer)
        if len(c):
            yield tid, c, g, gather(mesh, window, key, g)
