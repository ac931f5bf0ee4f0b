"""Cutting spacetime geometry with the hyperplane ``t = t0``.

A vertex lying exactly on the plane counts as above it, i.e. the plane is
taken infinitesimally below ``t0``; at the lower end of the tracked range
(``t0 <= t_min``) it is taken infinitesimally above instead so the first
layer is not lost. Crossing points are keyed symbolically (a vertex or an
edge) so coincident points merge exactly.
"""

from __future__ import annotations

import numpy as np

from .components import split_chains


def _above(t, t0, nudge_up):
    return (t > t0) | ((t == t0) & (not nudge_up))


def _crossing(points, a, b, t0):
    """Key and coordinates (time dropped) where segment a-b meets ``t = t0``."""
    ta, tb = points[a, -1], points[b, -1]
    if ta == t0:
        return ("v", int(a)), points[a, :-1]
    if tb == t0:
        return ("v", int(b)), points[b, :-1]
    s = (t0 - ta) / (tb - ta)
    key = ("e", int(min(a, b)), int(max(a, b)))
    return key, (1 - s) * points[a, :-1] + s * points[b, :-1]


def _nudge(t0, t_min):
    return t_min is not None and t0 <= t_min


def slice_polyline(points, t0, loop=False, t_min=None):
    """Crossing points of a spacetime polyline (consecutive rows joined)."""
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    if m == 0:
        return []
    up = _above(points[:, -1], t0, _nudge(t0, t_min))
    out = []
    pairs = [(i, i + 1) for i in range(m - 1)]
    if loop and m > 2:
        pairs.append((m - 1, 0))
    for a, b in pairs:
        if up[a] != up[b]:
            out.append(_crossing(points, a, b, t0)[1])
    return out


def slice_segments(points, triangles, t0, t_min=None):
    """Polylines where a spacetime triangle soup meets ``t = t0``.

    Returns a list of ``(coords, is_loop)`` with coords of shape (k, d).
    """
    points = np.asarray(points, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if not len(triangles):
        return []
    up = _above(points[:, -1], t0, _nudge(t0, t_min))
    coords = {}
    adj = {}
    for tri in triangles:
        s = up[tri]
        if s.all() or not s.any():
            continue
        lone = tri[s] if s.sum() == 1 else tri[~s]
        others = [v for v in tri if v != lone[0]]
        keys = []
        for o in others:
            key, xyz = _crossing(points, lone[0], o, t0)
            coords[key] = xyz
            keys.append(key)
        a, b = keys
        if a == b:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    out = []
    for path, loop in split_chains(sorted(adj), adj):
        out.append((np.array([coords[k] for k in path]), loop))
    return out


def slice_tets(points, tets, t0, t_min=None):
    """Triangle mesh where spacetime tetrahedra meet ``t = t0``.

    Returns ``(vertices (p, d), triangles (q, 3))``; 3-vs-1 splits give one
    triangle, 2-vs-2 splits a quad cut into two triangles.
    """
    points = np.asarray(points, dtype=np.float64)
    tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
    d = points.shape[1] - 1 if points.ndim == 2 else 3
    if not len(tets):
        return np.empty((0, d)), np.empty((0, 3), np.int64)
    up = _above(points[:, -1], t0, _nudge(t0, t_min))
    index = {}
    verts = []
    tris = []

    def key_of(a, b):
        key, xyz = _crossing(points, a, b, t0)
        if key not in index:
            index[key] = len(verts)
            verts.append(xyz)
        return index[key]

    for tet in tets:
        s = up[tet]
        n_up = int(s.sum())
        if n_up in (0, 4):
            continue
        hi, lo = tet[s], tet[~s]
        if n_up in (1, 3):
            lone, rest = (hi[0], lo) if n_up == 1 else (lo[0], hi)
            cand = [(key_of(lone, r)) for r in rest]
            if len(set(cand)) == 3:
                tris.append(tuple(cand))
        else:
            p = [key_of(lo[0], hi[0]), key_of(lo[0], hi[1]), key_of(lo[1], hi[1]),
                 key_of(lo[1], hi[0])]
            for tri in ((p[0], p[1], p[2]), (p[0], p[2], p[3])):
                if len(set(tri)) == 3:
                    tris.append(tri)
    if not verts:
        return np.empty((0, d)), np.empty((0, 3), np.int64)
    return np.array(verts), np.array(tris, dtype=np.int64).reshape(-1, 3)
