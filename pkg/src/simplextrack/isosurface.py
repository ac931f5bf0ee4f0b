"""Isosurface tracking as a 4D isovolume.

The edge pass finds spacetime edges whose endpoint values straddle the
isovalue (a zero on a vertex counts as positive, which is the symbolic
perturbation of the 1D problem). The pentachoron pass turns the 4 or 6
crossed edges of each mixed-sign pentachoron into 1 or 3 tetrahedra, and
edges of a pentachoron are united into one component.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .components import UnionFind
from .fields import FieldStream
from .mesh import RegularSpacetimeMesh
from .predicates import DEFAULT_BITS, quantize
from .slicing import slice_tets
from .sweep import element_values, window_sweeps

log = logging.getLogger(__name__)


def edge_test(f_i, f_j, c=0.0, bits=DEFAULT_BITS):
    """Interpolation parameter of the level crossing on edge i-j, or None.

    Signs are taken on quantized ``f - c`` with zero counted as positive,
    so a crossing through a vertex is claimed by exactly one side of it.
    """
    q = quantize([f_i, f_j], bits) - quantize(c, bits)
    if (q[0] >= 0) == (q[1] >= 0):
        return None
    return float(np.clip((c - f_i) / (f_j - f_i), 0.0, 1.0))


def case_ii_tets(plus, minus):
    """Staircase split of the prism spanned by a ++--- pentachoron's crossings.

    ``plus`` (2) and ``minus`` (3) are vertex ids in ascending order; the
    crossing on edge ``plus[a]-minus[b]`` is named ``(a, b)``. Returns the
    three tetrahedra as tuples of such names.
    """
    del plus, minus  # the names only depend on the ascending order
    return (((0, 0), (1, 0), (1, 1), (1, 2)),
            ((0, 0), (0, 1), (1, 1), (1, 2)),
            ((0, 0), (0, 1), (0, 2), (1, 2)))


def pentachoron_emit(gids, positive, point_of):
    """Tetrahedra (as point indices) of the isovolume inside one pentachoron.

    Parameters
    ----------
    gids : 5 ascending vertex ids
    positive : 5 bools, perturbed sign of ``f - c`` at each vertex
    point_of : mapping ``(gid_a, gid_b) -> point index`` for crossed edges

    Returns
    -------
    list of 4-tuples; empty when the signs are not mixed.
    """
    gids = [int(g) for g in gids]
    pos = [g for g, s in zip(gids, positive) if s]
    neg = [g for g, s in zip(gids, positive) if not s]
    if not pos or not neg:
        return []
    small, large = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    crossed = [point_of.get((min(a, b), max(a, b))) for a in small for b in large]
    if any(p is None for p in crossed) or len(crossed) not in (4, 6):
        raise AssertionError(f"pentachoron {gids}: crossed-edge count does not match its signs")
    if len(small) == 1:
        return [tuple(crossed)]
    e = {(a, b): crossed[a * 3 + b] for a in range(2) for b in range(3)}
    return [tuple(e[name] for name in tet) for tet in case_ii_tets(small, large)]


@dataclass
class IsoVolume:
    """Tetrahedralized level set of a 3D time-varying scalar field in R^4."""

    points: np.ndarray  # (m, 4)
    edges: np.ndarray  # (m, 2) global vertex ids of the crossed edge
    tets: np.ndarray  # (f, 4)
    sources: np.ndarray  # (f,) pentachoron codes
    labels: np.ndarray  # (f,) component id per tetrahedron
    point_labels: np.ndarray  # (m,)

    @property
    def n_components(self):
        return len(np.unique(self.labels)) if len(self.labels) else 0

    def slice(self, t0, t_min=0.0):
        """Triangle mesh of the isosurface at time ``t0``."""
        return slice_tets(self.points, self.tets, t0, t_min)


@dataclass
class IsoResult:
    volume: IsoVolume
    diagnostics: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


class IsosurfaceTracker:
    """Track ``f = isovalue`` of a scalar field on a 3D regular spacetime mesh."""

    def __init__(self, mesh, isovalue=0.0, threads=1, bits=DEFAULT_BITS):
        if not isinstance(mesh, RegularSpacetimeMesh) or mesh.n != 3:
            raise ValueError("isosurface tracking needs a regular 3D spacetime mesh")
        self.mesh = mesh
        self.isovalue = float(isovalue)
        self.threads = max(1, int(threads))
        self.bits = bits

    def prepare(self, data):
        if data.values.shape[1] != 1:
            raise ValueError("isosurface tracking needs a scalar field")
        f = data.values[:, 0]
        data.derived["f"] = f
        data.derived["positive"] = (quantize(f, self.bits) - quantize(self.isovalue, self.bits)) >= 0

    def stream(self, reader, n_layers):
        return FieldStream(reader, n_layers, self.prepare)

    def edge_pass(self, window, layer, kind):
        """Crossed edges of one sweep as ``(gids (m, 2), mu (m,))``."""
        mesh = self.mesh
        gids_out, mu_out = [], []
        for _, _, gids, pos in element_values(mesh, window, 1, layer, kind, "positive"):
            hit = np.flatnonzero(pos[:, 0] != pos[:, 1])
            if not len(hit):
                continue
            g = gids[hit]
            f = window.stacked("f")[g - window.tau * mesh.nspace]
            with np.errstate(divide="ignore", invalid="ignore"):
                mu = (self.isovalue - f[:, 0]) / (f[:, 1] - f[:, 0])
            mu = np.clip(np.nan_to_num(mu, nan=0.0), 0.0, 1.0)
            gids_out.append(g)
            mu_out.append(mu)
        if not gids_out:
            return np.empty((0, 2), np.int64), np.empty(0)
        g = np.concatenate(gids_out)
        mu = np.concatenate(mu_out)
        order = np.lexsort((g[:, 1], g[:, 0]))
        return g[order], mu[order]

    def run(self, stream):
        t_start = time.perf_counter()
        mesh = self.mesh
        point_of = {}
        points, edges = [], []
        tets, sources = [], []
        uf = UnionFind()
        diagnostics = {"edge_count_violations": 0, "pentachoron_edge_counts": {0: 0, 4: 0, 6: 0}}
        n_pent = 0
        for window in stream.windows():
            for layer, kind in window_sweeps(window):
                g, mu = self.edge_pass(window, layer, kind)
                if not len(g):
                    continue
                xa = mesh.vertex_coords(g[:, 0])
                xb = mesh.vertex_coords(g[:, 1])
                xs = (1 - mu)[:, None] * xa + mu[:, None] * xb
                for (a, b), x in zip(g.tolist(), xs):
                    point_of[(a, b)] = len(points)
                    points.append(x)
                    edges.append((a, b))
            if window.upper is None:
                continue
            pos_all = window.stacked("positive")
            base = window.tau * mesh.nspace
            for tid in mesh.types(4):
                codes, gids = mesh.type_arrays(4, tid, window.tau)
                n_pent += len(codes)
                s = pos_all[gids - base]
                n_pos = s.sum(axis=1)
                mixed = (n_pos > 0) & (n_pos < 5)
                diagnostics["pentachoron_edge_counts"][0] += int((~mixed).sum())
                for e in np.flatnonzero(mixed):
                    row = gids[e].tolist()
                    present = sum((a, b) in point_of for a, b in combinations(row, 2))
                    npos = int(n_pos[e])
                    expect = npos * (5 - npos)
                    if present != expect or present not in (4, 6):
                        diagnostics["edge_count_violations"] += 1
                        log.error("pentachoron %d has %d crossed edges", codes[e], present)
                        continue
                    diagnostics["pentachoron_edge_counts"][present] += 1
                    new = pentachoron_emit(row, s[e].tolist(), point_of)
                    crossed = [point_of[(a, b)] for a, b in combinations(row, 2) if (a, b) in point_of]
                    uf.unite(crossed)
                    for tet in new:
                        tets.append(tet)
                        sources.append(int(codes[e]))
        vol = self._volume(points, edges, tets, sources, uf)
        stats = {"points": len(points), "tetrahedra": len(tets), "pentachora": n_pent,
                 "components": vol.n_components, "seconds": time.perf_counter() - t_start}
        return IsoResult(vol, diagnostics, stats)

    def _volume(self, points, edges, tets, sources, uf):
        m = len(points)
        for i in range(m):
            uf.add(i)
        comps = uf.components()
        label = np.empty(m, dtype=np.int64)
        for cid, members in enumerate(comps.values()):
            label[members] = cid
        tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
        tl = label[tets[:, 0]] if len(tets) else np.empty(0, np.int64)
        return IsoVolume(
            points=np.asarray(points, dtype=np.float64).reshape(-1, 4),
            edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
            tets=tets,
            sources=np.asarray(sources, dtype=np.int64),
            labels=tl,
            point_labels=label,
        )

    def track_arrays(self, arrays):
        return self.run(FieldStream.from_arrays(arrays, self.prepare))
