"""Unstructured simplicial meshes and their staircase extrusion in time."""

from __future__ import annotations

import json
from itertools import combinations

import numpy as np

from .handle import LAYER_BITS, MAX_LAYERS, ElementHandle, InvalidHandle, Kind


class UnstructuredBaseMesh:
    """Time-invariant n-simplicial mesh (n = 2 or 3).

    Cells are stored with ascending vertex ids; the vertex id is the global
    vertex order. ``simplices[d]`` lists every d-face, sorted, and
    ``sides``/``parents`` hold the incidence between consecutive dimensions.
    """

    def __init__(self, vertices, cells):
        vertices = np.asarray(vertices, dtype=np.float64)
        cells = np.sort(np.asarray(cells, dtype=np.int64), axis=1)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise ValueError("vertices must have shape (nv, 2) or (nv, 3)")
        n = vertices.shape[1]
        if cells.ndim != 2 or cells.shape[1] != n + 1:
            raise ValueError(f"cells must have shape (nc, {n + 1})")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            raise ValueError("cell vertex index out of range")
        if len(np.unique(cells, axis=0)) != len(cells) or np.any(np.diff(cells, axis=1) == 0):
            raise ValueError("cells must be distinct and non-degenerate")
        self.vertices = vertices
        self.n = n
        self.nv = len(vertices)
        self.simplices = [None] * (n + 1)
        self.simplices[n] = cells
        for d in range(n - 1, -1, -1):
            faces = np.concatenate([cells[:, list(c)] for c in combinations(range(n + 1), d + 1)])
            self.simplices[d] = np.unique(faces, axis=0)
        self.index = [{tuple(int(v) for v in s): i for i, s in enumerate(arr)}
                      for arr in self.simplices]
        self.sides = [None]
        self.parents = [[] for _ in range(n + 1)]
        for d in range(n + 1):
            self.parents[d] = [[] for _ in range(len(self.simplices[d]))]
        for d in range(1, n + 1):
            sides_d = []
            for i, s in enumerate(self.simplices[d]):
                ids = [self.index[d - 1][f] for f in combinations(tuple(int(v) for v in s), d)]
                sides_d.append(ids)
                for f in ids:
                    self.parents[d - 1][f].append(i)
            self.sides.append(sides_d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        flat = np.asarray(doc["vertices"], dtype=np.float64)
        cells = np.asarray(doc["cells"], dtype=np.int64)
        dim = int(doc.get("dim", 2))
        return cls(flat.reshape(-1, dim), cells.reshape(-1, dim + 1))

    def to_json(self, path):
        doc = {"dim": self.n,
               "vertices": [float(x) for x in self.vertices.ravel()],
               "cells": [int(c) for c in self.simplices[self.n].ravel()]}
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)

    @property
    def cells(self):
        return self.simplices[self.n]

    def link_vertices(self, d, sid):
        """Vertices w such that simplex ``sid`` plus w is a (d+1)-simplex."""
        own = set(int(v) for v in self.simplices[d][sid])
        out = set()
        if d < self.n:
            for p in self.parents[d][sid]:
                out.update(int(v) for v in self.simplices[d + 1][p])
        return sorted(out - own)


def _patterns(k, n):
    """Element types of dimension k in the extrusion of an n-mesh.

    Each entry is ``(d, kind, p)``: the support is a base d-simplex
    ``s0..sd`` and the element is

    * ``ordinal``: ``a_s0..a_sd`` (k = d)
    * ``split``:   ``a_s0..a_sp b_s(p+1)..b_sd`` (k = d)
    * ``shared``:  ``a_s0..a_sp b_sp..b_sd`` (k = d + 1)
    """
    out = []
    if k <= n:
        out.append((k, "ordinal", k))
        out.extend((k, "split", p) for p in range(k))
    if 1 <= k <= n + 1:
        out.extend((k - 1, "shared", p) for p in range(k))
    return out


class ExtrudedPrismaticMesh:
    """Staircase subdivision of an unstructured mesh extruded over time.

    Each base n-simplex becomes a prism per layer interval, split into n+1
    simplices along monotone staircases of the global vertex order, so that
    neighbouring prisms agree on their shared faces. Elements are indexed by
    ``(k, base simplex id, type, layer)``.
    """

    def __init__(self, base, n_layers=None):
        if n_layers is not None and not 1 <= n_layers <= MAX_LAYERS:
            raise ValueError(f"n_layers must be in [1, {MAX_LAYERS}]")
        self.base = base
        self.n = base.n
        self.n_layers = n_layers
        self.nspace = base.nv
        self.patterns = [_patterns(k, self.n) for k in range(self.n + 2)]
        self._pattern_index = [{p: i for i, p in enumerate(ps)} for ps in self.patterns]

    def __repr__(self):
        return f"ExtrudedPrismaticMesh(nv={self.base.nv}, n={self.n}, n_layers={self.n_layers})"

    @property
    def dim(self):
        return self.n + 1

    def n_types(self, k):
        return len(self.patterns[k])

    def types(self, k, kind=Kind.ALL):
        kind = Kind.parse(kind)
        return [i for i, p in enumerate(self.patterns[k]) if kind.includes(p[1] == "ordinal")]

    def vertex_coords(self, gids):
        gids = np.asarray(gids, dtype=np.int64)
        t, v = np.divmod(gids, self.nspace)
        out = np.empty(gids.shape + (self.n + 1,), dtype=np.float64)
        out[..., :self.n] = self.base.vertices[v]
        out[..., self.n] = t
        return out

    def _layer_ok(self, layer):
        return layer >= 0 and (self.n_layers is None or layer < self.n_layers)

    def is_valid(self, h):
        if not 0 <= h.k <= self.n + 1 or not 0 <= h.type < self.n_types(h.k):
            return False
        d, kind, _ = self.patterns[h.k][h.type]
        if not isinstance(h.anchor, (int, np.integer)) or not 0 <= h.anchor < len(self.base.simplices[d]):
            return False
        top = h.layer if kind == "ordinal" else h.layer + 1
        return self._layer_ok(h.layer) and self._layer_ok(top)

    def _check(self, h):
        if not self.is_valid(h):
            raise InvalidHandle(f"{h} is not an element of {self!r}")

    def is_ordinal(self, h):
        return self.patterns[h.k][h.type][1] == "ordinal"

    def encode(self, h):
        self._check(h)
        return ((int(h.anchor) * self.n_types(h.k) + h.type) << LAYER_BITS) | h.layer

    def decode(self, k, code):
        code = int(code)
        sid, tid = divmod(code >> LAYER_BITS, self.n_types(k))
        h = ElementHandle(k, sid, tid, code & (MAX_LAYERS - 1))
        self._check(h)
        return h

    @staticmethod
    def _split(support, kind, p):
        if kind == "ordinal":
            return list(support), []
        if kind == "split":
            return list(support[:p + 1]), list(support[p + 1:])
        return list(support[:p + 1]), list(support[p:])

    def vertices(self, h):
        """Vertices of ``h`` as ``(base vertex id, layer)``, ascending global order."""
        self._check(h)
        d, kind, p = self.patterns[h.k][h.type]
        support = [int(v) for v in self.base.simplices[d][h.anchor]]
        lo, hi = self._split(support, kind, p)
        return [(v, h.layer) for v in lo] + [(v, h.layer + 1) for v in hi]

    def vertex_ids(self, h):
        return tuple(v + t * self.nspace for v, t in self.vertices(h))

    def locate(self, gids):
        gids = sorted(int(g) for g in gids)
        k = len(gids) - 1
        layers = sorted({g // self.nspace for g in gids})
        bad = InvalidHandle(f"vertices {gids} do not span a mesh simplex")
        if len(layers) > 2 or (len(layers) == 2 and layers[1] != layers[0] + 1):
            raise bad
        lo = [g % self.nspace for g in gids if g // self.nspace == layers[0]]
        hi = [g % self.nspace for g in gids if g // self.nspace != layers[0]]
        if hi and lo[-1] > hi[0]:
            raise bad
        support = tuple(sorted(set(lo) | set(hi)))
        d = len(support) - 1
        if d > self.n or support not in self.base.index[d]:
            raise bad
        if not hi:
            pattern = (d, "ordinal", d)
        elif lo[-1] == hi[0]:
            pattern = (d, "shared", len(lo) - 1)
        else:
            pattern = (d, "split", len(lo) - 1)
        h = ElementHandle(k, self.base.index[d][support], self._pattern_index[k][pattern], layers[0])
        self._check(h)
        return h

    def sides(self, h):
        self._check(h)
        if h.k == 0:
            raise InvalidHandle("a vertex has no sides")
        ids = self.vertex_ids(h)
        return sorted(self.locate(ids[:i] + ids[i + 1:]) for i in range(len(ids)))

    def side_of(self, h):
        self._check(h)
        if h.k >= self.n + 1:
            return []
        ids = set(self.vertex_ids(h))
        d = self.patterns[h.k][h.type][0]
        cand_v = set(int(v) for v in self.base.simplices[d][h.anchor])
        cand_v.update(self.base.link_vertices(d, h.anchor))
        layers = (h.layer - 1, h.layer, h.layer + 1) if self.is_ordinal(h) else (h.layer, h.layer + 1)
        out = set()
        for t in layers:
            if not self._layer_ok(t):
                continue
            for v in cand_v:
                g = v + t * self.nspace
                if g in ids:
                    continue
                try:
                    out.add(self.locate(ids | {g}))
                except InvalidHandle:
                    pass
        return sorted(out)

    def layer_has(self, k, tid, layer):
        kind = self.patterns[k][tid][1]
        return self._layer_ok(layer) and (kind == "ordinal" or self._layer_ok(layer + 1))

    def type_arrays(self, k, tid, layer):
        if not self.layer_has(k, tid, layer):
            return np.empty(0, np.int64), np.empty((0, k + 1), np.int64)
        d, kind, p = self.patterns[k][tid]
        sup = self.base.simplices[d]
        lo, hi = self._split(list(range(d + 1)), kind, p)
        gids = np.concatenate([sup[:, lo] + layer * self.nspace,
                               sup[:, hi] + (layer + 1) * self.nspace], axis=1)
        sid = np.arange(len(sup), dtype=np.int64)
        codes = ((sid * self.n_types(k) + tid) << LAYER_BITS) | layer
        return codes, gids.astype(np.int64)

    def element_arrays(self, k, layer, kind=Kind.ALL):
        codes, gids = [], []
        for tid in self.types(k, kind):
            c, g = self.type_arrays(k, tid, layer)
            codes.append(c)
            gids.append(g)
        if not codes:
            return np.empty(0, np.int64), np.empty((0, k + 1), np.int64)
        codes = np.concatenate(codes)
        gids = np.concatenate(gids)
        order = np.argsort(codes, kind="stable")
        return codes[order], gids[order]

    def element_for(self, k, layer, kind, visit):
        codes, _ = self.element_arrays(k, layer, kind)
        for c in codes:
            visit(self.decode(k, c))
