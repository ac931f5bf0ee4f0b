"""Implicit simplicial spacetime mesh over a regular 2D/3D grid."""

from __future__ import annotations

import numpy as np

from .cube import subdivide_unit_cube
from .handle import LAYER_BITS, MAX_LAYERS, ElementHandle, InvalidHandle, Kind


class RegularSpacetimeMesh:
    """Regular grid of ``dims`` vertices extruded over ``n_layers`` timesteps.

    Every (n+1)-cube of the spacetime lattice is split into (n+1)! Kuhn
    simplices. Nothing is stored per element: handles are decoded against the
    precomputed unit-cube tables, so all queries are O(1).

    Parameters
    ----------
    dims : sequence of int
        Spatial vertex counts ``(nx, ny)`` or ``(nx, ny, nz)``.
    n_layers : int or None
        Number of timesteps; ``None`` for an unbounded stream.
    """

    def __init__(self, dims, n_layers=None):
        dims = tuple(int(d) for d in dims)
        if len(dims) not in (2, 3):
            raise ValueError(f"regular meshes are 2D or 3D, got dims={dims}")
        if min(dims) < 2:
            raise ValueError(f"every grid dimension needs at least 2 vertices, got {dims}")
        if n_layers is not None and not 1 <= n_layers <= MAX_LAYERS:
            raise ValueError(f"n_layers must be in [1, {MAX_LAYERS}]")
        self.dims = dims
        self.n = len(dims)
        self.n_layers = n_layers
        self.nspace = int(np.prod(dims))
        self.strides = tuple(int(np.prod(dims[:d])) for d in range(self.n))
        self.tables = subdivide_unit_cube(self.n + 1)
        # anchor lexicographic weights: x most significant
        self._anchor_weights = tuple(int(np.prod(dims[d + 1:])) for d in range(self.n))

    # ------------------------------------------------------------------ basics
    def __repr__(self):
        return f"RegularSpacetimeMesh(dims={self.dims}, n_layers={self.n_layers})"

    @property
    def dim(self):
        return self.n + 1

    def n_types(self, k):
        return len(self.tables.types[k])

    def types(self, k, kind=Kind.ALL):
        kind = Kind.parse(kind)
        return [i for i, t in enumerate(self.tables.types[k]) if kind.includes(t.ordinal)]

    def vertex_id(self, coords, layer):
        return int(sum(c * s for c, s in zip(coords, self.strides)) + layer * self.nspace)

    def vertex_coords(self, gids):
        """Spacetime coordinates ``(x, y[, z], t)`` of global vertex ids."""
        gids = np.asarray(gids, dtype=np.int64)
        t, r = np.divmod(gids, self.nspace)
        out = np.empty(gids.shape + (self.n + 1,), dtype=np.float64)
        for d in range(self.n - 1, -1, -1):
            q, r = np.divmod(r, self.strides[d])
            out[..., d] = q
        out[..., self.n] = t
        return out

    # ---------------------------------------------------------------- handles
    def _layer_ok(self, layer):
        return layer >= 0 and (self.n_layers is None or layer < self.n_layers)

    def is_valid(self, h):
        if not 0 <= h.k <= self.n + 1 or not 0 <= h.type < self.n_types(h.k):
            return False
        if len(h.anchor) != self.n:
            return False
        ext = self.tables.types[h.k][h.type].extent
        for a, e, d in zip(h.anchor, ext, self.dims):
            if a < 0 or a + e > d - 1:
                return False
        return self._layer_ok(h.layer) and self._layer_ok(h.layer + ext[-1])

    def _check(self, h):
        if not self.is_valid(h):
            raise InvalidHandle(f"{h} is not an element of {self!r}")

    def encode(self, h):
        self._check(h)
        lin = sum(a * w for a, w in zip(h.anchor, self._anchor_weights))
        return ((lin * self.n_types(h.k) + h.type) << LAYER_BITS) | h.layer

    def decode(self, k, code):
        code = int(code)
        layer = code & (MAX_LAYERS - 1)
        lin, tid = divmod(code >> LAYER_BITS, self.n_types(k))
        anchor = []
        for w in self._anchor_weights:
            q, lin = divmod(lin, w)
            anchor.append(q)
        h = ElementHandle(k, tuple(anchor), tid, layer)
        self._check(h)
        return h

    def is_ordinal(self, h):
        return self.tables.types[h.k][h.type].ordinal

    def vertices(self, h):
        """Vertices of ``h`` as ``(spatial coords, layer)``, ascending global order."""
        self._check(h)
        return [(tuple(a + o for a, o in zip(h.anchor, off[:-1])), h.layer + off[-1])
                for off in self.tables.types[h.k][h.type].offsets]

    def vertex_ids(self, h):
        return tuple(self.vertex_id(c, t) for c, t in self.vertices(h))

    def sides(self, h):
        self._check(h)
        if h.k == 0:
            raise InvalidHandle("a vertex has no sides")
        out = []
        for shift, tid in self.tables.types[h.k][h.type].sides:
            anchor = tuple(a + s for a, s in zip(h.anchor, shift[:-1]))
            out.append(ElementHandle(h.k - 1, anchor, tid, h.layer + shift[-1]))
        return sorted(out)

    def side_of(self, h):
        self._check(h)
        if h.k >= self.n + 1:
            return []
        out = []
        for shift, tid in self.tables.types[h.k][h.type].side_of:
            cand = ElementHandle(h.k + 1, tuple(a + s for a, s in zip(h.anchor, shift[:-1])),
                                 tid, h.layer + shift[-1])
            if self.is_valid(cand):
                out.append(cand)
        return sorted(out)

    def locate(self, gids):
        """Handle of the simplex spanned by the given global vertex ids."""
        coords = self.vertex_coords(sorted(int(g) for g in gids)).astype(int)
        try:
            anchor, tid = self.tables.canonicalize([tuple(c) for c in coords])
        except KeyError:
            raise InvalidHandle(f"vertices {list(gids)} do not span a mesh simplex") from None
        h = ElementHandle(len(coords) - 1, anchor[:-1], tid, anchor[-1])
        self._check(h)
        return h

    # ------------------------------------------------------------- traversal
    def anchor_counts(self, k, tid):
        """Number of valid anchors along each spatial axis for a type."""
        ext = self.tables.types[k][tid].extent
        return tuple(d - e for d, e in zip(self.dims, ext[:-1]))

    def layer_has(self, k, tid, layer):
        ext = self.tables.types[k][tid].extent
        return self._layer_ok(layer) and self._layer_ok(layer + ext[-1])

    def type_arrays(self, k, tid, layer):
        """Codes and vertex ids of every element of one type at one layer.

        Anchors are enumerated in C order over the reversed spatial axes
        (z slowest, x fastest), matching the kernels' status arrays.
        """
        if not self.layer_has(k, tid, layer):
            return np.empty(0, np.int64), np.empty((0, k + 1), np.int64)
        counts = self.anchor_counts(k, tid)
        grids = np.meshgrid(*[np.arange(c, dtype=np.int64) for c in reversed(counts)],
                            indexing="ij")
        anchor = [g.ravel() for g in reversed(grids)]  # x, y, z
        return self._codes_and_ids(k, tid, layer, anchor)

    def _codes_and_ids(self, k, tid, layer, anchor):
        t = self.tables.types[k][tid]
        base = sum(a * s for a, s in zip(anchor, self.strides)) + layer * self.nspace
        lin = sum(a * w for a, w in zip(anchor, self._anchor_weights))
        codes = ((lin * self.n_types(k) + tid) << LAYER_BITS) | layer
        gids = np.empty((len(base), k + 1), dtype=np.int64)
        for j, off in enumerate(t.offsets):
            gids[:, j] = base + sum(o * s for o, s in zip(off[:-1], self.strides)) \
                + off[-1] * self.nspace
        return np.asarray(codes, np.int64), gids

    def anchors_to_arrays(self, k, tid, layer, flat_index):
        """Codes/vertex ids for selected entries of a type's status array."""
        counts = self.anchor_counts(k, tid)
        idx = np.unravel_index(np.asarray(flat_index, np.int64), tuple(reversed(counts)))
        anchor = list(reversed([np.asarray(i, np.int64) for i in idx]))
        return self._codes_and_ids(k, tid, layer, anchor)

    def element_arrays(self, k, layer, kind=Kind.ALL):
        """Codes and ascending vertex ids of all qualifying k-simplices at a layer."""
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
        """Call ``visit(handle)`` once for every qualifying k-simplex of ``layer``."""
        codes, _ = self.element_arrays(k, layer, kind)
        for c in codes:
            visit(self.decode(k, c))
