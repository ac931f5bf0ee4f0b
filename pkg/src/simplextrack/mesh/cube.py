"""Staircase triangulation of prisms and the Kuhn subdivision of unit cubes.

Vertices of the unit cube are bit tuples ``(x, y, z, t)``; the last axis is the
one added by the most recent extrusion (time, for spacetime tables).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

MAX_DIM = 4


def staircase_triangulate(n):
    """Monotone staircase triangulation of the prism over an n-simplex.

    Vertices are labelled ``("a", i)`` (lower copy) and ``("b", i)`` (upper
    copy) for ``i = 0..n``. Returns ``n + 1`` simplices, each a monotone
    path from ``a0`` to ``bn``; the ``j``-th simplex is ``a0..aj bj..bn``.
    """
    if not 0 <= n <= MAX_DIM:
        raise ValueError(f"prism base dimension must be in [0, {MAX_DIM}], got {n}")
    out = []
    for j in range(n + 1):
        path = [("a", i) for i in range(j + 1)] + [("b", i) for i in range(j, n + 1)]
        out.append(tuple(path))
    return out


def format_staircase(simplex):
    return "".join(f"{ab}{i}" for ab, i in simplex)


def _increment_sequence(simplex):
    seq = []
    for u, v in zip(simplex, simplex[1:]):
        (d,) = [i for i in range(len(u)) if u[i] != v[i]]
        seq.append(d)
    return seq


def _vertex_order_key(v):
    # linear-index order of a cube corner: x is the fastest axis
    return tuple(reversed(v))


@dataclass
class CubeType:
    """A unique k-simplex type owned by the cube at the origin."""

    k: int
    offsets: tuple  # k+1 bit tuples, ascending vertex order
    ordinal: bool
    sides: list = field(default_factory=list)  # [(shift, type id)] of dim k-1
    side_of: list = field(default_factory=list)  # [(shift, type id)] of dim k+1

    @property
    def extent(self):
        n = len(self.offsets[0])
        return tuple(max(o[d] for o in self.offsets) for d in range(n))


@dataclass
class UnitCubeTables:
    """Kuhn subdivision of the n-cube plus per-dimension unique type tables."""

    n: int
    simplices: list
    types: list  # types[k] -> list of CubeType
    _lookup: dict = field(default_factory=dict, repr=False)

    def type_id(self, k, offsets):
        return self._lookup[k][tuple(sorted(offsets, key=_vertex_order_key))]

    def canonicalize(self, vertices):
        """Map corner coordinates of a simplex to ``(anchor, type id)``."""
        n = self.n
        anchor = tuple(min(v[d] for v in vertices) for d in range(n))
        offsets = tuple(tuple(v[d] - anchor[d] for d in range(n)) for v in vertices)
        return anchor, self.type_id(len(vertices) - 1, offsets)


def _extrude(simplices, n):
    """Extrude (n-1)-cube simplices by one axis and staircase each prism."""
    stairs = staircase_triangulate(n - 1)
    out = []
    for s in simplices:
        for path in stairs:
            out.append(tuple(s[i] + ((0,) if ab == "a" else (1,)) for ab, i in path))
    return out


def subdivide_unit_cube(n):
    """Subdivide the unit n-cube into n! simplices by recursive extrusion."""
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"cube dimension must be in [1, {MAX_DIM}], got {n}")
    simplices = [((0,), (1,))]
    for m in range(2, n + 1):
        simplices = _extrude(simplices, m)
    # list in lexicographic order of the reversed axis-increment sequence
    simplices.sort(key=lambda s: tuple(reversed(_increment_sequence(s))))
    tables = UnitCubeTables(n=n, simplices=simplices, types=[])
    for k in range(n + 1):
        tables.types.append(enumerate_unique_types(tables, k))
    _link_types(tables)
    return tables


def enumerate_unique_types(tables, k):
    """Unique k-simplex types of the tiling, owned by the componentwise-min cube."""
    n = tables.n
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    seen = {}
    types = []
    for s in tables.simplices:
        for face in combinations(s, k + 1):
            anchor = tuple(min(v[d] for v in face) for d in range(n))
            offs = tuple(sorted((tuple(v[d] - anchor[d] for d in range(n)) for v in face),
                                key=_vertex_order_key))
            if offs in seen:
                continue
            seen[offs] = len(types)
            types.append(CubeType(k=k, offsets=offs, ordinal=all(o[-1] == 0 for o in offs)))
    tables._lookup[k] = seen
    return types


def _link_types(tables):
    n = tables.n
    for k in range(1, n + 1):
        for tid, t in enumerate(tables.types[k]):
            for face in combinations(t.offsets, k):
                shift, fid = tables.canonicalize(face)
                t.sides.append((shift, fid))
                # a face of type fid at anchor a has this parent at a - shift
                tables.types[k - 1][fid].side_of.append(
                    (tuple(-s for s in shift), tid))
    for k in range(n + 1):
        for t in tables.types[k]:
            t.side_of.sort()


def format_corner(v):
    return "".join(str(b) for b in v)
