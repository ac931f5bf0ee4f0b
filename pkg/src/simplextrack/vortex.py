"""Quantum vortex tracking in 3D phase fields.

A spacetime triangle is punctured by a vortex when the phase winds by a
nonzero multiple of 2*pi around it. Phases are quantized to integers modulo
``PERIOD`` so each triangle's winding is exact. Per-timestep curves pair the
positive faces of ordinal tetrahedra; spacetime surfaces unite the positive
triangles of each pentachoron and triangulate them into patches.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from . import kernels
from .components import UnionFind, split_chains
from .fields import FieldStream
from .mesh import Kind, RegularSpacetimeMesh
from .predicates import SingularSimplexError, solve_inverse_linear
from .slicing import slice_segments
from .sweep import element_values, window_sweeps

log = logging.getLogger(__name__)

PHASE_BITS = 32
PERIOD = 1 << PHASE_BITS
HALF = PERIOD // 2


def quantize_phase(theta):
    """Phase as an integer in ``[0, PERIOD)``; ``PERIOD`` stands for 2*pi."""
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ValueError("phase must be finite")
    return np.mod(np.rint(theta / (2 * math.pi) * PERIOD).astype(np.int64), PERIOD)


def _wrapped(qa, qb, id_a=0, id_b=1):
    d = (qb - qa) % PERIOD
    if d > HALF:
        d -= PERIOD
    elif d == HALF and id_a > id_b:
        d = -HALF
    return d


def phase_shift(theta_i, theta_j):
    """``theta_j - theta_i`` wrapped to (-pi, pi], computed on quantized angles."""
    qi, qj = (int(v) for v in quantize_phase([theta_i, theta_j]))
    return _wrapped(qi, qj) * (2 * math.pi / PERIOD)


def triangle_chirality(thetas, ids=(0, 1, 2)):
    """Winding number (-1, 0 or +1) of the phase around ``v0 -> v1 -> v2``."""
    q = [int(v) for v in quantize_phase(thetas)]
    total = sum(_wrapped(q[a], q[(a + 1) % 3], ids[a], ids[(a + 1) % 3]) for a in range(3))
    return total // PERIOD


@dataclass(frozen=True)
class VortexIntersection:
    """Positive spacetime triangle with its winding and puncture point."""

    code: int
    handle: object
    gids: tuple
    chirality: int  # relative to the ascending-vertex orientation
    x: tuple  # (x, y, z, t)


@dataclass
class VortexCurve:
    """Vortex line of one timestep, as a chain of punctured ordinal triangles."""

    layer: int
    codes: list
    points: np.ndarray  # (m, 3)
    loop: bool
    chirality: int  # relative to the traversal direction; 0 if inconsistent
    component: Optional[int] = None


@dataclass
class VortexSurface:
    """Spacetime vortex surface: punctures joined by per-pentachoron patches."""

    id: int
    label: object
    codes: list
    points: np.ndarray  # (m, 4)
    triangles: np.ndarray  # (f, 3) indices into points
    chirality: int = 0

    def slice(self, t0, t_min=None):
        """Polylines where the surface meets ``t = t0`` (see :mod:`slicing`)."""
        return slice_segments(self.points, self.triangles, t0, t_min)


@dataclass
class VortexResult:
    surfaces: list
    curves: dict  # layer -> list of VortexCurve
    intersections: dict
    diagnostics: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


class VortexTracker:
    """Track phase singularities of a 3D complex/phase field over time.

    ``input`` is ``"phase"`` (one component, radians) or ``"complex"``
    (two components, real and imaginary parts).
    """

    def __init__(self, mesh, input="phase", threads=1):
        if not isinstance(mesh, RegularSpacetimeMesh) or mesh.n != 3:
            raise ValueError("vortex tracking needs a regular 3D spacetime mesh")
        if input not in ("phase", "complex"):
            raise ValueError(f"input must be 'phase' or 'complex', got {input!r}")
        self.mesh = mesh
        self.input = input
        self.threads = max(1, int(threads))

    def prepare(self, data):
        v = data.values
        if self.input == "phase":
            if v.shape[1] != 1:
                raise ValueError("phase input needs one component")
            theta = v[:, 0]
            z = np.exp(1j * theta)
        else:
            if v.shape[1] != 2:
                raise ValueError("complex input needs two components (re, im)")
            z = v[:, 0] + 1j * v[:, 1]
            theta = np.angle(z)
        data.derived["qphase"] = quantize_phase(theta)
        data.derived["reim"] = np.stack([z.real, z.imag], axis=1)

    def stream(self, reader, n_layers):
        return FieldStream(reader, n_layers, self.prepare)

    # ------------------------------------------------------------- detection
    def detect(self, window, layer, kind):
        mesh = self.mesh
        out = {}
        for tid, codes, gids, q in element_values(mesh, window, 2, layer, kind, "qphase"):
            k = kernels.winding(q, gids, PERIOD, threads=self.threads)
            hit = np.flatnonzero(k != 0)
            if not len(hit):
                continue
            local = gids[hit] - window.tau * mesh.nspace
            reim = window.stacked("reim")[local]
            coords = mesh.vertex_coords(gids[hit])
            for j, e in enumerate(hit):
                mu = _puncture(reim[j])
                c = int(codes[e])
                out[c] = VortexIntersection(
                    code=c, handle=mesh.decode(2, c), gids=tuple(int(g) for g in gids[e]),
                    chirality=int(k[e]), x=tuple(float(v) for v in mu @ coords[j]))
        return out

    # ---------------------------------------------------------------- curves
    def curves_at(self, layer, positives, diagnostics):
        """Pair the positive ordinal faces of the ordinal tetrahedra at ``layer``."""
        mesh = self.mesh
        tets = {}
        for code, p in positives.items():
            for tet in mesh.side_of(p.handle):
                if tet.layer == layer and mesh.is_ordinal(tet):
                    tets.setdefault(tet, []).append(code)
        adj = {c: set() for c in positives}
        via = {}
        for tet in sorted(tets):
            faces = sorted(tets[tet])
            if len(faces) % 2:
                diagnostics["parity"] = diagnostics.get("parity", 0) + 1
                log.warning("ordinal tetrahedron %s has %d punctured faces", tet, len(faces))
                continue
            if len(faces) > 2:
                diagnostics["multi"] = diagnostics.get("multi", 0) + 1
            for a, b in zip(faces[0::2], faces[1::2]):
                adj[a].add(b)
                adj[b].add(a)
                via[(a, b)] = via[(b, a)] = tet
        curves = []
        uf = UnionFind(positives)
        for a in adj:
            for b in adj[a]:
                uf.unite((a, b))
        for rep, members in uf.components().items():
            for path, loop in split_chains(members, adj):
                if not loop and len(path) > 1 and path[-1] < path[0]:
                    path = path[::-1]
                pts = np.array([positives[c].x[:3] for c in path])
                chir = self._curve_chirality(path, loop, positives, via)
                if chir == 0:
                    diagnostics["chirality"] = diagnostics.get("chirality", 0) + 1
                curves.append(VortexCurve(layer, path, pts, loop, chir))
        return curves

    def _curve_chirality(self, path, loop, positives, via):
        mesh = self.mesh
        signs = set()
        m = len(path)
        for i, c in enumerate(path):
            p = positives[c]
            v = mesh.vertex_coords(list(p.gids))[:, :3]
            normal = np.cross(v[1] - v[0], v[2] - v[0])
            prev_tet = next_tet = None
            if m > 1:
                if i > 0 or loop:
                    prev_tet = via.get((path[i - 1], c))
                if i < m - 1 or loop:
                    next_tet = via.get((c, path[(i + 1) % m]))
            center = v.mean(axis=0)
            if prev_tet is None and next_tet is None:
                continue
            d = np.zeros(3)
            if next_tet is not None:
                d += mesh.vertex_coords(list(mesh.vertex_ids(next_tet)))[:, :3].mean(0) - center
            if prev_tet is not None:
                d += center - mesh.vertex_coords(list(mesh.vertex_ids(prev_tet)))[:, :3].mean(0)
            s = float(np.dot(normal, d))
            if s != 0:
                signs.add(int(np.sign(s)) * p.chirality)
        return signs.pop() if len(signs) == 1 else 0

    # -------------------------------------------------------------- surfaces
    def patches(self, tau, positives, by_vertices, uf, diagnostics):
        """Unite and triangulate positives per pentachoron of layer ``tau``."""
        mesh = self.mesh
        pentas = set()
        for p in positives.values():
            for tet in mesh.side_of(p.handle):
                for pen in mesh.side_of(tet):
                    if pen.layer == tau:
                        pentas.add(pen)
        tris = []
        for pen in sorted(pentas):
            verts = mesh.vertex_ids(pen)
            faces = [by_vertices[f] for f in combinations(verts, 3) if f in by_vertices]
            cnt = len(faces)
            diagnostics.setdefault("patch_counts", {}).setdefault(cnt, 0)
            diagnostics["patch_counts"][cnt] += 1
            if cnt < 2:
                continue
            uf.unite(faces)
            if cnt < 3:
                continue
            ring = _patch_cycle(verts, faces, positives)
            root = ring.index(min(ring))
            ring = ring[root:] + ring[:root]
            for a, b in zip(ring[1:-1], ring[2:]):
                tris.append((ring[0], a, b))
        return tris

    # ------------------------------------------------------------------- run
    def run(self, stream, surfaces=True):
        t_start = time.perf_counter()
        mesh = self.mesh
        diagnostics = {"parity": 0, "chirality": 0}
        allpos = {}
        curves = {}
        uf = UnionFind()
        tris = []
        carried = {}
        last_layer = 0
        for window in stream.windows():
            found = dict(carried)
            for layer, kind in window_sweeps(window):
                found.update(self.detect(window, layer, kind))
            tau = window.tau
            last_layer = max(last_layer, tau)
            ordinal_tau = {c: p for c, p in found.items()
                           if p.handle.layer == tau and mesh.is_ordinal(p.handle)}
            curves[tau] = self.curves_at(tau, ordinal_tau, diagnostics)
            for c in found:
                uf.add(c)
            allpos.update(found)
            if window.upper is not None and surfaces:
                by_vertices = {p.gids: c for c, p in found.items()}
                tris.extend(self.patches(tau, found, by_vertices, uf, diagnostics))
            carried = {c: p for c, p in found.items()
                       if p.handle.layer == tau + 1 and mesh.is_ordinal(p.handle)}
        surfs = self._surfaces(allpos, uf, tris, curves) if surfaces else []
        stats = {"intersections": len(allpos), "surfaces": len(surfs),
                 "curves": sum(len(c) for c in curves.values()),
                 "seconds": time.perf_counter() - t_start}
        return VortexResult(surfs, curves, allpos, diagnostics, stats)

    def _surfaces(self, allpos, uf, tris, curves):
        comps = uf.components()
        rep_of = {}
        for rep, members in comps.items():
            for c in members:
                rep_of[c] = rep
        tri_by_rep = {}
        for tri in tris:
            tri_by_rep.setdefault(rep_of[tri[0]], []).append(tri)
        label_to_id = {rep: i for i, rep in enumerate(comps)}
        for layer_curves in curves.values():
            for cv in layer_curves:
                cv.component = label_to_id[rep_of[cv.codes[0]]]
        out = []
        for rep, members in comps.items():
            index = {c: i for i, c in enumerate(members)}
            pts = np.array([allpos[c].x for c in members])
            t = np.array([[index[a] for a in tri] for tri in tri_by_rep.get(rep, [])],
                         dtype=np.int64).reshape(-1, 3)
            chir = {cv.chirality for lc in curves.values() for cv in lc
                    if cv.component == label_to_id[rep]}
            out.append(VortexSurface(label_to_id[rep], allpos[rep].handle, members, pts, t,
                                     chir.pop() if len(chir) == 1 else 0))
        return out

    def track_arrays(self, arrays, surfaces=True):
        return self.run(FieldStream.from_arrays(arrays, self.prepare), surfaces)


def _puncture(reim):
    """Barycentric zero of the linearly interpolated complex field (or centroid)."""
    try:
        mu = solve_inverse_linear(reim).mu
    except SingularSimplexError:
        return np.full(3, 1.0 / 3.0)
    return mu


def _patch_cycle(verts, faces, positives):
    """Order a pentachoron's punctured faces into a ring via shared tetrahedra."""
    adj = {f: set() for f in faces}
    fset = {positives[f].gids: f for f in faces}
    for tet in combinations(verts, 4):
        inside = [fset[t] for t in combinations(tet, 3) if t in fset]
        if len(inside) == 2:
            a, b = inside
            adj[a].add(b)
            adj[b].add(a)
    start = min(faces)
    ring = [start]
    prev, cur = None, start
    while True:
        nxt = sorted(w for w in adj[cur] if w != prev and w not in ring)
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        ring.append(cur)
    if len(ring) != len(faces):
        ring = sorted(faces)  # not a single ring; fall back to handle order
    return ring
