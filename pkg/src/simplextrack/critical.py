"""Critical point tracking: zero tests on n-simplices, unions via (n+1)-simplices.

Each window runs the detection sweeps (see :mod:`simplextrack.sweep`) and
then visits the (n+1)-simplices of layer ``tau`` through the parents of the
positive n-simplices. Two positive sides of one (n+1)-simplex form a chain
edge; chains assembled from all edges are the trajectories.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Optional

import numpy as np

from .components import UnionFind, split_chains
from .fields import FieldStream, gradient, jacobians_at
from .mesh import ElementHandle, RegularSpacetimeMesh
from .predicates import (
    DEFAULT_BITS,
    SingularSimplexError,
    eigen_classify,
    quantize,
    solve_inverse_linear,
)
from .sweep import gather, window_sweeps, zero_crossing_elements

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriticalIntersection:
    """Zero of the PL vector field inside one spacetime n-simplex."""

    code: int
    handle: ElementHandle
    x: tuple  # spacetime coordinates, time last (layer units)
    mu: tuple
    type: str
    scalar: Optional[float] = None

    @property
    def t(self):
        return self.x[-1]


@dataclass
class CriticalTrajectory:
    """One chain of intersections; consecutive points share an (n+1)-simplex."""

    id: int
    label: ElementHandle
    points: list
    loop: bool = False

    @property
    def boundary_terminated(self):
        return not self.loop

    @property
    def times(self):
        return np.array([p.t for p in self.points])

    @property
    def t_range(self):
        t = self.times
        return float(t.min()), float(t.max())

    @property
    def duration(self):
        """Number of integer layers the trajectory covers."""
        lo, hi = self.t_range
        return max(0, int(np.floor(hi)) - int(np.ceil(lo)) + 1)

    @property
    def types(self):
        return [p.type for p in self.points]

    @property
    def scalar_range(self):
        s = [p.scalar for p in self.points if p.scalar is not None]
        return (min(s), max(s)) if s else None

    @property
    def persistence(self):
        r = self.scalar_range
        return None if r is None else r[1] - r[0]

    def with_types(self, types):
        if len(types) != len(self.points):
            raise ValueError("one type per point is required")
        pts = [replace(p, type=str(t)) for p, t in zip(self.points, types)]
        return replace(self, points=pts)


@dataclass
class TrackResult:
    trajectories: list
    detections: dict
    edges: list
    diagnostics: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


class CriticalPointTracker:
    """Track zeros of a vector field (or of a scalar field's gradient).

    Parameters
    ----------
    mesh : RegularSpacetimeMesh or ExtrudedPrismaticMesh
    field : {"vector", "scalar"}
        With ``"scalar"`` the gradient is tracked and points are classified
        as max/min/saddle-scalar; samples are then one component per vertex.
    sos : bool
        Exact symbolic perturbation (default). ``False`` uses plain float
        signs, which loses or duplicates detections at degeneracies.
    threads : int
    bits : int
        Fixed-point fraction bits used by the exact predicates.
    frame_velocity : array-like, optional
        Constant velocity subtracted from vector samples.
    classify : bool
        Compute critical point types (needs Jacobians).
    """

    def __init__(self, mesh, field="vector", sos=True, threads=1, bits=DEFAULT_BITS,
                 frame_velocity=None, classify=True):
        if field not in ("vector", "scalar"):
            raise ValueError(f"field must be 'vector' or 'scalar', got {field!r}")
        self.mesh = mesh
        self.field = field
        self.sos = sos
        self.threads = max(1, int(threads))
        self.bits = bits
        self.classify = classify
        self.frame_velocity = None if frame_velocity is None else np.asarray(frame_velocity, float)
        self.n = mesh.n

    # ------------------------------------------------------------- per layer
    def prepare(self, data):
        vals = data.values
        if self.field == "scalar":
            if vals.shape[1] != 1:
                raise ValueError(f"scalar tracking needs 1 component, got {vals.shape[1]}")
            data.derived["scalar"] = vals[:, 0]
            vec = gradient(self.mesh, vals[:, 0])
        else:
            if vals.shape[1] != self.n:
                raise ValueError(f"vector tracking on a {self.n}D mesh needs {self.n} components, "
                                 f"got {vals.shape[1]}")
            vec = vals.copy()
        if self.frame_velocity is not None:
            vec = vec - self.frame_velocity
        data.derived["vec"] = vec
        q = quantize(vec, self.bits)
        data.derived["qvec"] = q
        data.derived["qvec_f"] = q.astype(np.float64)

    def stream(self, reader, n_layers):
        return FieldStream(reader, n_layers, self.prepare)

    # ------------------------------------------------------------- detection
    def detect(self, window, layer, kind, diagnostics=None):
        """Intersections of the k=n simplices of one sweep, keyed by code."""
        mesh = self.mesh
        codes, gids = zero_crossing_elements(mesh, window, self.n, layer, kind, qkey="qvec",
                                             robust=self.sos, threads=self.threads)
        if not len(codes):
            return {}
        vec = gather(mesh, window, "vec", gids)  # (m, n+1, n)
        qv = gather(mesh, window, "qvec", gids)
        mu = self._barycentric(vec, qv, diagnostics)
        coords = mesh.vertex_coords(gids)  # (m, n+1, n+1)
        x = np.einsum("mi,mij->mj", mu, coords)
        scalar = None
        if self.field == "scalar":
            scalar = np.einsum("mi,mi->m", mu, gather(mesh, window, "scalar", gids))
        types = self._types(window, x, gids) if self.classify else [None] * len(codes)
        out = {}
        for i, c in enumerate(codes):
            c = int(c)
            out[c] = CriticalIntersection(
                code=c,
                handle=mesh.decode(self.n, c),
                x=tuple(float(v) for v in x[i]),
                mu=tuple(float(v) for v in mu[i]),
                type=None if types[i] is None else str(types[i].value),
                scalar=None if scalar is None else float(scalar[i]),
            )
        return out

    def _barycentric(self, vec, qv, diagnostics):
        m, n1, n = vec.shape
        a = np.ones((m, n1, n1))
        a[:, :n, :] = np.swapaxes(vec, 1, 2)
        rhs = np.zeros((m, n1))
        rhs[:, -1] = 1.0
        mu = np.full((m, n1), np.nan)
        with np.errstate(all="ignore"):
            ok = np.abs(np.linalg.det(a)) > 0
            try:
                if ok.any():
                    mu[ok] = np.linalg.solve(a[ok], rhs[ok][..., None])[..., 0]
            except np.linalg.LinAlgError:
                ok[:] = False
        slack = 1e-12
        good = ok & np.all(np.isfinite(mu), axis=1) & np.all(mu >= -slack, axis=1) \
            & np.all(mu <= 1 + slack, axis=1)
        mu[good] = np.clip(mu[good], 0.0, 1.0)
        mu[good] /= mu[good].sum(axis=1, keepdims=True)
        for i in np.flatnonzero(~good):
            try:
                mu[i] = solve_inverse_linear(vec[i], quantized=qv[i]).mu
            except SingularSimplexError as exc:
                # fully degenerate samples (e.g. a constant zero field): the
                # zero test is still decided by SoS, only placement is lost
                log.warning("%s; placing the point at the barycenter", exc)
                if diagnostics is not None:
                    diagnostics["singular"] = diagnostics.get("singular", 0) + 1
                mu[i] = 1.0 / n1
        return mu

    def _types(self, window, x, gids):
        mesh = self.mesh
        support = None
        if not isinstance(mesh, RegularSpacetimeMesh):
            support = [tuple(sorted(set(int(g) % mesh.nspace for g in row))) for row in gids]
        jac = jacobians_at(mesh, window, "vec", x, support)
        return [eigen_classify(j, scalar=self.field == "scalar") for j in jac]

    # ----------------------------------------------------------------- union
    def unite(self, window, positives, uf, edges, diagnostics):
        """Pair positive sides of the (n+1)-simplices of layer ``tau``."""
        tau = window.tau
        groups = {}
        for code, det in positives.items():
            for parent in self.mesh.side_of(det.handle):
                if parent.layer == tau and parent.k == self.n + 1:
                    groups.setdefault(parent, []).append(code)
        for parent in sorted(groups):
            members = sorted(groups[parent])
            if len(members) < 2:
                continue
            if len(members) > 2:
                diagnostics["branch"] = diagnostics.get("branch", 0) + 1
                log.warning("%d positive sides in %s; splitting chains there", len(members), parent)
            uf.unite(members)
            edges.extend(combinations(members, 2))

    def run(self, stream):
        """Track over every window of ``stream``; returns a :class:`TrackResult`."""
        t0 = time.perf_counter()
        detections = {}
        carried = {}
        uf = UnionFind()
        edges = []
        diagnostics = {"branch": 0, "singular": 0}
        n_windows = 0
        for window in stream.windows():
            n_windows += 1
            found = {}
            for layer, kind in window_sweeps(window):
                found.update(self.detect(window, layer, kind, diagnostics))
            if window.tau > 0:
                found.update(carried)
            for c in found:
                uf.add(c)
            detections.update(found)
            if window.upper is not None:
                self.unite(window, found, uf, edges, diagnostics)
                nxt = window.tau + 1
                carried = {c: d for c, d in found.items()
                           if d.handle.layer == nxt and self.mesh.is_ordinal(d.handle)}
        trajectories = assemble_trajectories(edges, detections)
        stats = {"windows": n_windows, "detections": len(detections), "edges": len(edges),
                 "trajectories": len(trajectories), "seconds": time.perf_counter() - t0}
        return TrackResult(trajectories, detections, edges, diagnostics, stats)

    def track_arrays(self, arrays):
        """Convenience wrapper: track a list of per-layer sample arrays."""
        return self.run(FieldStream.from_arrays(arrays, self.prepare))


def assemble_trajectories(edges, detections):
    """Group detections into chains ordered along the curve.

    Open chains start at the end with the smaller ``(t, code)``; loops start
    at their minimum code. Trajectories are sorted by component label (the
    minimum element handle of the component) and then by first code.
    """
    if not detections:
        return []
    adj = {c: set() for c in detections}
    uf = UnionFind(detections)
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
            uf.unite((a, b))
    comps = uf.components()
    out = []
    for rep, members in comps.items():
        for path, loop in split_chains(members, adj):
            if not loop and len(path) > 1:
                ka = (detections[path[0]].t, path[0])
                kb = (detections[path[-1]].t, path[-1])
                if kb < ka:
                    path = path[::-1]
            out.append((rep, path, loop))
    out.sort(key=lambda r: (r[0], r[1][0], len(r[1])))
    trajs = []
    for i, (rep, path, loop) in enumerate(out):
        trajs.append(CriticalTrajectory(i, detections[rep].handle,
                                        [detections[c] for c in path], loop))
    return trajs
