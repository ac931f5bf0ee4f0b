"""Feature export: versioned JSON documents and legacy ASCII VTK files.

JSON is written with sorted keys and Python's shortest round-trip float
repr, so identical results give identical bytes and write -> read -> write
is stable. Every file is written to a temporary sibling and renamed into
place, so a failed run never leaves a partial output behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__
from .predicates import CriticalType

SCHEMA_VERSION = 1
FEATURE_KINDS = ("critical", "vortex", "isosurface", "slices")
TYPE_CODES = {t.value: i for i, t in enumerate(CriticalType)}

_num_list = {"type": "array", "items": {"type": "number"}}
_int_list = {"type": "array", "items": {"type": "integer"}}
_matrix = {"type": "array", "items": _num_list}
_imatrix = {"type": "array", "items": _int_list}

DOCUMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "features", "provenance"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": list(FEATURE_KINDS)},
        "provenance": {
            "type": "object",
            "required": ["tool", "version", "parameters"],
            "properties": {
                "tool": {"type": "string"},
                "version": {"type": "string"},
                "parameters": {"type": "object"},
                "input": {},
            },
        },
        "features": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "critical"}}},
         "then": {"properties": {"features": {
             "required": ["trajectories"],
             "properties": {"trajectories": {"type": "array", "items": {
                 "type": "object",
                 "required": ["id", "loop", "points", "types"],
                 "properties": {
                     "id": {"type": "integer"},
                     "loop": {"type": "boolean"},
                     "points": _matrix,
                     "types": {"type": "array", "items": {"type": ["string", "null"]}},
                     "scalars": {"type": ["array", "null"]},
                 }}}}}}}},
        {"if": {"properties": {"kind": {"const": "vortex"}}},
         "then": {"properties": {"features": {
             "required": ["surfaces", "curves"],
             "properties": {
                 "surfaces": {"type": "array", "items": {
                     "type": "object",
                     "required": ["id", "points", "triangles", "chirality"],
                     "properties": {"points": _matrix, "triangles": _imatrix,
                                    "chirality": {"type": "integer"}}}},
                 "curves": {"type": "array", "items": {
                     "type": "object",
                     "required": ["layer", "points", "loop", "chirality"],
                     "properties": {"points": _matrix}}}}}}}},
        {"if": {"properties": {"kind": {"const": "isosurface"}}},
         "then": {"properties": {"features": {
             "required": ["points", "tetrahedra", "labels"],
             "properties": {"points": _matrix, "tetrahedra": _imatrix,
                            "labels": _int_list}}}}},
        {"if": {"properties": {"kind": {"const": "slices"}}},
         "then": {"properties": {"features": {
             "required": ["source_kind", "slices"],
             "properties": {"source_kind": {"enum": list(FEATURE_KINDS[:3])},
                            "slices": {"type": "array", "items": {
                                "type": "object", "required": ["t", "kind"]}}}}}}},
    ],
}


class DocumentError(ValueError):
    pass


def _plain(obj):
    """Convert numpy scalars/arrays, tuples and non-string keys to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise DocumentError(f"non-finite value {v} cannot be serialized")
        return v
    return obj


@dataclass
class FeatureDocument:
    kind: str
    features: dict
    provenance: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        prov = {"tool": "simplextrack", "version": __version__, "parameters": {}}
        prov.update(self.provenance)
        return _plain({"schema_version": self.schema_version, "kind": self.kind,
                       "features": self.features, "provenance": prov})

    @classmethod
    def from_dict(cls, doc):
        validate(doc)
        return cls(doc["kind"], doc["features"], doc["provenance"], doc["schema_version"])

    def dumps(self):
        doc = self.to_dict()
        validate(doc)
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def validate(doc):
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {doc.get('schema_version')!r}; "
                            f"this reader understands {SCHEMA_VERSION}")
    try:
        jsonschema.validate(doc, DOCUMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DocumentError(f"invalid feature document: {exc.message}") from None


@contextmanager
def atomic_open(path, mode="w"):
    """Write to a temporary file next to ``path``; rename on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(doc, path):
    text = doc.dumps()
    with atomic_open(path) as fh:
        fh.write(text)


def read_json(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"{path}: not JSON ({exc})") from None
    return FeatureDocument.from_dict(doc)


# ------------------------------------------------------------- documents
def _handle(h):
    anchor = list(h.anchor) if isinstance(h.anchor, tuple) else h.anchor
    return {"k": h.k, "anchor": anchor, "type": h.type, "layer": h.layer}


def critical_document(result, parameters=None, source=None, trajectories=None):
    """JSON document for a critical point tracking result.

    ``trajectories`` overrides ``result.trajectories`` (e.g. after filtering).
    """
    trajs = result.trajectories if trajectories is None else trajectories
    items = []
    for tr in trajs:
        scalars = [p.scalar for p in tr.points]
        items.append({
            "id": tr.id,
            "label": _handle(tr.label),
            "loop": tr.loop,
            "points": [list(p.x) for p in tr.points],
            "types": tr.types,
            "scalars": None if any(s is None for s in scalars) else scalars,
        })
    features = {"trajectories": items, "diagnostics": result.diagnostics,
                "counts": {"detections": len(result.detections), "edges": len(result.edges),
                           "trajectories": len(items)}}
    return FeatureDocument("critical", features, _provenance(parameters, source))


def vortex_document(result, parameters=None, source=None):
    surfaces = [{"id": s.id, "label": _handle(s.label), "chirality": s.chirality,
                 "points": s.points, "triangles": s.triangles} for s in result.surfaces]
    curves = [{"layer": c.layer, "points": c.points, "loop": c.loop, "chirality": c.chirality,
               "component": c.component}
              for layer in sorted(result.curves) for c in result.curves[layer]]
    features = {"surfaces": surfaces, "curves": curves, "diagnostics": result.diagnostics,
                "counts": {"intersections": len(result.intersections),
                           "surfaces": len(surfaces), "curves": len(curves)}}
    return FeatureDocument("vortex", features, _provenance(parameters, source))


def isosurface_document(result, parameters=None, source=None):
    v = result.volume
    features = {"points": v.points, "edges": v.edges, "tetrahedra": v.tets,
                "sources": v.sources, "labels": v.labels,
                "diagnostics": result.diagnostics,
                "counts": {"points": len(v.points), "tetrahedra": len(v.tets),
                           "components": v.n_components}}
    return FeatureDocument("isosurface", features, _provenance(parameters, source))


def _provenance(parameters, source):
    out = {"tool": "simplextrack", "version": __version__, "parameters": parameters or {}}
    if source is not None:
        out["input"] = source
    return out


# ------------------------------------------------------------------ VTK
def _fmt(v):
    return repr(float(v))


def _xyz(points):
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2:
        p = p.reshape(-1, 3)
    if p.shape[1] < 3:
        p = np.concatenate([p, np.zeros((len(p), 3 - p.shape[1]))], axis=1)
    return p[:, :3]


def _data_block(lines, tag, n, arrays):
    if not arrays or n == 0:
        return
    lines.append(f"{tag} {n}")
    for name in sorted(arrays):
        vals = np.asarray(arrays[name]).ravel()
        if len(vals) != n:
            raise ValueError(f"{tag.lower()} array {name!r} has {len(vals)} values, expected {n}")
        integral = np.issubdtype(vals.dtype, np.integer)
        lines.append(f"SCALARS {name} {'int' if integral else 'double'} 1")
        lines.append("LOOKUP_TABLE default")
        lines.append(" ".join(str(int(v)) if integral else _fmt(v) for v in vals))


def _header(title, dataset, points):
    title = (title or "simplextrack").replace("\n", " ")[:255]
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", f"DATASET {dataset}",
             f"POINTS {len(points)} double"]
    lines.extend(" ".join(_fmt(c) for c in row) for row in points)
    return lines


def write_vtk_polydata(path, points, lines=(), polygons=(), point_data=None, cell_data=None,
                       title=None):
    """Legacy ASCII POLYDATA with polylines and/or polygons.

    ``points`` may have 2-4 columns; only the first three are written (pad
    with zeros for 2D). Cell data runs over lines first, then polygons.
    """
    pts = _xyz(points) if len(points) else np.empty((0, 3))
    out = _header(title, "POLYDATA", pts)
    for tag, cells in (("LINES", lines), ("POLYGONS", polygons)):
        cells = [list(map(int, c)) for c in cells]
        if cells:
            size = sum(len(c) + 1 for c in cells)
            out.append(f"{tag} {len(cells)} {size}")
            out.extend(" ".join(map(str, [len(c)] + c)) for c in cells)
    _data_block(out, "POINT_DATA", len(pts), point_data or {})
    _data_block(out, "CELL_DATA", len(lines) + len(polygons), cell_data or {})
    with atomic_open(path) as fh:
        fh.write("\n".join(out) + "\n")


def write_vtk_unstructured(path, points, tets, point_data=None, cell_data=None, title=None):
    """Legacy ASCII UNSTRUCTURED_GRID of tetrahedra (VTK cell type 10)."""
    pts = _xyz(points) if len(points) else np.empty((0, 3))
    tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
    out = _header(title, "UNSTRUCTURED_GRID", pts)
    out.append(f"CELLS {len(tets)} {5 * len(tets)}")
    out.extend("4 " + " ".join(map(str, t)) for t in tets.tolist())
    out.append(f"CELL_TYPES {len(tets)}")
    out.extend("10" for _ in range(len(tets)))
    _data_block(out, "POINT_DATA", len(pts), point_data or {})
    _data_block(out, "CELL_DATA", len(tets), cell_data or {})
    with atomic_open(path) as fh:
        fh.write("\n".join(out) + "\n")


def read_vtk(path):
    """Parse the subset of legacy ASCII VTK written by this module.

    Returns a dict with ``dataset``, ``points``, connectivity lists under
    ``lines``/``polygons``/``cells``, ``cell_types`` and the
    ``point_data``/``cell_data`` arrays.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    if not tokens[0].startswith("# vtk DataFile Version"):
        raise ValueError(f"{path}: missing VTK header")
    if tokens[2].strip() != "ASCII":
        raise ValueError(f"{path}: only ASCII files are supported")
    words = " ".join(tokens[3:]).split()
    out = {"title": tokens[1], "lines": [], "polygons": [], "cells": [], "cell_types": [],
           "point_data": {}, "cell_data": {}}
    i = 0
    section = None

    def take(n):
        nonlocal i
        chunk = words[i:i + n]
        if len(chunk) != n:
            raise ValueError(f"{path}: truncated file")
        i += n
        return chunk

    while i < len(words):
        key = take(1)[0]
        if key == "DATASET":
            out["dataset"] = take(1)[0]
        elif key == "POINTS":
            n, _ = take(2)
            out["points"] = np.array(take(3 * int(n)), dtype=np.float64).reshape(-1, 3)
        elif key in ("LINES", "POLYGONS", "CELLS"):
            n, size = (int(v) for v in take(2))
            flat = [int(v) for v in take(size)]
            cells, j = [], 0
            while j < len(flat):
                cells.append(flat[j + 1:j + 1 + flat[j]])
                j += flat[j] + 1
            if len(cells) != n:
                raise ValueError(f"{path}: {key} count mismatch")
            out[key.lower()] = cells
        elif key == "CELL_TYPES":
            n = int(take(1)[0])
            out["cell_types"] = [int(v) for v in take(n)]
        elif key in ("POINT_DATA", "CELL_DATA"):
            section = (key.lower(), int(take(1)[0]))
        elif key == "SCALARS":
            name, dtype, _ = take(3)
            if take(2)[0] != "LOOKUP_TABLE":
                raise ValueError(f"{path}: expected LOOKUP_TABLE")
            which, n = section
            conv = int if dtype == "int" else float
            out[which][name] = np.array([conv(v) for v in take(n)])
        else:
            raise ValueError(f"{path}: unexpected token {key!r}")
    return out


def trajectories_to_vtk(path, trajectories, time_as_z=None):
    """Critical trajectories as polylines with time, type and id point data.

    For 2D data the z coordinate carries time unless ``time_as_z`` is False.
    """
    pts, lines, t, types, ids = [], [], [], [], []
    for tr in trajectories:
        start = len(pts)
        for p in tr.points:
            x = list(p.x[:-1])
            if len(x) == 2 and time_as_z is not False:
                x.append(p.x[-1])
            pts.append(x)
            t.append(p.x[-1])
            types.append(TYPE_CODES.get(p.type, -1))
            ids.append(tr.id)
        idx = list(range(start, len(pts)))
        if tr.loop and len(idx) > 2:
            idx.append(start)
        lines.append(idx)
    write_vtk_polydata(path, pts, lines=lines,
                       point_data={"time": np.asarray(t, float), "type": np.asarray(types, int),
                                   "trajectory": np.asarray(ids, int)},
                       title="critical point trajectories")


def surfaces_to_vtk(path, surfaces):
    """Vortex surfaces as a triangle soup; spatial xyz, time as point data."""
    pts, tris, t, comp = [], [], [], []
    for s in surfaces:
        base = len(pts)
        pts.extend(s.points[:, :3].tolist())
        t.extend(s.points[:, 3].tolist())
        comp.extend([s.id] * len(s.points))
        tris.extend((np.asarray(s.triangles) + base).tolist())
    write_vtk_polydata(path, np.asarray(pts, float).reshape(-1, 3), polygons=tris,
                       point_data={"time": np.asarray(t, float), "component": np.asarray(comp, int)},
                       title="vortex surfaces")


def isovolume_to_vtk(path, volume):
    write_vtk_unstructured(path, volume.points[:, :3], volume.tets,
                           point_data={"time": volume.points[:, 3],
                                       "component": volume.point_labels},
                           cell_data={"component": volume.labels},
                           title="isovolume")


def mesh_slices_to_vtk(path, pieces):
    """Triangle meshes ``[(verts, tris)]`` merged into one POLYDATA file."""
    pts, tris = [], []
    for verts, t in pieces:
        base = len(pts)
        pts.extend(np.asarray(verts).tolist())
        tris.extend((np.asarray(t) + base).tolist())
    write_vtk_polydata(path, np.asarray(pts, float).reshape(-1, 3), polygons=tris,
                       title="sliced surfaces")
