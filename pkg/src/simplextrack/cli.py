"""Command-line front end.

Subcommands
-----------
synth              write a synthetic dataset as raw volumes
track-critical     critical point trajectories of a scalar or vector field
track-vortex       vortex surfaces of a phase or complex field
track-isosurface   isovolume of a scalar field
slice              cut a feature JSON document at given times

Exit status is 0 on success, 1 on runtime failure and 2 on usage errors.
Outputs are only written after tracking finished, each one atomically.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__, kernels
from .critical import CriticalPointTracker
from .fields import FieldStream, RawVolumeSpec
from .formats import (
    FeatureDocument,
    critical_document,
    isosurface_document,
    isovolume_to_vtk,
    mesh_slices_to_vtk,
    read_json,
    surfaces_to_vtk,
    trajectories_to_vtk,
    vortex_document,
    write_json,
    write_vtk_polydata,
)
from .isosurface import IsosurfaceTracker
from .mesh import ExtrudedPrismaticMesh, RegularSpacetimeMesh, UnstructuredBaseMesh
from .postprocess import (
    TrajectoryFilterSpec,
    filter_trajectories,
    simplify,
    slice_trajectories,
    smooth_types,
)
from .slicing import slice_polyline, slice_segments, slice_tets
from .synthetic import KINDS, SyntheticSpec, double_gyre_mesh, generate
from .vortex import VortexTracker

log = logging.getLogger("simplextrack")


class UsageError(Exception):
    pass


def _ints(text):
    try:
        vals = tuple(int(v) for v in text.replace("x", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 64,64,64, got {text!r}") from None
    return vals


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers like 0.1,0.2, got {text!r}") from None


def _nonneg(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _input_args(p, field_choices, field_default):
    p.add_argument("--input", required=True, help="raw file pattern with one %%d for the timestep")
    p.add_argument("--dims", type=_ints, help="grid vertex counts, e.g. 64,64,64")
    p.add_argument("--mesh", help="unstructured base mesh JSON (instead of --dims)")
    p.add_argument("--dtype", default="float64", choices=("float32", "float64"))
    p.add_argument("--components", type=int, help="samples per vertex (default: from --field)")
    p.add_argument("--timesteps", type=int, required=True)
    p.add_argument("--field", choices=field_choices, default=field_default)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", help="VTK output path")
    p.add_argument("--output-json", help="JSON feature document path")
    p.add_argument("--slice-at", type=_floats, help="comma-separated times to slice at")


def build_parser():
    parser = argparse.ArgumentParser(prog="simplextrack", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--dims", type=_ints, default=None)
    p.add_argument("--timesteps", type=int, default=None)
    p.add_argument("--delta-t", type=float, default=None)
    p.add_argument("--x0", type=_floats)
    p.add_argument("--d", type=_floats)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--sigma", type=_nonneg, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=15.0)
    p.add_argument("--dtype", default="float64", choices=("float32", "float64"))
    p.add_argument("--output", required=True, help="raw file pattern with one %%d")
    p.add_argument("--mesh", help="where to write the mesh JSON (double_gyre)")

    p = sub.add_parser("track-critical", help="track critical points")
    _input_args(p, ("scalar", "vector"), "scalar")
    p.add_argument("--sos", choices=("on", "off"), default="on")
    p.add_argument("--frame-velocity", type=_floats)
    p.add_argument("--no-types", action="store_true", help="skip Jacobian classification")
    p.add_argument("--delta-t", type=float, default=1.0,
                   help="physical time per layer, used for the duration filter")
    p.add_argument("--min-duration", type=_nonneg, default=0.0,
                   help="minimum duration in physical time units")
    p.add_argument("--drop-loops", action="store_true")
    p.add_argument("--min-persistence", type=_nonneg)
    p.add_argument("--simplify", type=_nonneg, default=0.0,
                   help="absorb type runs shorter than this many layers")
    p.add_argument("--smooth-window", type=int, default=0)

    p = sub.add_parser("track-vortex", help="track quantum vortices")
    _input_args(p, ("phase", "complex"), "phase")

    p = sub.add_parser("track-isosurface", help="track an isosurface as a 4D isovolume")
    _input_args(p, ("scalar",), "scalar")
    p.add_argument("--isovalue", type=float, default=0.0)
    p.add_argument("--slice-output", help="VTK path for the sliced surfaces "
                                           "(every layer unless --slice-at is given)")

    p = sub.add_parser("slice", help="slice a feature document at given times")
    p.add_argument("--input", required=True, help="feature JSON from a track-* command")
    p.add_argument("--slice-at", type=_floats, required=True)
    p.add_argument("--output", help="VTK output path")
    p.add_argument("--output-json", help="JSON output path")
    return parser


# ---------------------------------------------------------------- helpers
def _mesh_and_reader(args, components):
    if args.timesteps is None or args.timesteps < 1:
        raise UsageError("--timesteps must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if (args.dims is None) == (args.mesh is None):
        raise UsageError("give exactly one of --dims and --mesh")
    if args.mesh is not None:
        try:
            base = UnstructuredBaseMesh.from_json(args.mesh)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read mesh {args.mesh}: {exc}") from None
        mesh = ExtrudedPrismaticMesh(base, args.timesteps)
        dims = (base.nv,)
    else:
        if len(args.dims) not in (2, 3) or min(args.dims) < 2:
            raise UsageError(f"--dims must give 2 or 3 sizes >= 2, got {args.dims}")
        mesh = RegularSpacetimeMesh(args.dims, args.timesteps)
        dims = args.dims
    comps = args.components if args.components is not None else components
    try:
        spec = RawVolumeSpec(dims, args.dtype, comps, args.input)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for layer in range(args.timesteps):
        path = spec.path(layer)
        if not os.path.exists(path):
            raise UsageError(f"missing input {path}")
        if os.path.getsize(path) != spec.nbytes:
            raise UsageError(f"{path}: {os.path.getsize(path)} bytes, expected {spec.nbytes} "
                             f"for dims={dims} x {comps} {args.dtype}")
    return mesh, spec


def _source(args, spec):
    return {"pattern": spec.pattern, "dims": list(spec.dims), "dtype": spec.dtype,
            "components": spec.components, "timesteps": args.timesteps,
            "mesh": getattr(args, "mesh", None)}


def _summary(kind, mesh, counts, seconds):
    parts = [f"{kind}: mesh={mesh!r}"]
    parts += [f"{k}={v}" for k, v in counts.items()]
    parts.append(f"backend={kernels.backend()}")
    parts.append(f"wall={seconds:.3f}s")
    print(" ".join(parts))


# ------------------------------------------------------------- commands
def cmd_synth(args):
    kind = args.kind
    defaults = {"moving_minimum": ((21, 21, 21), 21, 1.0), "double_gyre": ((2, 2), 401, 0.1),
                "spiral_woven": ((128, 128), 16, 0.02), "merger": ((64, 64), 64, 0.1),
                "moving_plane": ((21, 21, 21), 12, 1.0), "line_vortex": ((16, 16, 16), 8, 1.0),
                "turbulent": ((64, 64, 64), 4, 1.0)}[kind]
    dims = args.dims or defaults[0]
    try:
        spec = SyntheticSpec(kind, dims=dims, n_layers=args.timesteps or defaults[1],
                             dt=defaults[2] if args.delta_t is None else args.delta_t,
                             x0=args.x0, d=args.d, alpha=args.alpha, sigma=args.sigma,
                             seed=args.seed, scale=args.scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.x0 is not None and len(args.x0) != len(spec.dims):
        raise UsageError("--x0 needs one value per dimension")
    if args.d is not None and len(args.d) != len(spec.dims):
        raise UsageError("--d needs one value per dimension")
    verts = None
    if kind == "double_gyre":
        if not args.mesh:
            raise UsageError("double_gyre needs --mesh to store its triangle mesh")
        verts, cells = double_gyre_mesh(args.seed)
        UnstructuredBaseMesh(verts, cells).to_json(args.mesh)
        nspace = len(verts)
        raw = RawVolumeSpec((nspace,), args.dtype, 2, args.output)
    else:
        try:
            raw = RawVolumeSpec(spec.dims, args.dtype, spec.components, args.output)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    t0 = time.perf_counter()
    for layer in range(spec.n_layers):
        raw.write(layer, generate(spec, layer, verts))
    print(f"synth {kind}: dims={list(raw.dims)} components={raw.components} "
          f"timesteps={spec.n_layers} dt={spec.dt} -> {args.output} "
          f"({time.perf_counter() - t0:.3f}s)")
    return 0


def cmd_track_critical(args):
    comps_default = 1 if args.field == "scalar" else None
    if args.dims is not None:
        comps_default = comps_default or len(args.dims)
    elif comps_default is None:
        comps_default = 2
    mesh, raw = _mesh_and_reader(args, comps_default)
    if args.frame_velocity is not None and len(args.frame_velocity) != mesh.n:
        raise UsageError(f"--frame-velocity needs {mesh.n} values")
    if args.smooth_window < 0:
        raise UsageError("--smooth-window must be >= 0")
    if args.delta_t <= 0:
        raise UsageError("--delta-t must be > 0")
    tracker = CriticalPointTracker(mesh, args.field, sos=args.sos == "on", threads=args.threads,
                                   frame_velocity=args.frame_velocity,
                                   classify=not args.no_types)
    t0 = time.perf_counter()
    result = tracker.run(FieldStream.from_raw(raw, args.timesteps, tracker.prepare))
    # duration is measured in layers; the flag is in physical time
    fspec = TrajectoryFilterSpec(min_duration=args.min_duration / args.delta_t,
                                 drop_loops=args.drop_loops,
                                 min_persistence=args.min_persistence)
    trajs = filter_trajectories(result.trajectories, fspec)
    if args.simplify > 0 and not args.no_types:
        trajs = [simplify(t, args.simplify) for t in trajs]
    if args.smooth_window > 0 and not args.no_types:
        trajs = [smooth_types(t, args.smooth_window) for t in trajs]
    seconds = time.perf_counter() - t0
    params = {"field": args.field, "sos": args.sos, "frame_velocity": args.frame_velocity,
              "classify": not args.no_types, "delta_t": args.delta_t,
              "min_duration": args.min_duration, "drop_loops": args.drop_loops,
              "min_persistence": args.min_persistence, "simplify": args.simplify,
              "smooth_window": args.smooth_window, "slice_at": args.slice_at}
    doc = critical_document(result, params, _source(args, raw), trajectories=trajs)
    if args.slice_at:
        doc.features["slices"] = [
            {"t": t, "points": [{"trajectory": i, "x": list(x)}
                                for i, x in slice_trajectories(trajs, t, t_min=0)]}
            for t in args.slice_at]
    if args.output_json:
        write_json(doc, args.output_json)
    if args.output:
        trajectories_to_vtk(args.output, trajs)
    _summary("track-critical", mesh, {
        "detections": len(result.detections), "trajectories": len(result.trajectories),
        "kept": len(trajs), "components": len({t.label for t in result.trajectories}),
        "branch": result.diagnostics.get("branch", 0)}, seconds)
    return 0


def cmd_track_vortex(args):
    if args.mesh is not None:
        raise UsageError("vortex tracking needs a regular grid (--dims)")
    mesh, raw = _mesh_and_reader(args, 1 if args.field == "phase" else 2)
    if mesh.n != 3:
        raise UsageError("vortex tracking needs 3D --dims")
    tracker = VortexTracker(mesh, "phase" if args.field == "phase" else "complex",
                            threads=args.threads)
    t0 = time.perf_counter()
    result = tracker.run(FieldStream.from_raw(raw, args.timesteps, tracker.prepare))
    seconds = time.perf_counter() - t0
    doc = vortex_document(result, {"field": args.field, "slice_at": args.slice_at},
                          _source(args, raw))
    if args.slice_at:
        doc.features["slices"] = _vortex_slices(doc.features["surfaces"], args.slice_at)
    if args.output_json:
        write_json(doc, args.output_json)
    if args.output:
        surfaces_to_vtk(args.output, result.surfaces)
    _summary("track-vortex", mesh, {
        "intersections": len(result.intersections), "surfaces": len(result.surfaces),
        "parity_violations": result.diagnostics.get("parity", 0)}, seconds)
    return 0


def cmd_track_isosurface(args):
    if args.mesh is not None:
        raise UsageError("isosurface tracking needs a regular grid (--dims)")
    mesh, raw = _mesh_and_reader(args, 1)
    if mesh.n != 3:
        raise UsageError("isosurface tracking needs 3D --dims")
    tracker = IsosurfaceTracker(mesh, args.isovalue, threads=args.threads)
    t0 = time.perf_counter()
    result = tracker.run(FieldStream.from_raw(raw, args.timesteps, tracker.prepare))
    times = list(args.slice_at) if args.slice_at else [float(t) for t in range(args.timesteps)]
    slices = [(t,) + tuple(result.volume.slice(t, t_min=0)) for t in times]
    seconds = time.perf_counter() - t0
    doc = isosurface_document(result, {"isovalue": args.isovalue, "slice_at": args.slice_at},
                              _source(args, raw))
    doc.features["slices"] = [{"t": t, "vertices": len(v), "triangles": len(tr)}
                              for t, v, tr in slices]
    if args.output_json:
        write_json(doc, args.output_json)
    if args.output:
        isovolume_to_vtk(args.output, result.volume)
    if args.slice_output:
        mesh_slices_to_vtk(args.slice_output, [(v, tr) for _, v, tr in slices])
    _summary("track-isosurface", mesh, {
        "points": len(result.volume.points), "tetrahedra": len(result.volume.tets),
        "components": result.volume.n_components, "slices": len(slices),
        "violations": result.diagnostics["edge_count_violations"]}, seconds)
    return 0


def _vortex_slices(surfaces, times):
    out = []
    for t in times:
        lines = []
        for s in surfaces:
            for coords, loop in slice_segments(np.asarray(s["points"], float).reshape(-1, 4),
                                               s["triangles"], t, t_min=0):
                lines.append({"surface": s["id"], "loop": loop, "points": coords})
        out.append({"t": t, "curves": lines})
    return out


def cmd_slice(args):
    try:
        doc = read_json(args.input)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    f = doc.features
    pieces = []  # (t, kind, payload)
    if doc.kind == "critical":
        for t in args.slice_at:
            for tr in f["trajectories"]:
                pts = np.asarray(tr["points"], float)
                if len(pts) == 1:
                    hits = [pts[0, :-1]] if pts[0, -1] == t else []
                else:
                    hits = slice_polyline(pts, t, loop=tr["loop"], t_min=0)
                pieces.extend((t, "point", {"trajectory": tr["id"], "x": x}) for x in hits)
    elif doc.kind == "vortex":
        for entry in _vortex_slices(f["surfaces"], args.slice_at):
            pieces.extend((entry["t"], "curve", c) for c in entry["curves"])
    else:
        pts = np.asarray(f["points"], float).reshape(-1, 4)
        for t in args.slice_at:
            v, tr = slice_tets(pts, f["tetrahedra"], t, t_min=0)
            pieces.append((t, "surface", {"vertices": v, "triangles": tr}))
    out = FeatureDocument("slices", {"source_kind": doc.kind,
                                     "slices": [{"t": t, "kind": k, **p} for t, k, p in pieces]},
                          {"parameters": {"slice_at": list(args.slice_at)},
                           "input": {"document": doc.provenance}})
    if args.output_json:
        write_json(out, args.output_json)
    if args.output:
        _slices_to_vtk(args.output, pieces)
    print(f"slice {doc.kind}: {len(pieces)} pieces at t={list(args.slice_at)}")
    return 0


def _slices_to_vtk(path, pieces):
    pts, lines, polys, times = [], [], [], []
    for t, kind, p in pieces:
        base = len(pts)
        if kind == "point":
            x = list(p["x"])
            pts.append(x + [0.0] * (3 - len(x)))
            times.append(t)
            lines.append([base])
        elif kind == "curve":
            c = np.asarray(p["points"], float)
            pts.extend(c.tolist())
            times.extend([t] * len(c))
            idx = list(range(base, base + len(c)))
            lines.append(idx + [base] if p["loop"] and len(idx) > 2 else idx)
        else:
            pts.extend(np.asarray(p["vertices"]).tolist())
            times.extend([t] * len(p["vertices"]))
            polys.extend((np.asarray(p["triangles"]) + base).tolist())
    write_vtk_polydata(path, pts, lines=lines, polygons=polys,
                       point_data={"time": np.asarray(times, float)}, title="slices")


COMMANDS = {"synth": cmd_synth, "track-critical": cmd_track_critical,
            "track-vortex": cmd_track_vortex, "track-isosurface": cmd_track_isosurface,
            "slice": cmd_slice}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"simplextrack {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("failure", exc_info=True)
        print(f"simplextrack {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
