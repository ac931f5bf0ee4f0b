"""Compiled vs numpy-fallback sweep kernels.

Times the k = n point-in-simplex sweep over every tetrahedron type of one
spacetime layer pair of the turbulent synthetic field, the vortex winding
kernel on a random phase field, and a full detection run. Results of the
two backends are checked for equality before timing is reported.

    python3 benchmarks/bench_kernels.py --size 64 --threads 1,2,4
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from simplextrack import kernels
from simplextrack.critical import CriticalPointTracker
from simplextrack.mesh import Kind, RegularSpacetimeMesh
from simplextrack.predicates import quantize
from simplextrack.synthetic import SyntheticSpec, generate
from simplextrack.vortex import PERIOD, quantize_phase


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def sweep_regular(mesh, lo, hi, threads):
    outs = []
    for kind in (Kind.ORDINAL, Kind.INTERVAL):
        for tid in mesh.types(3, kind):
            t = mesh.tables.types[3][tid]
            outs.append(kernels.classify_regular(lo, hi, t.offsets, mesh.anchor_counts(3, tid),
                                                 mesh.strides, threads=threads))
    return outs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--size", type=int, default=48, help="grid vertices per axis")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", default="1,2,4,8")
    args = ap.parse_args(argv)
    threads = [int(v) for v in args.threads.split(",")]
    n = args.size
    spec = SyntheticSpec("turbulent", dims=(n, n, n), n_layers=2)
    mesh = RegularSpacetimeMesh(spec.dims, 2)
    lo = quantize(generate(spec, 0), 32).astype(np.float64)
    hi = quantize(generate(spec, 1), 32).astype(np.float64)
    rng = np.random.default_rng(0)
    m = 1_000_000
    phase = quantize_phase(rng.uniform(-np.pi, np.pi, size=(m, 3)))
    ids = np.sort(rng.choice(10 * m, size=(m, 3)), axis=1)

    print(f"cpus={os.cpu_count()} backends={kernels.available_backends()} grid={n}^3")
    print(f"{'kernel':<22}{'backend':<10}{'threads':>8}{'seconds':>10}{'speedup':>9}")
    ref = {}
    for name in kernels.available_backends():
        prev = kernels.set_backend(name)
        try:
            for th in threads:
                for label, fn in (
                    ("classify_regular", lambda: sweep_regular(mesh, lo, hi, th)),
                    ("winding", lambda: kernels.winding(phase, ids, PERIOD, threads=th)),
                ):
                    sec, out = _best(fn, args.repeat)
                    key = label
                    flat = np.concatenate(out) if isinstance(out, list) else out
                    if key in ref:
                        if not np.array_equal(ref[key][1], flat):
                            raise SystemExit(f"{label}: {name} disagrees with reference backend")
                    else:
                        ref[key] = (sec, flat)
                    print(f"{label:<22}{name:<10}{th:>8}{sec:>10.4f}{ref[key][0] / sec:>9.2f}")
        finally:
            kernels.set_backend(prev)

    arrays = [generate(spec, 0), generate(spec, 1)]
    for name in kernels.available_backends():
        prev = kernels.set_backend(name)
        try:
            tracker = CriticalPointTracker(mesh, "vector", classify=False)
            sec, res = _best(lambda: tracker.track_arrays(arrays), 1)
            print(f"{'track (2 layers)':<22}{name:<10}{1:>8}{sec:>10.4f}"
                  f"{'':>9}  detections={len(res.detections)}")
        finally:
            kernels.set_backend(prev)


if __name__ == "__main__":
    main()
