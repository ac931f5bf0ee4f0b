import numpy as np
import pytest

from simplextrack import kernels
from simplextrack.mesh import RegularSpacetimeMesh
from simplextrack.predicates import point_in_simplex_sos
from simplextrack.vortex import PERIOD, triangle_chirality


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_classify_indexed_agrees_with_exact(backend, n, rng):
    vals = rng.integers(-3, 4, size=(3000, n + 1, n)).astype(float)
    status = kernels.classify_indexed(vals)
    ids = list(range(n + 1))
    for e in range(len(vals)):
        if status[e] != kernels.STATUS_UNDECIDED:
            assert bool(status[e]) == point_in_simplex_sos(vals[e].astype(int).tolist(), ids)


def test_backends_identical(rng):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled kernels not built")
    vals = rng.integers(-3, 4, size=(5000, 4, 3)).astype(float)
    mesh = RegularSpacetimeMesh((7, 6, 5), 2)
    lo, hi = rng.normal(size=(2, mesh.nspace, 3))
    phase = rng.integers(0, 8, size=(5000, 3))
    ids = np.sort(rng.choice(100, size=(5000, 3)), axis=1)
    out = {}
    for name in kernels.available_backends():
        prev = kernels.set_backend(name)
        try:
            res = [kernels.classify_indexed(vals), kernels.classify_indexed(vals, robust=False),
                   kernels.winding(phase, ids, 8)]
            for tid in mesh.types(3):
                t = mesh.tables.types[3][tid]
                res.append(kernels.classify_regular(lo, hi, t.offsets, mesh.anchor_counts(3, tid),
                                                    mesh.strides, threads=3))
            out[name] = res
        finally:
            kernels.set_backend(prev)
    a, b = out.values()
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_classify_regular_matches_gathered(backend, rng):
    mesh = RegularSpacetimeMesh((7, 6, 5), 2)
    lo, hi = rng.normal(size=(2, mesh.nspace, 3))
    both = np.concatenate([lo, hi])
    for tid in mesh.types(3):
        t = mesh.tables.types[3][tid]
        s1 = kernels.classify_regular(lo, hi, t.offsets, mesh.anchor_counts(3, tid), mesh.strides)
        _, gids = mesh.type_arrays(3, tid, 0)
        np.testing.assert_array_equal(s1, kernels.classify_indexed(both[gids]))


@pytest.mark.parametrize("threads", [1, 2, 4, 8])
def test_thread_count_does_not_change_results(backend, threads, rng):
    vals = rng.normal(size=(20000, 4, 3))
    np.testing.assert_array_equal(kernels.classify_indexed(vals, threads=threads),
                                  kernels.classify_indexed(vals, threads=1))


def test_winding_matches_scalar_reference(backend, rng):
    theta = rng.uniform(-np.pi, np.pi, size=(2000, 3))
    from simplextrack.vortex import quantize_phase

    q = quantize_phase(theta)
    ids = np.tile([0, 1, 2], (2000, 1))
    w = kernels.winding(q, ids, PERIOD)
    ref = [triangle_chirality(t) for t in theta]
    np.testing.assert_array_equal(w, ref)


def test_chunk_bounds_cover_range():
    for n in (0, 1, 4095, 100_000):
        for th in (1, 3, 8):
            b = kernels.chunk_bounds(n, th)
            assert sum(y - x for x, y in b) == n
            assert all(b[i][1] == b[i + 1][0] for i in range(len(b) - 1))


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
