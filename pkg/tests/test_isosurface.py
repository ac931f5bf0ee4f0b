import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from simplextrack.isosurface import IsosurfaceTracker, case_ii_tets, edge_test, pentachoron_emit
from simplextrack.mesh import RegularSpacetimeMesh

from .conftest import grid_xyz


def tet_volume_4d(p):
    d = p[1:] - p[0]
    return math.sqrt(max(np.linalg.det(d @ d.T), 0.0)) / 6


def triangle_area(verts, tris):
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    return np.linalg.norm(np.cross(b - a, c - a), axis=1).sum() / 2


def test_edge_test_vertex_zero_positive():
    assert edge_test(0.0, -1.0) == 0.0
    assert edge_test(0.0, 1.0) is None
    assert edge_test(-1.0, 3.0) == pytest.approx(0.25)
    assert edge_test(2.0, 4.0, c=3.0) == pytest.approx(0.5)


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=2), st.integers(-8, 8))
def test_edge_test_scaling_invariant(vals, shift):
    f = np.asarray(vals, float) / 4
    a = edge_test(*f)
    b = edge_test(*np.ldexp(f, shift))
    assert (a is None) == (b is None)


def test_case_i_single_tet():
    point_of = {(0, 4): 0, (1, 4): 1, (2, 4): 2, (3, 4): 3}
    tets = pentachoron_emit([0, 1, 2, 3, 4], [False] * 4 + [True], point_of)
    assert tets == [(0, 1, 2, 3)]


def test_case_ii_three_tets_cover_prism():
    names = {n for tet in case_ii_tets((0, 1), (2, 3, 4)) for n in tet}
    assert names == {(a, b) for a in range(2) for b in range(3)}
    # unit prism: triangle (b index) times segment (a index)
    tri = {0: (0, 0), 1: (1, 0), 2: (0, 1)}
    vol = 0.0
    for tet in case_ii_tets((0, 1), (2, 3, 4)):
        p = np.array([[*tri[b], a] for a, b in tet], float)
        vol += abs(np.linalg.det(p[1:] - p[0])) / 6
    assert vol == pytest.approx(0.5)


def test_inconsistent_counts_raise():
    with pytest.raises(AssertionError):
        pentachoron_emit([0, 1, 2, 3, 4], [True, False, False, False, False], {(0, 1): 0})


def test_plane_isovolume():
    n, n_layers = 11, 6
    x, _, _ = grid_xyz((n, n, n))
    arrays = [x - 2.3 - 0.9 * t for t in range(n_layers)]
    res = IsosurfaceTracker(RegularSpacetimeMesh((n, n, n), n_layers)).track_arrays(arrays)
    assert res.volume.n_components == 1
    assert res.diagnostics["edge_count_violations"] == 0
    p = res.volume.points
    assert np.abs(p[:, 0] - 2.3 - 0.9 * p[:, 3]).max() < 1e-12
    total = sum(tet_volume_4d(p[t]) for t in res.volume.tets)
    assert total == pytest.approx(10 * 10 * 5 * math.sqrt(1 + 0.81), rel=1e-10)
    for t0 in range(n_layers):
        verts, tris = res.volume.slice(t0)
        assert np.abs(verts[:, 0] - 2.3 - 0.9 * t0).max() < 1e-12
        assert triangle_area(verts, tris) == pytest.approx(100.0)


def test_sphere_area_and_watertight():
    n = 64
    r0, c = n * 0.35, (n - 1) / 2 + 0.123
    x, y, z = grid_xyz((n, n, n))
    arrays = [np.sqrt((x - c) ** 2 + (y - c + 0.07) ** 2 + (z - c) ** 2) - (r0 + 0.5 * t)
              for t in range(2)]
    res = IsosurfaceTracker(RegularSpacetimeMesh((n, n, n), 2)).track_arrays(arrays)
    assert res.volume.n_components == 1
    for t0 in (0.0, 0.5, 1.0):
        verts, tris = res.volume.slice(t0)
        r = r0 + 0.5 * t0
        assert triangle_area(verts, tris) == pytest.approx(4 * math.pi * r * r, rel=0.05)
        # closed surface: every triangle edge is shared by exactly two triangles
        count = {}
        for tri in tris:
            for a, b in itertools.combinations(sorted(tri), 2):
                count[(a, b)] = count.get((a, b), 0) + 1
        assert set(count.values()) == {2}


def test_vertex_on_isovalue_is_consistent():
    # integer-valued field: many vertices lie exactly on the isovalue
    n = 6
    x, y, z = grid_xyz((n, n, n))
    arrays = [(x + y - z - 2 + t) % 3 - 1.0 for t in range(3)]
    res = IsosurfaceTracker(RegularSpacetimeMesh((n, n, n), 3)).track_arrays(arrays)
    assert res.diagnostics["edge_count_violations"] == 0
    assert set(res.diagnostics["pentachoron_edge_counts"]) <= {0, 4, 6}


def test_two_blobs_two_components():
    n = 16
    x, y, z = grid_xyz((n, n, n))
    d1 = np.sqrt((x - 4.1) ** 2 + (y - 7.6) ** 2 + (z - 7.3) ** 2)
    d2 = np.sqrt((x - 11.2) ** 2 + (y - 7.6) ** 2 + (z - 7.3) ** 2)
    f = np.minimum(d1, d2) - 2.5
    res = IsosurfaceTracker(RegularSpacetimeMesh((n, n, n), 2), 0.0).track_arrays([f, f])
    assert res.volume.n_components == 2


def test_requires_3d():
    with pytest.raises(ValueError):
        IsosurfaceTracker(RegularSpacetimeMesh((4, 4), 2))
