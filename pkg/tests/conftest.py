import itertools
import math
import re

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def grid_xyz(dims):
    """Per-axis integer coordinates of a grid in vertex-id order (x fastest)."""
    axes = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in reversed(dims)], indexing="ij")
    return [a.ravel() for a in reversed(axes)]


def kuhn_simplices(n):
    """Oracle Kuhn subdivision: one monotone lattice path per axis permutation."""
    out = []
    for perm in itertools.permutations(range(n)):
        v = [0] * n
        path = [tuple(v)]
        for axis in perm:
            v[axis] = 1
            path.append(tuple(v))
        out.append(tuple(path))
    return out


def brute_force_faces(dims, n_layers, k):
    """Every k-face of the Kuhn-triangulated spacetime grid as sorted vertex-id tuples."""
    n = len(dims)
    nspace = math.prod(dims)
    strides = [math.prod(dims[:d]) for d in range(n)]
    cubes = itertools.product(*[range(d - 1) for d in dims], range(n_layers - 1))
    out = set()
    tops = kuhn_simplices(n + 1)
    for cube in cubes:
        for s in tops:
            ids = []
            for corner in s:
                c = [a + o for a, o in zip(cube, corner)]
                ids.append(sum(c[d] * strides[d] for d in range(n)) + c[n] * nspace)
            for face in itertools.combinations(sorted(ids), k + 1):
                out.add(face)
    if n_layers == 1 or k <= n:
        # purely spatial faces of layers that own no spacetime cube
        for t in range(n_layers):
            for cube in itertools.product(*[range(d - 1) for d in dims]):
                for s in kuhn_simplices(n):
                    ids = [sum((a + o) * st for a, o, st in zip(cube, corner, strides)) + t * nspace
                           for corner in s]
                    for face in itertools.combinations(sorted(ids), k + 1):
                        out.add(face)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------- acceptance report
_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when != "call" and not (report.failed or report.skipped):
        return
    # an expected failure is reported as skipped and counts as FAIL; an
    # unexpected pass counts as PASS
    entry = _CRITERIA.setdefault(int(m.group(1)), {})
    note = getattr(report, "wasxfail", "") if report.skipped else ""
    entry[m.group(2).replace("_", " ")] = (report.passed, note)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        parts = _CRITERIA[num]
        ok = all(v for v, _ in parts.values())
        detail = "; ".join(
            f"{name}: {'pass' if v else 'FAIL'}" + (f" [expected: {note}]" if note else "")
            for name, (v, note) in parts.items())
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  ({detail})")
