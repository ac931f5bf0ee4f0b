import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from simplextrack.predicates import (
    CriticalType,
    SingularSimplexError,
    eigen_classify,
    eigenvalues,
    point_in_simplex_sos,
    quantize,
    sign_det_sos,
    solve_inverse_linear,
)

from .conftest import kuhn_simplices


def perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def sos_oracle(rows, ids):
    """Sign of det([rows | 1]) with entry (rank r, col c) shifted by eps**(2**(r*n + c)).

    Leibniz expansion into a polynomial in eps; the sign is that of the
    lowest-order nonzero coefficient.
    """
    n = len(rows) - 1
    order = sorted((i for i in range(n + 1) if ids[i] is not None), key=lambda i: ids[i])
    rank = {i: r for r, i in enumerate(order)}
    poly = {}
    for p in itertools.permutations(range(n + 1)):
        # factor i is entry (i, p[i]); options: constant or epsilon term
        choices = []
        for i in range(n + 1):
            c = p[i]
            const = 1 if c == n else int(rows[i][c])
            opts = [(const, 0)]
            if c < n and i in rank:
                opts.append((1, 1 << (rank[i] * n + c)))
            choices.append(opts)
        for combo in itertools.product(*choices):
            coef = perm_sign(p)
            exp = 0
            for val, e in combo:
                coef *= val
                exp += e
            if coef:
                poly[exp] = poly.get(exp, 0) + coef
    for e in sorted(poly):
        if poly[e]:
            return 1 if poly[e] > 0 else -1
    return 0


small_int = st.integers(-3, 3)


@given(st.integers(1, 3).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.lists(small_int, min_size=n, max_size=n),
                                             min_size=n + 1, max_size=n + 1))),
       st.randoms())
def test_sos_sign_matches_polynomial_oracle(case, rnd):
    n, rows = case
    ids = list(range(n + 1))
    rnd.shuffle(ids)
    ids = [i * 7 + 3 for i in ids]
    assert sign_det_sos(rows, ids) == sos_oracle(rows, ids)


@given(st.integers(1, 3).flatmap(
    lambda n: st.lists(st.lists(small_int, min_size=n, max_size=n), min_size=n + 1,
                       max_size=n + 1)), st.integers(0, 100))
def test_sos_with_unperturbed_row(rows, which):
    n = len(rows) - 1
    ids = list(range(10, 10 + n + 1))
    ids[which % (n + 1)] = None
    assert sign_det_sos(rows, ids) == sos_oracle(rows, ids)


def test_sos_nondegenerate_is_plain_sign():
    rows = [[0, 0], [1, 0], [0, 1]]
    assert sign_det_sos(rows, [0, 1, 2]) == 1
    assert sign_det_sos([rows[1], rows[0], rows[2]], [1, 0, 2]) == -1


def test_quantize_range():
    assert quantize(0.5, 4) == 8
    with pytest.raises(OverflowError):
        quantize(2.0 ** 31, 32)
    with pytest.raises(ValueError):
        quantize(np.nan)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_point_in_simplex_exactly_once_on_shared_faces(n, rng):
    # simplices of a triangulated neighbourhood: the Kuhn star of a vertex in
    # a 3^n grid patch; the origin sits on a vertex or face value
    cubes = list(itertools.product(*[range(2)] * n))
    corners = list(itertools.product(*[range(3)] * n))
    vid = {c: i for i, c in enumerate(corners)}
    simplices = set()
    for cube in cubes:
        for s in kuhn_simplices(n):
            simplices.add(tuple(sorted(vid[tuple(a + o for a, o in zip(cube, v))] for v in s)))
    center = vid[(1,) * n]
    star = [s for s in simplices if center in s]
    for _ in range(150):
        # affine field through the origin at the centre vertex: a generic zero
        # placed exactly on a vertex of the mesh
        a = rng.integers(-5, 6, size=(n, n))
        while round(np.linalg.det(a)) == 0:
            a = rng.integers(-5, 6, size=(n, n))
        vals = {i: a @ (np.array(c) - 1) for c, i in vid.items()}
        hits = [s for s in star if point_in_simplex_sos([vals[i] for i in s], list(s))]
        assert len(hits) == 1


def test_point_in_simplex_basic():
    v = [[-1, -1], [2, -1], [-1, 2]]
    assert point_in_simplex_sos(v, [0, 1, 2])
    assert not point_in_simplex_sos([[1, 1], [2, 1], [1, 2]], [0, 1, 2])


@given(st.lists(st.lists(st.integers(-2 ** 12, 2 ** 12), min_size=3, max_size=3), min_size=4,
                max_size=4), st.integers(-8, 8))
def test_power_of_two_scaling_invariance(rows, shift):
    x = np.asarray(rows, float) / 2 ** 10
    q0 = quantize(x)
    q1 = quantize(np.ldexp(x, shift))
    ids = [5, 1, 9, 3]
    assert point_in_simplex_sos(q0.tolist(), ids) == point_in_simplex_sos(q1.tolist(), ids)
    assert sign_det_sos(q0[:, :3].tolist(), ids) == sign_det_sos(q1[:, :3].tolist(), ids)


def test_solve_inverse_linear_matches_exact(rng):
    for _ in range(50):
        v = rng.normal(size=(4, 3))
        try:
            mu = solve_inverse_linear(v).mu
        except SingularSimplexError:
            continue
        assert np.allclose(mu @ v, 0, atol=1e-10)
        assert mu.sum() == pytest.approx(1.0)


def test_solve_inverse_linear_singular():
    with pytest.raises(SingularSimplexError):
        solve_inverse_linear(np.zeros((3, 2)))


def test_exact_fallback_near_boundary():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mu = solve_inverse_linear(v, quantized=quantize(v)).mu
    assert mu == pytest.approx([1, 0, 0])


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4))
def test_eigenvalues_2x2_match_numpy(vals):
    j = np.array(vals).reshape(2, 2)
    ours = np.sort_complex(np.asarray(eigenvalues(j), complex))
    ref = np.sort_complex(np.linalg.eigvals(j))
    assert np.allclose(ours, ref, atol=1e-6)


def test_eigenvalues_3x3_match_numpy(rng):
    for _ in range(200):
        j = rng.normal(size=(3, 3))
        ours = np.sort_complex(np.asarray(eigenvalues(j), complex))
        assert np.allclose(ours, np.sort_complex(np.linalg.eigvals(j)), atol=1e-8)
        s = j + j.T
        ours = np.sort(np.real(eigenvalues(s, symmetric=True)))
        assert np.allclose(ours, np.linalg.eigvalsh(s), atol=1e-8)


def test_classification():
    assert eigen_classify(np.diag([1.0, 2.0])) == CriticalType.SOURCE
    assert eigen_classify(np.diag([-1.0, -2.0])) == CriticalType.SINK
    assert eigen_classify(np.diag([1.0, -2.0])) == CriticalType.SADDLE
    assert eigen_classify(np.diag([-1.0, -2.0, -3.0]), scalar=True) == CriticalType.MAX
    assert eigen_classify(np.diag([1.0, 2.0, 3.0]), scalar=True) == CriticalType.MIN
    assert eigen_classify(np.diag([1.0, -2.0, 3.0]), scalar=True) == CriticalType.SADDLE_SCALAR


def test_fraction_oracle_for_det():
    from simplextrack.predicates import _det

    rng = np.random.default_rng(3)
    for n in range(1, 6):
        for _ in range(20):
            m = rng.integers(-50, 50, size=(n, n)).tolist()
            ref = sum(perm_sign(p) * np.prod([Fraction(m[i][p[i]]) for i in range(n)])
                      for p in itertools.permutations(range(n)))
            assert _det(m) == ref
