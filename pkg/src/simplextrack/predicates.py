"""Exact sign predicates with Simulation of Simplicity, plus small linear algebra.

All decisions are made on fixed-point mantissas ``round(x * 2**bits)`` held
as Python integers, so they are bit-reproducible. Entry ``(vertex id, c)``
of a perturbed row receives the symbolic offset ``eps ** (2 ** rank)``,
where ``rank`` orders entries by ``(vertex id, c)`` ascending; a lower
rank therefore means a larger perturbation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

DEFAULT_BITS = 32
_MAX_MANTISSA = 2 ** 62


class SingularSimplexError(ArithmeticError):
    """Inverse interpolation hit a singular system for a positive simplex."""


def quantize(x, bits=DEFAULT_BITS):
    """Fixed-point mantissas ``round(x * 2**bits)`` as an int64 array."""
    x = np.asarray(x, dtype=np.float64)
    y = np.rint(np.ldexp(x, bits))
    if not np.all(np.isfinite(y)):
        raise ValueError("cannot quantize non-finite values")
    if y.size and np.abs(y).max() >= _MAX_MANTISSA:
        raise OverflowError(
            f"|x| * 2**{bits} exceeds the 62-bit mantissa range; use fewer quantization bits")
    return y.astype(np.int64)


def _det(rows):
    """Exact determinant of a small square integer matrix (Bareiss)."""
    m = [list(r) for r in rows]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


@lru_cache(maxsize=None)
def _perturbation_terms(n_rows, n_cols):
    """Subsets of perturbed entries in order of decreasing ε-magnitude.

    Entry ``(r, c)`` (r = rank of the row's vertex id) has rank ``r*n_cols + c``
    and exponent ``2**rank``; a term's magnitude is set by the exponent sum, so
    ordering by that sum ascending visits dominant terms first. At most one
    entry per row can appear in a multilinear term.
    """
    terms = []
    for choice in product(range(-1, n_cols), repeat=n_rows):
        entries = tuple((r, c) for r, c in enumerate(choice) if c >= 0)
        cols = [c for _, c in entries]
        if len(set(cols)) != len(cols):
            continue
        key = sum(1 << (r * n_cols + c) for r, c in entries)
        terms.append((key, entries))
    terms.sort()
    return tuple(e for _, e in terms[1:])  # exact determinant is handled separately


def sign_det_sos(rows, ids):
    """Sign of ``det([rows | 1])`` under symbolic perturbation.

    Parameters
    ----------
    rows : sequence of n+1 integer vectors of length n
        Quantized vectors; each is augmented with a trailing 1.
    ids : sequence of n+1 vertex ids
        Perturbation ids, distinct; ``None`` marks an unperturbed row (at
        most one, e.g. the query point of a point-in-simplex test).

    Returns
    -------
    int
        +1 or -1, never 0.
    """
    rows = [[int(v) for v in r] for r in rows]
    n = len(rows) - 1
    if any(len(r) != n for r in rows):
        raise ValueError("need n+1 rows of length n")
    mat = [r + [1] for r in rows]
    d = _det(mat)
    if d:
        return 1 if d > 0 else -1
    perturbed = sorted((i for i in range(n + 1) if ids[i] is not None), key=lambda i: ids[i])
    if len(perturbed) < n:
        raise ValueError("at most one unperturbed row is allowed")
    if len({ids[i] for i in perturbed}) != len(perturbed):
        raise ValueError("perturbation ids must be distinct")
    for entries in _perturbation_terms(len(perturbed), n):
        m = [row[:] for row in mat]
        for r, c in entries:
            unit = [0] * (n + 1)
            unit[c] = 1
            m[perturbed[r]] = unit
        d = _det(m)
        if d:
            return 1 if d > 0 else -1
    raise AssertionError("symbolic perturbation failed to resolve the sign")  # pragma: no cover


def origin_cofactor_signs(vectors, ids):
    """Signs of the n+1 determinants obtained by swapping each row for the origin."""
    vectors = [[int(v) for v in r] for r in vectors]
    n = len(vectors) - 1
    out = []
    for i in range(n + 1):
        rows = [[0] * n if j == i else vectors[j] for j in range(n + 1)]
        rid = [None if j == i else ids[j] for j in range(n + 1)]
        out.append(sign_det_sos(rows, rid))
    return out


def point_in_simplex_sos(vectors, ids):
    """True iff the origin lies in the perturbed convex hull of ``vectors``.

    ``vectors`` are n+1 quantized vectors of R^n (one per simplex vertex) and
    ``ids`` their global vertex ids.
    """
    s = origin_cofactor_signs(vectors, ids)
    return all(x == s[0] for x in s)


@dataclass(frozen=True)
class BarycentricSolution:
    """Barycentric coordinates ``mu`` of the zero of a linear interpolant."""

    mu: np.ndarray

    def interpolate(self, values):
        return np.tensordot(self.mu, np.asarray(values, dtype=np.float64), axes=(0, 0))


def _clamp(mu, slack):
    if np.all(mu >= -slack) and np.all(mu <= 1 + slack):
        mu = np.clip(mu, 0.0, 1.0)
        return mu / mu.sum(), True
    return mu, False


def solve_inverse_linear(vectors, quantized=None, slack=1e-12):
    """Barycentric coordinates ``mu`` with ``sum(mu_i v_i) = 0``, ``sum(mu) = 1``.

    Solved in floating point; when the float solution leaves the simplex by
    more than ``slack`` (possible only near degeneracies) and the quantized
    vectors are given, ``mu`` is recomputed exactly from their cofactors.
    """
    v = np.asarray(vectors, dtype=np.float64)
    n = v.shape[1]
    a = np.vstack([v.T, np.ones(n + 1)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    try:
        mu = np.linalg.solve(a, rhs)
        ok = np.all(np.isfinite(mu))
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        mu, ok = _clamp(mu, slack)
    if ok:
        return BarycentricSolution(mu)
    if quantized is None:
        raise SingularSimplexError(f"no barycentric zero for vectors {v.tolist()}")
    return BarycentricSolution(_exact_mu(quantized))


def _exact_mu(quantized):
    q = [[int(x) for x in r] for r in quantized]
    n = len(q) - 1
    dets = []
    for i in range(n + 1):
        rows = [[0] * n if j == i else q[j] for j in range(n + 1)]
        dets.append(_det([r + [1] for r in rows]))
    total = sum(dets)
    if total == 0:
        raise SingularSimplexError(
            "singular inverse-interpolation system in a positive simplex; "
            "the quantization scale is probably too coarse for this data")
    mu = np.array([float(Fraction(d, total)) for d in dets])
    mu, _ = _clamp(mu, 1e-15)
    return mu


class CriticalType(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    SADDLE = "saddle"
    MAX = "max"
    MIN = "min"
    SADDLE_SCALAR = "saddle-scalar"
    DEGENERATE = "degenerate"


def _eig_2x2(j):
    (a, b), (c, d) = j
    tr = a + d
    det = a * d - b * c
    disc = tr * tr / 4.0 - det
    if disc >= 0:
        r = math.sqrt(disc)
        return [complex(tr / 2 + r), complex(tr / 2 - r)]
    r = math.sqrt(-disc)
    return [complex(tr / 2, r), complex(tr / 2, -r)]


def _eig_sym_3x3(a):
    p1 = a[0][1] ** 2 + a[0][2] ** 2 + a[1][2] ** 2
    q = (a[0][0] + a[1][1] + a[2][2]) / 3.0
    if p1 == 0:
        return sorted(a[i][i] for i in range(3))
    p2 = sum((a[i][i] - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6.0)
    b = (np.asarray(a, dtype=np.float64) - q * np.eye(3)) / p
    r = float(np.linalg.det(b)) / 2.0
    phi = math.pi / 3 if r <= -1 else 0.0 if r >= 1 else math.acos(r) / 3
    e1 = q + 2 * p * math.cos(phi)
    e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    return sorted([e1, 3 * q - e1 - e3, e3])


def _eig_3x3(a):
    a = np.asarray(a, dtype=np.float64)
    tr = float(np.trace(a))
    c1 = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0] + a[0, 0] * a[2, 2]
               - a[0, 2] * a[2, 0] + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
    det = float(np.linalg.det(a))
    # depressed cubic of  l^3 - tr l^2 + c1 l - det = 0  with  l = y + tr/3
    s = tr / 3.0
    p = c1 - tr * tr / 3.0
    q = -2 * s ** 3 + c1 * s - det
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc > 0:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2 + sq) ** (1 / 3), -q / 2 + sq)
        w = math.copysign(abs(-q / 2 - sq) ** (1 / 3), -q / 2 - sq)
        y1 = u + w
        re = -y1 / 2
        im = (u - w) * math.sqrt(3) / 2
        return [complex(y1 + s), complex(re + s, im), complex(re + s, -im)]
    if p == 0:
        return [complex(s)] * 3
    m = 2 * math.sqrt(-p / 3)
    arg = 3 * q / (p * m)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3
    return [complex(m * math.cos(theta - 2 * math.pi * k / 3) + s) for k in range(3)]


def eigenvalues(j, symmetric=False):
    j = np.asarray(j, dtype=np.float64)
    if j.shape == (2, 2):
        if symmetric:
            j = (j + j.T) / 2
        return _eig_2x2(j.tolist())
    if j.shape == (3, 3):
        if symmetric:
            return [complex(x) for x in _eig_sym_3x3(((j + j.T) / 2).tolist())]
        return _eig_3x3(j)
    raise ValueError(f"Jacobian must be 2x2 or 3x3, got {j.shape}")


def eigen_classify(j, tol=None, scalar=False):
    """Critical point type from the real parts of the Jacobian's eigenvalues.

    With ``scalar=True`` the Jacobian is the Hessian of a scalar field and the
    result is one of max/min/saddle-scalar. Any real part within ``tol``
    (default ``1e-9 * ||J||_inf``) of zero gives ``DEGENERATE``.
    """
    j = np.asarray(j, dtype=np.float64)
    if tol is None:
        tol = 1e-9 * float(np.abs(j).sum(axis=1).max())
    if tol < 0:
        raise ValueError("tol must be non-negative")
    re = [ev.real for ev in eigenvalues(j, symmetric=scalar)]
    if any(abs(r) <= tol for r in re):
        return CriticalType.DEGENERATE
    if all(r > 0 for r in re):
        return CriticalType.MIN if scalar else CriticalType.SOURCE
    if all(r < 0 for r in re):
        return CriticalType.MAX if scalar else CriticalType.SINK
    return CriticalType.SADDLE_SCALAR if scalar else CriticalType.SADDLE
