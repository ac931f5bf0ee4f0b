# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sweep kernels.

Every function fills ``out[start:stop]`` only and runs without the GIL, so
callers can split one output array between threads.

Point-in-simplex status codes: 0 outside, 1 inside, 2 undecided (the float
filter could not certify a sign; the caller re-tests with exact integers).
"""

from libc.math cimport fabs

ctypedef signed char int8


cdef double FILTER_EPS = 1e-12


cdef inline double _det2(double a, double b, double c, double d) noexcept nogil:
    return a * d - b * c


cdef inline int _sign_of_minor(const double* v, int rs, int n, int skip, bint robust) noexcept nogil:
    """Sign of det of the n x n matrix of rows != skip; 0 if not certified."""
    cdef const double* a
    cdef const double* b
    cdef const double* c
    cdef const double* rows[3]
    cdef int j, m = 0
    cdef double det, perm
    for j in range(n + 1):
        if j != skip:
            rows[m] = v + j * rs
            m += 1
    a = rows[0]
    if n == 1:
        det = a[0]
        perm = fabs(det)
    elif n == 2:
        b = rows[1]
        det = _det2(a[0], a[1], b[0], b[1])
        perm = fabs(a[0] * b[1]) + fabs(a[1] * b[0])
    else:
        b = rows[1]
        c = rows[2]
        det = (a[0] * _det2(b[1], b[2], c[1], c[2])
               - a[1] * _det2(b[0], b[2], c[0], c[2])
               + a[2] * _det2(b[0], b[1], c[0], c[1]))
        perm = (fabs(a[0]) * (fabs(b[1] * c[2]) + fabs(b[2] * c[1]))
                + fabs(a[1]) * (fabs(b[0] * c[2]) + fabs(b[2] * c[0]))
                + fabs(a[2]) * (fabs(b[0] * c[1]) + fabs(b[1] * c[0])))
    # the minors are integer-valued; 1e-12 of the permanent is far above
    # the rounding error of this expansion
    if robust:
        if fabs(det) <= FILTER_EPS * perm:
            return 0
    elif det == 0.0:
        return 0
    return 1 if det > 0 else -1


cdef inline unsigned char _classify(const double* v, int rs, int n, bint robust) noexcept nogil:
    cdef int i, c, s, s0 = 0
    cdef bint allpos, allneg, unsure = False
    # perturbations are positive, so a component that is >= 0 everywhere
    # (or < 0 everywhere) keeps the origin outside
    for c in range(n):
        allpos = True
        allneg = True
        for i in range(n + 1):
            if v[i * rs + c] < 0:
                allpos = False
            else:
                allneg = False
        if allpos or allneg:
            return 0
    # certified signs that disagree decide "outside" even if others are unsure
    for i in range(n + 1):
        s = _sign_of_minor(v, rs, n, i, robust)
        if s == 0:
            if not robust:
                return 0
            unsure = True
            continue
        if i & 1:
            s = -s
        if s0 == 0:
            s0 = s
        elif s != s0:
            return 0
    return 2 if unsure else 1


def classify_indexed(const double[:, :, ::1] vals, unsigned char[::1] out,
                     Py_ssize_t start, Py_ssize_t stop, bint robust=True):
    """Status of the origin w.r.t. each simplex ``vals[e]`` (n+1 rows of R^n)."""
    cdef Py_ssize_t e
    cdef int n = vals.shape[2]
    if vals.shape[1] != n + 1 or not 1 <= n <= 3:
        raise ValueError("vals must have shape (N, n+1, n) with 1 <= n <= 3")
    with nogil:
        for e in range(start, stop):
            out[e] = _classify(&vals[e, 0, 0], n, n, robust)


def classify_regular(const double[:, ::1] lo, const double[:, ::1] hi,
                     const long long[:, ::1] offsets, const long long[::1] counts,
                     const long long[::1] strides,
                     unsigned char[::1] out, Py_ssize_t start, Py_ssize_t stop,
                     bint robust=True):
    """Implicit sweep over one element type of a regular spacetime mesh.

    ``offsets`` holds the type's vertex offsets (spatial axes then time);
    elements are enumerated in C order over the reversed spatial axes.
    """
    cdef int n = lo.shape[1]
    cdef int nd = counts.shape[0]
    if offsets.shape[0] != n + 1 or offsets.shape[1] != nd + 1 or not 1 <= n <= 3:
        raise ValueError("offsets must have shape (n+1, dims+1)")
    cdef double v[12]
    cdef long long rel[4]
    cdef Py_ssize_t e, rem, base, idx
    cdef int i, c, d
    for i in range(n + 1):
        rel[i] = 0
        for d in range(nd):
            rel[i] += offsets[i, d] * strides[d]
    with nogil:
        for e in range(start, stop):
            rem = e
            base = 0
            for d in range(nd):
                base += (rem % counts[d]) * strides[d]
                rem = rem // counts[d]
            for i in range(n + 1):
                idx = base + rel[i]
                if offsets[i, nd]:
                    for c in range(n):
                        v[i * 3 + c] = hi[idx, c]
                else:
                    for c in range(n):
                        v[i * 3 + c] = lo[idx, c]
            out[e] = _classify(v, 3, n, robust)


def winding(const long long[:, ::1] phase, const long long[:, ::1] ids, long long period,
            int8[::1] out, Py_ssize_t start, Py_ssize_t stop):
    """Winding number of quantized phases around each triangle (v0 -> v1 -> v2).

    Each edge difference is wrapped into (-period/2, period/2]; an exact
    half-period tie is resolved antisymmetrically by vertex id.
    """
    cdef Py_ssize_t e
    cdef long long half = period // 2, total, d
    cdef int a, b
    with nogil:
        for e in range(start, stop):
            total = 0
            for a in range(3):
                b = (a + 1) % 3
                d = (phase[e, b] - phase[e, a]) % period
                if d < 0:
                    d += period
                if d > half:
                    d -= period
                elif d == half and ids[e, a] > ids[e, b]:
                    d = -half
                total += d
            out[e] = <int8>(total // period)
