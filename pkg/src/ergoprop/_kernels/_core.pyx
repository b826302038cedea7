# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: cyclic-Jacobi Hermitian eigensolver, order-13 Pade
scaling-and-squaring matrix exponential, and projective-metric pair loops.

Semantics match ergoprop._kernels.fallback exactly (up to round-off of the
different eigenvalue algorithms)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, log2, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef double complex zdouble

DEF MAX_SWEEPS = 60


cdef inline double _abs2(zdouble z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef double _frob(zdouble[:, ::1] a, int n) nogil:
    cdef int i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            acc += _abs2(a[i, j])
    return sqrt(acc)


cdef void _jacobi(zdouble[:, ::1] a, zdouble[:, ::1] v, double[::1] w, int n) nogil:
    """Diagonalize Hermitian a in place; eigenvectors accumulate into v."""
    cdef int p, q, k, sweep, i, j
    cdef double norm_all, off, app, aqq, r, tau, t, c, s
    cdef zdouble apq, phase, cphase, akp, akq, vkp, vkq
    for i in range(n):
        for j in range(n):
            v[i, j] = 0.0
        v[i, i] = 1.0
    norm_all = _frob(a, n)
    if norm_all == 0.0:
        for i in range(n):
            w[i] = 0.0
        return
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += _abs2(a[p, q])
        if sqrt(2.0 * off) <= 1e-15 * norm_all:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = sqrt(_abs2(apq))
                if r <= 1e-30 * norm_all:
                    continue
                phase = apq / r             # e^{i theta}
                cphase = phase.conjugate()  # e^{-i theta}
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * c - akq * s * cphase
                    a[k, q] = akp * s + akq * c * cphase
                    a[p, k] = a[k, p].conjugate()
                    a[q, k] = a[k, q].conjugate()
                a[p, p] = c * c * app - 2.0 * c * s * r + s * s * aqq
                a[q, q] = s * s * app + 2.0 * c * s * r + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * c - vkq * s * cphase
                    v[k, q] = vkp * s + vkq * c * cphase
    for i in range(n):
        w[i] = a[i, i].real
    # insertion sort ascending, carrying eigenvector columns
    cdef double key
    for i in range(1, n):
        key = w[i]
        j = i - 1
        while j >= 0 and w[j] > key:
            w[j + 1] = w[j]
            w[j] = key
            for k in range(n):
                vkp = v[k, j + 1]
                v[k, j + 1] = v[k, j]
                v[k, j] = vkp
            key = w[j]
            j -= 1


def eigh(a):
    """Ascending eigenvalues and eigenvectors of a Hermitian matrix."""
    cdef cnp.ndarray[zdouble, ndim=2] work = np.array(a, dtype=np.complex128, order="C")
    cdef int n = work.shape[0]
    cdef cnp.ndarray[zdouble, ndim=2] v = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] w = np.empty(n, dtype=np.float64)
    cdef zdouble[:, ::1] av = work
    cdef zdouble[:, ::1] vv = v
    cdef double[::1] wv = w
    with nogil:
        _jacobi(av, vv, wv, n)
    return w, v


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------


cdef void _matmul(zdouble[:, ::1] out, zdouble[:, ::1] x, zdouble[:, ::1] y, int n) nogil:
    cdef int i, j, k
    cdef zdouble acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + x[i, k] * y[k, j]
            out[i, j] = acc


cdef int _lu_solve(zdouble[:, ::1] a, zdouble[:, ::1] b, int n) nogil:
    """Solve a X = b in place (X lands in b); a is destroyed.  Partial pivoting."""
    cdef int i, j, k, piv
    cdef double best, cand
    cdef zdouble factor, tmp
    for k in range(n):
        piv = k
        best = _abs2(a[k, k])
        for i in range(k + 1, n):
            cand = _abs2(a[i, k])
            if cand > best:
                best = cand
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = tmp
                tmp = b[k, j]
                b[k, j] = b[piv, j]
                b[piv, j] = tmp
        for i in range(k + 1, n):
            factor = a[i, k] / a[k, k]
            a[i, k] = factor
            for j in range(k + 1, n):
                a[i, j] = a[i, j] - factor * a[k, j]
            for j in range(n):
                b[i, j] = b[i, j] - factor * b[k, j]
    for k in range(n - 1, -1, -1):
        for j in range(n):
            tmp = b[k, j]
            for i in range(k + 1, n):
                tmp = tmp - a[k, i] * b[i, j]
            b[k, j] = tmp / a[k, k]
    return 0


_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)

_THETA13 = 5.371920351148152


def expm(a):
    """Order-13 diagonal Pade approximant with scaling and squaring."""
    am = np.array(a, dtype=np.complex128, order="C")
    cdef int n = am.shape[0]
    if n == 0:
        return am
    norm1 = float(np.max(np.sum(np.abs(am), axis=0))) if n else 0.0
    cdef int s = 0
    if norm1 > _THETA13:
        s = int(ceil(log2(norm1 / _THETA13)))
        am = am / (2.0 ** s)
    b = _PADE13
    eye = np.eye(n, dtype=np.complex128)
    a2 = np.empty_like(am)
    a4 = np.empty_like(am)
    a6 = np.empty_like(am)
    tmp = np.empty_like(am)
    _mm(a2, am, am, n)
    _mm(a4, a2, a2, n)
    _mm(a6, a2, a4, n)
    w1 = b[13] * a6 + b[11] * a4 + b[9] * a2
    _mm(tmp, a6, w1, n)
    w2 = tmp + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye
    u = np.empty_like(am)
    _mm(u, am, w2, n)
    z1 = b[12] * a6 + b[10] * a4 + b[8] * a2
    _mm(tmp, a6, z1, n)
    v = tmp + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
    lhs = np.ascontiguousarray(v - u)
    rhs = np.ascontiguousarray(v + u)
    cdef zdouble[:, ::1] lv = lhs
    cdef zdouble[:, ::1] rv = rhs
    cdef int status
    with nogil:
        status = _lu_solve(lv, rv, n)
    if status != 0:
        raise ArithmeticError("Pade denominator is singular")
    out = rhs
    sq = np.empty_like(am)
    cdef int k
    for k in range(s):
        _mm(sq, out, out, n)
        out, sq = sq, out
    return np.ascontiguousarray(out)


cdef void _mm(cnp.ndarray out, cnp.ndarray x, cnp.ndarray y, int n):
    cdef zdouble[:, ::1] ov = out
    cdef zdouble[:, ::1] xv = np.ascontiguousarray(x)
    cdef zdouble[:, ::1] yv = np.ascontiguousarray(y)
    with nogil:
        _matmul(ov, xv, yv, n)


# ---------------------------------------------------------------------------
# projective-metric pair kernels
# ---------------------------------------------------------------------------


cdef void _pencil(zdouble[:, ::1] a, zdouble[:, ::1] b,
                  zdouble[:, ::1] scratch_b, zdouble[:, ::1] vecs,
                  double[::1] vals, zdouble[:, ::1] wmat,
                  zdouble[:, ::1] tmp, zdouble[:, ::1] c,
                  double* lo, double* hi, int n) nogil:
    """Extreme eigenvalues of B^{-1/2} A B^{-1/2} for positive definite b."""
    cdef int i, j, k
    cdef double isq
    cdef zdouble acc
    for i in range(n):
        for j in range(n):
            scratch_b[i, j] = b[i, j]
    _jacobi(scratch_b, vecs, vals, n)
    for j in range(n):
        isq = 1.0 / sqrt(vals[j])
        for i in range(n):
            wmat[i, j] = vecs[i, j] * isq
    _matmul(tmp, a, wmat, n)
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + wmat[k, i].conjugate() * tmp[k, j]
            c[i, j] = acc
    _jacobi(c, vecs, vals, n)
    lo[0] = vals[0]
    hi[0] = vals[n - 1]


def pencil_minmax(a, b):
    """Extreme eigenvalues of B^{-1/2} A B^{-1/2} (A Hermitian, B positive definite)."""
    cdef cnp.ndarray[zdouble, ndim=2] am = np.ascontiguousarray(a, dtype=np.complex128)
    cdef cnp.ndarray[zdouble, ndim=2] bm = np.ascontiguousarray(b, dtype=np.complex128)
    cdef int n = am.shape[0]
    scratch = np.empty((n, n), dtype=np.complex128)
    vecs = np.empty((n, n), dtype=np.complex128)
    vals = np.empty(n, dtype=np.float64)
    wmat = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    cmat = np.empty((n, n), dtype=np.complex128)
    cdef zdouble[:, ::1] av = am
    cdef zdouble[:, ::1] bv = bm
    cdef zdouble[:, ::1] sv = scratch
    cdef zdouble[:, ::1] vv = vecs
    cdef double[::1] wv = vals
    cdef zdouble[:, ::1] wm = wmat
    cdef zdouble[:, ::1] tv = tmp
    cdef zdouble[:, ::1] cv = cmat
    cdef double lo = 0.0, hi = 0.0
    with nogil:
        _pencil(av, bv, sv, vv, wv, wm, tv, cv, &lo, &hi, n)
    return lo, hi


def max_pairwise_d(mats, etas, double cutoff):
    """Max projective distance over all pairs of a stack of interior states."""
    cdef cnp.ndarray[zdouble, ndim=3] ms = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef int k = ms.shape[0]
    cdef int n = ms.shape[1]
    scratch = np.empty((n, n), dtype=np.complex128)
    vecs = np.empty((n, n), dtype=np.complex128)
    vals = np.empty(n, dtype=np.float64)
    wmat = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    cmat = np.empty((n, n), dtype=np.complex128)
    cdef zdouble[:, :, ::1] mv = ms
    cdef zdouble[:, ::1] sv = scratch
    cdef zdouble[:, ::1] vv = vecs
    cdef double[::1] wv = vals
    cdef zdouble[:, ::1] wm = wmat
    cdef zdouble[:, ::1] tv = tmp
    cdef zdouble[:, ::1] cv = cmat
    cdef double best = -1.0, lo = 0.0, hi = 0.0, m_ab, m_ba, q, d
    cdef int bi = 0, bj = 0, i, j
    with nogil:
        for i in range(k):
            for j in range(i + 1, k):
                _pencil(mv[i], mv[j], sv, vv, wv, wm, tv, cv, &lo, &hi, n)
                m_ab = lo if lo > 0.0 else 0.0
                m_ba = 1.0 / hi
                q = m_ab * m_ba
                if q > 1.0:
                    q = 1.0
                d = (1.0 - q) / (1.0 + q)
                if d > best:
                    best = d
                    bi = i
                    bj = j
    return best, bi, bj


cdef inline double _bloch_q(double ax, double ay, double az,
                            double bx, double by, double bz,
                            double sb, double dot) nogil:
    # discriminant via |a-b|^2 - |a x b|^2 (stable for nearby states)
    cdef double dx = ax - bx, dy = ay - by, dz = az - bz
    cdef double cx = ay * bz - az * by
    cdef double cy = az * bx - ax * bz
    cdef double cz = ax * by - ay * bx
    cdef double num = dx * dx + dy * dy + dz * dz - cx * cx - cy * cy - cz * cz
    if num < 0.0:
        num = 0.0
    cdef double t = 2.0 * (1.0 - dot) / (1.0 - sb)
    cdef double root = 2.0 * sqrt(num) / (1.0 - sb)
    return (t - root) / (t + root)


def bloch_pair_q(a, b):
    """q = m(A,B) m(B,A) for qubit states given as Bloch vectors a, b."""
    cdef double ax = a[0], ay = a[1], az = a[2]
    cdef double bx = b[0], by = b[1], bz = b[2]
    cdef double sb = bx * bx + by * by + bz * bz
    cdef double dot = ax * bx + ay * by + az * bz
    return _bloch_q(ax, ay, az, bx, by, bz, sb, dot)


def bloch_pair_sup(vs, double cutoff):
    """Max pairwise projective distance over qubit states given as Bloch vectors."""
    cdef cnp.ndarray[double, ndim=2] v = np.ascontiguousarray(vs, dtype=np.float64)
    cdef int n = v.shape[0]
    cdef cnp.ndarray[double, ndim=1] s2 = np.einsum("ij,ij->i", v, v)
    cdef double[:, ::1] vv = v
    cdef double[::1] sv = s2
    cdef int i, j, bi = 0, bj = 0
    cdef double best = -1.0, q, d, dot
    # numerically pure states pair at distance 1 with any distinct partner
    for i in range(n):
        if sv[i] >= 1.0 - cutoff:
            for j in range(n):
                if j != i and (vv[j, 0] != vv[i, 0] or vv[j, 1] != vv[i, 1]
                               or vv[j, 2] != vv[i, 2]):
                    return 1.0, min(i, j), max(i, j)
            return 0.0, 0, 0
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dot = (vv[i, 0] * vv[j, 0] + vv[i, 1] * vv[j, 1]
                       + vv[i, 2] * vv[j, 2])
                q = _bloch_q(vv[i, 0], vv[i, 1], vv[i, 2],
                             vv[j, 0], vv[j, 1], vv[j, 2], sv[j], dot)
                if q > 1.0:
                    q = 1.0
                elif q < 0.0:
                    q = 0.0
                d = (1.0 - q) / (1.0 + q)
                if d > best:
                    best = d
                    bi = i
                    bj = j
    return best, bi, bj
