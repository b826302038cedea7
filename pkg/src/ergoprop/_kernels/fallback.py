"""Pure numpy/scipy implementations of the hot kernels.

Same call surface as the compiled extension; selected at import when the
extension is unavailable or ``ERGOPROP_PURE`` is set.
"""

import numpy as np
import scipy.linalg

BACKEND_NAME = "fallback"


def eigh(a):
    """Ascending eigenvalues and unitary eigenvector matrix of a Hermitian matrix."""
    w, v = np.linalg.eigh(a)
    return w, v


def expm(a):
    return scipy.linalg.expm(np.ascontiguousarray(a, dtype=np.complex128))


def pencil_minmax(a, b):
    """Extreme eigenvalues of B^{-1/2} A B^{-1/2} for Hermitian A and positive definite B."""
    wb, vb = np.linalg.eigh(b)
    isq = vb * (1.0 / np.sqrt(wb))
    c = isq.conj().T @ a @ isq
    wc = np.linalg.eigvalsh(c)
    return float(wc[0]), float(wc[-1])


def _d_from_pencil(lo, hi):
    m_ab = max(lo, 0.0)
    m_ba = 1.0 / hi
    q = min(max(m_ab * m_ba, 0.0), 1.0)
    return (1.0 - q) / (1.0 + q)


def max_pairwise_d(mats, etas, cutoff):
    """Max projective distance over all pairs of a stack of interior states.

    mats: (k, D, D) complex stack, etas: (k,) smallest eigenvalues.  Every
    eta must exceed cutoff; boundary handling lives with the caller.
    """
    k = mats.shape[0]
    best = -1.0
    bi = bj = 0
    for i in range(k):
        for j in range(i + 1, k):
            lo, hi = pencil_minmax(mats[i], mats[j])
            d = _d_from_pencil(lo, hi)
            if d > best:
                best, bi, bj = d, i, j
    return best, bi, bj


def bloch_pair_q(a, b):
    """q = m(A,B)m(B,A) for qubit states given as Bloch vectors a, b.

    The pencil discriminant is evaluated as |a-b|^2 - |a x b|^2 (Lagrange
    identity), which stays accurate when the two states nearly coincide.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sa = float(a @ a)
    sb = float(b @ b)
    t = 2.0 * (1.0 - float(a @ b)) / (1.0 - sb)
    diff = a - b
    cross = np.cross(a, b)
    num = max(float(diff @ diff) - float(cross @ cross), 0.0)
    root = 2.0 * np.sqrt(num) / (1.0 - sb)
    return (t - root) / (t + root)


def bloch_pair_sup(vs, cutoff):
    """Max pairwise projective distance over qubit states given as Bloch vectors.

    vs: (n, 3) float array.  Pairs where either state is numerically pure
    give distance 1 unless the vectors coincide.
    """
    vs = np.asarray(vs, dtype=float)
    n = vs.shape[0]
    s = np.einsum("ij,ij->i", vs, vs)
    pure = s >= 1.0 - cutoff
    if np.any(pure):
        # one pure plus any distinct partner maximizes d outright
        idx = int(np.argmax(pure))
        for j in range(n):
            if j != idx and not np.array_equal(vs[j], vs[idx]):
                return 1.0, min(idx, j), max(idx, j)
        return 0.0, 0, 0  # every vector coincides with the pure one
    best = -1.0
    bi = bj = 0
    chunk = 256
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        a = vs[i0:i1]
        sa = s[i0:i1]
        dots = a @ vs.T                         # (m, n)
        one_m_sb = 1.0 - s[None, :]
        t = 2.0 * (1.0 - dots) / one_m_sb
        diff = a[:, None, :] - vs[None, :, :]
        cross = np.cross(a[:, None, :], vs[None, :, :])
        num = np.maximum(np.einsum("ijk,ijk->ij", diff, diff)
                         - np.einsum("ijk,ijk->ij", cross, cross), 0.0)
        root = 2.0 * np.sqrt(num) / one_m_sb
        q = (t - root) / (t + root)
        np.clip(q, 0.0, 1.0, out=q)
        d = (1.0 - q) / (1.0 + q)
        # ignore self-pairs
        for r in range(i1 - i0):
            d[r, i0 + r] = -1.0
        flat = int(np.argmax(d))
        r, c = divmod(flat, n)
        if d[r, c] > best:
            best = float(d[r, c])
            bi, bj = i0 + r, c
    if bi > bj:
        bi, bj = bj, bi
    return best, bi, bj
