"""Density matrices and the projective metric on them.

The metric is d(A, B) = (1 - q) / (1 + q) with q = m(A,B) m(B,A) and
m(A, B) = sup{lambda >= 0 : lambda B <= A}.  Interior states (full rank) are
at finite projective distance from each other; any interior/boundary pair is
at the maximal distance 1.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NotAState
from .matkernel import as_matrix, dagger, frobenius
from .tolerances import DEFAULT, Tolerances, rank_cutoff

INTERIOR = "interior"
BOUNDARY = "boundary"

HAAR_PURE = "haar_pure"
FULL_RANK_HS = "full_rank_hs"


@dataclass(frozen=True)
class DensityMatrix:
    """Validated unit-trace PSD matrix with cached spectrum.

    matrix is reconstructed from the clipped spectrum, so it is exactly
    Hermitian PSD up to round-off of the eigenbasis product.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray    # ascending, clipped at 0
    eigenvectors: np.ndarray   # unitary, columns match eigenvalues

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def classification(self) -> str:
        return INTERIOR if self.is_interior else BOUNDARY

    @property
    def is_interior(self) -> bool:
        return self.min_eigenvalue > rank_cutoff(self.dim)

    def support_rank(self, tol: Tolerances = DEFAULT) -> int:
        return int(np.sum(self.eigenvalues > rank_cutoff(self.dim, tol)))


def make_state(a, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """Validate a matrix as a density matrix.

    Eigenvalues in [-1e-10, 0) are clipped to zero and the trace is
    renormalized; anything worse raises NotAState.
    """
    a = as_matrix(a)
    scale = max(frobenius(a), 1.0)
    if frobenius(a - dagger(a)) > tol.hermiticity_rel * scale:
        raise NotAState("matrix is not Hermitian within tolerance")
    herm = (a + dagger(a)) / 2.0
    w, v = _kernels.eigh(herm)
    w = np.asarray(w, dtype=float)
    if w[0] < -tol.state_eig_clip:
        raise NotAState(f"negative eigenvalue {w[0]:.3e} beyond clip tolerance")
    tr = float(np.sum(w))
    if abs(tr - 1.0) > tol.state_trace:
        raise NotAState(f"trace {tr!r} is not 1 within tolerance")
    w = np.clip(w, 0.0, None)
    w = w / float(np.sum(w))
    mat = (v * w) @ dagger(v)
    mat = (mat + dagger(mat)) / 2.0
    return DensityMatrix(matrix=mat, eigenvalues=w, eigenvectors=v)


def _state_from_psd(mat: np.ndarray) -> DensityMatrix:
    """Internal constructor for matrices already PSD by construction."""
    w, v = _kernels.eigh((mat + dagger(mat)) / 2.0)
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    w = w / float(np.sum(w))
    m = (v * w) @ dagger(v)
    m = (m + dagger(m)) / 2.0
    return DensityMatrix(matrix=m, eigenvalues=w, eigenvectors=v)


def maximally_mixed(dim: int) -> DensityMatrix:
    return make_state(np.eye(dim, dtype=np.complex128) / dim)


def pure_state(psi) -> DensityMatrix:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return make_state(np.outer(psi, psi.conj()))


def _schur_reduced(a: np.ndarray, basis_supp: np.ndarray, basis_ker: np.ndarray,
                   tol: Tolerances) -> np.ndarray:
    """Effective quadratic form of A on the support of B.

    For x = u + v with u in supp(B), v in ker(B), the infimum of x^dag A x
    over v is u^dag S u with S the generalized Schur complement; that is the
    form entering m(A, B) when B is singular.
    """
    a_vv = dagger(basis_supp) @ a @ basis_supp
    if basis_ker.shape[1] == 0:
        return a_vv
    a_vw = dagger(basis_supp) @ a @ basis_ker
    a_ww = dagger(basis_ker) @ a @ basis_ker
    w, u = _kernels.eigh((a_ww + dagger(a_ww)) / 2.0)
    cut = max(np.max(np.abs(w)), 1.0) * 1e-13
    inv = np.where(np.abs(w) > cut, 1.0 / np.where(np.abs(w) > cut, w, 1.0), 0.0)
    pinv = (u * inv) @ dagger(u)
    return a_vv - a_vw @ pinv @ dagger(a_vw)


def m_coeff(a: DensityMatrix, b: DensityMatrix, tol: Tolerances = DEFAULT) -> float:
    """m(A, B) = sup{lambda >= 0 : lambda B <= A}.

    Equals the infimum of (x^dag A x)/(x^dag B x) over x with x^dag B x > 0.
    For interior B this is the smallest eigenvalue of B^{-1/2} A B^{-1/2};
    for singular B the kernel directions of B are eliminated exactly
    (Schur reduction), which returns 0 whenever the effective form of A
    vanishes somewhere on the support of B.
    """
    if a.dim != b.dim:
        raise ValueError("states of unequal dimension")
    cut = rank_cutoff(b.dim, tol)
    if b.is_interior:
        if not a.is_interior:
            return 0.0  # singular A cannot dominate a full-rank B
        lo, _ = _kernels.pencil_minmax(a.matrix, b.matrix)
        return max(lo, 0.0)
    if a.support_rank(tol) < b.support_rank(tol):
        return 0.0
    supp = b.eigenvalues > cut
    basis_supp = b.eigenvectors[:, supp]
    basis_ker = b.eigenvectors[:, ~supp]
    s = _schur_reduced(a.matrix, basis_supp, basis_ker, tol)
    beta = b.eigenvalues[supp]
    isq = 1.0 / np.sqrt(beta)
    c = (s * isq[None, :]) * isq[:, None]
    w, _ = _kernels.eigh((c + dagger(c)) / 2.0)
    lo = float(w[0])
    # values at the support cutoff are round-off of an exact zero
    return lo if lo > cut else 0.0


def hilbert_d(a: DensityMatrix, b: DensityMatrix, tol: Tolerances = DEFAULT) -> float:
    """Projective distance d(A, B) in [0, 1]."""
    if a.dim != b.dim:
        raise ValueError("states of unequal dimension")
    if a.is_interior and b.is_interior:
        lo, hi = _kernels.pencil_minmax(a.matrix, b.matrix)
        q = max(lo, 0.0) / hi
    else:
        q = m_coeff(a, b, tol) * m_coeff(b, a, tol)
    q = min(max(q, 0.0), 1.0)
    return (1.0 - q) / (1.0 + q)


def max_pairwise_distance(states, tol: Tolerances = DEFAULT):
    """Largest d over all pairs from a list of states; returns (d, i, j).

    Interior-only stacks go through the batched kernel; pairs touching the
    boundary are handled exactly in Python.
    """
    k = len(states)
    if k < 2:
        return 0.0, 0, 0
    interior = [s.is_interior for s in states]
    if all(interior):
        mats = np.stack([s.matrix for s in states])
        etas = np.array([s.min_eigenvalue for s in states])
        d, i, j = _kernels.max_pairwise_d(mats, etas, rank_cutoff(states[0].dim, tol))
        return float(d), int(i), int(j)
    best, bi, bj = -1.0, 0, 0
    for i in range(k):
        for j in range(i + 1, k):
            d = hilbert_d(states[i], states[j], tol)
            if d > best:
                best, bi, bj = d, i, j
            if best >= 1.0:
                return best, bi, bj
    return best, bi, bj


def sample_state(rng: np.random.Generator, kind: str, dim: int) -> DensityMatrix:
    """Draw a random state.

    haar_pure: |psi><psi| with psi Haar-uniform (boundary for dim > 1).
    full_rank_hs: G G^dag / tr, G complex standard Gaussian (interior a.s.).
    """
    if kind == HAAR_PURE:
        psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return pure_state(psi)
    if kind == FULL_RANK_HS:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        m = g @ dagger(g)
        return _state_from_psd(m / np.trace(m).real)
    raise ValueError(f"unknown state ensemble {kind!r}")
