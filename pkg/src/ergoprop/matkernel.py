"""Dense complex matrix kernels at small fixed dimension.

Everything here operates on square complex128 arrays of dimension D <= ~6
(and D^2 <= ~36 for super-operator matrices).  Vectorization is
column-stacking throughout: vec(AXB) = (B^T kron A) vec(X).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, MatrixExpOverflow, NonHermitianInput
from .tolerances import DEFAULT, Tolerances


def as_matrix(a) -> np.ndarray:
    """Coerce to a square, C-contiguous complex128 matrix."""
    m = np.ascontiguousarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def frobenius(a) -> float:
    return float(np.linalg.norm(a))


def dagger(a) -> np.ndarray:
    return np.conj(a).T


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(a, tol: Tolerances = DEFAULT) -> HermitianEig:
    """Full eigendecomposition of a Hermitian matrix.

    Raises NonHermitianInput when ||A - A^dag||_F exceeds the relative
    tolerance.  The result satisfies ||A - V L V^dag||_F <= 1e-10 ||A||_F.
    """
    a = as_matrix(a)
    scale = max(frobenius(a), 1.0)
    if frobenius(a - dagger(a)) > tol.hermiticity_rel * scale:
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    w, v = _kernels.eigh(a)
    return HermitianEig(eigenvalues=np.asarray(w, dtype=float), eigenvectors=v)


def matrix_exp(a) -> np.ndarray:
    """Matrix exponential e^A.

    Accurate to ~1e-12 relative for ||A|| <= 50.  Raises MatrixExpOverflow
    when intermediates leave the floating range.
    """
    a = as_matrix(a)
    if not np.all(np.isfinite(a.view(float))):
        raise MatrixExpOverflow("non-finite entries in exponent")
    e = _kernels.expm(a)
    if not np.all(np.isfinite(e.view(float))):
        raise MatrixExpOverflow("matrix exponential overflowed")
    return e


def trace_norm(a) -> float:
    """Sum of singular values of A."""
    a = as_matrix(a)
    w, _ = _kernels.eigh(dagger(a) @ a)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def vec(a) -> np.ndarray:
    """Column-stacking vectorization."""
    return as_matrix(a).T.reshape(-1)


def unvec(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.size != dim * dim:
        raise DimensionMismatch(f"vector of length {v.size} does not unvec to {dim}x{dim}")
    return v.reshape(dim, dim).T.copy()
