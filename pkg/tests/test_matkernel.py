import numpy as np
import pytest

from ergoprop import matkernel as mk
from ergoprop.errors import DimensionMismatch, NonHermitianInput

from conftest import random_complex, random_hermitian


class TestHermitianEig:
    def test_diagonal(self):
        res = mk.hermitian_eig(np.diag([3.0, 1.0, 2.0]).astype(complex))
        assert np.allclose(res.eigenvalues, [1.0, 2.0, 3.0], atol=1e-14)

    def test_identity(self):
        res = mk.hermitian_eig(np.eye(4, dtype=complex))
        assert np.allclose(res.eigenvalues, np.ones(4), atol=1e-14)
        v = res.eigenvectors
        assert np.linalg.norm(v.conj().T @ v - np.eye(4)) <= 1e-10

    def test_reconstruction_residual(self, rng):
        for n in (2, 3, 4, 6, 16):
            a = random_hermitian(rng, n)
            res = mk.hermitian_eig(a)
            v, w = res.eigenvectors, res.eigenvalues
            resid = np.linalg.norm(a - (v * w) @ v.conj().T)
            assert resid <= 1e-10 * np.linalg.norm(a)
            assert np.all(np.diff(w) >= -1e-14)

    def test_non_hermitian_rejected(self, rng):
        with pytest.raises(NonHermitianInput):
            mk.hermitian_eig(random_complex(rng, 3))

    def test_eigenvalue_sum_is_trace(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 5))
            a = random_hermitian(rng, n)
            res = mk.hermitian_eig(a)
            assert abs(np.sum(res.eigenvalues) - np.trace(a).real) <= 1e-10 * max(
                1.0, abs(np.trace(a).real))


class TestMatrixExp:
    def test_zero(self):
        assert np.allclose(mk.matrix_exp(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_diagonal(self):
        a, b = 0.3 - 1.2j, -2.0 + 0.4j
        e = mk.matrix_exp(np.diag([a, b]))
        assert np.allclose(np.diag(e), [np.exp(a), np.exp(b)], atol=1e-13)
        assert abs(e[0, 1]) <= 1e-15 and abs(e[1, 0]) <= 1e-15

    def test_nilpotent(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(mk.matrix_exp(n), np.eye(2) + n, atol=1e-15)

    def test_inverse_pairing(self, rng):
        for _ in range(20):
            a = random_complex(rng, 4, scale=2.0)  # ||A|| <= ~10
            e1 = mk.matrix_exp(a)
            e2 = mk.matrix_exp(-a)
            assert np.linalg.norm(e1 @ e2 - np.eye(4)) <= 1e-9

    def test_against_high_precision_oracle(self):
        # expected value computed with mpmath at 50 digits, then frozen
        import mpmath

        mpmath.mp.dps = 50
        a = np.array([[0.2 + 0.1j, -1.3 + 0.7j, 0.05j],
                      [0.4 - 0.2j, 0.0, 1.1],
                      [-0.6, 0.3 + 0.3j, -0.8 + 0.05j]], dtype=complex)
        ref = mpmath.expm(mpmath.matrix(a.tolist()))
        ref = np.array([[complex(ref[i, j]) for j in range(3)] for i in range(3)])
        got = mk.matrix_exp(a)
        assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)


class TestTraceNorm:
    def test_diag(self):
        assert mk.trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0, abs=1e-14)

    def test_unit_trace_psd(self, rng):
        g = random_complex(rng, 3)
        a = g @ g.conj().T
        a /= np.trace(a).real
        assert mk.trace_norm(a) == pytest.approx(1.0, abs=1e-12)

    def test_svd_oracle(self, rng):
        for _ in range(20):
            a = random_complex(rng, 3)
            expected = float(np.sum(np.linalg.svd(a, compute_uv=False)))
            assert mk.trace_norm(a) == pytest.approx(expected, abs=1e-10)

    def test_adjoint_invariance(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 5))
            a = random_complex(rng, n)
            assert abs(mk.trace_norm(a) - mk.trace_norm(a.conj().T)) <= 1e-10


class TestVectorization:
    def test_vec_identity(self):
        assert np.allclose(mk.vec(np.eye(2)), [1, 0, 0, 1])

    def test_kron_identity(self):
        assert np.allclose(mk.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_vec_axb_rule(self, rng):
        # direct multiplication oracle
        for _ in range(30):
            a = random_complex(rng, 3)
            x = random_complex(rng, 3)
            b = random_complex(rng, 3)
            lhs = mk.vec(a @ x @ b)
            rhs = mk.kron(b.T, a) @ mk.vec(x)
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))

    def test_unvec_roundtrip(self, rng):
        a = random_complex(rng, 4)
        assert np.array_equal(mk.unvec(mk.vec(a), 4), a)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mk.unvec(np.zeros(5), 2)
        with pytest.raises(DimensionMismatch):
            mk.as_matrix(np.zeros((2, 3)))
