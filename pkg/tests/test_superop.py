import numpy as np
import pytest

from ergoprop import states as S
from ergoprop import superop as O
from ergoprop.errors import KernelHit, UnsupportedDim
from ergoprop.matkernel import kron, trace_norm, vec

from conftest import random_complex


def random_unitary(rng, n):
    g = random_complex(rng, n)
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestApplyComposeAdjoint:
    def test_identity(self, rng):
        x = random_complex(rng, 3)
        assert np.allclose(O.apply(O.identity_superop(3), x), x, atol=1e-14)

    def test_zero(self, rng):
        x = random_complex(rng, 2)
        assert np.allclose(O.apply(O.zero_superop(2), x), 0.0)

    def test_sandwich_map_matches_direct_product(self, rng):
        a = random_complex(rng, 3)
        phi = O.SuperOp(kron(np.conj(a), a))  # X -> A X A^dag
        x = random_complex(rng, 3)
        assert np.allclose(O.apply(phi, x), a @ x @ a.conj().T, atol=1e-12)

    def test_adjoint_defining_identity(self, rng):
        phi = O.random_cptp(rng, 3)
        adj = O.adjoint(phi)
        for _ in range(100):
            a = random_complex(rng, 3)
            b = random_complex(rng, 3)
            lhs = np.trace(a.conj().T @ O.apply(adj, b))
            rhs = np.trace(O.apply(phi, a).conj().T @ b)
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))

    def test_adjoint_of_unitary_conjugation(self, rng):
        u = random_unitary(rng, 2)
        adj = O.adjoint(O.unitary_conjugation(u))
        expected = O.unitary_conjugation(u.conj().T)
        assert np.allclose(adj.matrix, expected.matrix, atol=1e-13)

    def test_depolarizing_self_adjoint(self):
        phi = O.depolarizing(3, 0.7)
        assert np.allclose(phi.matrix, O.adjoint(phi).matrix, atol=1e-14)

    def test_compose_identity(self, rng):
        phi = O.random_cptp(rng, 2)
        assert np.allclose(O.compose(phi, O.identity_superop(2)).matrix,
                           phi.matrix, atol=1e-14)

    def test_compose_unitaries(self, rng):
        u, v = random_unitary(rng, 2), random_unitary(rng, 2)
        lhs = O.compose(O.unitary_conjugation(u), O.unitary_conjugation(v))
        assert np.allclose(lhs.matrix, O.unitary_conjugation(u @ v).matrix,
                           atol=1e-13)

    def test_associativity(self, rng):
        for _ in range(10):
            a, b, c = (O.random_cptp(rng, 2) for _ in range(3))
            lhs = O.compose(O.compose(a, b), c).matrix
            rhs = O.compose(a, O.compose(b, c)).matrix
            assert np.linalg.norm(lhs - rhs) <= 1e-12


class TestProjectiveApply:
    def test_trace_preserving_equals_apply(self, rng):
        phi = O.random_cptp(rng, 2)
        rho = S.sample_state(rng, S.FULL_RANK_HS, 2)
        img = O.projective_apply(phi, rho)
        assert np.allclose(img.matrix, O.apply(phi, rho.matrix), atol=1e-12)

    def test_scale_invariance(self, rng):
        rho = S.sample_state(rng, S.FULL_RANK_HS, 2)
        doubled = O.SuperOp(2.0 * np.eye(4, dtype=complex))
        img = O.projective_apply(doubled, rho)
        assert np.allclose(img.matrix, rho.matrix, atol=1e-13)

    def test_kernel_hit(self):
        p0 = np.zeros((2, 2), dtype=complex)
        p0[0, 0] = 1.0
        phi = O.from_kraus([p0])  # X -> |0><0| X |0><0|
        with pytest.raises(KernelHit):
            O.projective_apply(phi, S.pure_state([0.0, 1.0]))


class TestKrausChoi:
    def test_identity_kraus(self):
        phi = O.from_kraus([np.eye(2, dtype=complex)])
        assert np.allclose(phi.matrix, np.eye(4), atol=1e-15)
        choi = O.to_choi(phi)
        omega = np.zeros(4, dtype=complex)
        omega[0] = omega[3] = 1.0  # |00> + |11>
        assert np.allclose(choi.matrix, np.outer(omega, omega.conj()), atol=1e-14)
        w = np.linalg.eigvalsh(choi.matrix)
        assert sum(w > 1e-10) == 1 and choi.min_eigenvalue >= -1e-12

    def test_transpose_map_choi_is_swap(self):
        choi = O.to_choi(O.transpose_map(2))
        # oracle: SWAP matrix built directly; eigenvalues +-1
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[i * 2 + j, j * 2 + i] = 1.0
        assert np.allclose(choi.matrix, swap, atol=1e-14)
        ev = np.linalg.eigvalsh(swap)
        assert np.allclose(sorted(ev), [-1, 1, 1, 1])
        assert choi.min_eigenvalue == pytest.approx(-1.0, abs=1e-12)

    def test_kraus_maps_are_cp(self, rng):
        for _ in range(10):
            phi = O.random_cptp(rng, 3)
            assert O.to_choi(phi).min_eigenvalue >= -1e-10


class TestStrictPositivity:
    def test_depolarizing_strict(self):
        cert = O.strict_positivity_certificate(O.depolarizing(2, 0.3))
        assert cert.verdict == O.CERTIFIED_STRICT

    def test_unitary_not_strict(self, rng):
        u = random_unitary(rng, 2)
        cert = O.strict_positivity_certificate(O.unitary_conjugation(u), rng)
        assert cert.verdict == O.CERTIFIED_NOT_STRICT
        assert cert.witness is not None
        img = O.apply(O.unitary_conjugation(u), cert.witness.matrix)
        assert np.linalg.eigvalsh(img)[0] <= 1e-10

    def test_identity_not_strict(self, rng):
        cert = O.strict_positivity_certificate(O.identity_superop(3), rng)
        assert cert.verdict == O.CERTIFIED_NOT_STRICT


class TestContractionCoeff:
    def test_identity_reaches_one(self, rng):
        est = O.contraction_coeff(O.identity_superop(2), O.Sampled(16, 0), rng)
        assert est.value == 1.0
        grid = O.contraction_coeff(O.identity_superop(2), O.ExactGridD2(8))
        assert grid.value == 1.0

    def test_fully_depolarizing_is_zero(self):
        est = O.contraction_coeff(O.depolarizing(2, 1.0), O.ExactGridD2(8))
        assert est.value <= 1e-12

    def test_depolarizing_half(self):
        # oracle: antipodal pure pair maps to Bloch vectors +-(1-p)z;
        # m = (1/3) both ways, d = (1 - 1/9)/(1 + 1/9) = 0.8
        est = O.contraction_coeff(O.depolarizing(2, 0.5), O.ExactGridD2(24))
        assert est.value == pytest.approx(0.8, abs=5e-3)
        assert est.error_bar is not None

    def test_sampled_is_lower_bound_of_grid(self, rng):
        for _ in range(5):
            phi = O.random_strictly_positive(rng, 2)
            grid = O.contraction_coeff(phi, O.ExactGridD2(24)).value
            sampled = O.contraction_coeff(phi, O.Sampled(64, 32), rng).value
            assert sampled <= grid + 1e-6

    def test_full_rank_pairs_never_beat_pure_grid(self, rng):
        # the pure-pair restriction of the grid mode is validated against
        # interior samples
        phi = O.random_strictly_positive(rng, 2)
        grid = O.contraction_coeff(phi, O.ExactGridD2(24)).value
        worst = 0.0
        for _ in range(300):
            a = S.sample_state(rng, S.FULL_RANK_HS, 2)
            b = S.sample_state(rng, S.FULL_RANK_HS, 2)
            worst = max(worst, S.hilbert_d(O.projective_apply(phi, a),
                                           O.projective_apply(phi, b)))
        assert worst <= grid + 1e-9

    def test_contraction_inequality(self, rng):
        phi = O.random_strictly_positive(rng, 2)
        c = O.contraction_coeff(phi, O.ExactGridD2(24)).value
        for _ in range(200):
            a = S.sample_state(rng, S.FULL_RANK_HS, 2)
            b = S.sample_state(rng, S.HAAR_PURE, 2)
            lhs = S.hilbert_d(O.projective_apply(phi, a), O.projective_apply(phi, b))
            assert lhs <= c * S.hilbert_d(a, b) + 1e-6

    def test_submultiplicative_and_adjoint(self, rng):
        slack = 5e-3
        for _ in range(8):
            phi = O.random_strictly_positive(rng, 2)
            psi = O.random_strictly_positive(rng, 2)
            c_phi = O.contraction_coeff(phi, O.ExactGridD2(20)).value
            c_psi = O.contraction_coeff(psi, O.ExactGridD2(20)).value
            c_comp = O.contraction_coeff(O.compose(phi, psi), O.ExactGridD2(20)).value
            c_adj = O.contraction_coeff(O.adjoint(phi), O.ExactGridD2(20)).value
            assert c_comp <= c_phi * c_psi + 2 * slack
            assert abs(c_phi - c_adj) <= slack

    def test_strict_implies_below_one(self, rng):
        for _ in range(5):
            phi = O.random_strictly_positive(rng, 3)
            assert O.strict_positivity_certificate(phi).is_strict
            est = O.contraction_coeff(phi, O.Sampled(48, 16), rng)
            assert est.value < 1.0

    def test_grid_unsupported_dim(self):
        with pytest.raises(UnsupportedDim):
            O.contraction_coeff(O.depolarizing(3, 0.5), O.ExactGridD2(8))


class TestNorm1to1:
    def test_identity(self, rng):
        assert O.norm_1to1(O.identity_superop(2), 4, rng).value == pytest.approx(
            1.0, abs=1e-12)

    def test_scaled_identity(self, rng):
        phi = O.SuperOp(2.0 * np.eye(9, dtype=complex))
        assert O.norm_1to1(phi, 4, rng).value == pytest.approx(2.0, abs=1e-12)

    def test_positive_tp_map_is_one(self, rng):
        for _ in range(5):
            phi = O.random_cptp(rng, 2)
            # oracle: trace preservation pins the norm at 1 on states
            rho = S.sample_state(rng, S.FULL_RANK_HS, 2)
            assert np.trace(O.apply(phi, rho.matrix)).real == pytest.approx(
                1.0, abs=1e-12)
            res = O.norm_1to1(phi, 8, rng)
            assert res.value == pytest.approx(1.0, abs=1e-9)


class TestPerronFrobenius:
    def test_depolarizing(self, rng):
        pf = O.pf_eigenmatrices(O.depolarizing(2, 0.6), rng)
        assert pf.converged
        assert np.allclose(pf.R.matrix, np.eye(2) / 2, atol=1e-10)
        assert np.allclose(pf.L.matrix, np.eye(2) / 2, atol=1e-10)
        assert pf.spectral_radius == pytest.approx(1.0, abs=1e-12)

    def test_trace_preserving_gives_unit_radius(self, rng):
        for dim in (2, 3):
            phi = O.random_strictly_positive(rng, dim)
            pf = O.pf_eigenmatrices(phi, rng)
            assert pf.spectral_radius == pytest.approx(1.0, abs=1e-9)
            assert trace_norm(pf.L.matrix - np.eye(dim) / dim) <= 1e-8

    def test_residuals_and_radius_oracle(self, rng):
        # dense power-iteration-on-vectors oracle for the dominant eigenvalue
        phi = O.random_strictly_positive(rng, 3)
        pf = O.pf_eigenmatrices(phi, rng)
        assert pf.residual <= 1e-8
        v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        lam = 0.0
        for _ in range(5000):
            w = phi.matrix @ v
            lam = np.linalg.norm(w) / np.linalg.norm(v)
            v = w / np.linalg.norm(w)
        assert pf.spectral_radius == pytest.approx(lam, abs=1e-8)

    def test_normalizations(self, rng):
        phi = O.random_strictly_positive(rng, 4)
        pf = O.pf_eigenmatrices(phi, rng)
        assert np.trace(pf.R.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.trace(pf.L.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_non_contracting_fallback(self, rng):
        u = random_unitary(rng, 2)
        # unitary conjugation with an irrational rotation never converges
        pf = O.pf_eigenmatrices(O.unitary_conjugation(u), rng,
                                tol=_fast_stall_tolerances())
        if not pf.converged:
            assert np.allclose(pf.R.matrix, np.eye(2) / 2, atol=1e-12)

    def test_duality(self, rng):
        phi = O.random_cptp(rng, 3)
        adj = O.adjoint(phi)
        eye = np.eye(3, dtype=complex)
        for _ in range(20):
            rho = S.sample_state(rng, S.FULL_RANK_HS, 3)
            lhs = np.trace(O.apply(phi, rho.matrix)).real
            rhs = np.trace(O.apply(adj, eye) @ rho.matrix).real
            assert abs(lhs - rhs) <= 1e-10


def _fast_stall_tolerances():
    from dataclasses import replace

    from ergoprop.tolerances import DEFAULT

    return replace(DEFAULT, pf_max_iter=200)
