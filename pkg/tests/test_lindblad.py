import numpy as np
import pytest
import scipy.linalg

from ergoprop import lindblad as L
from ergoprop import superop as O
from ergoprop.errors import NonHermitianInput
from ergoprop.states import FULL_RANK_HS, sample_state

from conftest import random_complex, random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
Z2 = np.zeros((2, 2), dtype=complex)


def random_lindbladian(rng, dim, n_jumps=2, rate=0.5):
    jumps = tuple(random_complex(rng, dim) / np.sqrt(2 * dim) for _ in range(n_jumps))
    return L.Lindbladian(random_hermitian(rng, dim), jumps,
                         tuple(rate for _ in range(n_jumps)))


class TestLindbladian:
    def test_validation(self, rng):
        with pytest.raises(NonHermitianInput):
            L.Lindbladian(random_complex(rng, 2), (), ())
        with pytest.raises(ValueError):
            L.Lindbladian(Z2, (SX,), (-0.1,))
        with pytest.raises(ValueError):
            L.Lindbladian(Z2, (SX,), (0.1, 0.2))

    def test_json_roundtrip(self, rng):
        lind = random_lindbladian(rng, 3)
        back = L.Lindbladian.from_json(lind.to_json())
        assert np.array_equal(back.hamiltonian, lind.hamiltonian)
        assert all(np.array_equal(a, b) for a, b in zip(back.jumps, lind.jumps))
        assert back.rates == lind.rates


class TestToSuperop:
    def test_zero_generator(self):
        gen = L.to_superop(L.Lindbladian(Z2, (), ()))
        assert np.allclose(gen.matrix, 0.0)

    def test_pure_hamiltonian_is_unitary_conjugation(self, rng):
        h = random_hermitian(rng, 3)
        gen = L.to_superop(L.Lindbladian(h, (), ()))
        t = 0.7
        prop = L.propagate([L.Segment(gen, t)])
        u = scipy.linalg.expm(-1j * h * t)
        assert np.linalg.norm(prop.matrix - O.unitary_conjugation(u).matrix) <= 1e-10

    def test_dephasing_action_on_matrix_units(self):
        # closed form: 0 on diagonal units, -2 gamma on off-diagonal units
        gamma = 0.4
        gen = L.to_superop(L.Lindbladian(Z2, (SZ,), (gamma,)))
        units = {}
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2), dtype=complex)
                e[i, j] = 1.0
                units[(i, j)] = e
        for (i, j), e in units.items():
            out = O.apply(gen, e)
            expected = 0.0 * e if i == j else -2.0 * gamma * e
            assert np.allclose(out, expected, atol=1e-14), (i, j)


class TestPropagate:
    def test_zero_segment_is_identity(self):
        gen = L.to_superop(L.Lindbladian(Z2, (), ()))
        prop = L.propagate([L.Segment(gen, 5.0)])
        assert np.allclose(prop.matrix, np.eye(4), atol=1e-14)

    def test_split_invariance(self, rng):
        gen = L.to_superop(random_lindbladian(rng, 2))
        one = L.propagate([L.Segment(gen, 2.0)])
        two = L.propagate([L.Segment(gen, 1.0), L.Segment(gen, 1.0)])
        assert np.linalg.norm(one.matrix - two.matrix) <= 1e-11

    def test_dephasing_coherence_factor(self):
        gamma, t = 0.3, 2.0
        gen = L.to_superop(L.Lindbladian(Z2, (SZ,), (gamma,)))
        prop = L.propagate([L.Segment(gen, t)])
        plus = np.full((2, 2), 0.5, dtype=complex)
        out = O.apply(prop, plus)
        assert out[0, 1].real == pytest.approx(0.5 * np.exp(-1.2), abs=1e-6)

    def test_composition_law_over_partitions(self, rng):
        gens = [L.to_superop(random_lindbladian(rng, 2)) for _ in range(3)]
        durations = [0.6, 1.1, 0.8]
        segments = [L.Segment(g, d) for g, d in zip(gens, durations)]
        full = L.propagate(segments)
        for _ in range(100):
            cut = int(rng.integers(1, 3))
            left = L.propagate(segments[:cut])
            right = L.propagate(segments[cut:])
            glued = O.compose(right, left)
            defect = np.linalg.norm(full.matrix - glued.matrix)
            assert defect <= 1e-10 * np.linalg.norm(full.matrix)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            L.propagate([])


class TestCheckCPTP:
    def test_identity(self):
        rep = L.check_cptp(O.identity_superop(2))
        assert rep.trace_preserving_defect <= 1e-14
        assert rep.choi_min_eig >= -1e-14

    def test_propagated_maps_are_cptp(self, rng):
        for _ in range(10):
            gen = L.to_superop(random_lindbladian(rng, 3))
            prop = L.propagate([L.Segment(gen, 1.5)])
            rep = L.check_cptp(prop)
            assert rep.trace_preserving_defect <= 1e-8
            assert rep.choi_min_eig >= -1e-8

    def test_non_tp_map(self):
        rep = L.check_cptp(O.SuperOp(0.5 * np.eye(4, dtype=complex)))
        assert rep.trace_preserving_defect == pytest.approx(1.0, abs=1e-12)

    def test_states_stay_unit_trace(self, rng):
        gen = L.to_superop(random_lindbladian(rng, 2))
        prop = L.propagate([L.Segment(gen, 2.0)])
        for _ in range(20):
            rho = sample_state(rng, FULL_RANK_HS, 2)
            assert np.trace(O.apply(prop, rho.matrix)).real == pytest.approx(
                1.0, abs=1e-9)
