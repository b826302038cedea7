"""Backend parity: the compiled extension and the numpy fallback must agree."""

import numpy as np
import pytest

from ergoprop._kernels import fallback

try:
    from ergoprop._kernels import _core as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled extension not built")

from conftest import random_complex, random_hermitian


def random_state_matrix(rng, n):
    g = random_complex(rng, n)
    a = g @ g.conj().T
    return a / np.trace(a).real


@needs_compiled
class TestParity:
    def test_eigh(self, rng):
        for n in (2, 3, 6, 16, 36):
            a = random_hermitian(rng, n)
            w1, v1 = compiled.eigh(a)
            w2, v2 = fallback.eigh(a)
            assert np.allclose(w1, w2, atol=1e-11 * max(1, np.linalg.norm(a)))
            for w, v in ((w1, v1), (w2, v2)):
                assert np.linalg.norm(a - (v * w) @ v.conj().T) <= 1e-10 * np.linalg.norm(a)
                assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-11

    def test_expm(self, rng):
        for n in (2, 4, 9, 36):
            a = random_complex(rng, n, scale=1.5)
            e1 = compiled.expm(a)
            e2 = fallback.expm(a)
            assert np.linalg.norm(e1 - e2) <= 1e-11 * np.linalg.norm(e2)

    def test_expm_large_norm(self, rng):
        a = random_complex(rng, 6, scale=8.0)
        e1 = compiled.expm(a)
        e2 = fallback.expm(a)
        assert np.linalg.norm(e1 - e2) <= 1e-10 * np.linalg.norm(e2)

    def test_pencil(self, rng):
        for n in (2, 3, 4):
            a = random_state_matrix(rng, n)
            b = random_state_matrix(rng, n)
            lo1, hi1 = compiled.pencil_minmax(a, b)
            lo2, hi2 = fallback.pencil_minmax(a, b)
            assert abs(lo1 - lo2) <= 1e-10 * max(1.0, abs(lo2))
            assert abs(hi1 - hi2) <= 1e-10 * abs(hi2)

    def test_max_pairwise(self, rng):
        mats = np.stack([random_state_matrix(rng, 3) for _ in range(12)])
        etas = np.array([np.linalg.eigvalsh(m)[0] for m in mats])
        d1 = compiled.max_pairwise_d(mats, etas, 3e-10)
        d2 = fallback.max_pairwise_d(mats, etas, 3e-10)
        assert abs(d1[0] - d2[0]) <= 1e-11
        assert d1[1:] == d2[1:]

    def test_bloch_sup(self, rng):
        vs = rng.uniform(-0.55, 0.55, size=(80, 3))
        d1 = compiled.bloch_pair_sup(vs, 2e-10)
        d2 = fallback.bloch_pair_sup(vs, 2e-10)
        assert abs(d1[0] - d2[0]) <= 1e-13
        assert d1[1:] == d2[1:]

    def test_bloch_sup_pure_handling(self):
        vs = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -0.3], [0.1, 0.0, 0.0]])
        assert compiled.bloch_pair_sup(vs, 2e-10)[0] == 1.0
        assert fallback.bloch_pair_sup(vs, 2e-10)[0] == 1.0
        same = np.tile([0.0, 0.0, 1.0], (4, 1))
        assert compiled.bloch_pair_sup(same, 2e-10)[0] == 0.0
        assert fallback.bloch_pair_sup(same, 2e-10)[0] == 0.0

    def test_bloch_q_near_coincident_precision(self, rng):
        # the stable discriminant must resolve q for states 1e-9 apart
        a = np.array([0.3, -0.2, 0.4])
        b = a + np.array([1e-9, -2e-9, 1.5e-9])
        q1 = compiled.bloch_pair_q(a, b)
        q2 = fallback.bloch_pair_q(a, b)
        d1, d2 = (1 - q1) / (1 + q1), (1 - q2) / (1 + q2)
        assert abs(d1 - d2) <= 1e-12
        assert 1e-10 <= d1 <= 1e-8
