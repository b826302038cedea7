#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times the four hot paths (Hermitian eigensolve, matrix exponential,
projective-metric pair sweep, Bloch-grid pair sweep) plus one end-to-end
estimator, and prints a speedup table.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from ergoprop._kernels import fallback

try:
    from ergoprop._kernels import _core as compiled
except ImportError:
    compiled = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def random_states(rng, k, n):
    mats = []
    for _ in range(k):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = g @ g.conj().T
        mats.append(a / np.trace(a).real)
    return np.stack(mats)


def make_cases(rng):
    herm6 = random_states(rng, 1, 6)[0]
    herm16 = random_states(rng, 1, 16)[0]
    gen16 = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    stack = random_states(rng, 48, 3)
    etas = np.array([np.linalg.eigvalsh(m)[0] for m in stack])
    bloch = rng.uniform(-0.55, 0.55, size=(1536, 3))
    cases = [
        ("eigh 6x6 (x200)", lambda k: [k.eigh(herm6) for _ in range(200)]),
        ("eigh 16x16 (x50)", lambda k: [k.eigh(herm16) for _ in range(50)]),
        ("expm 16x16 (x50)", lambda k: [k.expm(gen16) for _ in range(50)]),
        ("pairwise d, 48 states D=3", lambda k: k.max_pairwise_d(stack, etas, 3e-10)),
        ("bloch pair sweep, n=1536", lambda k: k.bloch_pair_sup(bloch, 2e-10)),
    ]
    return cases


def bench_end_to_end(backend_env):
    """One contraction-decay curve, the dominant workload of the estimators."""
    from ergoprop import asymptotics as asy
    from ergoprop.environment import GUEGinibreSampler, IIDCollision, realize
    from ergoprop.rngstream import rng_stream
    from ergoprop.superop import ExactGridD2

    model = IIDCollision(dim=2, sampler=GUEGinibreSampler(
        n_jumps=2, rate_scale=0.3, hamiltonian_scale=1.0))
    t0 = time.perf_counter()
    for seed in range(8):
        real = realize(model, seed)
        asy.contraction_along(real, [2, 4, 8, 12, 16], ExactGridD2(16),
                              rng_stream(seed, 1))
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not built; build with `pip install -e .`")
        return

    rng = np.random.default_rng(0)
    cases = make_cases(rng)
    print(f"{'kernel':<30} {'fallback':>12} {'compiled':>12} {'speedup':>9}")
    print("-" * 66)
    for name, fn in cases:
        t_fb = timeit(lambda: fn(fallback), args.repeats)
        t_c = timeit(lambda: fn(compiled), args.repeats)
        print(f"{name:<30} {t_fb * 1e3:>10.2f}ms {t_c * 1e3:>10.2f}ms "
              f"{t_fb / t_c:>8.1f}x")

    # end-to-end requires re-importing under each backend, so report the
    # active one only
    from ergoprop._kernels import BACKEND
    wall = bench_end_to_end(BACKEND)
    print("-" * 66)
    print(f"end-to-end decay curve (active backend: {BACKEND}): {wall:.2f}s")
    print("rerun with ERGOPROP_PURE=1 to time the same curve on the fallback")


if __name__ == "__main__":
    main()
