"""Kernel backend selection.

The compiled extension carries the hot inner loops: the projective-metric
pair kernels (where it is 10-50x faster than vectorized numpy) and the
cyclic-Jacobi eigensolver for state-sized matrices (n <= 6).  Eigensolves of
super-operator-sized matrices and matrix exponentials go through LAPACK
paths, which win at those sizes.  Set ``ERGOPROP_PURE=1`` to force the pure
numpy/scipy fallback everywhere; the active choice is exported as
``BACKEND``.
"""

import os

from . import fallback

if os.environ.get("ERGOPROP_PURE"):
    _core = None
else:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

expm = fallback.expm

if _core is None:
    BACKEND = "fallback"
    eigh = fallback.eigh
    pencil_minmax = fallback.pencil_minmax
    max_pairwise_d = fallback.max_pairwise_d
    bloch_pair_sup = fallback.bloch_pair_sup
    bloch_pair_q = fallback.bloch_pair_q
else:
    BACKEND = "compiled"
    _JACOBI_MAX = 6

    def eigh(a):
        if a.shape[0] <= _JACOBI_MAX:
            return _core.eigh(a)
        return fallback.eigh(a)

    pencil_minmax = _core.pencil_minmax
    max_pairwise_d = _core.max_pairwise_d
    bloch_pair_sup = _core.bloch_pair_sup
    bloch_pair_q = _core.bloch_pair_q
