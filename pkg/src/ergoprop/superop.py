"""Super-operators on D x D matrices, stored as D^2 x D^2 matrices.

Column-stacking vectorization throughout.  The module provides the projective
action on states, completely-positive representations (Kraus, Choi), strict
positivity certificates, the contraction coefficient of the projective metric,
the induced 1->1 norm, and dominant (Perron-Frobenius) eigenmatrices.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, KernelHit, UnsupportedDim
from .matkernel import as_matrix, dagger, kron, trace_norm, unvec, vec
from .states import (
    FULL_RANK_HS,
    HAAR_PURE,
    DensityMatrix,
    hilbert_d,
    make_state,
    maximally_mixed,
    pure_state,
    sample_state,
)
from .tolerances import DEFAULT, Tolerances, rank_cutoff


@dataclass(frozen=True)
class SuperOp:
    """Linear map on D x D matrices via its action on column-stacked vectors."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        d = math.isqrt(m.shape[0])
        if d * d != m.shape[0]:
            raise DimensionMismatch(f"matrix side {m.shape[0]} is not a perfect square")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])


def identity_superop(dim: int) -> SuperOp:
    return SuperOp(np.eye(dim * dim, dtype=np.complex128))


def zero_superop(dim: int) -> SuperOp:
    return SuperOp(np.zeros((dim * dim, dim * dim), dtype=np.complex128))


def apply(phi: SuperOp, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[0] != phi.dim:
        raise DimensionMismatch(f"map acts on {phi.dim}x{phi.dim}, got {x.shape}")
    return unvec(phi.matrix @ vec(x), phi.dim)


def adjoint(phi: SuperOp) -> SuperOp:
    """Adjoint with respect to the Hilbert-Schmidt inner product."""
    return SuperOp(dagger(phi.matrix))


def compose(phi: SuperOp, psi: SuperOp) -> SuperOp:
    """phi after psi."""
    if phi.dim != psi.dim:
        raise DimensionMismatch("composed maps act on different dimensions")
    return SuperOp(phi.matrix @ psi.matrix)


def scale(phi: SuperOp, factor: complex) -> SuperOp:
    return SuperOp(phi.matrix * factor)


def projective_apply(phi: SuperOp, rho: DensityMatrix,
                     tol: Tolerances = DEFAULT) -> DensityMatrix:
    """phi(rho) / tr(phi(rho)) as a validated state.

    Raises KernelHit when the trace is at or below the kernel tolerance,
    signalling that the map annihilates this state.
    """
    img = apply(phi, rho.matrix)
    tr = float(np.trace(img).real)
    if tr <= tol.kernel_trace:
        raise KernelHit(f"trace of image is {tr!r}")
    return make_state(img / tr, tol)


def trace_pairing(phi: SuperOp, rho) -> float:
    """tr(phi(rho)); for positive maps on states this is real."""
    return float(np.trace(apply(phi, rho)).real)


def from_kraus(ks) -> SuperOp:
    """Map X -> sum_i K_i X K_i^dag."""
    mats = [as_matrix(k) for k in ks]
    if not mats:
        raise DimensionMismatch("empty Kraus list")
    d = mats[0].shape[0]
    total = np.zeros((d * d, d * d), dtype=np.complex128)
    for k in mats:
        if k.shape[0] != d:
            raise DimensionMismatch("Kraus operators of unequal dimension")
        total += kron(np.conj(k), k)
    return SuperOp(total)


@dataclass(frozen=True)
class ChoiMatrix:
    matrix: np.ndarray
    min_eigenvalue: float


def to_choi(phi: SuperOp) -> ChoiMatrix:
    """J = (phi otimes id)(|Omega><Omega|) with |Omega> = sum_i |ii> unnormalized."""
    d = phi.dim
    j = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, k] = 1.0
            j += np.kron(apply(phi, e), e)
    herm = (j + dagger(j)) / 2.0
    w, _ = _kernels.eigh(herm)
    return ChoiMatrix(matrix=j, min_eigenvalue=float(w[0]))


# ---------------------------------------------------------------------------
# strict positivity
# ---------------------------------------------------------------------------

CERTIFIED_STRICT = "strict"
CERTIFIED_NOT_STRICT = "not_strict"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class PositivityCertificate:
    verdict: str
    choi_min_eig: float
    witness: DensityMatrix | None = None
    witness_value: float | None = None

    @property
    def is_strict(self) -> bool:
        return self.verdict == CERTIFIED_STRICT


def _min_eig_of_image(phi: SuperOp, psi: np.ndarray):
    img = apply(phi, np.outer(psi, psi.conj()))
    w, v = _kernels.eigh((img + dagger(img)) / 2.0)
    return float(w[0]), v[:, 0]


def strict_positivity_certificate(phi: SuperOp, rng: np.random.Generator | None = None,
                                  restarts: int = 50, steps: int = 120,
                                  tol: Tolerances = DEFAULT) -> PositivityCertificate:
    """Three-valued certificate of the positivity-improving property.

    A Choi matrix with smallest eigenvalue above the threshold certifies the
    map strict (phi(rho) >= lambda_min(J) I for every state).  Otherwise a
    projected-gradient search minimizes the smallest eigenvalue of
    phi(|psi><psi|) over pure states; finding a value at the witness
    threshold refutes strictness with that witness.  Neither succeeding
    yields "unknown".
    """
    d = phi.dim
    choi_min = to_choi(phi).min_eigenvalue
    if choi_min > tol.choi_strict:
        return PositivityCertificate(CERTIFIED_STRICT, choi_min)
    rng = rng if rng is not None else np.random.default_rng(0)
    best_val = math.inf
    best_psi = None
    for _ in range(restarts):
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        val, u = _min_eig_of_image(phi, psi)
        step = 0.2
        for _ in range(steps):
            if val <= tol.witness_value:
                break
            # gradient of psi^dag A psi with A = herm(phi^dag(u u^dag))
            a = apply(adjoint(phi), np.outer(u, u.conj()))
            a = (a + dagger(a)) / 2.0
            grad = 2.0 * (a @ psi)
            grad -= psi * np.vdot(psi, grad)  # tangent projection
            gn = np.linalg.norm(grad)
            if gn < 1e-15:
                break
            cand = psi - step * grad / gn
            cand /= np.linalg.norm(cand)
            cval, cu = _min_eig_of_image(phi, cand)
            if cval < val:
                psi, val, u = cand, cval, cu
                step = min(step * 1.5, 0.5)
            else:
                step *= 0.5
                if step < 1e-8:
                    break
        if val < best_val:
            best_val, best_psi = val, psi
        if best_val <= tol.witness_value:
            break
    if best_val <= tol.witness_value:
        return PositivityCertificate(CERTIFIED_NOT_STRICT, choi_min,
                                     witness=pure_state(best_psi),
                                     witness_value=best_val)
    return PositivityCertificate(UNKNOWN, choi_min, witness_value=best_val)


# ---------------------------------------------------------------------------
# contraction coefficient
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sampled:
    """Random pure/full-rank pairs refined by coordinate ascent; lower bound."""

    n_pairs: int = 64
    n_ascent: int = 32


@dataclass(frozen=True)
class ExactGridD2:
    """Exhaustive Bloch-sphere pure-pair grid with local refinement (D=2 only).

    The supremum over pure pairs equals the supremum over all pairs: images
    of mixtures are projective mixtures of pure images and the projective
    distance is quasiconvex along those segments.  Validated against
    full-rank samples in the tests.
    """

    resolution: int = 24


@dataclass(frozen=True)
class CEstimate:
    value: float
    lower_bound: bool
    error_bar: float | None = None
    detail: dict = field(default_factory=dict)


def _probe_states(rng: np.random.Generator, dim: int, n_pairs: int):
    kinds = (HAAR_PURE, FULL_RANK_HS)
    pairs = []
    for i in range(n_pairs):
        ka = kinds[i % 2]
        kb = kinds[(i // 2) % 2]
        pairs.append((sample_state(rng, ka, dim), sample_state(rng, kb, dim)))
    return pairs


def _image_distance(phi: SuperOp, a: DensityMatrix, b: DensityMatrix,
                    tol: Tolerances) -> float:
    return hilbert_d(projective_apply(phi, a, tol), projective_apply(phi, b, tol), tol)


def _mix_towards(rho: DensityMatrix, other: DensityMatrix, eps: float) -> DensityMatrix:
    return make_state((1.0 - eps) * rho.matrix + eps * other.matrix)


def _sampled_c(phi: SuperOp, mode: Sampled, rng: np.random.Generator,
               tol: Tolerances) -> CEstimate:
    d = phi.dim
    pairs = _probe_states(rng, d, mode.n_pairs)
    best = -1.0
    best_pair = None
    for a, b in pairs:
        val = _image_distance(phi, a, b, tol)
        if val > best:
            best, best_pair = val, (a, b)
        if best >= 1.0:
            break
    if best < 1.0 and best_pair is not None:
        a, b = best_pair
        eps = 0.5
        for k in range(mode.n_ascent):
            probe = sample_state(rng, HAAR_PURE, d)
            if k % 2 == 0:
                cand = (_mix_towards(a, probe, eps), b)
            else:
                cand = (a, _mix_towards(b, probe, eps))
            val = _image_distance(phi, cand[0], cand[1], tol)
            if val > best:
                best, (a, b) = val, cand
            else:
                eps = max(eps * 0.8, 0.02)
            if best >= 1.0:
                break
    return CEstimate(value=max(best, 0.0), lower_bound=True,
                     detail={"mode": "sampled", "n_pairs": mode.n_pairs,
                             "n_ascent": mode.n_ascent})


def bloch_affine(phi: SuperOp):
    """Affine representation of the qubit projective action on Bloch vectors.

    Returns (m, b, w, w0) with image(r) = (b + m r) / (w0 + w . r).
    """
    if phi.dim != 2:
        raise UnsupportedDim("Bloch representation requires D = 2")
    paulis = [np.array([[0, 1], [1, 0]], dtype=np.complex128),
              np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
              np.array([[1, 0], [0, -1]], dtype=np.complex128)]
    eye = np.eye(2, dtype=np.complex128)
    img_i = apply(phi, eye)
    w0 = float(np.trace(img_i).real)
    b = np.array([float(np.trace(p @ img_i).real) for p in paulis])
    m = np.zeros((3, 3))
    w = np.zeros(3)
    for k, pk in enumerate(paulis):
        img = apply(phi, pk)
        w[k] = float(np.trace(img).real)
        for j, pj in enumerate(paulis):
            m[j, k] = float(np.trace(pj @ img).real)
    return m, b, w, w0


def _bloch_images(m, b, w, w0, thetas, phis):
    st = np.sin(thetas)
    r = np.stack([st * np.cos(phis), st * np.sin(phis), np.cos(thetas)], axis=1)
    num = b[None, :] + r @ m.T
    den = w0 + r @ w
    return num / den[:, None]


def _exact_grid_c(phi: SuperOp, mode: ExactGridD2, tol: Tolerances) -> CEstimate:
    if phi.dim != 2:
        raise UnsupportedDim("exact grid mode requires D = 2")
    n = max(mode.resolution, 4)
    m, b, w, w0 = bloch_affine(phi)
    cutoff = rank_cutoff(2, tol)

    thetas = np.repeat(np.linspace(0.0, np.pi, n + 1), 2 * n)
    phis = np.tile(np.linspace(0.0, 2.0 * np.pi, 2 * n, endpoint=False), n + 1)
    vs = _bloch_images(m, b, w, w0, thetas, phis)
    best, bi, bj = _kernels.bloch_pair_sup(vs, cutoff)
    ang = np.array([[thetas[bi], phis[bi]], [thetas[bj], phis[bj]]])

    span = np.pi / n
    history = [best]
    for _ in range(4):
        offsets = np.linspace(-span, span, 13)
        ths, phs = [], []
        for center in ang:
            tg, pg = np.meshgrid(center[0] + offsets, center[1] + offsets, indexing="ij")
            ths.append(tg.ravel())
            phs.append(pg.ravel())
        ths = np.concatenate(ths)
        phs = np.concatenate(phs)
        lvs = _bloch_images(m, b, w, w0, ths, phs)
        val, i, j = _kernels.bloch_pair_sup(lvs, cutoff)
        if val > best:
            best = val
            ang = np.array([[ths[i], phs[i]], [ths[j], phs[j]]])
        history.append(best)
        span /= 6.0
        if history[-1] - history[-2] <= max(1e-12, 1e-9 * best):
            break
    err = (history[-1] - history[-2]) + 1e-12
    return CEstimate(value=best, lower_bound=False, error_bar=err,
                     detail={"mode": "exact_grid_d2", "resolution": n})


def contraction_coeff(phi: SuperOp, mode=Sampled(),
                      rng: np.random.Generator | None = None,
                      tol: Tolerances = DEFAULT) -> CEstimate:
    """Supremum of d between projective images over pairs of states.

    Sampled mode returns a certified lower bound; the D=2 exact grid resolves
    the supremum to grid accuracy with an error estimate.
    """
    if isinstance(mode, Sampled):
        rng = rng if rng is not None else np.random.default_rng(0)
        return _sampled_c(phi, mode, rng, tol)
    if isinstance(mode, ExactGridD2):
        return _exact_grid_c(phi, mode, tol)
    raise TypeError(f"unknown contraction mode {mode!r}")


# ---------------------------------------------------------------------------
# induced 1->1 norm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Norm1to1Result:
    value: float
    spread: float
    n_restarts: int


def norm_1to1(phi: SuperOp, n_restarts: int = 16,
              rng: np.random.Generator | None = None) -> Norm1to1Result:
    """Lower bound on sup{||phi(X)||_1 : ||X||_1 <= 1} via rank-one ascent.

    Extreme points of the trace-norm ball are u v^dag, so the search
    alternates between the polar factor of the image and the top singular
    pair of the pulled-back objective.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    d = phi.dim
    phi_adj = adjoint(phi)
    finals = []
    for _ in range(n_restarts):
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        val = 0.0
        for _ in range(60):
            img = apply(phi, np.outer(u, v.conj()))
            uu, sv, vh = np.linalg.svd(img)
            new_val = float(np.sum(sv))
            w = uu @ vh
            g = dagger(apply(phi_adj, w))
            gu, gs, gvh = np.linalg.svd(g)
            u = gvh[0].conj()
            v = gu[:, 0]
            if abs(new_val - val) < 1e-13:
                val = new_val
                break
            val = new_val
        finals.append(val)
    return Norm1to1Result(value=float(np.max(finals)),
                          spread=float(np.max(finals) - np.min(finals)),
                          n_restarts=n_restarts)


# ---------------------------------------------------------------------------
# Perron-Frobenius eigenmatrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PFResult:
    R: DensityMatrix
    L: DensityMatrix
    spectral_radius: float
    converged: bool
    residual: float


def _power_iterate(phi: SuperOp, tol: Tolerances):
    rho = maximally_mixed(phi.dim)
    for it in range(tol.pf_max_iter):
        nxt = projective_apply(phi, rho, tol)
        if hilbert_d(rho, nxt, tol) < tol.pf_step:
            return nxt, True
        rho = nxt
    return rho, False


def pf_eigenmatrices(phi: SuperOp, rng: np.random.Generator | None = None,
                     tol: Tolerances = DEFAULT) -> PFResult:
    """Dominant right/left eigenmatrices normalized to unit trace.

    Power iteration of the projective action from the maximally mixed state;
    the spectral radius is recovered as tr(phi(R)).  A stalled iteration on
    a map whose sampled contraction coefficient is consistent with 1 returns
    the degenerate pair R = L = I/D with converged=False.
    """
    r, ok_r = _power_iterate(phi, tol)
    l, ok_l = _power_iterate(adjoint(phi), tol)
    converged = ok_r and ok_l
    if not converged:
        est = contraction_coeff(phi, Sampled(32, 8), rng, tol)
        if est.value >= 1.0 - tol.pf_degenerate_c:
            mixed = maximally_mixed(phi.dim)
            lam = trace_pairing(phi, mixed.matrix)
            res = trace_norm(apply(phi, mixed.matrix) - lam * mixed.matrix)
            return PFResult(R=mixed, L=mixed, spectral_radius=lam,
                            converged=False, residual=res)
    lam = trace_pairing(phi, r.matrix)
    res_r = trace_norm(apply(phi, r.matrix) - lam * r.matrix)
    res_l = trace_norm(apply(adjoint(phi), l.matrix) - lam * l.matrix)
    return PFResult(R=r, L=l, spectral_radius=lam, converged=converged,
                    residual=max(res_r, res_l))


# ---------------------------------------------------------------------------
# stock maps and samplers
# ---------------------------------------------------------------------------


def depolarizing(dim: int, p: float) -> SuperOp:
    """X -> (1-p) X + p tr(X) I/D."""
    eye_vec = vec(np.eye(dim, dtype=np.complex128))
    mat = (1.0 - p) * np.eye(dim * dim, dtype=np.complex128)
    mat += (p / dim) * np.outer(eye_vec, eye_vec.conj())
    return SuperOp(mat)


def unitary_conjugation(u) -> SuperOp:
    u = as_matrix(u)
    return SuperOp(kron(np.conj(u), u))


def transpose_map(dim: int) -> SuperOp:
    mat = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            mat[i * dim + j, j * dim + i] = 1.0
    return SuperOp(mat)


def random_cptp(rng: np.random.Generator, dim: int, n_kraus: int = 3) -> SuperOp:
    """Random CPTP map: Ginibre Kraus operators whitened to trace preservation."""
    gs = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
          for _ in range(n_kraus)]
    s = sum(dagger(g) @ g for g in gs)
    w, v = _kernels.eigh(s)
    isq = (v * (1.0 / np.sqrt(w))) @ dagger(v)
    return from_kraus([g @ isq for g in gs])


def random_strictly_positive(rng: np.random.Generator, dim: int,
                             n_kraus: int = 3, mix: float = 0.05) -> SuperOp:
    """Random CPTP map mixed with a depolarizing floor; full-rank Choi by construction."""
    base = random_cptp(rng, dim, n_kraus)
    dep = depolarizing(dim, 1.0)
    return SuperOp((1.0 - mix) * base.matrix + mix * dep.matrix)
