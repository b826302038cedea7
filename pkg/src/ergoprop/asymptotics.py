"""Estimators for the forward-in-time limits of random propagators.

Covers: nested-image estimation of the forward and adjoint limit states,
the asymptotic log-contraction rate (Lyapunov-type), the empirical onset
threshold of uniform exponential contraction, the rank-one limit map, error
curves of normalized propagators against it, and cocycle consistency checks.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import EnvRealization, propagator, realize
from .errors import NonContracting, NotFoundUpTo
from .matkernel import dagger, trace_norm, vec
from .rngstream import rng_stream
from .states import (
    FULL_RANK_HS,
    HAAR_PURE,
    DensityMatrix,
    make_state,
    max_pairwise_distance,
    sample_state,
)
from .statutil import linear_fit
from .superop import (
    ExactGridD2,
    Sampled,
    SuperOp,
    adjoint,
    apply,
    contraction_coeff,
    norm_1to1,
    projective_apply,
)
from .tolerances import DEFAULT, Tolerances


@dataclass
class DecayCurve:
    """Sampled (separation, value, ci_low, ci_high) series with provenance."""

    points: list
    metadata: dict = field(default_factory=dict)

    @property
    def separations(self):
        return np.array([p[0] for p in self.points])

    @property
    def values(self):
        return np.array([p[1] for p in self.points])


def default_probes(rng: np.random.Generator, dim: int, n_pure: int = 4,
                   n_full: int = 4):
    """Probe set mixing boundary (pure) and interior (full-rank) inputs."""
    probes = [sample_state(rng, HAAR_PURE, dim) for _ in range(n_pure)]
    probes += [sample_state(rng, FULL_RANK_HS, dim) for _ in range(n_full)]
    return probes


def _default_c_mode(dim: int):
    return ExactGridD2(16) if dim == 2 else Sampled(48, 16)


def c_value(phi: SuperOp, c_mode=None, rng: np.random.Generator | None = None,
            tol: Tolerances = DEFAULT) -> float:
    """Contraction-coefficient estimate with a dimension-appropriate default mode."""
    mode = c_mode if c_mode is not None else _default_c_mode(phi.dim)
    return contraction_coeff(phi, mode, rng, tol).value


# ---------------------------------------------------------------------------
# limit states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankOneLimit:
    """Estimated limit state with its nested-image diameter certificate.

    history records (horizon, diameter); when a contraction mode is supplied,
    c_history records (horizon, c_hat) with c_hat the raw contraction
    estimate of the window map, so the diameter/coefficient relation stays
    checkable downstream.
    """

    state: DensityMatrix
    diameter: float
    horizon: float
    history: tuple
    c_history: tuple = ()   # raw contraction estimates of the window maps


def _mean_state(states) -> DensityMatrix:
    mats = np.stack([s.matrix for s in states])
    return make_state(mats.mean(axis=0))


def forward_limit(real: EnvRealization, t: float, horizons, probes,
                  c_mode=None, rng: np.random.Generator | None = None,
                  tol: Tolerances = DEFAULT) -> RankOneLimit:
    """Drive probes through phi_{t-a, t} projectively for each horizon a.

    The returned state is the mean of the deepest images; the diameter is
    their max pairwise projective distance, which bounds the distance of any
    image point to the true limit.  Raises NonContracting when the deepest
    diameter has not dropped below 0.5.
    """
    horizons = sorted(float(a) for a in horizons)
    if not horizons or horizons[0] <= 0:
        raise ValueError("horizons must be positive and nonempty")
    if not probes:
        raise ValueError("need at least one probe state")
    prod = None
    prev = 0.0
    history = []
    c_hist = []
    images = []
    for a in horizons:
        seg = propagator(real, t - a, t - prev)
        prod = seg if prod is None else SuperOp(prod.matrix @ seg.matrix)
        prev = a
        images = [projective_apply(prod, p, tol) for p in probes]
        diam, _, _ = max_pairwise_distance(images, tol)
        history.append((a, diam))
        if c_mode is not None:
            c_hist.append((a, c_value(prod, c_mode, rng, tol)))
    if history[-1][1] >= 0.5:
        raise NonContracting(
            f"probe-image diameter {history[-1][1]:.3f} at horizon {horizons[-1]}")
    return RankOneLimit(state=_mean_state(images), diameter=history[-1][1],
                        horizon=horizons[-1], history=tuple(history),
                        c_history=tuple(c_hist))


def adjoint_limit(real: EnvRealization, s: float, horizons, probes,
                  c_mode=None, rng: np.random.Generator | None = None,
                  tol: Tolerances = DEFAULT) -> RankOneLimit:
    """Mirror of forward_limit using adjoint(phi_{s, s+a}) projectively."""
    horizons = sorted(float(a) for a in horizons)
    if not horizons or horizons[0] <= 0:
        raise ValueError("horizons must be positive and nonempty")
    if not probes:
        raise ValueError("need at least one probe state")
    prod = None
    prev = 0.0
    history = []
    c_hist = []
    images = []
    for a in horizons:
        seg = propagator(real, s + prev, s + a)
        prod = seg if prod is None else SuperOp(seg.matrix @ prod.matrix)
        prev = a
        adj = adjoint(prod)
        images = [projective_apply(adj, p, tol) for p in probes]
        diam, _, _ = max_pairwise_distance(images, tol)
        history.append((a, diam))
        if c_mode is not None:
            c_hist.append((a, c_value(adj, c_mode, rng, tol)))
    if history[-1][1] >= 0.5:
        raise NonContracting(
            f"probe-image diameter {history[-1][1]:.3f} at horizon {horizons[-1]}")
    return RankOneLimit(state=_mean_state(images), diameter=history[-1][1],
                        horizon=horizons[-1], history=tuple(history),
                        c_history=tuple(c_hist))


# ---------------------------------------------------------------------------
# asymptotic contraction rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateEstimate:
    """Pooled and per-seed slopes of ln c(phi_{0,n}) against n.

    log_rate <= 0 always; -inf is the sentinel for exact extinction of the
    coefficient (kappa = 0).
    """

    log_rate: float
    fit_r2: float
    per_seed: tuple


def contraction_along(real: EnvRealization, separations, c_mode=None,
                      rng: np.random.Generator | None = None,
                      tol: Tolerances = DEFAULT):
    """c-hat of phi_{0,n} at increasing integer separations (incremental products)."""
    seps = sorted(int(n) for n in separations)
    if not seps or seps[0] < 1:
        raise ValueError("separations must be positive integers")
    prod = None
    prev = 0
    out = []
    for n in seps:
        seg = propagator(real, float(prev), float(n))
        prod = seg if prod is None else SuperOp(seg.matrix @ prod.matrix)
        prev = n
        out.append(c_value(prod, c_mode, rng, tol))
    return seps, out


def _lsq_slope(xs, ys):
    _, slope, r2 = linear_fit(xs, ys)
    return slope, r2


def rate_from_curves(curves, tol: Tolerances = DEFAULT) -> RateEstimate:
    """Pooled and per-seed slopes from precomputed {seed: (ns, cs)} curves.

    Points at the extinction floor or pinned at c = 1 (pre-onset plateau)
    are excluded from fits; a seed left with fewer than two usable points
    gets the -inf sentinel slope.  Raises NonContracting when every seed
    still shows c = 1 at the deepest separation.
    """
    per_seed = []
    pooled_x = []
    pooled_y = []
    deepest_all_one = True
    for seed, (ns, cs) in curves.items():
        if cs[-1] < 1.0 - 1e-9:
            deepest_all_one = False
        usable = [(n, math.log(c)) for n, c in zip(ns, cs)
                  if tol.c_zero_floor < c < 1.0]
        if len(usable) >= 2:
            slope, _ = _lsq_slope([u[0] for u in usable], [u[1] for u in usable])
            per_seed.append((int(seed), min(slope, 0.0)))
        else:
            per_seed.append((int(seed), -math.inf))
        pooled_x.extend(u[0] for u in usable)
        pooled_y.extend(u[1] for u in usable)
    if deepest_all_one:
        raise NonContracting("all sampled coefficients are 1 at the deepest separation")
    if len(pooled_x) >= 2:
        slope, r2 = _lsq_slope(pooled_x, pooled_y)
        log_rate = min(slope, 0.0)
    else:
        log_rate, r2 = -math.inf, 1.0
    return RateEstimate(log_rate=log_rate, fit_r2=r2, per_seed=tuple(per_seed))


def estimate_log_contraction_rate(model, seeds, separations, c_mode=None,
                                  tol: Tolerances = DEFAULT,
                                  map_fn=map) -> RateEstimate:
    """Slope of ln c-hat(phi_{0,n}) versus n, pooled over seeds.

    map_fn lets callers supply an order-preserving parallel map over seeds;
    the reduction is deterministic either way.
    """
    seps = sorted(int(n) for n in separations)
    if len(seps) < 5:
        raise ValueError("need at least 5 separations")

    def worker(seed):
        real = realize(model, int(seed))
        rng = rng_stream(int(seed), 0xC0)
        return contraction_along(real, seps, c_mode, rng, tol)

    curves = {int(seed): res for seed, res in zip(seeds, map_fn(worker, seeds))}
    return rate_from_curves(curves, tol)


def empirical_threshold(real: EnvRealization, lam: float, r: float,
                        kappa_hat: float, t_max: int = 48, window: int = 16,
                        c_mode=None, rng: np.random.Generator | None = None,
                        tol: Tolerances = DEFAULT) -> int:
    """Smallest integer T >= 2 with sup_{|s|<=r} c-hat bounds mu^(t-2) on [T, T+window].

    mu = lam kappa_hat + (1 - lam).  Only finitely many t are checked, and
    c-hat is a lower bound on the true coefficient, so the result certifies
    the tested window rather than the untestable all-t statement.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    if not kappa_hat < 1.0:
        raise ValueError("kappa_hat must be below 1")
    mu = lam * max(kappa_hat, 0.0) + (1.0 - lam)
    s_vals = list(range(-math.ceil(r), math.ceil(r) + 1))
    t_top = t_max + window
    ok = {}
    fwd = {s: (None, s) for s in s_vals}   # (product, right edge)
    bwd = {s: (None, s) for s in s_vals}   # (product, left edge)
    for t in range(1, t_top + 1):
        worst = 0.0
        for s in s_vals:
            prod, edge = fwd[s]
            seg = propagator(real, float(edge), float(s + t))
            prod = seg if prod is None else SuperOp(seg.matrix @ prod.matrix)
            fwd[s] = (prod, s + t)
            worst = max(worst, c_value(prod, c_mode, rng, tol))
            prod, edge = bwd[s]
            seg = propagator(real, float(s - t), float(edge))
            prod = seg if prod is None else SuperOp(prod.matrix @ seg.matrix)
            bwd[s] = (prod, s - t)
            worst = max(worst, c_value(prod, c_mode, rng, tol))
        if t >= 2:
            ok[t] = worst <= mu ** (t - 2)
    for t_start in range(2, t_max + 1):
        if all(ok[t] for t in range(t_start, t_start + window + 1) if t in ok):
            return t_start
    raise NotFoundUpTo(t_max)


# ---------------------------------------------------------------------------
# rank-one limit map
# ---------------------------------------------------------------------------


def rank_one_map(weight: DensityMatrix, target: DensityMatrix) -> SuperOp:
    """The map X -> tr(weight X) target; its matrix has rank one."""
    w = vec(dagger(weight.matrix))
    return SuperOp(np.outer(vec(target.matrix), np.conj(w)))


@dataclass(frozen=True)
class StateSup:
    """Error as a supremum over sampled states of the trace-norm difference."""

    n_states: int = 32


@dataclass(frozen=True)
class Norm1to1Mode:
    """Error as the induced 1->1 norm of the difference map."""

    n_restarts: int = 8


def normalization_of(phi: SuperOp) -> float:
    """tr(phi^dag(I)), the scalar normalizing the propagator."""
    eye = np.eye(phi.dim, dtype=np.complex128)
    return float(np.trace(apply(adjoint(phi), eye)).real)


def rank_one_error_curve(real: EnvRealization, s: float, t_grid, mode,
                         horizons, probes=None, c_mode=None,
                         rng: np.random.Generator | None = None,
                         tol: Tolerances = DEFAULT) -> DecayCurve:
    """Error of the normalized propagator against the rank-one limit map.

    For each t: phi_{s,t} / tr(phi^dag_{s,t}(I)) is compared with
    X -> tr(Z'_s X) Z_t, where both limit states are estimated from nested
    images at the given horizons.  Per-point metadata records the
    contraction estimate and the limit-state diameters, from which the
    reported slack is built.
    """
    rng = rng if rng is not None else np.random.default_rng(1)
    dim = real.model.dim
    if probes is None:
        probes = default_probes(rng, dim)
    t_grid = sorted(float(t) for t in t_grid)
    if t_grid[0] <= s:
        raise ValueError("t grid must lie beyond s")
    zp = adjoint_limit(real, s, horizons, probes, tol=tol)
    rows = []
    points = []
    for t in t_grid:
        zt = forward_limit(real, t, horizons, probes, tol=tol)
        phi = propagator(real, s, t)
        denom = normalization_of(phi)
        xi = rank_one_map(zp.state, zt.state)
        diff = SuperOp(phi.matrix / denom - xi.matrix)
        if isinstance(mode, StateSup):
            err = 0.0
            test_states = list(probes)
            test_states += [sample_state(rng, FULL_RANK_HS if i % 2 else HAAR_PURE, dim)
                            for i in range(mode.n_states)]
            for rho in test_states:
                err = max(err, trace_norm(apply(diff, rho.matrix)))
        elif isinstance(mode, Norm1to1Mode):
            err = norm_1to1(diff, n_restarts=mode.n_restarts, rng=rng).value
        else:
            raise TypeError(f"unknown error mode {mode!r}")
        c_hat = c_value(phi, c_mode, rng, tol)
        slack = 2.0 * (zt.diameter + zp.diameter) + 1e-9
        rows.append({"separation": t - s, "error": err, "c_hat": c_hat,
                     "slack": slack, "diam_target": zt.diameter,
                     "diam_weight": zp.diameter})
        points.append((t - s, err, err, err))
    meta = {"estimator": f"rank_one_error[{type(mode).__name__}]",
            "rows": rows, "seed": real.seed}
    return DecayCurve(points=points, metadata=meta)


# ---------------------------------------------------------------------------
# cocycle checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleReport:
    rows: tuple          # (time, residual, bound, ok)
    max_residual: float
    all_ok: bool


def cocycle_check(real: EnvRealization, s_grid, t: float, estimates: dict,
                  tol: Tolerances = DEFAULT) -> CocycleReport:
    """Residuals of the forward cocycle identity: the limit state pushed
    forward from s should reproduce the limit state at t.

    estimates maps each time in s_grid plus t to a RankOneLimit.  A row
    passes when the trace-norm residual is within 5x the summed diameters
    plus a round-off floor (the diameters collapse to exactly zero once the
    images coincide to the last bit, while the residual keeps one ulp of
    reconstruction noise).
    """
    zt = estimates[t]
    rows = []
    for s in s_grid:
        zs = estimates[s]
        phi = propagator(real, float(s), float(t))
        pushed = projective_apply(phi, zs.state, tol)
        residual = trace_norm(pushed.matrix - zt.state.matrix)
        bound = 5.0 * (zs.diameter + zt.diameter) + 1e-12
        rows.append((float(s), residual, bound, residual <= bound))
    max_res = max(r[1] for r in rows)
    return CocycleReport(rows=tuple(rows), max_residual=max_res,
                         all_ok=all(r[3] for r in rows))


def adjoint_cocycle_check(real: EnvRealization, t_grid, s: float,
                          estimates: dict, tol: Tolerances = DEFAULT) -> CocycleReport:
    """Adjoint mirror: the adjoint limit at t pulled back to s should match."""
    zs = estimates[s]
    rows = []
    for t in t_grid:
        zt = estimates[t]
        phi = propagator(real, float(s), float(t))
        pulled = projective_apply(adjoint(phi), zt.state, tol)
        residual = trace_norm(pulled.matrix - zs.state.matrix)
        bound = 5.0 * (zs.diameter + zt.diameter) + 1e-12
        rows.append((float(t), residual, bound, residual <= bound))
    max_res = max(r[1] for r in rows)
    return CocycleReport(rows=tuple(rows), max_residual=max_res,
                         all_ok=all(r[3] for r in rows))
