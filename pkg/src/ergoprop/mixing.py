"""Mixing coefficients and decay of expectations over random environments.

The dependence coefficients of the full propagator process are suprema over
infinite sigma-algebras and are not computable; this module provides the
three honest substitutes, each labelled: exact coefficients on finite joint
pmfs, exact total-variation surrogates for the finite modulating chain, and
sampled correlation lower bounds for functionals of the propagators.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import c_value
from .environment import propagator, realize, stationary_distribution
from .errors import InvalidChain, TooLarge
from .matkernel import matrix_exp, trace_norm
from .rngstream import derive_seeds, rng_stream
from .statutil import bootstrap_mean_ci, linear_fit
from .superop import SuperOp, apply
from .tolerances import DEFAULT, Tolerances

ENUMERATION_BOUND = 12


@dataclass(frozen=True)
class FiniteJointPMF:
    """Joint law of two finite random variables as an (a, b) table."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2:
            raise ValueError("pmf table must be two-dimensional")
        if np.any(t < -1e-15):
            raise ValueError("pmf entries must be nonnegative")
        t = np.clip(t, 0.0, None)
        if abs(t.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {t.sum()!r}, not 1")
        object.__setattr__(self, "table", t)

    @property
    def shape(self):
        return self.table.shape

    def transpose(self) -> "FiniteJointPMF":
        return FiniteJointPMF(self.table.T.copy())


@dataclass(frozen=True)
class MixingCoeffs:
    rho: float      # maximal correlation
    psi: float      # multiplicative deviation over event pairs
    phi_fwd: float  # conditional-probability deviation, rows conditioning


def _subset_masks(n: int) -> np.ndarray:
    """All 2^n inclusion masks as a (2^n, n) boolean array."""
    masks = np.zeros((1 << n, n), dtype=bool)
    for s in range(1 << n):
        for i in range(n):
            masks[s, i] = bool(s >> i & 1)
    return masks


def mixing_coeffs_finite(pmf: FiniteJointPMF) -> MixingCoeffs:
    """Exact dependence coefficients of a finite joint pmf.

    psi and phi come from exhaustive enumeration over all event pairs of the
    two marginal sigma-algebras; rho is the second singular value of the
    marginal-normalized joint table (the maximal-correlation
    characterization on finite spaces).
    """
    a, b = pmf.shape
    if a > ENUMERATION_BOUND or b > ENUMERATION_BOUND:
        raise TooLarge(f"support {a}x{b} exceeds the enumeration bound")
    table = pmf.table
    row = table.sum(axis=1)
    col = table.sum(axis=0)

    # rho: second singular value of diag(row)^-1/2 table diag(col)^-1/2 on support
    rs = row > 0
    cs = col > 0
    q = table[np.ix_(rs, cs)] / np.sqrt(np.outer(row[rs], col[cs]))
    sv = np.linalg.svd(q, compute_uv=False)
    rho = float(sv[1]) if sv.size > 1 else 0.0
    rho = min(max(rho, 0.0), 1.0)

    masks_a = _subset_masks(a)
    masks_b = _subset_masks(b)
    pa = masks_a @ row                    # (2^a,)
    pb = masks_b @ col                    # (2^b,)
    joint = masks_a @ table @ masks_b.T   # (2^a, 2^b)
    va = pa > 0
    vb = pb > 0
    ratio = joint[np.ix_(va, vb)] / np.outer(pa[va], pb[vb])
    psi = float(np.max(np.abs(1.0 - ratio))) if ratio.size else 0.0
    cond = joint[np.ix_(va, vb)] / pa[va][:, None]
    phi = float(np.max(np.abs(cond - pb[vb][None, :]))) if cond.size else 0.0
    return MixingCoeffs(rho=rho, psi=psi, phi_fwd=min(phi, 1.0))


@dataclass(frozen=True)
class CovarianceBoundReport:
    cov: float
    rho_bound: float
    psi_bound: float
    phi_bound: float
    ok: bool


def covariance_bound_check(pmf: FiniteJointPMF, f, g,
                           slack: float = 1e-12) -> CovarianceBoundReport:
    """Verify |cov(f(X), g(Y))| against the three coefficient bounds.

    f and g are real tables over the two marginals.  Bounds: rho |f|_2 |g|_2,
    psi |f|_1 |g|_1, and 2 phi |f|_1 |g|_inf.
    """
    a, b = pmf.shape
    if a > ENUMERATION_BOUND or b > ENUMERATION_BOUND:
        raise TooLarge(f"support {a}x{b} exceeds the enumeration bound")
    f = np.asarray(f, dtype=float).reshape(a)
    g = np.asarray(g, dtype=float).reshape(b)
    table = pmf.table
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    mean_f = float(row @ f)
    mean_g = float(col @ g)
    cov = float(f @ table @ g) - mean_f * mean_g
    coeffs = mixing_coeffs_finite(pmf)
    l2_f = math.sqrt(float(row @ f ** 2))
    l2_g = math.sqrt(float(col @ g ** 2))
    l1_f = float(row @ np.abs(f))
    l1_g = float(col @ np.abs(g))
    linf_g = float(np.max(np.abs(g)))
    rho_bound = coeffs.rho * l2_f * l2_g
    psi_bound = coeffs.psi * l1_f * l1_g
    phi_bound = 2.0 * coeffs.phi_fwd * l1_f * linf_g
    ok = (abs(cov) <= rho_bound + slack and abs(cov) <= psi_bound + slack
          and abs(cov) <= phi_bound + slack)
    return CovarianceBoundReport(cov=cov, rho_bound=rho_bound,
                                 psi_bound=psi_bound, phi_bound=phi_bound, ok=ok)


# ---------------------------------------------------------------------------
# decay of expectations
# ---------------------------------------------------------------------------


@dataclass
class MixingCurve:
    """Points (n, mean, ci_low, ci_high, n_samples) plus fitted decay families."""

    points: list
    fit: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def ns(self):
        return np.array([p[0] for p in self.points])

    @property
    def means(self):
        return np.array([p[1] for p in self.points])


def _fit_decay(ns, means, floor: float):
    usable = [(n, m) for n, m in zip(ns, means) if m > floor]
    out = {}
    if len(usable) >= 3:
        xs = np.array([u[0] for u in usable], dtype=float)
        ys = np.log([u[1] for u in usable])
        b0, rate, r2 = linear_fit(xs, ys)
        out["exponential"] = {"log_prefactor": b0, "rate": rate, "r2": r2}
        b0p, power, r2p = linear_fit(np.log(xs), ys)
        out["power_law"] = {"log_prefactor": b0p, "power": power, "r2": r2p}
    return out


def expectation_decay_curve(model, n_grid, n_seeds: int, c_mode=None,
                            master_seed: int = 0, tol: Tolerances = DEFAULT,
                            map_fn=map) -> MixingCurve:
    """Monte Carlo mean of c-hat(phi_{0,n}) with bootstrap CIs and decay fits."""
    ns = sorted(int(n) for n in n_grid)
    seeds = derive_seeds(master_seed, n_seeds)

    def worker(seed):
        real = realize(model, int(seed))
        rng = rng_stream(int(seed), 0xDECA)
        prod = None
        prev = 0
        row = np.empty(len(ns))
        for j, n in enumerate(ns):
            seg = propagator(real, float(prev), float(n))
            prod = seg if prod is None else SuperOp(seg.matrix @ prod.matrix)
            prev = n
            row[j] = c_value(prod, c_mode, rng, tol)
        return row

    samples = np.stack(list(map_fn(worker, seeds)))
    points = []
    for j, n in enumerate(ns):
        mean, lo, hi, _ = bootstrap_mean_ci(samples[:, j])
        points.append((n, mean, lo, hi, n_seeds))
    fit = _fit_decay(ns, [p[1] for p in points], tol.c_zero_floor)
    meta = {"estimator": "expectation_decay", "n_seeds": n_seeds,
            "master_seed": master_seed}
    return MixingCurve(points=points, fit=fit, metadata=meta)


def modulating_chain_phi_mixing(q, n_grid) -> list:
    """Exact one-step conditional-probability surrogate for the modulating chain.

    Returns [(n, max_i TV(P^n(i, .), pi))] with P = exp(Q); exact for the
    sigma-algebras generated by single chain coordinates.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise InvalidChain("rate matrix must be square")
    off = q - np.diag(np.diag(q))
    if np.any(off < -1e-12):
        raise InvalidChain("off-diagonal rates must be nonnegative")
    if np.max(np.abs(q.sum(axis=1))) > 1e-10:
        raise InvalidChain("rate-matrix rows must sum to zero")
    pi = stationary_distribution(q)
    step = matrix_exp(q.astype(np.complex128)).real
    ns = sorted(int(n) for n in n_grid)
    out = []
    power = np.eye(q.shape[0])
    prev = 0
    for n in ns:
        power = power @ np.linalg.matrix_power(step, n - prev)
        prev = n
        tv = 0.5 * np.max(np.sum(np.abs(power - pi[None, :]), axis=1))
        out.append((n, float(tv)))
    return out


def correlation_proxy(model, n_grid, n_seeds: int, f=None, g=None,
                      c_mode=None, master_seed: int = 0,
                      tol: Tolerances = DEFAULT, map_fn=map) -> MixingCurve:
    """Sampled |corr(f(phi_{0,1}), g(phi_{n,n+1}))|, a lower bound on the
    maximal correlation at separation n by definition.

    Degenerate (almost surely constant) functionals are reported with value
    0 and a flag rather than an error, matching the correlation convention
    for zero variance.
    """
    ns = sorted(int(n) for n in n_grid)
    if f is None:
        def f(phi, rng):
            return c_value(phi, c_mode, rng, tol)
    if g is None:
        g = f
    seeds = derive_seeds(master_seed, n_seeds)

    def worker(seed):
        real = realize(model, int(seed))
        rng = rng_stream(int(seed), 0xC088)
        x = f(propagator(real, 0.0, 1.0), rng)
        y = np.array([g(propagator(real, float(n), float(n + 1)), rng) for n in ns])
        return x, y

    results = list(map_fn(worker, seeds))
    xs = np.array([r[0] for r in results])
    ys = np.stack([r[1] for r in results])
    points = []
    flags = []
    var_x = float(xs.var(ddof=1))
    for j, n in enumerate(ns):
        var_y = float(ys[:, j].var(ddof=1))
        if var_x < 1e-24 or var_y < 1e-24:
            points.append((n, 0.0, 0.0, 0.0, n_seeds))
            flags.append((n, "degenerate_variance"))
            continue
        corr = abs(float(np.corrcoef(xs, ys[:, j])[0, 1]))
        # bootstrap over paired samples
        rng_b = rng_stream(0xB007, n)
        idx = rng_b.integers(0, n_seeds, size=(400, n_seeds))
        boots = []
        for row in idx:
            bx, by = xs[row], ys[row, j]
            if bx.var() < 1e-24 or by.var() < 1e-24:
                boots.append(0.0)
            else:
                boots.append(abs(float(np.corrcoef(bx, by)[0, 1])))
        lo, hi = np.quantile(boots, [0.025, 0.975])
        points.append((n, corr, float(lo), float(hi), n_seeds))
    meta = {"estimator": "correlation_proxy", "bound_kind": "lower",
            "flags": flags, "master_seed": master_seed}
    return MixingCurve(points=points, fit={}, metadata=meta)


# ---------------------------------------------------------------------------
# high-probability deviation checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HighProbRow:
    s: float
    t: float
    a: float
    freq_op: float
    bound_op: float
    se_op: float
    ok_op: bool
    freq_state: float
    bound_state: float
    se_state: float
    ok_state: bool


@dataclass(frozen=True)
class HighProbReport:
    rows: tuple
    all_ok: bool


def highprob_check(model, pairs, a_schedule, n_seeds: int, horizons=(8.0, 16.0, 24.0),
                   n_probe_states: int = 6, c_mode=None, master_seed: int = 0,
                   tol: Tolerances = DEFAULT, map_fn=map) -> HighProbReport:
    """Empirical deviation frequencies against the Markov bound.

    For each window (s, t): the normalized-propagator error against the
    rank-one limit map and the projected-state error against the forward
    limit state are measured per seed, along with c-hat(phi_{s,t}).  For
    each threshold a the violation frequency is compared with the Markov
    bound instantiated at the measured expectation (8 E[c]/a for the map
    error, 4 E[c]/a for the state error) plus three bootstrap standard
    errors of that bound.
    """
    from .asymptotics import (  # local import to avoid a cycle at module load
        adjoint_limit,
        forward_limit,
        normalization_of,
        rank_one_map,
    )
    from .states import FULL_RANK_HS, HAAR_PURE, sample_state

    seeds = derive_seeds(master_seed, n_seeds)
    rows = []
    for (s, t) in pairs:
        if not t - s > 1:
            raise ValueError("windows must satisfy t - s > 1")

        def worker(seed, s=s, t=t):
            real = realize(model, int(seed))
            rng = rng_stream(int(seed), 0x41)
            probes = [sample_state(rng, HAAR_PURE if k % 2 else FULL_RANK_HS,
                                   model.dim) for k in range(n_probe_states)]
            zp = adjoint_limit(real, s, horizons, probes, tol=tol)
            zt = forward_limit(real, t, horizons, probes, tol=tol)
            phi = propagator(real, float(s), float(t))
            denom = normalization_of(phi)
            xi = rank_one_map(zp.state, zt.state)
            diff = SuperOp(phi.matrix / denom - xi.matrix)
            err_op = 0.0
            err_state = 0.0
            for rho in probes:
                err_op = max(err_op, trace_norm(apply(diff, rho.matrix)))
                img = apply(phi, rho.matrix)
                img = img / float(np.trace(img).real)
                err_state = max(err_state, trace_norm(img - zt.state.matrix))
            return err_op, err_state, c_value(phi, c_mode, rng, tol)

        results = list(map_fn(worker, seeds))
        v_op = np.array([r[0] for r in results])
        v_state = np.array([r[1] for r in results])
        c_hat = np.array([r[2] for r in results])
        mean_c, _, _, se_c = bootstrap_mean_ci(c_hat)
        for a in a_schedule:
            freq_op = float(np.mean(v_op > a))
            freq_state = float(np.mean(v_state > a))
            bound_op = min(8.0 * mean_c / a, 1.0)
            bound_state = min(4.0 * mean_c / a, 1.0)
            se_op = 8.0 * se_c / a
            se_state = 4.0 * se_c / a
            rows.append(HighProbRow(
                s=float(s), t=float(t), a=float(a),
                freq_op=freq_op, bound_op=bound_op, se_op=se_op,
                ok_op=freq_op <= bound_op + 3.0 * se_op,
                freq_state=freq_state, bound_state=bound_state, se_state=se_state,
                ok_state=freq_state <= bound_state + 3.0 * se_state))
    return HighProbReport(rows=tuple(rows), all_ok=all(r.ok_op and r.ok_state
                                                       for r in rows))
