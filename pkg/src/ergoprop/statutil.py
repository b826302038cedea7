"""Small shared statistics helpers: least-squares lines and bootstrap CIs."""

import numpy as np

from .rngstream import rng_stream

BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_SEED = 0xB005


def linear_fit(xs, ys):
    """Least-squares line; returns (intercept, slope, r_squared)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    a = np.vstack([np.ones_like(xs), xs]).T
    coef, *_ = np.linalg.lstsq(a, ys, rcond=None)
    fit = a @ coef
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def bootstrap_mean_ci(values, n_resamples: int = BOOTSTRAP_RESAMPLES,
                      alpha: float = 0.05, seed: int = BOOTSTRAP_SEED):
    """Percentile bootstrap of the mean; returns (mean, lo, hi, se).

    The resampling stream is fixed so repeated runs reproduce identical
    intervals.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean())
    if n < 2:
        return mean, mean, mean, 0.0
    rng = rng_stream(seed, n)
    idx = rng.integers(0, n, size=(n_resamples, n))
    means = values[idx].mean(axis=1)
    lo = float(np.quantile(means, alpha / 2))
    hi = float(np.quantile(means, 1 - alpha / 2))
    return mean, lo, hi, float(means.std(ddof=1))
