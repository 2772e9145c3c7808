"""Monte Carlo estimate containers, two-sample tests, and growth fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .flow.rng import antithetic_units, BLOCK_SIZE

Z95 = 1.96


@dataclass(frozen=True)
class MomentEstimate:
    """Sample-mean estimate with its standard error and 95% interval."""

    value: float
    std_error: float
    ci95: tuple[float, float]
    replications: int
    time: float
    descriptor: str

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.value - target) <= n_se * self.std_error

    def rel_error(self, target: float) -> float:
        return abs(self.value - target) / abs(target)


def mc_estimate(
    samples: np.ndarray,
    *,
    time: float,
    descriptor: str,
    antithetic: bool = False,
    block_size: int = BLOCK_SIZE,
    controls: np.ndarray | None = None,
) -> MomentEstimate:
    """Estimate a mean from per-replication samples.

    With `antithetic`, mirrored pairs are collapsed to pair means first
    (the pairs are dependent; only the pair means are i.i.d.).  Optional
    `controls` is a (m, k) matrix of control variates with exactly zero
    expectation; the returned estimate subtracts their fitted projection,
    which preserves the mean and can only reduce the variance.
    """
    values = np.asarray(samples, dtype=float)
    m_raw = values.shape[0]
    if controls is not None:
        controls = np.asarray(controls, dtype=float)
    if antithetic:
        values = antithetic_units(values, block_size)
        if controls is not None:
            controls = np.column_stack([
                antithetic_units(controls[:, j], block_size)
                for j in range(controls.shape[1])
            ])
    if controls is not None:
        centered = controls - controls.mean(axis=0)
        coef, *_ = np.linalg.lstsq(centered, values - values.mean(), rcond=None)
        values = values - controls @ coef
    n_units = values.shape[0]
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(n_units)) if n_units > 1 else float("nan")
    return MomentEstimate(
        value=mean,
        std_error=se,
        ci95=(mean - Z95 * se, mean + Z95 * se),
        replications=m_raw,
        time=float(time),
        descriptor=descriptor,
    )


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov

def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution, Q(lam) =
    2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return float(min(max(total, 0.0), 1.0))


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    cdf1 = np.searchsorted(x, pooled, side="right") / n1
    cdf2 = np.searchsorted(y, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    en = np.sqrt(n1 * n2 / (n1 + n2))
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


def ks_one_sample(x: np.ndarray, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against a callable CDF."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    f = cdf(x)
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    d = float(max(np.max(up - f), np.max(f - lo)))
    en = np.sqrt(n)
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


# ---------------------------------------------------------------------------
# growth-exponent fits

@dataclass(frozen=True)
class GrowthFit:
    """Least-squares power-law fit log |h| = exponent * log t + log prefactor."""

    times: np.ndarray
    exponent: float
    prefactor: float
    r_squared: float
    sign_warning: bool = False
    burn_in: float = 10.0


def fit_growth_exponent(times, estimates, burn_in: float = 10.0) -> GrowthFit:
    """Fit the growth exponent of a moment series on log-log axes.

    Times earlier than `burn_in` are discarded (transient terms dominate
    there).  Non-positive estimates (odd moments fluctuating around a
    small limit) are folded to absolute value and flagged.
    """
    t = np.asarray(times, dtype=float)
    h = np.asarray(estimates, dtype=float)
    keep = t >= burn_in
    t, h = t[keep], h[keep]
    if len(t) < 5:
        raise ValueError("need at least 5 time points past burn-in")
    sign_warning = bool(np.any(h <= 0.0))
    if sign_warning:
        warnings.warn("non-positive moment estimates; fitting |estimate|")
        h = np.abs(h)
        good = h > 0.0
        t, h = t[good], h[good]
    lx, ly = np.log(t), np.log(h)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(
        times=t,
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=r2,
        sign_warning=sign_warning,
        burn_in=burn_in,
    )
