"""Monte Carlo estimators for the moment laws of the flow.

Every estimator consumes a simulated ensemble and returns a MomentEstimate
(value, standard error, 95% interval) or a small report object.  Standard
errors respect antithetic pairing: mirrored replications are collapsed to
pair means before the spread is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow.arratia import (
    pair_coalescence_probability,
    simulate_arratia_ensemble,
)
from .flow.distance import DistanceEnsemble, simulate_distance_ensemble, max_stable_dt
from .flow.npoint import NPointEnsemble, simulate_npoint_ensemble
from .kernel import CorrelationProfile, make_bump_kernel, build_profile
from .stats import GrowthFit, MomentEstimate, fit_growth_exponent, ks_two_sample, mc_estimate

__all__ = [
    "estimate_distance_moment",
    "estimate_lyapunov",
    "estimate_correlation_decay_rate",
    "verify_recursion",
    "mixed_moment",
    "conditional_identity_residual",
    "cross_moment_x2x",
    "fit_growth_exponent",
    "arratia_agreement",
    "distance_moment_series",
]


def estimate_distance_moment(ens: DistanceEnsemble, power: int, t: float) -> MomentEstimate:
    """Sample mean of xi_t^power."""
    xi = ens.xi_at(t)  # raises if t was not recorded
    return mc_estimate(
        xi**power,
        time=t,
        descriptor=f"E[xi^{power}]",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


def distance_moment_series(ens: DistanceEnsemble, power: int, times=None):
    """Moment estimates along the recorded grid; returns (times, estimates)."""
    ts = ens.times if times is None else np.asarray(times, dtype=float)
    return ts, [estimate_distance_moment(ens, power, t) for t in ts]


def estimate_lyapunov(ens: DistanceEnsemble, t: float | None = None) -> MomentEstimate:
    """Ensemble mean of (1/t) ln xi_t, the pathwise contraction-rate proxy."""
    if t is None:
        t = float(ens.times[-1])
    if t <= 0.0:
        raise ValueError("lyapunov estimate needs t > 0")
    vals = ens.log_xi_at(t) / t
    return mc_estimate(
        vals,
        time=t,
        descriptor="mean (1/t) ln xi_t",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


def estimate_correlation_decay_rate(
    ens: DistanceEnsemble, profile: CorrelationProfile, t: float | None = None
) -> MomentEstimate:
    """Ensemble mean of (1/t) ln(1 - Phi(xi_t)); companion decay-rate check
    (the limit is twice the distance exponent).  Evaluated through the
    profile's log-stable branch, which survives xi_t underflowing to 0."""
    if t is None:
        t = float(ens.times[-1])
    vals = profile.log_one_minus_phi_from_log(ens.log_xi_at(t)) / t
    return mc_estimate(
        vals,
        time=t,
        descriptor="mean (1/t) ln(1 - Phi(xi_t))",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


@dataclass(frozen=True)
class RecursionCheck:
    """Residual of the Ito moment identity at one time."""

    time: float
    h_high: float
    reconstruction: float
    residual: MomentEstimate

    @property
    def ok(self) -> bool:
        return self.residual.within(0.0, 3.0)


def verify_recursion(
    ens: DistanceEnsemble,
    profile: CorrelationProfile,
    m: int,
    times,
) -> list[RecursionCheck]:
    """Check h_{m+2}(t) against its Ito reconstruction.

    Identity: h_{m+2}(t) = xi0^(m+2)
      + (m+2)(m+1) * int_0^t [ h_m(s) - E(xi_s^m Phi(xi_s)) ] ds.
    The integral is a per-path trapezoid over the recorded grid, so the
    residual is itself a per-path functional with zero mean (up to
    quadrature-in-time bias) and an honest standard error.
    """
    if m < 1 or m % 2 == 0:
        raise ValueError("recursion check expects odd m >= 1")
    req = np.asarray(times, dtype=float)
    grid = ens.times
    cols = [int(np.argmin(np.abs(grid - t))) for t in req]
    for t, j in zip(req, cols):
        if abs(grid[j] - t) > 0.5 * ens.dt + 1e-9 * max(1.0, t):
            raise ValueError(f"time {t} not on the recorded grid")
    xi = np.exp(ens.log_xi)  # (m_rep, n_times)
    phi = 1.0 - profile.one_minus_phi(xi.ravel()).reshape(xi.shape)
    integrand = xi**m * (1.0 - phi)
    coef = (m + 2) * (m + 1)
    checks = []
    for t, j in zip(req, cols):
        integral = np.trapezoid(integrand[:, : j + 1], grid[: j + 1], axis=1)
        recon = ens.xi0 ** (m + 2) + coef * integral
        resid = xi[:, j] ** (m + 2) - recon
        est = mc_estimate(
            resid,
            time=float(t),
            descriptor=f"h{m + 2} residual",
            antithetic=ens.antithetic,
            block_size=ens.block_size,
        )
        checks.append(
            RecursionCheck(
                time=float(t),
                h_high=float(np.mean(xi[:, j] ** (m + 2))),
                reconstruction=float(np.mean(recon)),
                residual=est,
            )
        )
    return checks


def phi_weighted_moment_series(ens: DistanceEnsemble, profile: CorrelationProfile, power: int = 1):
    """E[xi_t^power * Phi(xi_t)] along the grid (decays to zero)."""
    xi = np.exp(ens.log_xi)
    phi = 1.0 - profile.one_minus_phi(xi.ravel()).reshape(xi.shape)
    out = [
        mc_estimate(
            xi[:, j] ** power * phi[:, j],
            time=float(t),
            descriptor=f"E[xi^{power} Phi(xi)]",
            antithetic=ens.antithetic,
            block_size=ens.block_size,
        )
        for j, t in enumerate(ens.times)
    ]
    return ens.times, out


# ---------------------------------------------------------------------------
# n-point estimators

def _particle_columns(ens: NPointEnsemble, points) -> list[int]:
    cols = []
    for p in points:
        i = int(np.argmin(np.abs(ens.points - p)))
        if abs(ens.points[i] - p) > 1e-12 * max(1.0, abs(p)):
            raise ValueError(f"particle {p} not present in ensemble {ens.points}")
        cols.append(i)
    return cols


def mixed_moment(
    ens: NPointEnsemble,
    points,
    t: float,
    centered: bool = False,
) -> MomentEstimate:
    """Sample mean of the product of the listed particles at time t.

    `points` lists initial positions (repetitions allowed: a point listed
    twice contributes its square).  With `centered`, each factor is
    x(u, t) - u.
    """
    cols = _particle_columns(ens, points)
    x = ens.positions_at(t)
    prod = np.ones(ens.replications)
    for i in cols:
        factor = x[:, i] - ens.points[i] if centered else x[:, i]
        prod = prod * factor
    label = "*".join(f"x{'bar' if centered else ''}({ens.points[i]:g})" for i in cols)
    return mc_estimate(
        prod,
        time=t,
        descriptor=f"E[{label}]",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


def conditional_identity_residual(
    ens: NPointEnsemble,
    t: float,
    g,
    g_name: str = "g",
) -> MomentEstimate:
    """Residual of the projection identity for a two-particle ensemble.

    For any bounded measurable g, E[xbar(u,t) g(xi_t)] equals
    (1/2) E[(xbar(u,t) - xbar(v,t)) g(xi_t)]; the residual estimator
    averages (xbar_u + xbar_v)/2 * g(xi_t), which has exactly zero mean.
    """
    if ens.n != 2:
        raise ValueError("conditional identity needs a 2-particle ensemble")
    xb = ens.centered_at(t)
    xi = ens.positions_at(t)[:, 1] - ens.positions_at(t)[:, 0]
    vals = 0.5 * (xb[:, 0] + xb[:, 1]) * g(xi)
    return mc_estimate(
        vals,
        time=t,
        descriptor=f"residual E[xbar g] - E[(xbar_u - xbar_v) g]/2, g={g_name}",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


def phi_conditional_moment(
    ens: NPointEnsemble, profile: CorrelationProfile, t: float
) -> MomentEstimate:
    """E[x(u,t) Phi(xi_t)] for the pair ensemble (limit (u+v)/2); u is the
    upper particle."""
    if ens.n != 2:
        raise ValueError("needs a 2-particle ensemble")
    x = ens.positions_at(t)
    xi = x[:, 1] - x[:, 0]
    phi = 1.0 - profile.one_minus_phi(xi)
    return mc_estimate(
        x[:, 1] * phi,
        time=t,
        descriptor="E[x(u,t) Phi(xi_t)]",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
    )


def cross_moment_x2x(ens: NPointEnsemble, t: float) -> MomentEstimate:
    """E[x(u,t)^2 x(v,t)] / t for the pair ensemble (limit u + 2v).

    Variance reduction beyond antithetic pairing: the estimator subtracts
    a fitted combination of controls with exactly zero mean under the
    scheme (Hermite-style polynomials of the centered coordinates), which
    leaves the estimate unbiased.
    """
    if ens.n != 2:
        raise ValueError("needs a 2-particle ensemble")
    x = ens.positions_at(t)
    xv, xu = x[:, 0], x[:, 1]
    u = ens.points[1]
    v = ens.points[0]
    xbu, xbv = xu - u, xv - v
    vals = xu * xu * xv / t
    controls = np.column_stack([
        xbu, xbv,
        xbu * xbu - t, xbv * xbv - t,
        xbu**3 - 3.0 * t * xbu, xbv**3 - 3.0 * t * xbv,
    ])
    return mc_estimate(
        vals,
        time=t,
        descriptor=f"E[x({u:g},t)^2 x({v:g},t)]/t",
        antithetic=ens.antithetic,
        block_size=ens.block_size,
        controls=controls,
    )


# ---------------------------------------------------------------------------
# smooth-flow vs coalescing-flow comparison

@dataclass(frozen=True)
class ArratiaComparisonRow:
    epsilon: float
    p_small_gap: MomentEstimate        # P(|xi_t| < delta) in the smooth flow
    p_coalesced: MomentEstimate        # P(met by t) in the coalescing system
    ks_marginal: float                 # KS distance of x(u, t) marginals
    ks_pvalue: float


@dataclass(frozen=True)
class ArratiaComparison:
    distance: float
    time: float
    delta: float
    oracle: float                      # reflection-principle limit
    rows: list[ArratiaComparisonRow]

    def p_values(self) -> np.ndarray:
        return np.array([r.p_small_gap.value for r in self.rows])

    def monotone_within(self, n_se: float = 2.0) -> bool:
        rows = self.rows
        return all(
            rows[i + 1].p_small_gap.value
            >= rows[i].p_small_gap.value
            - n_se * (rows[i].p_small_gap.std_error + rows[i + 1].p_small_gap.std_error)
            for i in range(len(rows) - 1)
        )


def arratia_agreement(
    epsilons,
    d: float,
    t: float,
    delta: float,
    replications: int,
    base_seed: int,
    marginal_replications: int = 10_000,
    progress=None,
) -> ArratiaComparison:
    """Compare the smooth flow against the coalescing reference.

    For each kernel scale, estimates P(|xi_t| < delta) from the
    log-coordinate distance ensemble and the Kolmogorov-Smirnov distance
    between the x(u, t) marginals of the smooth pair flow and of the
    coalescing system.  The reference meeting probability has the
    reflection-principle closed form.
    """
    oracle = pair_coalescence_probability(d, t)
    ref = simulate_arratia_ensemble(
        [0.0, d], t, dt=1e-3 * t, replications=replications,
        base_seed=base_seed, record_times=[t], label="arratia-ref",
    )
    coalesced = ref.coalesced_by(t)
    p_ref = mc_estimate(coalesced.astype(float), time=t, descriptor="P(met by t)")
    ref_marg = ref.positions_at(t)[:marginal_replications, 1]
    rows = []
    for j, eps in enumerate(epsilons):
        kernel = make_bump_kernel(eps)
        profile = build_profile(kernel)
        dt = max_stable_dt(profile)
        ens = simulate_distance_ensemble(
            profile, xi0=d, t_max=t, dt=dt, replications=replications,
            base_seed=base_seed, record_times=[t], antithetic=False,
            label=f"arratia-dist-{j}", progress=progress,
        )
        small = (np.exp(ens.log_xi_at(t)) < delta).astype(float)
        p_small = mc_estimate(small, time=t, descriptor=f"P(|xi_t|<{delta:g})")
        pair = simulate_npoint_ensemble(
            profile, [0.0, d], t, dt=min(eps**2 / 8.0, t / 64.0),
            replications=marginal_replications, base_seed=base_seed,
            record_times=[t], antithetic=False, label=f"arratia-pair-{j}",
        )
        ks_d, ks_p = ks_two_sample(pair.positions_at(t)[:, 1], ref_marg)
        rows.append(
            ArratiaComparisonRow(
                epsilon=float(eps),
                p_small_gap=p_small,
                p_coalesced=p_ref,
                ks_marginal=ks_d,
                ks_pvalue=ks_p,
            )
        )
    return ArratiaComparison(
        distance=float(d), time=float(t), delta=float(delta),
        oracle=float(oracle), rows=rows,
    )
