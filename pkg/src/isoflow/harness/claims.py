"""Registry of verifiable claims.

Each claim maps a stable identifier to the ensemble it needs, the
estimator, the target, and the pass rule.  The registry is data: new
claims slot in without touching the runner or the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import moments
from ..stats import MomentEstimate


@dataclass(frozen=True)
class ClaimResult:
    claim_id: str
    anchor: str
    estimate: float
    target: float
    tolerance: float
    passed: bool
    std_error: float = float("nan")
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "paper_anchor": self.anchor,
            "estimate": self.estimate,
            "target": self.target,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "std_error": self.std_error,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ClaimSpec:
    claim_id: str
    anchor: str
    description: str
    needs: str                      # constants | distance | pair | quad | arratia
    min_particles: int
    evaluate: Callable              # (RunContext) -> ClaimResult


def _eval_times(ctx, wanted):
    """Recorded times closest to the wanted ones (deduplicated, sorted)."""
    grid = ctx.distance.times
    cols = sorted({int(np.argmin(np.abs(grid - t))) for t in wanted})
    return [float(grid[j]) for j in cols if grid[j] > 0]


def _h1(ctx) -> ClaimResult:
    d = ctx.u - ctx.v
    times = _eval_times(ctx, [1.0, 10.0, 100.0, ctx.distance.times[-1]])
    checks = {}
    worst = None
    for t in times:
        est = moments.estimate_distance_moment(ctx.distance, 1, t)
        ok = est.within(d, 3.0)
        checks[f"t={t:g}"] = {"estimate": est.value, "std_error": est.std_error, "pass": ok}
        if worst is None or not ok:
            worst = est
    return ClaimResult(
        claim_id="h1.exact", anchor="h1", estimate=worst.value, target=d,
        tolerance=3.0 * worst.std_error, passed=all(c["pass"] for c in checks.values()),
        std_error=worst.std_error, detail=checks,
    )


def _lyapunov(ctx) -> ClaimResult:
    est = moments.estimate_lyapunov(ctx.distance)
    target = -0.5 * ctx.constants.l_prime
    rel = est.rel_error(target)
    return ClaimResult(
        claim_id="thm2.2", anchor="thm2.2", estimate=est.value, target=target,
        tolerance=0.10, passed=bool(rel <= 0.10), std_error=est.std_error,
        detail={"relative_error": rel, "time": est.time},
    )


def _corr_decay(ctx) -> ClaimResult:
    est = moments.estimate_correlation_decay_rate(ctx.distance, ctx.profile)
    target = -ctx.constants.l_prime
    rel = est.rel_error(target)
    return ClaimResult(
        claim_id="cor2.3", anchor="cor2.3", estimate=est.value, target=target,
        tolerance=0.15, passed=bool(rel <= 0.15), std_error=est.std_error,
        detail={"relative_error": rel, "time": est.time},
    )


def _h3(ctx) -> ClaimResult:
    t = float(ctx.distance.times[-1])
    est = moments.estimate_distance_moment(ctx.distance, 3, t)
    target = 6.0 * (ctx.u - ctx.v) * t
    rel = est.rel_error(target)
    return ClaimResult(
        claim_id="thm2.6.odd.n1", anchor="thm2.6(odd,n=1)",
        estimate=est.value / t, target=target / t, tolerance=0.10,
        passed=bool(rel <= 0.10), std_error=est.std_error / t,
        detail={"relative_error": rel, "time": t},
    )


def _h2_bracket(ctx) -> ClaimResult:
    d = abs(ctx.u - ctx.v)
    lo = 2.0 * ctx.constants.c_star * d
    hi = 2.0 * ctx.constants.c_upper_star * d
    times = _eval_times(ctx, [50.0, 100.0, 200.0])
    checks = {}
    last = None
    for t in times:
        est = moments.estimate_distance_moment(ctx.distance, 2, t)
        scaled = est.value / math.sqrt(t)
        se = est.std_error / math.sqrt(t)
        ok = (lo - 3 * se) <= scaled <= (hi + 3 * se)
        checks[f"t={t:g}"] = {"h2/sqrt(t)": scaled, "std_error": se, "pass": ok}
        last = (scaled, se)
    return ClaimResult(
        claim_id="thm2.6.even.n0", anchor="thm2.6(even,n=0)",
        estimate=last[0], target=0.5 * (lo + hi), tolerance=0.5 * (hi - lo),
        passed=all(c["pass"] for c in checks.values()), std_error=last[1],
        detail={"bracket": [lo, hi], **checks},
    )


def _growth(ctx) -> ClaimResult:
    ts = ctx.distance.times
    targets = {2: (0.5, 0.10), 3: (1.0, 0.10), 4: (1.5, 0.15)}
    checks = {}
    worst_gap = -1.0
    worst = None
    for m, (expo, tol) in targets.items():
        vals = [moments.estimate_distance_moment(ctx.distance, m, t).value for t in ts]
        fit = moments.fit_growth_exponent(ts, vals, burn_in=10.0)
        ok = abs(fit.exponent - expo) <= tol
        checks[f"h{m}"] = {
            "exponent": fit.exponent, "target": expo, "tolerance": tol,
            "r_squared": fit.r_squared, "pass": ok,
        }
        gap = abs(fit.exponent - expo) / tol
        if gap > worst_gap:
            worst_gap, worst = gap, (fit.exponent, expo, tol)
    return ClaimResult(
        claim_id="thm2.6.growth", anchor="thm2.6(growth)",
        estimate=worst[0], target=worst[1], tolerance=worst[2],
        passed=all(c["pass"] for c in checks.values()), detail=checks,
    )


def _recursion(ctx) -> ClaimResult:
    grid = [t for t in ctx.distance.times if t > 0]
    times = grid[:: max(1, len(grid) // 5)][:5]
    if len(times) < 5:
        times = grid[-5:]
    checks = moments.verify_recursion(ctx.distance, ctx.profile, 1, times)
    detail = {
        f"t={c.time:g}": {
            "h3": c.h_high, "reconstruction": c.reconstruction,
            "residual": c.residual.value, "std_error": c.residual.std_error,
            "pass": c.ok,
        }
        for c in checks
    }
    last = checks[-1]
    return ClaimResult(
        claim_id="rec2.12.m1", anchor="eq2.12(m=1)",
        estimate=last.residual.value, target=0.0,
        tolerance=3.0 * last.residual.std_error,
        passed=all(c.ok for c in checks), std_error=last.residual.std_error,
        detail=detail,
    )


def _pair_product(ctx) -> ClaimResult:
    t = float(ctx.pair.times[-1])
    est = moments.mixed_moment(ctx.pair, [ctx.v, ctx.u], t, centered=False)
    rel = abs(est.value / t - 1.0)
    return ClaimResult(
        claim_id="thm3.3.even.n1", anchor="thm3.3(n=1)",
        estimate=est.value / t, target=1.0, tolerance=0.10,
        passed=bool(rel <= 0.10), std_error=est.std_error / t,
        detail={"relative_error": rel, "time": t},
    )


def _quad_product(ctx) -> ClaimResult:
    t = float(ctx.quad.times[-1])
    pts = list(ctx.quad.points[:4])
    est = moments.mixed_moment(ctx.quad, pts, t, centered=True)
    val = est.value / t**2
    rel = abs(val - 3.0) / 3.0
    return ClaimResult(
        claim_id="thm3.3.even.n2", anchor="thm3.3(n=2,centered)",
        estimate=val, target=3.0, tolerance=0.15,
        passed=bool(rel <= 0.15), std_error=est.std_error / t**2,
        detail={"relative_error": rel, "time": t, "points": pts},
    )


def _conditional_identity(ctx) -> ClaimResult:
    t = float(ctx.pair.times[-1])
    d = ctx.u - ctx.v
    profile = ctx.profile
    gs = [
        ("1", lambda xi: np.ones_like(xi)),
        ("Phi", lambda xi: 1.0 - profile.one_minus_phi(xi)),
        (f"ind(xi>{d:g})", lambda xi: (xi > d).astype(float)),
    ]
    checks = {}
    last = None
    for name, g in gs:
        est = moments.conditional_identity_residual(ctx.pair, t, g, g_name=name)
        ok = est.within(0.0, 3.0)
        checks[name] = {"residual": est.value, "std_error": est.std_error, "pass": ok}
        last = est
    return ClaimResult(
        claim_id="thm3.4.residual", anchor="thm3.4",
        estimate=last.value, target=0.0, tolerance=3.0 * last.std_error,
        passed=all(c["pass"] for c in checks.values()), std_error=last.std_error,
        detail=checks,
    )


def _phi_conditional(ctx) -> ClaimResult:
    t = float(ctx.pair.times[-1])
    est = moments.phi_conditional_moment(ctx.pair, ctx.profile, t)
    target = 0.5 * (ctx.u + ctx.v)
    ok = est.within(target, 3.0)
    return ClaimResult(
        claim_id="cor3.9", anchor="cor3.9",
        estimate=est.value, target=target, tolerance=3.0 * est.std_error,
        passed=bool(ok), std_error=est.std_error,
        detail={"time": t},
    )


def _cross_moment(ctx) -> ClaimResult:
    t = float(ctx.pair.times[-1])
    est = moments.cross_moment_x2x(ctx.pair, t)
    target = ctx.u + 2.0 * ctx.v
    rel = est.rel_error(target) if target != 0 else abs(est.value)
    return ClaimResult(
        claim_id="prop3.10", anchor="prop3.10",
        estimate=est.value, target=target, tolerance=0.10,
        passed=bool(rel <= 0.10), std_error=est.std_error,
        detail={"relative_error": rel, "time": t},
    )


ARRATIA_EPSILONS = (0.5, 0.2, 0.1, 0.05)
ARRATIA_DISTANCE = 0.5
ARRATIA_TIME = 1.0
ARRATIA_DELTA = 0.02


def _arratia(ctx) -> ClaimResult:
    comp = moments.arratia_agreement(
        ARRATIA_EPSILONS, ARRATIA_DISTANCE, ARRATIA_TIME, ARRATIA_DELTA,
        replications=min(ctx.config.ensemble.replications, 20_000),
        base_seed=ctx.config.ensemble.base_seed,
        progress=ctx.progress,
    )
    final = comp.rows[-1].p_small_gap
    rel = abs(final.value - comp.oracle) / comp.oracle
    monotone = comp.monotone_within(2.0)
    detail = {
        f"eps={r.epsilon:g}": {
            "P(|xi|<delta)": r.p_small_gap.value,
            "std_error": r.p_small_gap.std_error,
            "ks_marginal": r.ks_marginal,
            "ks_pvalue": r.ks_pvalue,
        }
        for r in comp.rows
    }
    detail["reference"] = {
        "P(met)": comp.rows[-1].p_coalesced.value, "oracle": comp.oracle,
        "monotone": monotone, "relative_error_final": rel,
    }
    return ClaimResult(
        claim_id="arratia", anchor="arratia-limit",
        estimate=final.value, target=comp.oracle, tolerance=0.10,
        passed=bool(monotone and rel <= 0.10), std_error=final.std_error,
        detail=detail,
    )


REGISTRY: dict[str, ClaimSpec] = {
    spec.claim_id: spec
    for spec in [
        ClaimSpec("h1.exact", "h1", "first distance moment is conserved",
                  "distance", 2, _h1),
        ClaimSpec("thm2.2", "thm2.2", "distance contraction rate -l'/2",
                  "distance", 2, _lyapunov),
        ClaimSpec("cor2.3", "cor2.3", "correlation-gap decay rate -l'",
                  "distance", 2, _corr_decay),
        ClaimSpec("thm2.6.odd.n1", "thm2.6(2.10)", "third moment grows like 6(u-v)t",
                  "distance", 2, _h3),
        ClaimSpec("thm2.6.even.n0", "thm2.6(2.11)", "second moment bracket on sqrt(t) scale",
                  "distance", 2, _h2_bracket),
        ClaimSpec("thm2.6.growth", "thm2.6", "growth exponents of h2, h3, h4",
                  "distance", 2, _growth),
        ClaimSpec("rec2.12.m1", "eq2.12", "Ito moment recursion at m=1",
                  "distance", 2, _recursion),
        ClaimSpec("thm3.3.even.n1", "thm3.3", "pair product moment /t -> 1",
                  "pair", 2, _pair_product),
        ClaimSpec("thm3.3.even.n2", "thm3.3", "centered 4-product /t^2 -> 3",
                  "quad", 4, _quad_product),
        ClaimSpec("thm3.4.residual", "thm3.4", "conditional projection identity",
                  "pair", 2, _conditional_identity),
        ClaimSpec("cor3.9", "cor3.9", "E[x Phi(xi)] -> (u+v)/2",
                  "pair", 2, _phi_conditional),
        ClaimSpec("prop3.10", "prop3.10", "E[x^2(u) x(v)]/t -> u+2v",
                  "pair", 2, _cross_moment),
        ClaimSpec("arratia", "arratia-limit", "small-kernel flows approach the coalescing system",
                  "arratia", 1, _arratia),
    ]
}
