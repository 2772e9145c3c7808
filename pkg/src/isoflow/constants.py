"""Deterministic constants of the flow and covariance-condition diagnostics.

All quantities here are functionals of the correlation profile (and, when
available, the kernel): the contraction rate l_prime, the even-moment
bracket constants c_star and c_upper_star, the dispersion-bound constants
l_inf and m_inf, the concave-majorant gap, and the local curvature beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .kernel import CorrelationProfile, Kernel, lyapunov_lprime
from .hull import concave_majorant

CONSTANTS_SCHEMA_VERSION = 1

C_UPPER_STAR = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class FlowConstants:
    epsilon: float | None
    l_prime: float
    c_star: float
    c_upper_star: float
    l_inf: float
    m_inf: float
    majorant_gap: float
    beta: float

    def to_json(self) -> str:
        rec = {"schema_version": CONSTANTS_SCHEMA_VERSION}
        rec.update(asdict(self))
        return json.dumps(rec, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FlowConstants":
        rec = json.loads(text)
        major = int(str(rec.pop("schema_version", 0)).split(".")[0])
        if major != CONSTANTS_SCHEMA_VERSION:
            raise ValueError(f"unsupported constants schema_version {major}")
        return cls(**rec)


def moment_constants(
    profile: CorrelationProfile,
    kernel: Kernel | None = None,
    gamma: float = math.sqrt(2.0),
) -> FlowConstants:
    """Constants governing the long-run moment growth of the pair distance.

    c_upper_star is universal (2/sqrt(pi)); c_star shrinks it by one minus
    the concave-majorant gap.  l_inf and m_inf are reported at b0 = 1 and
    ||b0 - b|| = sup(1 - Phi); `gamma` defaults to its limiting value
    sqrt(2 b0), at which l_inf = c_star and m_inf = c_upper_star.

    l_prime comes from the derivative quadrature when a kernel is supplied,
    otherwise from the fitted curvature (l_prime = 2 beta).
    """
    if not (0.0 < gamma <= math.sqrt(2.0)):
        raise ValueError(f"gamma must lie in (0, sqrt(2)], got {gamma!r}")
    _, gap = concave_majorant(profile)
    beta = profile.beta
    if kernel is not None:
        l_prime = lyapunov_lprime(kernel)
    else:
        l_prime = 2.0 * beta
    # sup of 1 - Phi over the half-line: the profile vanishes beyond its
    # support, so the sup is exactly 1 once the table has decayed.
    b_norm = max(float(np.max(1.0 - profile.phi_values)), 1.0)
    pref = math.sqrt(8.0 / math.pi)
    l_inf = pref * (math.sqrt(b_norm / 2.0) - gap / gamma)
    m_inf = pref * b_norm / gamma
    return FlowConstants(
        epsilon=profile.epsilon,
        l_prime=float(l_prime),
        c_star=C_UPPER_STAR * (1.0 - gap),
        c_upper_star=C_UPPER_STAR,
        l_inf=float(l_inf),
        m_inf=float(m_inf),
        majorant_gap=float(gap),
        beta=float(beta),
    )


@dataclass(frozen=True)
class CovarianceDiagnostics:
    """Report of the structural covariance conditions.

    Diagnostic only: failures are reported through the flags, never raised.
    """

    strict_max_ok: bool
    max_interior: float          # largest profile value at z > 0
    beta: float
    beta_residual: float
    beta_ok: bool
    decay_tail: dict             # n -> max |z^n b(z)| over the grid tail
    decay_ok: bool
    non_coalescence: bool
    note: str

    @property
    def all_ok(self) -> bool:
        return self.strict_max_ok and self.beta_ok and self.decay_ok


def check_covariance_conditions(
    profile: CorrelationProfile,
    max_decay_power: int = 8,
    decay_tol: float = 1e-6,
    beta_residual_tol: float = 1e-3,
) -> CovarianceDiagnostics:
    """Diagnose the structural conditions a covariance profile must satisfy.

    Checks: a strict maximum of b at 0; a positive fitted curvature
    coefficient beta with a small fit residual; polynomial decay of the
    tail (z^n b(z) small at the end of the grid for n up to
    `max_decay_power`).  Non-coalescence holds whenever beta is finite and
    positive: near zero 1 - b(z) ~ beta z^2, so the accessibility integral
    of z / (1 - b(z)) diverges like a logarithm at the origin.
    """
    values = profile.phi_values
    grid = profile.grid
    max_interior = float(np.max(values[1:]))
    strict_max_ok = bool(values[0] == 1.0 and max_interior < 1.0)

    beta = profile.beta
    beta_ok = bool(np.isfinite(beta) and beta > 0.0
                   and profile.beta_residual < beta_residual_tol * max(1.0, beta))

    tail_start = max(1, int(0.95 * len(grid)))
    zt = grid[tail_start:]
    bt = values[tail_start:]
    decay_tail = {
        n: float(np.max(np.abs(zt**n * bt))) for n in range(1, max_decay_power + 1)
    }
    decay_ok = bool(decay_tail[max_decay_power] <= decay_tol)

    non_coalescence = beta_ok
    if non_coalescence:
        note = (
            "near 0, 1 - b(z) ~ beta z^2 with beta = "
            f"{beta:.6g} > 0, so int z/(1-b(z)) dz diverges logarithmically "
            "at the origin and distinct particles never meet"
        )
    else:
        note = "curvature fit failed; non-coalescence not established"
    return CovarianceDiagnostics(
        strict_max_ok=strict_max_ok,
        max_interior=max_interior,
        beta=beta,
        beta_residual=profile.beta_residual,
        beta_ok=beta_ok,
        decay_tail=decay_tail,
        decay_ok=decay_ok,
        non_coalescence=non_coalescence,
        note=note,
    )
