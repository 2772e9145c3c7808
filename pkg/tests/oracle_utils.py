"""Independent oracles for the test suite.

Every derived expected value is computed here through a route that shares
no code with the package: scipy's adaptive QUADPACK quadrature for
integrals, qhull for the concave envelope, and closed forms where they
exist.  The frozen constants below were produced by these same functions
(and cross-checked against 30-digit arbitrary-precision quadrature); the
tests assert both against the live oracle and against the frozen value,
so a drift in either the package or the oracle is caught.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull

# ---------------------------------------------------------------------------
# frozen oracle values for the unit-scale bump kernel

BUMP_I2 = 0.13308612084499427            # int exp(-2/(1-q^2)) dq
BUMP_NORMALIZATION = 2.7411551457069723  # 1 / sqrt(BUMP_I2)
BUMP_LPRIME = 3.0776091312317777         # int phi'(q)^2 dq
BUMP_PHI_05 = 0.7118751431433542         # Phi(0.5)
BUMP_PHI_01 = 0.9849239106636728         # Phi(0.1)
BUMP_PHI_10 = 0.2544800908482456         # Phi(1.0)
BUMP_SIGMA_05 = 0.7591111339674129       # sqrt(2 (1 - Phi(0.5)))
BUMP_MAJORANT_GAP = 0.10329120408705433  # dense-grid hull, 2^16 samples
C_UPPER_STAR = 2.0 / math.sqrt(math.pi)  # 1.1283791670955126
BUMP_C_STAR = 1.0118275242594694         # c_upper_star * (1 - gap)


def bump_norm_integral() -> float:
    """Normalization integral of the unit bump by adaptive quadrature."""
    val, _ = integrate.quad(
        lambda q: math.exp(-2.0 / (1.0 - q * q)), -1.0, 1.0,
        epsabs=1e-14, epsrel=1e-14, limit=400,
    )
    return val


def bump_lprime() -> float:
    """Independent quadrature of the squared kernel derivative."""
    def f(q):
        om = 1.0 - q * q
        return math.exp(-2.0 / om) * 4.0 * q * q / om**4

    val, _ = integrate.quad(f, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val / bump_norm_integral()


def bump_phi(z: float) -> float:
    """Autoconvolution of the unit bump at z >= 0, by adaptive quadrature."""
    if z >= 2.0:
        return 0.0

    def f(q):
        return math.exp(-1.0 / (1.0 - (z + q) ** 2) - 1.0 / (1.0 - q * q))

    val, _ = integrate.quad(f, -1.0, 1.0 - z, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val / bump_norm_integral()


def dense_hull_gap(zs: np.ndarray, one_minus_phi: np.ndarray) -> float:
    """Concave-envelope gap through qhull (independent of the package hull).

    `zs` must be dense samples of [0, z_cap] with the constant level 1
    already appended past the support.
    """
    pts = np.column_stack([zs, one_minus_phi])
    hull = ConvexHull(pts)
    vs = list(hull.vertices)
    imin = min(range(len(vs)), key=lambda i: pts[vs[i], 0])
    imax = max(range(len(vs)), key=lambda i: pts[vs[i], 0])
    # vertices are counterclockwise; the upper chain runs from the
    # rightmost vertex around to the leftmost
    chain = []
    i = imax
    while True:
        chain.append(vs[i])
        if vs[i] == vs[imin]:
            break
        i = (i + 1) % len(vs)
    upper = pts[np.array(chain)][::-1]
    env = np.interp(zs, upper[:, 0], upper[:, 1])
    return float(np.max(env - one_minus_phi))


def normal_cdf(x):
    return 0.5 * (1.0 + np.vectorize(math.erf)(np.asarray(x) / math.sqrt(2.0)))


def reflection_meeting_probability(d: float, t: float) -> float:
    """P(two coalescing standard Brownian particles started d apart meet by t):
    the gap is Brownian with variance rate 2, so the reflection principle
    gives 2 (1 - N(d / sqrt(2 t))) = erfc(d / (2 sqrt(t)))."""
    return math.erfc(d / (2.0 * math.sqrt(t)))
