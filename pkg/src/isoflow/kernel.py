"""Smoothing kernel and its correlation profile.

The flow is driven by a compactly supported, even, non-negative smoothing
kernel phi with unit L2 norm.  Everything the simulator needs downstream is
deterministic in phi: the correlation profile Phi (the autoconvolution of
phi), the pair diffusion coefficient sigma, and the contraction rate
l_prime (the squared L2 norm of phi').

Kernel-derived profiles are tabulated by Gauss-Legendre quadrature and
interpolated with a clamped cubic spline; user-supplied covariance tables
go through the same interpolation machinery.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import adaptive_gauss_legendre, adaptive_batch

# Number of tabulated points of a kernel-derived profile on [0, 2*epsilon].
PROFILE_SAMPLES = 2048

# Below this fraction of the support, 1 - Phi is evaluated from the fitted
# small-z expansion beta*z^2 + c*z^4 instead of the spline (cancellation in
# 1 - spline(z) loses all precision for tiny z).
_ASYM_FRACTION = 2.5e-3

PROFILE_CSV_VERSION = 1


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


@lru_cache(maxsize=1)
def _base_normalization() -> float:
    """Normalization c of the unit bump: c^2 * int exp(-2/(1-q^2)) dq = 1."""

    def f(q):
        out = np.zeros_like(q)
        inside = np.abs(q) < 1.0
        out[inside] = np.exp(-2.0 / (1.0 - q[inside] ** 2))
        return out

    return 1.0 / np.sqrt(adaptive_gauss_legendre(f, -1.0, 1.0, abs_tol=1e-13))


@dataclass(frozen=True)
class Kernel:
    """Scaled bump kernel q -> eps^(-1/2) * c * exp(-1/(1-(q/eps)^2)).

    Supported on (-epsilon, epsilon), even, non-negative, and normalized so
    that the integral of its square is one for every epsilon.
    """

    epsilon: float
    normalization_constant: float

    @property
    def support_radius(self) -> float:
        return self.epsilon

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        u = q / self.epsilon
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return self.normalization_constant / np.sqrt(self.epsilon) * out

    def derivative(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        u = q / self.epsilon
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        om = 1.0 - ui**2
        out[inside] = np.exp(-1.0 / om) * (-2.0 * ui / om**2)
        return self.normalization_constant * self.epsilon**-1.5 * out

    def l2_norm_sq(self, abs_tol: float = 1e-12) -> float:
        """Quadrature check of the normalization (should be 1)."""
        return adaptive_gauss_legendre(
            lambda q: self(q) ** 2, -self.epsilon, self.epsilon, abs_tol=abs_tol
        )


def make_bump_kernel(epsilon: float) -> Kernel:
    """Standard bump kernel at scale `epsilon`.

    Raises ValueError for non-positive epsilon.
    """
    if not np.isfinite(epsilon) or epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    return Kernel(epsilon=float(epsilon), normalization_constant=_base_normalization())


def _overlap_correlation(kernel: Kernel, z: np.ndarray) -> np.ndarray:
    """Autoconvolution int phi(z+q) phi(q) dq for z >= 0, by batch quadrature.

    The integrand is supported on [-eps, eps-z]; outside the overlap the
    value is exactly zero.
    """
    z = np.asarray(z, dtype=float)
    eps = kernel.epsilon
    lo = np.full_like(z, -eps)
    hi = eps - z
    out = np.zeros_like(z)
    has_overlap = hi > lo
    if np.any(has_overlap):
        vals = adaptive_batch(
            lambda q: kernel(z[has_overlap, None] + q) * kernel(q),
            lo[has_overlap],
            hi[has_overlap],
            abs_tol=1e-11,
            rel_tol=1e-10,
        )
        out[has_overlap] = vals
    return out


@dataclass(frozen=True)
class CorrelationProfile:
    """Tabulated correlation profile Phi with clamped-cubic interpolation.

    Evaluation folds the sign (Phi is even), returns exactly zero beyond
    `z_max`, and clips interpolated values into [0, 1].  `one_minus_phi`
    switches to the fitted small-z expansion beta*z^2 + curv*z^4 near zero,
    where forming 1 - Phi directly would lose all precision.
    """

    grid: np.ndarray
    phi_values: np.ndarray
    z_max: float
    source: str  # "kernel-derived" | "user-table"
    epsilon: float | None = None
    beta: float = 0.0           # fitted lim (1 - Phi(z)) / z^2
    beta_curvature: float = 0.0  # next-order z^4 coefficient of 1 - Phi
    beta_residual: float = 0.0   # max abs residual of the fit
    # whether (1 - Phi)/z^2 has a clean finite limit (the fit converged);
    # tables with e.g. a linear start at 0 do not, and for them the spline
    # is used all the way down (no cancellation issue there either).
    has_quadratic_contact: bool = True
    _spline: CubicSpline = field(repr=False, compare=False, default=None)

    @property
    def z_asym(self) -> float:
        return _ASYM_FRACTION * self.z_max if self.has_quadratic_contact else 0.0

    def phi(self, z) -> np.ndarray:
        z = np.abs(np.asarray(z, dtype=float))
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.zeros_like(z)
        inside = z < self.z_max
        out[inside] = np.clip(self._spline(z[inside]), 0.0, 1.0)
        small = z < self.z_asym
        if np.any(small):
            out[small] = 1.0 - self.one_minus_phi(z[small])
        return float(out[0]) if scalar else out

    __call__ = phi

    def one_minus_phi(self, z) -> np.ndarray:
        """1 - Phi(z), stable down to arbitrarily small z."""
        z = np.abs(np.asarray(z, dtype=float))
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.ones_like(z)
        mid = (z >= self.z_asym) & (z < self.z_max)
        out[mid] = np.clip(1.0 - self._spline(z[mid]), 0.0, 1.0)
        small = z < self.z_asym
        zs = z[small]
        out[small] = self.beta * zs**2 + self.beta_curvature * zs**4
        return float(out[0]) if scalar else out

    def one_minus_phi_over_z2(self, z) -> np.ndarray:
        """(1 - Phi(z)) / z^2 with its finite z -> 0 limit (= beta).

        For profiles without quadratic contact there is no finite limit;
        arguments below the first grid point are floored there.
        """
        z = np.abs(np.asarray(z, dtype=float))
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.empty_like(z)
        small = z < self.z_asym
        zs = z[small]
        out[small] = self.beta + self.beta_curvature * zs**2
        zl = z[~small]
        if not self.has_quadratic_contact:
            zl = np.maximum(zl, self.grid[1])
        out[~small] = self.one_minus_phi(zl) / zl**2
        return float(out[0]) if scalar else out

    def sigma(self, z) -> np.ndarray:
        """Pair diffusion coefficient sqrt(2 (1 - Phi(z)))."""
        return np.sqrt(2.0 * self.one_minus_phi(z))

    def log_one_minus_phi_from_log(self, log_z) -> np.ndarray:
        """ln(1 - Phi(e^eta)) given eta = ln z, safe for eta << 0."""
        eta = np.asarray(log_z, dtype=float)
        scalar = eta.ndim == 0
        eta = np.atleast_1d(eta)
        out = np.empty_like(eta)
        small = eta < (np.log(self.z_asym) if self.z_asym > 0 else -np.inf)
        es = eta[small]
        out[small] = np.log(self.beta) + 2.0 * es + np.log1p(
            np.clip(self.beta_curvature / self.beta, -0.5, np.inf) * np.exp(2.0 * es)
        )
        zl = np.exp(eta[~small])
        out[~small] = np.log(np.maximum(self.one_minus_phi(zl), 1e-300))
        return float(out[0]) if scalar else out


def _fit_small_z(grid: np.ndarray, values: np.ndarray, n_points: int = 10):
    """Least squares of (1 - Phi(z)) / z^2 against z^2 on the smallest grid
    points; the intercept estimates the local curvature coefficient beta."""
    n = min(n_points, len(grid) - 2)
    zs = grid[1 : n + 1]
    y = (1.0 - values[1 : n + 1]) / zs**2
    design = np.column_stack([np.ones_like(zs), zs**2])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    beta, curv = float(coef[0]), float(coef[1])
    resid = float(np.max(np.abs(design @ coef - y)))
    return beta, curv, resid


def _make_profile(
    grid: np.ndarray,
    values: np.ndarray,
    source: str,
    epsilon: float | None,
) -> CorrelationProfile:
    spline = CubicSpline(grid, values, bc_type="clamped")
    beta, curv, resid = _fit_small_z(grid, values)
    quadratic = bool(beta > 0.0 and resid < 1e-2 * max(1.0, beta))
    return CorrelationProfile(
        grid=grid,
        phi_values=values,
        z_max=float(grid[-1]),
        source=source,
        epsilon=epsilon,
        beta=beta,
        beta_curvature=curv,
        beta_residual=resid,
        has_quadratic_contact=quadratic,
        _spline=spline,
    )


def build_profile(kernel: Kernel, grid_step: float | None = None) -> CorrelationProfile:
    """Tabulate Phi(z) = int phi(z+q) phi(q) dq on a uniform grid of [0, 2 eps].

    The default grid has PROFILE_SAMPLES points.  A coarser `grid_step` is
    rejected unless at least 512 samples cover the support of Phi.
    """
    eps = kernel.epsilon
    z_max = 2.0 * eps
    if grid_step is None:
        n = PROFILE_SAMPLES
    else:
        if grid_step <= 0:
            raise ValueError("grid_step must be positive")
        n = int(np.floor(z_max / grid_step)) + 1
        if n < 512:
            raise ValueError(
                f"grid_step {grid_step} gives {n} samples on [0, {z_max}]; "
                "at least 512 are required"
            )
    grid = np.linspace(0.0, z_max, n)
    values = _overlap_correlation(kernel, grid)
    # The z = 0 value is the kernel normalization (= 1 up to quadrature
    # tolerance); renormalizing pins Phi(0) = 1 exactly.
    values = values / values[0]
    values[-1] = 0.0
    values = np.clip(values, 0.0, 1.0)
    return _make_profile(grid, values, "kernel-derived", eps)


def profile_from_table(abscissae, values) -> CorrelationProfile:
    """Profile backed by a user covariance table b(z) on z >= 0.

    Preconditions (ValueError with the failing index): abscissae strictly
    increasing from 0, values in [0, 1], values[0] = 1.
    """
    z = np.asarray(abscissae, dtype=float)
    b = np.asarray(values, dtype=float)
    if z.ndim != 1 or b.ndim != 1 or len(z) != len(b):
        raise ValueError("abscissae and values must be 1-d arrays of equal length")
    if len(z) < 8:
        raise ValueError("table too short: need at least 8 points")
    if z[0] != 0.0:
        raise ValueError("abscissae must start at 0 (index 0)")
    steps = np.diff(z)
    if np.any(steps <= 0):
        i = int(np.argmax(steps <= 0)) + 1
        raise ValueError(f"abscissae not strictly increasing at index {i}")
    if b[0] != 1.0:
        raise ValueError(f"values[0] must be 1 (b(0) = 1), got {b[0]!r} at index 0")
    bad = (b < 0.0) | (b > 1.0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"values must lie in [0, 1]; index {i} is {b[i]!r}")
    return _make_profile(z.copy(), b.copy(), "user-table", None)


def sigma(profile: CorrelationProfile, z) -> np.ndarray:
    """sqrt(2 (1 - Phi(z))); zero only at z = 0, bounded by sqrt(2)."""
    return profile.sigma(z)


def _curvature_at_zero(kernel: Kernel, h: float) -> float:
    """-Phi''(0) via Richardson-extrapolated central differences of the
    quadrature-evaluated profile (independent of the tabulated spline)."""
    phi_h, phi_h2 = _overlap_correlation(kernel, np.array([h, h / 2.0]))
    norm = kernel.l2_norm_sq()
    d1 = 2.0 * (norm - phi_h) / h**2
    d2 = 2.0 * (norm - phi_h2) / (h / 2.0) ** 2
    return (4.0 * d2 - d1) / 3.0


def lyapunov_lprime(kernel: Kernel, check_tol: float = 1e-3) -> float:
    """Contraction rate l' = int phi'(q)^2 dq.

    Cross-checked against the curvature route -Phi''(0); a relative
    disagreement beyond `check_tol` raises ConsistencyError.
    """
    eps = kernel.epsilon
    lp = adaptive_gauss_legendre(
        lambda q: kernel.derivative(q) ** 2, -eps, eps, abs_tol=1e-12
    )
    curv = _curvature_at_zero(kernel, h=1e-2 * eps)
    rel = abs(lp - curv) / lp
    if rel > check_tol:
        raise ConsistencyError(
            f"l' routes disagree: quadrature {lp:.12g} vs curvature {curv:.12g} "
            f"(relative {rel:.2e})"
        )
    return lp


# ---------------------------------------------------------------------------
# profile serialization (versioned CSV, columns: z, phi)

def profile_to_csv(profile: CorrelationProfile) -> str:
    buf = io.StringIO()
    buf.write(f"# isoflow-profile schema_version={PROFILE_CSV_VERSION} "
              f"source={profile.source} epsilon={profile.epsilon}\n")
    buf.write("z,phi\n")
    for z, p in zip(profile.grid, profile.phi_values):
        buf.write(f"{float(z)!r},{float(p)!r}\n")
    return buf.getvalue()


def save_profile_csv(profile: CorrelationProfile, path) -> None:
    with open(path, "w") as fh:
        fh.write(profile_to_csv(profile))


def load_profile_csv(path) -> CorrelationProfile:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# isoflow-profile"):
            raise ValueError(f"{path}: not an isoflow profile CSV")
        fields = dict(
            part.split("=", 1) for part in header[1:].split() if "=" in part
        )
        major = int(fields.get("schema_version", "0").split(".")[0])
        if major != PROFILE_CSV_VERSION:
            raise ValueError(
                f"{path}: unsupported profile schema_version {major}"
            )
        cols = fh.readline().strip()
        if cols != "z,phi":
            raise ValueError(f"{path}: expected columns 'z,phi', got {cols!r}")
        data = np.loadtxt(fh, delimiter=",")
    return profile_from_table(data[:, 0], data[:, 1])
