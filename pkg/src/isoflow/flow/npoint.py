"""Joint motion of n flow particles.

Each Euler step draws a Gaussian increment with covariance dt * C, where
C_ij = Phi(x_i - x_j) (unit diagonal).  The reference operation
`step_npoint` factors C through its eigendecomposition with negative
eigenvalues clipped to zero, which tolerates the rank deficiency of
coalesced configurations.  The batched ensemble integrator uses a
pivot-clipped positive-semidefinite Cholesky factor instead: it produces
an increment with the same law, tolerates rank deficiency equally, and
vectorizes over a million replications where a per-replication
eigendecomposition is two orders of magnitude slower.

Discrete steps can invert the particle order (the continuum flow cannot);
inverted states are re-sorted, and inversions deeper than a float-noise
tolerance increment a violation counter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernel import CorrelationProfile
from . import rng as _rng
from ._kernels import npoint_chunk, ORDER_TOL

_CHUNK_STEPS = 8  # noise is (steps, m, n); 8 steps of 10^6 x 4 is ~256 MB
_PHI_TABLE_SIZE = 16384


@dataclass(frozen=True)
class FlowState:
    """Positions of the n-point motion at one time.

    positions[i] is the particle started from initial_points[i]; initial
    points must be strictly increasing and the flow preserves that order.
    """

    positions: np.ndarray
    time: float
    initial_points: np.ndarray
    violations: int = 0

    def __post_init__(self):
        pts = np.asarray(self.initial_points, dtype=float)
        if pts.ndim != 1 or len(pts) == 0:
            raise ValueError("initial_points must be a non-empty 1-d array")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("initial_points must be strictly increasing")


def make_flow_state(points) -> FlowState:
    pts = np.asarray(points, dtype=float)
    return FlowState(positions=pts.copy(), time=0.0, initial_points=pts)


def correlation_matrix(profile: CorrelationProfile, positions: np.ndarray) -> np.ndarray:
    d = np.abs(positions[:, None] - positions[None, :])
    c = profile.phi(d.ravel()).reshape(d.shape)
    np.fill_diagonal(c, 1.0)
    return c


def symmetric_sqrt_psd(c: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clipped to zero."""
    w, v = np.linalg.eigh(c)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def step_npoint(
    profile: CorrelationProfile,
    state: FlowState,
    dt: float,
    noise: np.ndarray,
) -> FlowState:
    """One Euler step of the n-point motion from `noise` ~ N(0, I_n).

    x <- x + sqrt(dt) * A @ noise with A the clipped symmetric square root
    of the correlation matrix.  Raises on eigendecomposition failure.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    noise = np.asarray(noise, dtype=float)
    n = len(state.positions)
    if noise.shape != (n,):
        raise ValueError(f"noise must have shape ({n},), got {noise.shape}")
    c = correlation_matrix(profile, state.positions)
    try:
        a = symmetric_sqrt_psd(c)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition failed at t={state.time}") from exc
    new = state.positions + np.sqrt(dt) * (a @ noise)
    violations = state.violations
    gaps = np.diff(new)
    if np.any(gaps < 0.0):
        violations += int(np.sum(gaps < -ORDER_TOL))
        new = np.sort(new)
    return FlowState(
        positions=new,
        time=state.time + dt,
        initial_points=state.initial_points,
        violations=violations,
    )


def _phi_table(profile: CorrelationProfile):
    z = np.linspace(0.0, profile.z_max, _PHI_TABLE_SIZE)
    tab = np.clip(1.0 - profile.one_minus_phi(z), 0.0, 1.0)
    inv_h = (_PHI_TABLE_SIZE - 1) / profile.z_max
    return tab, inv_h


@dataclass(frozen=True)
class NPointEnsemble:
    """Ensemble of n-point motions recorded at selected times.

    positions has shape (replications, n, len(times)); the i-th particle
    column follows initial point points[i].
    """

    points: np.ndarray
    dt: float
    times: np.ndarray
    positions: np.ndarray
    violations: int
    antithetic: bool
    base_seed: int
    block_size: int = _rng.BLOCK_SIZE

    @property
    def replications(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def _col(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        # recording snaps requested times onto the step grid, so accept
        # anything within half a step of a recorded time
        if abs(self.times[j] - t) > 0.5 * self.dt + 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} was not recorded (grid: {self.times})")
        return j

    def positions_at(self, t: float) -> np.ndarray:
        return self.positions[:, :, self._col(t)]

    def centered_at(self, t: float) -> np.ndarray:
        return self.positions_at(t) - self.points[None, :]

    def prefix(self, m: int) -> "NPointEnsemble":
        if not 0 < m <= self.replications:
            raise ValueError(f"prefix size {m} out of range")
        return NPointEnsemble(
            points=self.points, dt=self.dt, times=self.times,
            positions=self.positions[:m], violations=self.violations,
            antithetic=self.antithetic, base_seed=self.base_seed,
            block_size=self.block_size,
        )


def simulate_npoint_ensemble(
    profile: CorrelationProfile,
    points,
    t_max: float,
    dt: float,
    replications: int,
    base_seed: int,
    record_times,
    antithetic: bool = True,
    label: str = "npoint",
    progress=None,
) -> NPointEnsemble:
    """Batched Euler integration of the n-point motion.

    Per-step noise comes from block streams (see flow.rng); the increment
    factor is the pivot-clipped positive-semidefinite Cholesky of the
    pairwise correlation matrix.
    """
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) <= 0.0):
        raise ValueError("points must be strictly increasing")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    n = len(pts)
    rec = np.asarray(record_times, dtype=float)
    if np.any(rec < 0.0) or np.any(rec > t_max + 1e-9):
        raise ValueError("record times must lie in [0, t_max]")
    record_steps = np.unique(np.round(rec / dt).astype(np.int64))
    times = record_steps * dt
    n_steps_total = int(round(t_max / dt))

    phi_tab, inv_h = _phi_table(profile)
    pos = np.tile(pts, (replications, 1))
    c_buf = np.empty((replications, n, n))
    l_buf = np.empty((replications, n, n))
    viol = np.zeros(replications, dtype=np.int64)
    out = np.empty((replications, n, len(record_steps)))
    noise = _rng.BlockNoise(base_seed, label, replications, cols=n,
                            antithetic=antithetic)
    rec_idx = {int(s): j for j, s in enumerate(record_steps)}
    if 0 in rec_idx:
        out[:, :, rec_idx[0]] = pos
    sq_dt = np.sqrt(dt)
    step = 0
    while step < n_steps_total:
        take = min(_CHUNK_STEPS, n_steps_total - step)
        upcoming = [s for s in rec_idx if step < s <= step + take]
        if upcoming:
            take = min(upcoming) - step
        z = noise.draw(take)
        npoint_chunk(pos, z, sq_dt, phi_tab, inv_h, profile.z_max,
                     profile.z_asym, profile.beta, profile.beta_curvature,
                     c_buf, l_buf, viol)
        step += take
        if step in rec_idx:
            out[:, :, rec_idx[step]] = pos
        if progress is not None:
            progress(step, n_steps_total)
    return NPointEnsemble(
        points=pts, dt=float(dt), times=times, positions=out,
        violations=int(viol.sum()), antithetic=antithetic,
        base_seed=int(base_seed),
    )


def simulate_npoint_paths(
    profile: CorrelationProfile,
    points,
    t_max: float,
    dt: float,
    replications: int,
    base_seed: int,
    thin: int = 1,
    antithetic: bool = False,
    label: str = "npoint-paths",
) -> NPointEnsemble:
    """Full-path variant: records every `thin`-th step (for path statistics
    such as realized quadratic variation).  Memory scales accordingly."""
    n_steps_total = int(round(t_max / dt))
    record_times = np.arange(0, n_steps_total + 1, thin) * dt
    return simulate_npoint_ensemble(
        profile, points, t_max, dt, replications, base_seed,
        record_times, antithetic=antithetic, label=label,
    )


@dataclass(frozen=True)
class ScaledEnsemble:
    """Diffusively rescaled centered paths on the unit time interval.

    xbar[r, i, j] = (x(u_i, T * tau_j) - u_i) / sqrt(T).
    """

    points: np.ndarray
    horizon: float
    taus: np.ndarray
    xbar: np.ndarray

    def max_pair_gap(self, i: int, j: int) -> np.ndarray:
        """Per-replication max over the grid of |xbar_i - xbar_j|."""
        return np.max(np.abs(self.xbar[:, i, :] - self.xbar[:, j, :]), axis=1)


def simulate_scaled_ensemble(
    profile: CorrelationProfile,
    points,
    horizon: float,
    dt: float,
    replications: int,
    base_seed: int,
    taus=None,
    antithetic: bool = True,
    label: str = "scaled",
) -> ScaledEnsemble:
    """Simulate to time T = horizon and return x_T-bar on a grid of [0, 1]."""
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if taus is None:
        taus = np.linspace(0.0, 1.0, 65)
    taus = np.asarray(taus, dtype=float)
    # snap the output grid onto integration steps
    steps = np.unique(np.round(taus * horizon / dt).astype(np.int64))
    ens = simulate_npoint_ensemble(
        profile, points, horizon, dt, replications, base_seed,
        record_times=steps * dt, antithetic=antithetic, label=label,
    )
    pts = np.asarray(points, dtype=float)
    xbar = (ens.positions - pts[None, :, None]) / np.sqrt(horizon)
    return ScaledEnsemble(points=pts, horizon=float(horizon),
                          taus=ens.times / horizon, xbar=xbar)
