"""Pair-distance process in logarithmic coordinates.

The distance between two flow particles solves d xi = sigma(xi) d beta.
Integrating eta = ln xi keeps the distance positive by construction: the
diffusion becomes g(eta) = sigma(e^eta) / e^eta with Ito drift -g^2 / 2.
g is bounded (its square tends to the contraction rate l' as xi -> 0 and
decays like 2 / xi^2 for xi beyond the correlation support), so the Euler
scheme is globally stable.  The exponential of the scheme is an exact
martingale: E exp(eta_{k+1}) = exp(eta_k) step by step.

g is evaluated from a dense lookup table over eta; the table resolves the
whole crossover region and uses the profile's stable small-z expansion, so
it is accurate uniformly down to eta -> -infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernel import CorrelationProfile
from . import rng as _rng
from ._kernels import distance_chunk

# Steps are processed in chunks to amortize noise generation and kernel
# dispatch; 32 steps of a 10^6-replication ensemble is ~256 MB of noise.
_CHUNK_STEPS = 32

_G_TABLE_SIZE = 16384
_ETA_FLOOR = np.log(1e-8)
_ETA_HEADROOM = 8.0


def max_stable_dt(profile: CorrelationProfile) -> float:
    """Largest step the integrator contract allows: 1e-2 over sup sigma^2/z^2."""
    k_sup = float(np.max(2.0 * profile.one_minus_phi_over_z2(
        np.linspace(0.0, profile.z_max, 4096))))
    return 1e-2 / k_sup if k_sup > 0.0 else np.inf


def default_dt(profile: CorrelationProfile) -> float:
    """Documented default: 1e-3 * min(1, 1/l')."""
    if profile.beta <= 0.0:
        return 1e-3
    return 1e-3 * min(1.0, 0.5 / profile.beta)


def _g_table(profile: CorrelationProfile):
    eta_lo = _ETA_FLOOR + min(0.0, np.log(profile.z_max))
    eta_hi = np.log(profile.z_max) + _ETA_HEADROOM
    eta = np.linspace(eta_lo, eta_hi, _G_TABLE_SIZE)
    g = np.sqrt(2.0 * profile.one_minus_phi_over_z2(np.exp(eta)))
    inv_d_eta = (_G_TABLE_SIZE - 1) / (eta_hi - eta_lo)
    return g, eta_lo, inv_d_eta


def _resolve_record_steps(record_times, t_max, dt):
    rec = np.asarray(record_times, dtype=float)
    if np.any(rec < 0.0) or np.any(rec > t_max + 1e-9):
        raise ValueError("record times must lie in [0, t_max]")
    steps = np.unique(np.round(rec / dt).astype(np.int64))
    return steps, steps * dt


@dataclass(frozen=True)
class DistancePath:
    """Single realization of ln xi on a time grid."""

    times: np.ndarray
    log_xi: np.ndarray
    xi0: float

    @property
    def xi(self) -> np.ndarray:
        return np.exp(self.log_xi)


@dataclass(frozen=True)
class DistanceEnsemble:
    """Block-streamed ensemble of pair-distance paths (log coordinates).

    log_xi has shape (replications, len(times)).  With `antithetic`,
    replications are mirrored in pairs within blocks of `block_size`.
    """

    xi0: float
    dt: float
    times: np.ndarray
    log_xi: np.ndarray
    antithetic: bool
    base_seed: int
    block_size: int = _rng.BLOCK_SIZE

    @property
    def replications(self) -> int:
        return self.log_xi.shape[0]

    def _col(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        # recording snaps requested times onto the step grid, so accept
        # anything within half a step of a recorded time
        if abs(self.times[j] - t) > 0.5 * self.dt + 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} was not recorded (grid: {self.times})")
        return j

    def log_xi_at(self, t: float) -> np.ndarray:
        return self.log_xi[:, self._col(t)]

    def xi_at(self, t: float) -> np.ndarray:
        return np.exp(self.log_xi[:, self._col(t)])

    def prefix(self, m: int) -> "DistanceEnsemble":
        """First m replications; identical to a standalone m-path run when
        m is a multiple of the block size."""
        if not 0 < m <= self.replications:
            raise ValueError(f"prefix size {m} out of range")
        return DistanceEnsemble(
            xi0=self.xi0, dt=self.dt, times=self.times,
            log_xi=self.log_xi[:m], antithetic=self.antithetic,
            base_seed=self.base_seed, block_size=self.block_size,
        )


def _integrate(eta, noise_source, n_steps_total, record_steps, dt, g_tab,
               eta_lo, inv_d_eta, out, progress=None):
    sq_dt = np.sqrt(dt)
    half_dt = 0.5 * dt
    rec_idx = {int(s): j for j, s in enumerate(record_steps)}
    if 0 in rec_idx:
        out[:, rec_idx[0]] = eta
    step = 0
    while step < n_steps_total:
        take = min(_CHUNK_STEPS, n_steps_total - step)
        # stop chunks on recording boundaries
        upcoming = [s for s in rec_idx if step < s <= step + take]
        if upcoming:
            take = min(upcoming) - step
        z = noise_source.draw(take)
        distance_chunk(eta, z, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta)
        step += take
        if step in rec_idx:
            out[:, rec_idx[step]] = eta
        if progress is not None:
            progress(step, n_steps_total)


def simulate_distance_ensemble(
    profile: CorrelationProfile,
    xi0: float,
    t_max: float,
    dt: float,
    replications: int,
    base_seed: int,
    record_times,
    antithetic: bool = True,
    label: str = "distance",
    progress=None,
) -> DistanceEnsemble:
    """Monte Carlo ensemble of the log-distance process.

    Noise is drawn per block of replications from counter-based streams
    keyed by (base_seed, label, block), so output is a pure function of
    the arguments regardless of thread count.
    """
    if xi0 <= 0.0:
        raise ValueError(f"xi0 must be positive, got {xi0!r}")
    cap = max_stable_dt(profile)
    if dt <= 0.0 or dt > cap * (1.0 + 1e-12):
        raise ValueError(f"dt must lie in (0, {cap:.6g}] for this profile, got {dt!r}")
    n_steps_total = int(round(t_max / dt))
    record_steps, times = _resolve_record_steps(record_times, t_max, dt)
    g_tab, eta_lo, inv_d_eta = _g_table(profile)
    eta = np.full(replications, np.log(xi0), dtype=np.float64)
    out = np.empty((replications, len(record_steps)), dtype=np.float64)
    noise = _rng.BlockNoise(base_seed, label, replications, antithetic=antithetic)
    _integrate(eta, noise, n_steps_total, record_steps, dt, g_tab, eta_lo,
               inv_d_eta, out, progress)
    return DistanceEnsemble(
        xi0=float(xi0), dt=float(dt), times=times, log_xi=out,
        antithetic=antithetic, base_seed=int(base_seed),
    )


def simulate_distance(
    profile: CorrelationProfile,
    xi0: float,
    t_max: float,
    dt: float,
    stream: np.random.Generator | int | None = None,
    record_times=None,
) -> DistancePath:
    """Single pair-distance path in log coordinates.

    `stream` is a numpy Generator (or a seed for a fresh Philox stream).
    By default ln xi is recorded at every integer multiple of max(dt, t_max/512).
    """
    if xi0 <= 0.0:
        raise ValueError(f"xi0 must be positive, got {xi0!r}")
    cap = max_stable_dt(profile)
    if dt <= 0.0 or dt > cap * (1.0 + 1e-12):
        raise ValueError(f"dt must lie in (0, {cap:.6g}] for this profile, got {dt!r}")
    if record_times is None:
        spacing = max(dt, t_max / 512.0)
        record_times = np.arange(0.0, t_max + spacing / 2, spacing)
    if stream is None or isinstance(stream, (int, np.integer)):
        stream = np.random.Generator(np.random.Philox(np.random.SeedSequence(stream)))
    n_steps_total = int(round(t_max / dt))
    record_steps, times = _resolve_record_steps(record_times, t_max, dt)
    g_tab, eta_lo, inv_d_eta = _g_table(profile)
    eta = np.array([np.log(xi0)], dtype=np.float64)
    out = np.empty((1, len(record_steps)), dtype=np.float64)

    class _SingleStream:
        def draw(self, n_steps):
            return stream.standard_normal((n_steps, 1))

    _integrate(eta, _SingleStream(), n_steps_total, record_steps, dt, g_tab,
               eta_lo, inv_d_eta, out)
    return DistancePath(times=times, log_xi=out[0].copy(), xi0=float(xi0))
