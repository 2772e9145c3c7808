"""Coalescing Brownian system: the zero-correlation-width reference flow.

Particles move with independent standard Brownian increments until two
adjacent clusters meet; from then on they share one driving motion.  A
discrete step detects crossings directly, and additionally applies the
Brownian-bridge first-passage correction: two clusters whose gap stayed
positive across a step still coalesce with probability
exp(-2 a b / (sigma_d^2 dt)), sigma_d^2 = 2 being the variance rate of the
gap, where a and b are the gaps before and after the step.  This removes
the O(sqrt(dt)) bias of crossing detection alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng


@dataclass(frozen=True)
class ArratiaEnsemble:
    """Coalescing trajectories recorded at selected times.

    positions has shape (replications, n, len(times)); coalescence_times
    has shape (replications, n - 1), entry i giving the meeting time of
    initial neighbours i and i+1 (inf when they never met).
    """

    points: np.ndarray
    dt: float
    times: np.ndarray
    positions: np.ndarray
    coalescence_times: np.ndarray
    base_seed: int

    @property
    def replications(self) -> int:
        return self.positions.shape[0]

    def _col(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        # recording snaps requested times onto the step grid, so accept
        # anything within half a step of a recorded time
        if abs(self.times[j] - t) > 0.5 * self.dt + 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} was not recorded (grid: {self.times})")
        return j

    def positions_at(self, t: float) -> np.ndarray:
        return self.positions[:, :, self._col(t)]

    def coalesced_by(self, t: float, boundary: int = 0) -> np.ndarray:
        return self.coalescence_times[:, boundary] <= t


def simulate_arratia_ensemble(
    points,
    t_max: float,
    dt: float,
    replications: int,
    base_seed: int,
    record_times,
    label: str = "arratia",
    bridge_correction: bool = True,
) -> ArratiaEnsemble:
    """Vectorized coalescing system over `replications` realizations."""
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) <= 0.0):
        raise ValueError("points must be strictly increasing")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n = len(pts)
    m = int(replications)
    rec = np.asarray(record_times, dtype=float)
    record_steps = np.unique(np.round(rec / dt).astype(np.int64))
    times = record_steps * dt
    n_steps = int(round(t_max / dt))

    pos = np.tile(pts, (m, 1))
    # leader[r, i]: index of the leftmost member of i's cluster; members of
    # one cluster share the leader's noise and position.
    leader = np.tile(np.arange(n), (m, 1))
    tc = np.full((m, n - 1), np.inf) if n > 1 else np.zeros((m, 0))
    out = np.empty((m, n, len(record_steps)))
    rec_idx = {int(s): j for j, s in enumerate(record_steps)}
    if 0 in rec_idx:
        out[:, :, rec_idx[0]] = pos

    noise = _rng.BlockNoise(base_seed, label, m, cols=n, antithetic=False)
    uniforms = (
        _rng.block_stream(base_seed, label + "/bridge", 0) if bridge_correction else None
    )
    sq_dt = np.sqrt(dt)
    rows = np.arange(m)
    for step in range(1, n_steps + 1):
        z = noise.draw(1)[0]
        z_eff = np.take_along_axis(z, leader, axis=1)
        prev_gap = np.diff(pos, axis=1) if n > 1 else None
        pos = pos + sq_dt * z_eff
        t_now = step * dt
        if n > 1:
            gap = np.diff(pos, axis=1)
            sep = leader[:, 1:] != leader[:, :-1]
            crossed = sep & (gap <= 0.0)
            if bridge_correction:
                open_pairs = sep & (gap > 0.0)
                if np.any(open_pairs):
                    p_hit = np.zeros_like(gap)
                    a = prev_gap[open_pairs]
                    b = gap[open_pairs]
                    p_hit[open_pairs] = np.exp(-a * b / dt)  # sigma_d^2 = 2
                    u = uniforms.random(gap.shape)
                    crossed = crossed | (open_pairs & (u < p_hit))
            # merge left-to-right so chains collapse within one step
            for i in range(n - 1):
                hit = crossed[:, i]
                if not np.any(hit):
                    continue
                tc[hit, i] = np.minimum(tc[hit, i], t_now)
                # merged pair continues from the midpoint of the two values
                mid = 0.5 * (pos[hit, i] + pos[hit, i + 1])
                lead_left = leader[hit, i]
                members = leader[hit] == leader[hit, i + 1][:, None]
                members |= leader[hit] == lead_left[:, None]
                sub_pos = pos[hit]
                sub_lead = leader[hit]
                sub_pos[members] = np.broadcast_to(mid[:, None], sub_pos.shape)[members]
                sub_lead[members] = np.broadcast_to(lead_left[:, None], sub_lead.shape)[members]
                pos[hit] = sub_pos
                leader[hit] = sub_lead
                # recompute crossings to the right of a merge
                if i + 2 <= n - 1:
                    gap_r = pos[rows, np.minimum(i + 2, n - 1)] - pos[rows, i + 1]
                    still_sep = leader[:, min(i + 2, n - 1)] != leader[:, i + 1]
                    crossed[:, i + 1] = crossed[:, i + 1] | (
                        hit & still_sep & (gap_r <= 0.0)
                    )
        if step in rec_idx:
            out[:, :, rec_idx[step]] = pos
    return ArratiaEnsemble(
        points=pts, dt=float(dt), times=times, positions=out,
        coalescence_times=tc, base_seed=int(base_seed),
    )


def simulate_arratia(
    points,
    t_max: float,
    dt: float,
    stream: int | None = None,
    record_times=None,
) -> ArratiaEnsemble:
    """Single coalescing realization (ensemble of one)."""
    if record_times is None:
        spacing = max(dt, t_max / 512.0)
        record_times = np.arange(0.0, t_max + spacing / 2, spacing)
    return simulate_arratia_ensemble(
        points, t_max, dt, 1, 0 if stream is None else int(stream), record_times
    )


def pair_coalescence_probability(d: float, t: float) -> float:
    """Reflection-principle meeting probability of two coalescing Brownian
    particles started distance d apart: their gap is a Brownian motion of
    variance rate 2, so P(min gap <= 0 by t) = erfc(d / (2 sqrt(t)))."""
    from math import erfc, sqrt

    return erfc(d / (2.0 * sqrt(t)))
