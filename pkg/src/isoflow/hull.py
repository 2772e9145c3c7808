"""Minimal concave majorant of 1 - Phi on the positive half-line.

The majorant is the upper boundary of the convex hull of the sampled graph
of 1 - Phi, computed with a monotone-chain scan.  Beyond the support of Phi
the function is identically 1, so extending the sample with that constant
level out to a finite cap reproduces the majorant of the full half-line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import CorrelationProfile


class ConditionViolation(RuntimeError):
    """The sampled profile violates a structural hypothesis (gap >= 1)."""


def upper_concave_envelope(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper concave envelope of points sorted by x.

    Monotone-chain scan: a previous vertex is discarded while the incoming
    point makes a non-right turn (the middle vertex lies on or below the
    chord, so it cannot be a vertex of the upper hull).
    """
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    hx: list[float] = []
    hy: list[float] = []
    for px, py in zip(x, y):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (py - hy[-2]) - (hy[-1] - hy[-2]) * (px - hx[-2])
            if cross >= 0.0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(float(px))
        hy.append(float(py))
    return np.asarray(hx), np.asarray(hy)


@dataclass(frozen=True)
class ConcaveMajorant:
    """Piecewise-linear minimal concave majorant F on [0, z_cap]."""

    vertices_z: np.ndarray
    vertices_f: np.ndarray
    z_cap: float
    gap: float  # sup |F - (1 - Phi)|

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.interp(z, self.vertices_z, self.vertices_f)


def concave_majorant(
    profile: CorrelationProfile,
    cap_factor: float = 4.0,
    dense: int = 8192,
) -> tuple[ConcaveMajorant, float]:
    """Minimal concave majorant of 1 - Phi and its sup-norm gap.

    Sample points are the profile grid plus the constant level 1 on
    (z_max, cap_factor * z_max]; since 1 - Phi is identically 1 past the
    support, the majorant there is the constant 1 and a finite cap loses
    nothing.  Raises ConditionViolation when the gap reaches 1.
    """
    z_max = profile.z_max
    z_cap = cap_factor * z_max
    ext = np.linspace(z_max, z_cap, 17)[1:]
    zs = np.concatenate([profile.grid, ext])
    ys = np.concatenate([1.0 - profile.phi_values, np.ones_like(ext)])
    hx, hy = upper_concave_envelope(zs, ys)

    # evaluate the gap on the dense grid joined with the sample points
    # (structure such as narrow spikes lives exactly on the samples)
    zd = np.union1d(np.linspace(0.0, z_cap, dense), zs)
    f_dense = np.interp(zd, hx, hy)
    gap = float(np.max(f_dense - profile.one_minus_phi(zd)))
    if gap >= 1.0:
        raise ConditionViolation(
            f"concave majorant gap {gap:.6f} >= 1; the moment bracket "
            "constants are undefined for this profile"
        )
    majorant = ConcaveMajorant(vertices_z=hx, vertices_f=hy, z_cap=z_cap, gap=gap)
    return majorant, gap
