"""Inner step loops for the simulators.

Numba-compiled when available (the default), with numpy fallbacks that
perform the identical arithmetic in the identical order.  All kernels are
elementwise over replications with disjoint writes, so results are
bit-identical for any thread count.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap

    prange = range


@njit(cache=True, parallel=True)
def _distance_chunk_nb(eta, z_chunk, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta):
    n_tab = g_tab.shape[0]
    n_steps = z_chunk.shape[0]
    for s in range(n_steps):
        z = z_chunk[s]
        for i in prange(eta.shape[0]):
            u = (eta[i] - eta_lo) * inv_d_eta
            if u <= 0.0:
                g = g_tab[0]
            elif u >= n_tab - 1:
                g = g_tab[n_tab - 1]
            else:
                k = int(u)
                w = u - k
                g = g_tab[k] * (1.0 - w) + g_tab[k + 1] * w
            eta[i] += g * (sq_dt * z[i] - half_dt * g)


def _distance_chunk_np(eta, z_chunk, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta):
    n_tab = g_tab.shape[0]
    for s in range(z_chunk.shape[0]):
        u = np.clip((eta - eta_lo) * inv_d_eta, 0.0, n_tab - 1)
        k = np.minimum(u.astype(np.int64), n_tab - 2)
        w = u - k
        g = g_tab[k] * (1.0 - w) + g_tab[k + 1] * w
        eta += g * (sq_dt * z_chunk[s] - half_dt * g)


def distance_chunk(eta, z_chunk, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta):
    if HAVE_NUMBA:
        _distance_chunk_nb(eta, z_chunk, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta)
    else:
        _distance_chunk_np(eta, z_chunk, sq_dt, half_dt, g_tab, eta_lo, inv_d_eta)


# Inversions deeper than this are counted as genuine order violations of
# the scheme; shallower ones are float-level ties of numerically coalesced
# particles (still repaired by re-sorting, not counted).  The tie scale is
# set by cancellation in the near-rank-one Cholesky factor, which puts the
# relative motion of coalesced particles at ~sqrt(machine eps) * sqrt(dt).
ORDER_TOL = 1e-6


@njit(cache=True, parallel=True)
def _npoint_chunk_nb(pos, z_chunk, sq_dt, phi_tab, inv_h, z_max, d_asym, beta, curv,
                     c_buf, l_buf, viol):
    n_steps = z_chunk.shape[0]
    m, n = pos.shape
    n_tab = phi_tab.shape[0]
    for s in range(n_steps):
        z = z_chunk[s]
        for r in prange(m):
            # pairwise correlation matrix; diagonal is exactly 1.  Below
            # d_asym the fitted expansion keeps the exact quadratic contact
            # of Phi at zero (a linear table would turn the contraction of
            # nearly-coalesced pairs into sqrt-scale jitter).
            for i in range(n):
                c_buf[r, i, i] = 1.0
                for j in range(i):
                    d = pos[r, i] - pos[r, j]
                    if d < 0.0:
                        d = -d
                    if d >= z_max:
                        c = 0.0
                    elif d < d_asym:
                        c = 1.0 - d * d * (beta + curv * d * d)
                    else:
                        u = d * inv_h
                        k = int(u)
                        w = u - k
                        if k + 1 < n_tab:
                            c = phi_tab[k] * (1.0 - w) + phi_tab[k + 1] * w
                        else:
                            c = 0.0
                    c_buf[r, i, j] = c
                    c_buf[r, j, i] = c
            # positive-semidefinite Cholesky: non-positive pivots clip to
            # zero and their columns vanish, so coalesced (rank-deficient)
            # configurations factor cleanly
            for i in range(n):
                acc = c_buf[r, i, i]
                for k in range(i):
                    acc -= l_buf[r, i, k] * l_buf[r, i, k]
                piv = np.sqrt(acc) if acc > 1e-14 else 0.0
                l_buf[r, i, i] = piv
                for j in range(i + 1, n):
                    t = c_buf[r, j, i]
                    for k in range(i):
                        t -= l_buf[r, j, k] * l_buf[r, i, k]
                    l_buf[r, j, i] = t / piv if piv > 0.0 else 0.0
            for i in range(n - 1, -1, -1):
                acc = 0.0
                for j in range(i + 1):
                    acc += l_buf[r, i, j] * z[r, j]
                pos[r, i] += sq_dt * acc
            # order repair: re-sort, count only genuine inversions
            for i in range(1, n):
                if pos[r, i] < pos[r, i - 1]:
                    if pos[r, i - 1] - pos[r, i] > ORDER_TOL:
                        viol[r] += 1
                    v = pos[r, i]
                    j = i - 1
                    while j >= 0 and pos[r, j] > v:
                        pos[r, j + 1] = pos[r, j]
                        j -= 1
                    pos[r, j + 1] = v


def _npoint_chunk_np(pos, z_chunk, sq_dt, phi_tab, inv_h, z_max, d_asym, beta, curv,
                     c_buf, l_buf, viol):
    m, n = pos.shape
    n_tab = phi_tab.shape[0]
    for s in range(z_chunk.shape[0]):
        z = z_chunk[s]
        for i in range(n):
            c_buf[:, i, i] = 1.0
            for j in range(i):
                d = np.abs(pos[:, i] - pos[:, j])
                u = np.clip(d * inv_h, 0.0, n_tab - 1)
                k = np.minimum(u.astype(np.int64), n_tab - 2)
                w = u - k
                c = np.where(d >= z_max, 0.0, phi_tab[k] * (1.0 - w) + phi_tab[k + 1] * w)
                small = d < d_asym
                if np.any(small):
                    ds = d[small]
                    c[small] = 1.0 - ds * ds * (beta + curv * ds * ds)
                c_buf[:, i, j] = c
                c_buf[:, j, i] = c
        for i in range(n):
            acc = c_buf[:, i, i].copy()
            for k in range(i):
                acc -= l_buf[:, i, k] * l_buf[:, i, k]
            piv = np.where(acc > 1e-14, np.sqrt(np.maximum(acc, 0.0)), 0.0)
            l_buf[:, i, i] = piv
            for j in range(i + 1, n):
                t = c_buf[:, j, i].copy()
                for k in range(i):
                    t -= l_buf[:, j, k] * l_buf[:, i, k]
                l_buf[:, j, i] = np.where(piv > 0.0, t / np.where(piv > 0.0, piv, 1.0), 0.0)
        for i in range(n - 1, -1, -1):
            acc = np.zeros(m)
            for j in range(i + 1):
                acc += l_buf[:, i, j] * z[:, j]
            pos[:, i] += sq_dt * acc
        order = np.diff(pos, axis=1)
        bad = order < 0.0
        if np.any(bad):
            viol += np.sum(order < -ORDER_TOL, axis=1)
            pos.sort(axis=1)


def npoint_chunk(pos, z_chunk, sq_dt, phi_tab, inv_h, z_max, d_asym, beta, curv,
                 c_buf, l_buf, viol):
    if HAVE_NUMBA:
        _npoint_chunk_nb(pos, z_chunk, sq_dt, phi_tab, inv_h, z_max, d_asym, beta, curv,
                         c_buf, l_buf, viol)
    else:
        _npoint_chunk_np(pos, z_chunk, sq_dt, phi_tab, inv_h, z_max, d_asym, beta, curv,
                         c_buf, l_buf, viol)
