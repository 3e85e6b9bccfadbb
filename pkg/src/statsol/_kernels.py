"""Fused numba kernel for the Euler benchmark residual sweep.

The generic numpy sweep in `reconstruction` is the reference
implementation for arbitrary systems; this kernel reproduces it for the
ideal-gas Euler system with the travelling-wave source (amplitude 0.2 xi,
wavenumber 6 pi, unit phase speed) in a single pass without large
temporaries.  Equivalence is covered by tests.
"""

import numpy as np
from numba import njit

_WAVE = 6.0 * np.pi


@njit(cache=True)
def euler_residual_sweep(ucoef, vcoef, times, h, pv, pd, x_pts, wx, tau, wt, hv, hd,
                         xi, gamma, with_source,
                         residual_sq, slab_lip, slab_dtmax, slab_min, slab_max):
    """Per-slab residual integrals and state statistics, written in place."""
    n_nodes, n_cells, n_modes, m = ucoef.shape
    n_slabs = n_nodes - 1
    nq_t = tau.size
    nq_x = pv.shape[1]
    amp = 0.2 * xi
    a = gamma - 1.0

    cc = np.empty((n_modes, m))
    cct = np.empty((n_modes, m))

    # factored travelling-wave phase: theta = 6 pi (x - t)
    cx = np.cos(_WAVE * x_pts)
    sx = np.sin(_WAVE * x_pts)

    for s in range(n_slabs):
        dt = times[s + 1] - times[s]
        acc = 0.0
        lip = 0.0
        dtmax = 0.0
        for c in range(m):
            slab_min[s, c] = np.inf
            slab_max[s, c] = -np.inf
        for q in range(nq_t):
            h0, h1, h2, h3 = hv[0, q], hv[1, q], hv[2, q], hv[3, q]
            d0, d1, d2, d3 = hd[0, q], hd[1, q], hd[2, q], hd[3, q]
            t = times[s] + dt * tau[q]
            ct = np.cos(_WAVE * t)
            st = np.sin(_WAVE * t)
            for n in range(n_cells):
                dxdxi = 2.0 / h[n]
                for k in range(n_modes):
                    for c in range(m):
                        u0 = ucoef[s, n, k, c]
                        u1 = ucoef[s + 1, n, k, c]
                        v0 = dt * vcoef[s, n, k, c]
                        v1 = dt * vcoef[s + 1, n, k, c]
                        cc[k, c] = h0 * u0 + h1 * v0 + h2 * u1 + h3 * v1
                        cct[k, c] = (d0 * u0 + d1 * v0 + d2 * u1 + d3 * v1) / dt
                for x in range(nq_x):
                    rho = 0.0
                    mom = 0.0
                    ener = 0.0
                    rho_x = 0.0
                    mom_x = 0.0
                    ener_x = 0.0
                    rho_t = 0.0
                    mom_t = 0.0
                    ener_t = 0.0
                    for k in range(n_modes):
                        b = pv[k, x]
                        bx = pd[k, x] * dxdxi
                        rho += cc[k, 0] * b
                        mom += cc[k, 1] * b
                        ener += cc[k, 2] * b
                        rho_x += cc[k, 0] * bx
                        mom_x += cc[k, 1] * bx
                        ener_x += cc[k, 2] * bx
                        rho_t += cct[k, 0] * b
                        mom_t += cct[k, 1] * b
                        ener_t += cct[k, 2] * b

                    if rho < slab_min[s, 0]:
                        slab_min[s, 0] = rho
                    if rho > slab_max[s, 0]:
                        slab_max[s, 0] = rho
                    if mom < slab_min[s, 1]:
                        slab_min[s, 1] = mom
                    if mom > slab_max[s, 1]:
                        slab_max[s, 1] = mom
                    if ener < slab_min[s, 2]:
                        slab_min[s, 2] = ener
                    if ener > slab_max[s, 2]:
                        slab_max[s, 2] = ener
                    lip = max(lip, abs(rho_x), abs(mom_x), abs(ener_x))
                    dtmax = max(dtmax, abs(rho_t), abs(mom_t), abs(ener_t))

                    vel = mom / rho
                    v2 = vel * vel
                    e_over_rho = ener / rho
                    # Df(u) . u_x, closed form
                    r0 = rho_t + mom_x
                    r1 = mom_t + 0.5 * (gamma - 3.0) * v2 * rho_x \
                        + (3.0 - gamma) * vel * mom_x + a * ener_x
                    r2 = ener_t + (a * v2 * vel - gamma * vel * e_over_rho) * rho_x \
                        + (gamma * e_over_rho - 1.5 * a * v2) * mom_x + gamma * vel * ener_x

                    if with_source:
                        cth = cx[n, x] * ct + sx[n, x] * st
                        sth = sx[n, x] * ct - cx[n, x] * st
                        rho_e = 2.0 + amp * cth
                        vel_e = 1.0 + amp * sth
                        rho_ex = -_WAVE * amp * sth
                        vel_ex = _WAVE * amp * cth
                        rho_et, vel_et = -rho_ex, -vel_ex
                        ee = rho_e * rho_e
                        ee_t = 2.0 * rho_e * rho_et
                        ee_x = 2.0 * rho_e * rho_ex
                        p_e = a * (ee - 0.5 * rho_e * vel_e * vel_e)
                        p_ex = a * (ee_x - 0.5 * rho_ex * vel_e * vel_e - rho_e * vel_e * vel_ex)
                        r0 -= rho_et + rho_ex * vel_e + rho_e * vel_ex
                        r1 -= (rho_et * vel_e + rho_e * vel_et
                               + rho_ex * vel_e * vel_e + 2.0 * rho_e * vel_e * vel_ex + p_ex)
                        r2 -= ee_t + (ee_x + p_ex) * vel_e + (ee + p_e) * vel_ex

                    acc += wt[q] * wx[n, x] * (r0 * r0 + r1 * r1 + r2 * r2)
        residual_sq[s] = 0.5 * dt * acc
        slab_lip[s] = lip
        slab_dtmax[s] = dtmax
