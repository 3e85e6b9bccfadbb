"""Lipschitz space-time reconstruction of RKDG trajectories and its residual.

Per time node, the DG solution is lifted to a globally continuous
piecewise polynomial of degree p+1: each cell polynomial matches the
numerical-flux intermediate state at both endpoints and keeps the moments
of degree <= p-1 of the DG solution (a square, always solvable system
with a closed-form solution in the modal basis).  In time, each step is
filled with the two-point cubic Hermite interpolant whose derivative data
is the lifted DG operator evaluation.  The residual of the reconstruction
against the (inhomogeneous) conservation law is integrated with the
7-point-in-time, 10-point-in-space tensor Gauss rule.
"""

from dataclasses import dataclass

import numpy as np

from .dgspace import DGState, ref_tables
from .quadrature import LegendreBasis, gauss_legendre, legendre_table

TIME_QUAD_POINTS = 7
SPACE_QUAD_POINTS = 10
_SLAB_CHUNK = 16


def spatial_reconstruct(coeffs, iface):
    """Continuous degree-(p+1) lift of modal DG coefficients.

    `iface[l]` is the prescribed value at interface x_l; cell l receives
    endpoint values (iface[l], iface[l+1]) and keeps the DG moments of
    degree <= p-1.  Returns modal coefficients of shape (N, p+2, m).
    """
    n, kp1, m = coeffs.shape
    p = kp1 - 1
    w_left = iface
    w_right = np.roll(iface, -1, axis=0)
    low = coeffs[:, : max(p, 0), :]
    signs = (-1.0) ** np.arange(p)
    s_plus = low.sum(axis=1)
    s_minus = np.einsum("nkm,k->nm", low, signs)
    rhs_sum = w_right - s_plus                      # a_p + a_{p+1}
    rhs_diff = ((-1.0) ** p) * (w_left - s_minus)   # a_p - a_{p+1}
    out = np.empty((n, p + 2, m))
    out[:, :p, :] = low
    out[:, p, :] = 0.5 * (rhs_sum + rhs_diff)
    out[:, p + 1, :] = 0.5 * (rhs_sum - rhs_diff)
    return out


def _hermite(tau):
    """Cubic Hermite basis on [0, 1] and its tau-derivatives, shape (4, len(tau))."""
    tau = np.asarray(tau, dtype=float)
    t2, t3 = tau * tau, tau**3
    vals = np.stack([
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + tau,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    ])
    ders = np.stack([
        6.0 * t2 - 6.0 * tau,
        3.0 * t2 - 4.0 * tau + 1.0,
        -6.0 * t2 + 6.0 * tau,
        3.0 * t2 - 2.0 * tau,
    ])
    return vals, ders


@dataclass
class _SlabStats:
    """Per-slab quadrature sweep results, computed once per reconstruction."""

    residual_sq: np.ndarray   # (n_slabs,)
    slab_lip: np.ndarray      # (n_slabs,)
    slab_dt_max: np.ndarray   # (n_slabs,) max |d/dt u^st|
    slab_min: np.ndarray      # (n_slabs, m)
    slab_max: np.ndarray      # (n_slabs, m)
    node_lip: np.ndarray      # (n_nodes,)
    node_min: np.ndarray      # (n_nodes, m)
    node_max: np.ndarray      # (n_nodes, m)


class SpaceTimeReconstruction:
    """Per-sample Lipschitz reconstruction u^st, evaluable with derivatives.

    Piecewise polynomial of degree p+1 in space (continuous across cells)
    and cubic in time on each step slab.
    """

    def __init__(self, mesh, system, xi, times, ucoef, vcoef):
        self.mesh = mesh
        self.system = system
        self.xi = xi
        self.times = np.asarray(times, dtype=float)
        self.ucoef = ucoef  # (n_nodes, N, p+2, m)
        self.vcoef = vcoef
        self.degree = ucoef.shape[2] - 1
        self._stats = None

    @property
    def n_slabs(self):
        return self.times.size - 1

    @property
    def t_final(self):
        return float(self.times[-1])

    def _node_index(self, s):
        """Snap s to the nearest time node."""
        if not 0.0 < s <= self.t_final + 1e-12:
            raise ValueError(f"time {s} outside (0, {self.t_final}]")
        return int(np.argmin(np.abs(self.times - s)))

    def slice_coeffs(self, t):
        """Modal coefficients of u^st(t, .), shape (N, p+2, m)."""
        t = float(np.clip(t, 0.0, self.t_final))
        j = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.n_slabs - 1))
        dt = self.times[j + 1] - self.times[j]
        tau = (t - self.times[j]) / dt
        hv, _ = _hermite(np.array([tau]))
        return (
            hv[0, 0] * self.ucoef[j]
            + hv[1, 0] * dt * self.vcoef[j]
            + hv[2, 0] * self.ucoef[j + 1]
            + hv[3, 0] * dt * self.vcoef[j + 1]
        )

    def slice_state(self, t) -> DGState:
        return DGState(self.mesh, self.degree, self.slice_coeffs(t), time=float(t))

    def stats(self) -> _SlabStats:
        if self._stats is None:
            self._stats = self._sweep()
        return self._stats

    def _sweep(self, nq_time=TIME_QUAD_POINTS, nq_space=SPACE_QUAD_POINTS, force_numpy=False):
        mesh, system = self.mesh, self.system
        n_nodes = self.times.size
        n_slabs = self.n_slabs
        m = self.ucoef.shape[3]

        t_rule = gauss_legendre(nq_time)
        tau = 0.5 * (t_rule.nodes + 1.0)
        wt = 0.5 * t_rule.weights  # unit-interval weights
        hv, hd = _hermite(tau)

        x_rule, pv, pd = ref_tables(self.degree, nq_space)
        x_pts = mesh.points(x_rule.nodes)                     # (N, X)
        wx = 0.5 * mesh.h[:, None] * x_rule.weights[None, :]  # physical weights
        dxdxi = (2.0 / mesh.h)[:, None, None]

        residual_sq = np.empty(n_slabs)
        slab_lip = np.empty(n_slabs)
        slab_dt_max = np.empty(n_slabs)
        slab_min = np.empty((n_slabs, m))
        slab_max = np.empty((n_slabs, m))

        kernel_mode = getattr(system, "residual_kernel_mode", None)
        if not force_numpy and m == 3 and kernel_mode in ("homogeneous", "travelling-wave"):
            from ._kernels import euler_residual_sweep

            euler_residual_sweep(
                self.ucoef, self.vcoef, self.times, mesh.h,
                np.ascontiguousarray(pv), np.ascontiguousarray(pd), x_pts, wx,
                tau, wt, hv, hd, self.xi, system.gamma,
                kernel_mode == "travelling-wave",
                residual_sq, slab_lip, slab_dt_max, slab_min, slab_max,
            )
            return self._finish_stats(
                residual_sq, slab_lip, slab_dt_max, slab_min, slab_max, x_rule
            )

        dts = np.diff(self.times)
        for j0 in range(0, n_slabs, _SLAB_CHUNK):
            j1 = min(j0 + _SLAB_CHUNK, n_slabs)
            u0, u1 = self.ucoef[j0:j1], self.ucoef[j0 + 1 : j1 + 1]
            v0, v1 = self.vcoef[j0:j1], self.vcoef[j0 + 1 : j1 + 1]
            dt = dts[j0:j1]
            sv0 = dt[:, None, None, None] * v0
            sv1 = dt[:, None, None, None] * v1
            # modal coefficients and their time derivatives at the 7 time nodes
            c = (
                np.einsum("q,snkm->sqnkm", hv[0], u0)
                + np.einsum("q,snkm->sqnkm", hv[1], sv0)
                + np.einsum("q,snkm->sqnkm", hv[2], u1)
                + np.einsum("q,snkm->sqnkm", hv[3], sv1)
            )
            ct = (
                np.einsum("q,snkm->sqnkm", hd[0], u0)
                + np.einsum("q,snkm->sqnkm", hd[1], sv0)
                + np.einsum("q,snkm->sqnkm", hd[2], u1)
                + np.einsum("q,snkm->sqnkm", hd[3], sv1)
            ) / dt[:, None, None, None, None]

            u = np.einsum("sqnkm,kx->sqnxm", c, pv)
            ux = np.einsum("sqnkm,kx->sqnxm", c, pd) * dxdxi[None, None]
            ut = np.einsum("sqnkm,kx->sqnxm", ct, pv)

            t_grid = self.times[j0:j1, None] + dt[:, None] * tau[None, :]  # (S, Q)
            r = ut + system.jacobian_apply(u, ux)
            r -= system.source(t_grid[:, :, None, None], x_pts[None, None, :, :], self.xi)

            sq = np.einsum("sqnxm,sqnxm->sqnx", r, r)
            residual_sq[j0:j1] = 0.5 * dt * np.einsum("sqnx,q,nx->s", sq, wt, wx)
            slab_lip[j0:j1] = np.max(np.abs(ux), axis=(1, 2, 3, 4))
            slab_dt_max[j0:j1] = np.max(np.abs(ut), axis=(1, 2, 3, 4))
            slab_min[j0:j1] = np.min(u, axis=(1, 2, 3))
            slab_max[j0:j1] = np.max(u, axis=(1, 2, 3))

        return self._finish_stats(residual_sq, slab_lip, slab_dt_max, slab_min, slab_max, x_rule)

    def _finish_stats(self, residual_sq, slab_lip, slab_dt_max, slab_min, slab_max, x_rule):
        # node-level sweep including the cell endpoints (continuity points)
        xi_nodes = np.concatenate([[-1.0], x_rule.nodes, [1.0]])
        pv_n, pd_n = legendre_table(self.degree, xi_nodes)
        un = np.einsum("tnkm,kx->tnxm", self.ucoef, pv_n)
        uxn = np.einsum("tnkm,kx->tnxm", self.ucoef, pd_n) * (2.0 / self.mesh.h)[None, :, None, None]
        node_lip = np.max(np.abs(uxn), axis=(1, 2, 3))
        node_min = np.min(un, axis=(1, 2))
        node_max = np.max(un, axis=(1, 2))

        return _SlabStats(
            residual_sq, slab_lip, slab_dt_max, slab_min, slab_max, node_lip, node_min, node_max
        )

    def residual_norm_sq(self, s):
        """Integral of |R^st|^2 over (0, s) x D by the 7 x 10 tensor Gauss rule."""
        i = self._node_index(s)
        return float(np.sum(self.stats().residual_sq[:i]))

    def lipschitz_bound(self, s):
        """max |d/dx u^st| over (0, s) x D on the quadrature-plus-nodes grid."""
        i = self._node_index(s)
        st = self.stats()
        return float(max(np.max(st.node_lip[: i + 1]), np.max(st.slab_lip[:i], initial=0.0)))

    def time_derivative_bound(self, s):
        """max |d/dt u^st| over (0, s) x D on the quadrature grid."""
        i = self._node_index(s)
        return float(np.max(self.stats().slab_dt_max[:i], initial=0.0))

    def state_range(self, s):
        """Componentwise (min, max) of u^st over the sweep grid up to time s."""
        i = self._node_index(s)
        st = self.stats()
        lo = np.minimum(np.min(st.node_min[: i + 1], axis=0), np.min(st.slab_min[:i], axis=0, initial=np.inf))
        hi = np.maximum(np.max(st.node_max[: i + 1], axis=0), np.max(st.slab_max[:i], axis=0, initial=-np.inf))
        return lo, hi


def _rhs_interface_values(rhs_coeffs, basis):
    """Average of the two one-sided traces of the DG operator at interfaces."""
    right = np.einsum("nkm,k->nm", rhs_coeffs, basis.right_trace)
    left = np.einsum("nkm,k->nm", rhs_coeffs, basis.left_trace)
    return 0.5 * (np.roll(right, 1, axis=0) + left)


def temporal_reconstruct(trajectory, mesh=None, system=None, xi=None) -> SpaceTimeReconstruction:
    """Build the full space-time reconstruction from a recorded trajectory.

    Accepts either a solver Trajectory (carrying mesh/system/xi itself) or a
    bare list of contiguous StepRecords together with those three arguments.
    """
    nodes = getattr(trajectory, "nodes", None)
    if nodes is None:  # list of StepRecords
        records = list(trajectory)
        if not records:
            raise ValueError("empty trajectory")
        nodes = [records[0].start] + [r.end for r in records]
        if mesh is None or system is None or xi is None:
            raise ValueError("mesh, system and xi are required with bare step records")
    else:
        mesh = trajectory.mesh
        system = trajectory.system
        xi = trajectory.xi
    if len(nodes) < 2:
        raise ValueError("trajectory needs at least one step")
    p = nodes[0].coeffs.shape[1] - 1
    basis = LegendreBasis(p)

    n_nodes = len(nodes)
    n, _, m = nodes[0].coeffs.shape
    times = np.array([nd.time for nd in nodes])
    ucoef = np.empty((n_nodes, n, p + 2, m))
    vcoef = np.empty((n_nodes, n, p + 2, m))
    for i, nd in enumerate(nodes):
        ucoef[i] = spatial_reconstruct(nd.coeffs, nd.iface)
        vcoef[i] = spatial_reconstruct(nd.rhs, _rhs_interface_values(nd.rhs, basis))
    return SpaceTimeReconstruction(mesh, system, xi, times, ucoef, vcoef)
