"""Periodic 1D meshes and modal DG vector fields on them.

A DG field of degree p on a mesh with N cells and m solution components
is stored as a coefficient tensor of shape (N, p+1, m) in the Legendre
basis of each cell, so the L2 projection is diagonal and cell means are
the mode-0 coefficients.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import LegendreBasis, gauss_legendre, legendre_table

SPATIAL_QUAD_POINTS = 10  # estimator-grade rule, fixed for all error integrals


class Mesh:
    """Quasi-uniform periodic partition of the domain (0, 1)."""

    def __init__(self, boundaries):
        x = np.asarray(boundaries, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("mesh needs at least one cell")
        if not (np.isclose(x[0], 0.0, atol=1e-14) and np.isclose(x[-1], 1.0, atol=1e-14)):
            raise ValueError("mesh must span (0, 1)")
        h = np.diff(x)
        if np.any(h <= 0):
            raise ValueError("cell boundaries must be strictly increasing")
        if h.max() / h.min() > 10.0:
            raise ValueError("mesh violates quasi-uniformity (h_max/h_min > 10)")
        self.x = x
        self.h = h
        self.n_cells = h.size
        self.h_min = float(h.min())
        self.h_max = float(h.max())
        self.centers = 0.5 * (x[:-1] + x[1:])

    @classmethod
    def uniform(cls, n_cells: int):
        return cls(np.linspace(0.0, 1.0, n_cells + 1))

    def points(self, xi):
        """Physical points for reference coordinates xi, shape (n_cells, len(xi))."""
        xi = np.asarray(xi, dtype=float)
        return self.centers[:, None] + 0.5 * self.h[:, None] * xi[None, :]

    def quadrature(self, n_points=SPATIAL_QUAD_POINTS):
        """Physical quadrature points (N, q) and weights (N, q) on every cell."""
        rule = gauss_legendre(n_points)
        pts = self.points(rule.nodes)
        wts = 0.5 * self.h[:, None] * rule.weights[None, :]
        return pts, wts

    def __eq__(self, other):
        return isinstance(other, Mesh) and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((self.n_cells, self.x[1] if self.n_cells else 0.0))


@lru_cache(maxsize=None)
def ref_tables(degree: int, n_points: int):
    """Legendre values/derivatives for P_0..P_degree at an n-point Gauss rule."""
    rule = gauss_legendre(n_points)
    vals, ders = legendre_table(degree, rule.nodes)
    vals.flags.writeable = False
    ders.flags.writeable = False
    return rule, vals, ders


@dataclass
class DGState:
    """Piecewise-polynomial vector field at one time instant."""

    mesh: Mesh
    degree: int
    coeffs: np.ndarray  # (n_cells, degree+1, m)
    time: float = 0.0
    basis: LegendreBasis = field(init=False, repr=False)

    def __post_init__(self):
        n, k, _ = self.coeffs.shape
        if n != self.mesh.n_cells or k != self.degree + 1:
            raise ValueError("coefficient tensor inconsistent with mesh/degree")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite DG coefficients")
        self.basis = LegendreBasis(self.degree)

    @property
    def n_components(self):
        return self.coeffs.shape[2]

    def cell_means(self):
        return self.coeffs[:, 0, :]

    def eval_ref(self, xi):
        """Values at reference coordinates xi in every cell: (N, len(xi), m)."""
        vals = legendre_table(self.degree, xi)[0]
        return np.einsum("nkm,kq->nqm", self.coeffs, vals)

    def eval_ref_dx(self, xi):
        """Spatial derivative at reference coordinates: (N, len(xi), m)."""
        ders = legendre_table(self.degree, xi)[1]
        out = np.einsum("nkm,kq->nqm", self.coeffs, ders)
        return out * (2.0 / self.mesh.h)[:, None, None]

    def traces(self):
        """Boundary values per cell: (left, right), each (N, m)."""
        left = np.einsum("nkm,k->nm", self.coeffs, self.basis.left_trace)
        right = np.einsum("nkm,k->nm", self.coeffs, self.basis.right_trace)
        return left, right

    def eval_at(self, x):
        """Values at arbitrary physical points (periodic wrap), shape x.shape + (m,)."""
        x = np.asarray(x, dtype=float)
        xp = np.mod(x.reshape(-1), 1.0)
        cells = np.clip(np.searchsorted(self.mesh.x, xp, side="right") - 1, 0, self.mesh.n_cells - 1)
        xi = 2.0 * (xp - self.mesh.centers[cells]) / self.mesh.h[cells]
        vals = legendre_table(self.degree, xi)[0]  # (k, npts)
        out = np.einsum("pkc,kp->pc", self.coeffs[cells], vals)
        return out.reshape(x.shape + (self.n_components,))


def l2_project(f, mesh: Mesh, degree: int, n_quad=SPATIAL_QUAD_POINTS, time=0.0) -> DGState:
    """L2 projection of an evaluable vector field into the degree-p DG space.

    `f` maps an array of physical points (...,) to values (..., m).  Modal
    coefficients are c_{l,k} = (2k+1)/2 * int f(x_l(xi)) P_k(xi) dxi.
    """
    if mesh.n_cells == 0:
        raise ValueError("empty mesh")
    rule, vals, _ = ref_tables(degree, n_quad)
    pts = mesh.points(rule.nodes)  # (N, q)
    fv = np.asarray(f(pts), dtype=float)
    if fv.ndim == 2:
        fv = fv[..., None]
    scale = (2.0 * np.arange(degree + 1) + 1.0) / 2.0
    coeffs = np.einsum("q,kq,nqm->nkm", rule.weights, vals, fv) * scale[None, :, None]
    return DGState(mesh, degree, coeffs, time=time)
