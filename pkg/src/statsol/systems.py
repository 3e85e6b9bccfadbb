"""Conservation-law system models: flux, entropy pair, and benchmark data.

Systems expose closed-form fluxes, Jacobians, entropy pairs (with exact
gradients and Hessians) and admissibility checks on arrays of states with
shape (..., m).  The compressible Euler system carries the smooth
manufactured benchmark: a travelling cosine/sine perturbation of a
constant state, made exact by an analytic source term.
"""

import numpy as np

from .errors import StateSpaceError

ADMISSIBLE_FLOOR = 1e-10  # positivity floor for density and pressure


class SystemModel:
    """Base class: scalar conservation law with the square entropy."""

    m = 1
    name = "abstract"

    def flux(self, u):
        raise NotImplementedError

    def flux_jacobian(self, u):
        raise NotImplementedError

    def jacobian_apply(self, u, v):
        """Df(u) @ v without materializing the Jacobian (override when cheap)."""
        return np.einsum("...ij,...j->...i", self.flux_jacobian(u), v)

    def flux_hessians(self, u):
        """Componentwise flux Hessians, shape (..., m, m, m)."""
        raise NotImplementedError

    def wave_speed(self, u):
        """Spectral radius of Df(u)."""
        raise NotImplementedError

    def entropy(self, u):
        raise NotImplementedError

    def entropy_gradient(self, u):
        raise NotImplementedError

    def entropy_hessian(self, u):
        raise NotImplementedError

    def entropy_flux(self, u):
        raise NotImplementedError

    def admissible(self, u):
        """Boolean mask of states inside the open state space."""
        return np.ones(np.asarray(u).shape[:-1], dtype=bool)

    def check_admissible(self, u, context=""):
        ok = self.admissible(u)
        if not np.all(ok):
            bad = np.asarray(u)[~ok]
            where = f" ({context})" if context else ""
            raise StateSpaceError(
                f"{self.name}: inadmissible state{where}: first offender {bad.reshape(-1, self.m)[0]}"
            )

    def right_eigenvectors(self, u):
        """Right eigenvector matrices of Df(u), or None for componentwise limiting."""
        return None

    def source(self, t, x, xi):
        """External source Q(t, x, xi); zero for homogeneous systems."""
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(np.shape(t), x.shape)
        return np.zeros(shape + (self.m,))


def relative_entropy(system, u, v):
    """eta(u|v) = eta(u) - eta(v) - Deta(v).(u - v)."""
    du = np.asarray(u) - np.asarray(v)
    return (
        system.entropy(u)
        - system.entropy(v)
        - np.einsum("...i,...i->...", system.entropy_gradient(v), du)
    )


def relative_flux(system, u, v):
    """f(u|v) = f(u) - f(v) - Df(v)(u - v)."""
    du = np.asarray(u) - np.asarray(v)
    return system.flux(u) - system.flux(v) - system.jacobian_apply(v, du)


class LinearAdvection(SystemModel):
    """u_t + a u_x = 0 with eta = u^2/2, q = a u^2/2."""

    name = "advection"

    def __init__(self, speed=1.0):
        self.speed = float(speed)

    def flux(self, u):
        return self.speed * np.asarray(u, dtype=float)

    def flux_jacobian(self, u):
        u = np.asarray(u)
        return np.full(u.shape[:-1] + (1, 1), self.speed)

    def jacobian_apply(self, u, v):
        return self.speed * v

    def flux_hessians(self, u):
        u = np.asarray(u)
        return np.zeros(u.shape[:-1] + (1, 1, 1))

    def wave_speed(self, u):
        u = np.asarray(u)
        return np.full(u.shape[:-1], abs(self.speed))

    def entropy(self, u):
        u = np.asarray(u)
        return 0.5 * u[..., 0] ** 2

    def entropy_gradient(self, u):
        return np.asarray(u, dtype=float).copy()

    def entropy_hessian(self, u):
        u = np.asarray(u)
        return np.ones(u.shape[:-1] + (1, 1))

    def entropy_flux(self, u):
        return self.speed * self.entropy(u)


class Burgers(SystemModel):
    """u_t + (u^2/2)_x = 0 with eta = u^2/2, q = u^3/3."""

    name = "burgers"

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def flux_jacobian(self, u):
        u = np.asarray(u)
        return u[..., None]

    def jacobian_apply(self, u, v):
        return np.asarray(u) * v

    def flux_hessians(self, u):
        u = np.asarray(u)
        return np.ones(u.shape[:-1] + (1, 1, 1))

    def wave_speed(self, u):
        return np.abs(np.asarray(u)[..., 0])

    def entropy(self, u):
        u = np.asarray(u)
        return 0.5 * u[..., 0] ** 2

    def entropy_gradient(self, u):
        return np.asarray(u, dtype=float).copy()

    def entropy_hessian(self, u):
        u = np.asarray(u)
        return np.ones(u.shape[:-1] + (1, 1))

    def entropy_flux(self, u):
        u = np.asarray(u)
        return u[..., 0] ** 3 / 3.0


class EulerIdealGas(SystemModel):
    """1D compressible Euler equations for an ideal gas, gamma = 1.4.

    State u = (rho, m, E); pressure p = (gamma-1)(E - m^2/(2 rho)).
    The entropy pair is the physical one, eta = -rho s / (gamma - 1)
    with s = ln(p rho^-gamma) and q = (m/rho) eta.
    """

    m = 3
    name = "euler"
    residual_kernel_mode = "homogeneous"  # fused sweep kernel applicability

    def __init__(self, gamma=1.4):
        self.gamma = float(gamma)

    def primitives(self, u):
        """(rho, velocity, pressure) with admissibility enforced."""
        u = np.asarray(u, dtype=float)
        rho, mom, ener = u[..., 0], u[..., 1], u[..., 2]
        if np.any(rho <= ADMISSIBLE_FLOOR) or not np.all(np.isfinite(rho)):
            bad = u[~((rho > ADMISSIBLE_FLOOR) & np.isfinite(rho))]
            raise StateSpaceError(f"euler: nonpositive density, first offender {bad.reshape(-1, 3)[0]}")
        vel = mom / rho
        p = (self.gamma - 1.0) * (ener - 0.5 * mom * vel)
        if np.any(p <= ADMISSIBLE_FLOOR) or not np.all(np.isfinite(p)):
            bad = u[~((p > ADMISSIBLE_FLOOR) & np.isfinite(p))]
            raise StateSpaceError(f"euler: nonpositive pressure, first offender {bad.reshape(-1, 3)[0]}")
        return rho, vel, p

    def pressure(self, u):
        return self.primitives(u)[2]

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        rho, vel, p = self.primitives(u)
        out = np.empty_like(u)
        out[..., 0] = u[..., 1]
        out[..., 1] = u[..., 1] * vel + p
        out[..., 2] = (u[..., 2] + p) * vel
        return out

    def flux_jacobian(self, u):
        u = np.asarray(u, dtype=float)
        rho, vel, _ = self.primitives(u)
        g = self.gamma
        E = u[..., 2]
        J = np.zeros(u.shape[:-1] + (3, 3))
        v2 = vel * vel
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = 0.5 * (g - 3.0) * v2
        J[..., 1, 1] = (3.0 - g) * vel
        J[..., 1, 2] = g - 1.0
        J[..., 2, 0] = (g - 1.0) * v2 * vel - g * vel * E / rho
        J[..., 2, 1] = g * E / rho - 1.5 * (g - 1.0) * v2
        J[..., 2, 2] = g * vel
        return J

    def jacobian_apply(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        rho, vel, _ = self.primitives(u)
        g = self.gamma
        E = u[..., 2]
        v2 = vel * vel
        out = np.empty_like(v)
        out[..., 0] = v[..., 1]
        out[..., 1] = 0.5 * (g - 3.0) * v2 * v[..., 0] + (3.0 - g) * vel * v[..., 1] + (g - 1.0) * v[..., 2]
        out[..., 2] = (
            ((g - 1.0) * v2 * vel - g * vel * E / rho) * v[..., 0]
            + (g * E / rho - 1.5 * (g - 1.0) * v2) * v[..., 1]
            + g * vel * v[..., 2]
        )
        return out

    def flux_hessians(self, u):
        u = np.asarray(u, dtype=float)
        rho, vel, _ = self.primitives(u)
        g = self.gamma
        a = g - 1.0
        b = 0.5 * (3.0 - g)
        E = u[..., 2]
        H = np.zeros(u.shape[:-1] + (3, 3, 3))
        # component 1 (mass flux) is linear
        H[..., 1, 0, 0] = 2.0 * b * vel * vel / rho
        H[..., 1, 0, 1] = H[..., 1, 1, 0] = -2.0 * b * vel / rho
        H[..., 1, 1, 1] = 2.0 * b / rho
        H[..., 2, 0, 0] = 2.0 * g * E * vel / rho**2 - 3.0 * a * vel**3 / rho
        H[..., 2, 0, 1] = H[..., 2, 1, 0] = -g * E / rho**2 + 3.0 * a * vel * vel / rho
        H[..., 2, 0, 2] = H[..., 2, 2, 0] = -g * vel / rho
        H[..., 2, 1, 1] = -3.0 * a * vel / rho
        H[..., 2, 1, 2] = H[..., 2, 2, 1] = g / rho
        return H

    def wave_speed(self, u):
        rho, vel, p = self.primitives(u)
        return np.abs(vel) + np.sqrt(self.gamma * p / rho)

    def _entropy_s(self, u):
        rho, _, p = self.primitives(u)
        return np.log(p) - self.gamma * np.log(rho)

    def entropy(self, u):
        u = np.asarray(u, dtype=float)
        return -u[..., 0] * self._entropy_s(u) / (self.gamma - 1.0)

    def entropy_gradient(self, u):
        u = np.asarray(u, dtype=float)
        rho, vel, p = self.primitives(u)
        g = self.gamma
        s = np.log(p) - g * np.log(rho)
        grad = np.empty_like(u)
        grad[..., 0] = (g - s) / (g - 1.0) - 0.5 * rho * vel * vel / p
        grad[..., 1] = rho * vel / p
        grad[..., 2] = -rho / p
        return grad

    def entropy_hessian(self, u):
        u = np.asarray(u, dtype=float)
        rho, vel, p = self.primitives(u)
        a = self.gamma - 1.0
        H = np.empty(u.shape[:-1] + (3, 3))
        rp2 = rho / (p * p)
        H[..., 0, 0] = self.gamma / (a * rho) + 0.25 * a * rp2 * vel**4
        H[..., 0, 1] = H[..., 1, 0] = -0.5 * a * rp2 * vel**3
        H[..., 0, 2] = H[..., 2, 0] = -1.0 / p + 0.5 * a * rp2 * vel * vel
        H[..., 1, 1] = 1.0 / p + a * rp2 * vel * vel
        H[..., 1, 2] = H[..., 2, 1] = -a * rp2 * vel
        H[..., 2, 2] = a * rp2
        return H

    def entropy_flux(self, u):
        u = np.asarray(u, dtype=float)
        _, vel, _ = self.primitives(u)
        return vel * self.entropy(u)

    def admissible(self, u):
        u = np.asarray(u, dtype=float)
        rho, mom, ener = u[..., 0], u[..., 1], u[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = (self.gamma - 1.0) * (ener - 0.5 * mom * mom / rho)
        return (rho > ADMISSIBLE_FLOOR) & (p > ADMISSIBLE_FLOOR) & np.isfinite(rho) & np.isfinite(p)

    def right_eigenvectors(self, u):
        """Right eigenvectors of Df at u, columns ordered (v-c, v, v+c)."""
        u = np.asarray(u, dtype=float)
        rho, vel, p = self.primitives(u)
        c = np.sqrt(self.gamma * p / rho)
        H_tot = (u[..., 2] + p) / rho
        R = np.empty(u.shape[:-1] + (3, 3))
        R[..., 0, 0] = 1.0
        R[..., 0, 1] = 1.0
        R[..., 0, 2] = 1.0
        R[..., 1, 0] = vel - c
        R[..., 1, 1] = vel
        R[..., 1, 2] = vel + c
        R[..., 2, 0] = H_tot - vel * c
        R[..., 2, 1] = 0.5 * vel * vel
        R[..., 2, 2] = H_tot + vel * c
        return R


# ---------------------------------------------------------------------------
# Manufactured smooth benchmark for the Euler system
# ---------------------------------------------------------------------------

_WAVE = 6.0 * np.pi
_GAMMA = 1.4


def _manufactured_terms(t, x, xi):
    """Primitive fields and their t/x derivatives for the travelling wave."""
    amp = 0.2 * xi
    theta = _WAVE * (np.asarray(x, dtype=float) - t)
    cos, sin = np.cos(theta), np.sin(theta)
    rho = 2.0 + amp * cos
    vel = 1.0 + amp * sin
    rho_x = -_WAVE * amp * sin
    vel_x = _WAVE * amp * cos
    # phase travels with unit speed: d/dt = -d/dx
    return rho, vel, rho_x, vel_x


def manufactured_solution(t, x, xi):
    """Exact conserved state (rho, m, E) of the benchmark, shape x.shape + (3,)."""
    rho, vel, _, _ = _manufactured_terms(t, x, xi)
    out = np.empty(np.shape(rho) + (3,))
    out[..., 0] = rho
    out[..., 1] = rho * vel
    out[..., 2] = rho * rho
    return out


def manufactured_solution_dt(t, x, xi):
    """Exact time derivative of the conserved state."""
    rho, vel, rho_x, vel_x = _manufactured_terms(t, x, xi)
    rho_t, vel_t = -rho_x, -vel_x
    out = np.empty(np.shape(rho) + (3,))
    out[..., 0] = rho_t
    out[..., 1] = rho_t * vel + rho * vel_t
    out[..., 2] = 2.0 * rho * rho_t
    return out


def manufactured_source(t, x, xi, gamma=_GAMMA):
    """Source Q = dU/dt + df(U)/dx making the benchmark an exact solution."""
    rho, vel, rho_x, vel_x = _manufactured_terms(t, x, xi)
    rho_t, vel_t = -rho_x, -vel_x
    a = gamma - 1.0
    E = rho * rho
    E_t = 2.0 * rho * rho_t
    E_x = 2.0 * rho * rho_x
    p = a * (E - 0.5 * rho * vel * vel)
    p_x = a * (E_x - 0.5 * rho_x * vel * vel - rho * vel * vel_x)
    out = np.empty(np.shape(rho) + (3,))
    out[..., 0] = rho_t + rho_x * vel + rho * vel_x
    out[..., 1] = (
        rho_t * vel + rho * vel_t
        + rho_x * vel * vel + 2.0 * rho * vel * vel_x + p_x
    )
    out[..., 2] = E_t + (E_x + p_x) * vel + (E + p) * vel_x
    return out


class ManufacturedEuler(EulerIdealGas):
    """Euler system with the manufactured travelling-wave source attached."""

    name = "euler-manufactured"
    residual_kernel_mode = "travelling-wave"

    def source(self, t, x, xi):
        return manufactured_source(t, x, xi, gamma=self.gamma)

    def exact(self, t, x, xi):
        return manufactured_solution(t, x, xi)
