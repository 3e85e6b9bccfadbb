import numpy as np
import pytest

from conftest import random_admissible_euler
from statsol.errors import StateSpaceError
from statsol.systems import (
    Burgers,
    EulerIdealGas,
    LinearAdvection,
    ManufacturedEuler,
    manufactured_solution,
    manufactured_solution_dt,
    manufactured_source,
    relative_entropy,
    relative_flux,
)

euler = EulerIdealGas()


def finite_difference_gradient(f, u, eps=1e-6):
    """Central-difference gradient of a scalar function of the state."""
    grad = np.zeros_like(u)
    for i in range(u.size):
        up, um = u.copy(), u.copy()
        up[i] += eps
        um[i] -= eps
        grad[i] = (f(up) - f(um)) / (2 * eps)
    return grad


class TestEulerBasics:
    def test_pressure_values(self):
        assert euler.pressure(np.array([1.0, 0.0, 1.0])) == pytest.approx(0.4)
        assert euler.pressure(np.array([2.0, 0.0, 2.0])) == pytest.approx(0.8)

    def test_zero_internal_energy_rejected(self):
        with pytest.raises(StateSpaceError):
            euler.pressure(np.array([1.0, 1.0, 0.5]))

    def test_negative_density_rejected(self):
        with pytest.raises(StateSpaceError):
            euler.flux(np.array([-1.0, 0.0, 1.0]))

    def test_flux_values(self):
        assert euler.flux(np.array([1.0, 0.0, 1.0])) == pytest.approx([0.0, 0.4, 0.0])
        assert euler.flux(np.array([1.0, 1.0, 2.0])) == pytest.approx([1.0, 1.6, 2.6])

    def test_wave_speed(self):
        assert euler.wave_speed(np.array([1.0, 0.0, 1.0])) == pytest.approx(np.sqrt(0.56))
        assert euler.wave_speed(np.array([1.0, 1.0, 2.0])) == pytest.approx(1.0 + np.sqrt(1.4 * 0.6))

    def test_wave_speed_symmetric_in_velocity(self, rng):
        u = random_admissible_euler(rng, 50)
        flipped = u.copy()
        flipped[:, 1] *= -1
        assert euler.wave_speed(u) == pytest.approx(euler.wave_speed(flipped))


class TestEulerDerivatives:
    def test_flux_jacobian_matches_fd(self, rng):
        states = random_admissible_euler(rng, 100)
        jac = euler.flux_jacobian(states)
        for u, J in zip(states, jac):
            for c in range(3):
                fd = finite_difference_gradient(lambda v: euler.flux(v)[c], u)
                assert np.abs(J[c] - fd).max() < 1e-6

    def test_jacobian_apply_matches_matrix(self, rng):
        states = random_admissible_euler(rng, 20)
        vecs = rng.normal(size=(20, 3))
        direct = euler.jacobian_apply(states, vecs)
        via_matrix = np.einsum("nij,nj->ni", euler.flux_jacobian(states), vecs)
        assert np.abs(direct - via_matrix).max() < 1e-12

    def test_entropy_gradient_matches_fd(self):
        u = np.array([1.0, 0.3, 1.5])
        grad = euler.entropy_gradient(u)
        fd = finite_difference_gradient(lambda v: euler.entropy(v), u)
        assert np.abs(grad - fd).max() < 1e-6

    def test_entropy_hessian_matches_fd(self, rng):
        states = random_admissible_euler(rng, 100)
        hess = euler.entropy_hessian(states)
        for u, H in zip(states, hess):
            for c in range(3):
                fd = finite_difference_gradient(lambda v: euler.entropy_gradient(v)[c], u)
                assert np.abs(H[c] - fd).max() < 1e-5

    def test_entropy_hessian_spd(self, rng):
        states = random_admissible_euler(rng, 100)
        H = euler.entropy_hessian(states)
        assert np.abs(H - np.transpose(H, (0, 2, 1))).max() < 1e-12
        assert np.linalg.eigvalsh(H)[:, 0].min() > 0
        # the spec's singled-out state
        assert np.linalg.eigvalsh(euler.entropy_hessian(np.array([1.0, 0.0, 1.0]))).min() > 0

    def test_entropy_flux_compatibility(self, rng):
        # Dq = Deta . Df, checked with a finite-difference Dq
        states = random_admissible_euler(rng, 100)
        for u in states:
            dq_fd = finite_difference_gradient(lambda v: euler.entropy_flux(v), u)
            expected = euler.entropy_gradient(u) @ euler.flux_jacobian(u)
            assert np.abs(dq_fd - expected).max() < 1e-6

    def test_flux_hessians_match_fd(self, rng):
        states = random_admissible_euler(rng, 20)
        hess = euler.flux_hessians(states)
        for u, H in zip(states, hess):
            for c in range(3):
                for i in range(3):
                    fd = finite_difference_gradient(lambda v: euler.flux_jacobian(v)[c, i], u)
                    assert np.abs(H[c, i] - fd).max() < 1e-5


class TestRelativeEntropy:
    def test_vanishes_on_diagonal(self, rng):
        states = random_admissible_euler(rng, 10)
        for u in states:
            assert relative_entropy(euler, u, u) == pytest.approx(0.0, abs=1e-14)
            assert relative_flux(euler, u, u) == pytest.approx([0, 0, 0], abs=1e-14)

    def test_positivity(self, rng):
        u = random_admissible_euler(rng, 100, rho=(1.0, 2.0), vel=(-0.5, 0.5), pres=(1.0, 2.0))
        v = random_admissible_euler(rng, 100, rho=(1.0, 2.0), vel=(-0.5, 0.5), pres=(1.0, 2.0))
        vals = relative_entropy(euler, u, v)
        mask = np.linalg.norm(u - v, axis=1) > 1e-12
        assert np.all(vals[mask] > 0)

    def test_quadratic_taylor_remainder(self):
        # eta(u|v) / |u - v|^2 stays within the local Hessian eigenvalue range
        v = np.array([1.2, 0.4, 2.0])
        d = np.array([0.3, -0.5, 0.4])
        d /= np.linalg.norm(d)
        eigs = np.linalg.eigvalsh(euler.entropy_hessian(v))
        for eps in (1e-3, 1e-4, 1e-5):
            ratio = relative_entropy(euler, v + eps * d, v) / eps**2
            assert 0.4 * eigs[0] < ratio < 0.6 * eigs[-1]


class TestScalarSystems:
    def test_advection_compatibility_exact(self, rng):
        adv = LinearAdvection(1.3)
        u = rng.normal(size=(50, 1))
        # Dq = Deta * Df exactly: a*u = u*a
        dq = adv.speed * adv.entropy_gradient(u)
        deta_df = adv.entropy_gradient(u) * adv.speed
        assert np.abs(dq - deta_df).max() < 1e-14
        assert adv.flux_hessians(u) == pytest.approx(0.0, abs=1e-15)

    def test_burgers_entropy_pair(self, rng):
        b = Burgers()
        u = rng.normal(size=(50, 1))
        # q' = u^2 must equal eta' f' = u * u
        for v in u:
            dq = finite_difference_gradient(lambda w: b.entropy_flux(w), v)
            assert dq[0] == pytest.approx(v[0] ** 2, abs=1e-6)


class TestManufactured:
    def test_paper_point(self):
        u = manufactured_solution(0.0, np.array(0.0), 1.0)
        assert u == pytest.approx([2.2, 2.2, 4.84])

    def test_zero_xi_is_constant(self, rng):
        t = rng.uniform(0, 0.2, 10)
        x = rng.uniform(0, 1, 10)
        for ti, xi_pos in zip(t, x):
            assert manufactured_solution(ti, np.array(xi_pos), 0.0) == pytest.approx([2.0, 2.0, 4.0])

    def test_travelling_phase(self, rng):
        # u(t, x) = u(0, x - t) in the periodic phase argument
        for _ in range(20):
            t, x, z = rng.uniform(0, 0.3), rng.uniform(0, 1), rng.uniform(0, 1)
            a = manufactured_solution(t, np.array(x), z)
            b = manufactured_solution(0.0, np.array((x - t) % 1.0), z)
            assert a == pytest.approx(b, abs=1e-12)

    def test_admissible_on_parameter_sweep(self):
        t = np.linspace(0, 0.2, 100)
        x = np.linspace(0, 1, 100)
        xi = np.linspace(0, 1, 11)
        u = manufactured_solution(t[:, None, None], x[None, :, None], xi[None, None, :])
        assert u[..., 0].min() >= 1.8
        assert np.all(euler.admissible(u))

    def test_source_vanishes_at_zero_xi(self):
        x = np.linspace(0, 1, 50)
        q = manufactured_source(0.1, x, 0.0)
        assert np.abs(q).max() == 0.0

    def test_source_matches_finite_differences(self):
        t, x, z = 0.0, 0.1, 0.5
        eps = 1e-6
        ut = (manufactured_solution(t + eps, np.array(x), z) - manufactured_solution(t - eps, np.array(x), z)) / (2 * eps)
        fx = (
            euler.flux(manufactured_solution(t, np.array(x + eps), z))
            - euler.flux(manufactured_solution(t, np.array(x - eps), z))
        ) / (2 * eps)
        q = manufactured_source(t, np.array(x), z)
        assert np.abs(q - (ut + fx)).max() < 1e-5

    def test_density_source_component(self, rng):
        # first component: d rho/dt + d m/dx with d rho/dt = 0.2 xi 6 pi sin(6 pi (x-t))
        for _ in range(20):
            t, x, z = rng.uniform(0, 0.3), rng.uniform(0, 1), rng.uniform(0, 1)
            amp = 0.2 * z
            theta = 6 * np.pi * (x - t)
            rho_t = amp * 6 * np.pi * np.sin(theta)
            rho = 2 + amp * np.cos(theta)
            vel = 1 + amp * np.sin(theta)
            rho_x, vel_x = -amp * 6 * np.pi * np.sin(theta), amp * 6 * np.pi * np.cos(theta)
            m_x = rho_x * vel + rho * vel_x
            q = manufactured_source(t, np.array(x), z)
            assert q[0] == pytest.approx(rho_t + m_x, rel=1e-12, abs=1e-12)

    def test_time_derivative_consistent(self, rng):
        for _ in range(10):
            t, x, z = rng.uniform(0, 0.3), rng.uniform(0, 1), rng.uniform(0, 1)
            eps = 1e-6
            fd = (manufactured_solution(t + eps, np.array(x), z) - manufactured_solution(t - eps, np.array(x), z)) / (2 * eps)
            assert manufactured_solution_dt(t, np.array(x), z) == pytest.approx(fd, abs=1e-5)

    def test_manufactured_system_exposes_source(self):
        msys = ManufacturedEuler()
        x = np.linspace(0, 1, 8)
        assert np.abs(msys.source(0.05, x, 0.7) - manufactured_source(0.05, x, 0.7)).max() == 0.0
