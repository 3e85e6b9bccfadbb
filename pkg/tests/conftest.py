"""Shared test helpers."""

import numpy as np
import pytest

from statsol.dgspace import ref_tables
from statsol.systems import EulerIdealGas


def l2_error(state, exact_fn, n_quad=10):
    """L2 distance between a DG state and an exact field on its mesh."""
    rule, _, _ = ref_tables(state.degree, n_quad)
    pts = state.mesh.points(rule.nodes)
    wts = 0.5 * state.mesh.h[:, None] * rule.weights[None, :]
    diff = state.eval_ref(rule.nodes) - exact_fn(pts)
    return float(np.sqrt(np.einsum("nqm,nq->", diff * diff, wts)))


def l2_norm_sq_between(coeffs_a, coeffs_b, mesh, n_quad=10):
    """Squared L2 distance between two modal coefficient tensors."""
    deg = max(coeffs_a.shape[1], coeffs_b.shape[1]) - 1
    rule, vals, _ = ref_tables(deg, n_quad)
    va = np.einsum("nkm,kq->nqm", coeffs_a, vals[: coeffs_a.shape[1]])
    vb = np.einsum("nkm,kq->nqm", coeffs_b, vals[: coeffs_b.shape[1]])
    wts = 0.5 * mesh.h[:, None] * rule.weights[None, :]
    return float(np.einsum("nqm,nq->", (va - vb) ** 2, wts))


def random_admissible_euler(rng, n, rho=(0.5, 3.0), vel=(-1.0, 1.0), pres=(0.5, 3.0)):
    """Random conserved Euler states drawn from primitive boxes."""
    gamma = EulerIdealGas().gamma
    r = rng.uniform(*rho, n)
    v = rng.uniform(*vel, n)
    p = rng.uniform(*pres, n)
    u = np.empty((n, 3))
    u[:, 0] = r
    u[:, 1] = r * v
    u[:, 2] = p / (gamma - 1.0) + 0.5 * r * v * v
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
