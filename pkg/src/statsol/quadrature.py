"""Gauss-Legendre quadrature and modal Legendre bases on [-1, 1].

Nodes are computed by Newton iteration on the Legendre polynomial roots
(Chebyshev initial guesses), converged to machine precision, so no
hard-coded tables are shipped outside the test oracles.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_RULE_ORDER = 32


@dataclass(frozen=True)
class QuadratureRule:
    """An n-point rule on [-1, 1]: exact for polynomials of degree <= 2n-1."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self):
        return self.nodes.size

    def mapped(self, a, b):
        """Nodes and weights transported to the interval [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


def legendre_eval(k: int, x: float):
    """Evaluate (P_k(x), P_k'(x)) by the three-term recurrence.

    Works for scalars and numpy arrays alike.
    """
    if k < 0:
        raise ValueError(f"polynomial degree must be nonnegative, got {k}")
    p_prev = np.zeros_like(np.asarray(x, dtype=float))
    p = np.ones_like(p_prev)
    d_prev = np.zeros_like(p_prev)
    d = np.zeros_like(p_prev)
    for i in range(k):
        # (i+1) P_{i+1} = (2i+1) x P_i - i P_{i-1}, same recurrence for d/dx
        p_next = ((2 * i + 1) * x * p - i * p_prev) / (i + 1)
        d_next = ((2 * i + 1) * (p + x * d) - i * d_prev) / (i + 1)
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    if np.ndim(x) == 0:
        return float(p), float(d)
    return p, d


def legendre_table(kmax: int, x):
    """Values and derivatives of P_0..P_kmax at points x.

    Returns (vals, ders) with shape (kmax+1, len(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.empty((kmax + 1, x.size))
    ders = np.empty((kmax + 1, x.size))
    vals[0] = 1.0
    ders[0] = 0.0
    if kmax >= 1:
        vals[1] = x
        ders[1] = 1.0
    for i in range(1, kmax):
        vals[i + 1] = ((2 * i + 1) * x * vals[i] - i * vals[i - 1]) / (i + 1)
        ders[i + 1] = ((2 * i + 1) * (vals[i] + x * ders[i]) - i * ders[i - 1]) / (i + 1)
    return vals, ders


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """The n-point Gauss-Legendre rule on [-1, 1].

    Nodes are the roots of P_n, found by Newton iteration from Chebyshev
    guesses; weights are 2 / ((1 - x^2) P_n'(x)^2).
    """
    if not 1 <= n <= MAX_RULE_ORDER:
        raise ValueError(f"rule order must be in [1, {MAX_RULE_ORDER}], got {n}")
    if n == 1:
        rule = QuadratureRule(np.zeros(1), np.full(1, 2.0))
    else:
        i = np.arange(1, n // 2 + 1)
        x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
        for _ in range(100):
            p, d = legendre_eval(n, x)
            dx = p / d
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        p, d = legendre_eval(n, x)
        w = 2.0 / ((1.0 - x * x) * d * d)
        # mirror the positive half; odd n gets the midpoint node
        if n % 2 == 0:
            nodes = np.concatenate([-x, x[::-1]])
            weights = np.concatenate([w, w[::-1]])
        else:
            _, d0 = legendre_eval(n, 0.0)
            nodes = np.concatenate([-x, [0.0], x[::-1]])
            weights = np.concatenate([w, [2.0 / (d0 * d0)], w[::-1]])
        rule = QuadratureRule(nodes, weights)
    rule.nodes.flags.writeable = False
    rule.weights.flags.writeable = False
    return rule


@lru_cache(maxsize=None)
def modal_basis(degree: int):
    """Cached LegendreBasis instances (immutable after construction)."""
    return LegendreBasis(degree)


class LegendreBasis:
    """Modal Legendre basis P_0..P_degree on the reference cell [-1, 1]."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("basis degree must be nonnegative")
        self.degree = degree
        # traces P_k(-1) = (-1)^k and P_k(+1) = 1
        self.left_trace = (-1.0) ** np.arange(degree + 1)
        self.right_trace = np.ones(degree + 1)
        # diagonal mass matrix on [-1, 1]: int P_k^2 = 2/(2k+1)
        self.mass = 2.0 / (2.0 * np.arange(degree + 1) + 1.0)

    def values(self, x):
        return legendre_table(self.degree, x)[0]

    def derivatives(self, x):
        return legendre_table(self.degree, x)[1]
