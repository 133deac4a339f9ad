"""Independent reference computations used as test oracles.

Everything here deliberately avoids the library's own fast paths:
moments are taken by quadrature of the evaluated distribution, Hermite
polynomials come from their explicit low-order formulas, and the
periodic Poisson problem is solved densely with the gauge imposed by
least squares.  Tests compare library output against these routes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from vlasolve.hermite import quadrature
from vlasolve.state import eval_distribution

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Explicit probabilists' Hermite polynomials through degree 6.
EXPLICIT_HE = (
    lambda x: np.ones_like(np.asarray(x, dtype=float)),
    lambda x: x,
    lambda x: x**2 - 1.0,
    lambda x: x**3 - 3.0 * x,
    lambda x: x**4 - 6.0 * x**2 + 3.0,
    lambda x: x**5 - 10.0 * x**3 + 15.0 * x,
    lambda x: x**6 - 15.0 * x**4 + 45.0 * x**2 - 15.0,
)


def gaussian_moment(p: int) -> float:
    """Closed form of integral x^p exp(-x^2/2) dx over the real line."""
    if p % 2 == 1:
        return 0.0
    return float(math.prod(range(p - 1, 0, -2)) or 1) * SQRT_2PI


def cell_moment(cell, orders) -> float:
    """Velocity moment of the represented distribution by quadrature.

    orders is a D-tuple; computes integral of prod_d v_d^orders[d] times
    f(v) over R^D with nodes placed in the cell's own frame, which makes
    the integrand a polynomial times the frame Gaussian, so the result
    is exact up to roundoff when the rule order is large enough.
    """
    b = cell.basis
    rule = quadrature(b.M + max(orders) // 2 + 6)
    axes = [cell.u[d] + math.sqrt(cell.theta) * rule.nodes for d in range(b.D)]
    total = 0.0
    for combo in itertools.product(range(rule.order), repeat=b.D):
        v = np.array([axes[d][combo[d]] for d in range(b.D)])
        w = math.prod(rule.weights[c] for c in combo)
        # quadrature weights absorb the frame Gaussian; eval includes it,
        # so divide it back out through the exponential factor
        xi = (v - cell.u) / math.sqrt(cell.theta)
        gauss = math.exp(-0.5 * float(xi @ xi))
        poly = eval_distribution(cell, v) / gauss * cell.theta ** (b.D / 2.0)
        total += w * poly * math.prod(float(v[d]) ** orders[d] for d in range(b.D))
    return total


def dense_poisson(rhs: np.ndarray, dx: float) -> np.ndarray:
    """Zero-mean solution of -(second difference)/dx^2 psi = rhs.

    Builds the full periodic matrix, appends the mean-zero gauge row,
    and solves by least squares; the residual of the returned vector is
    checked to guard the oracle itself.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.size
    lap = (2.0 * np.eye(n) - np.roll(np.eye(n), 1, axis=1)
           - np.roll(np.eye(n), -1, axis=1)) / dx**2
    a = np.vstack([lap, np.ones((1, n))])
    b = np.concatenate([rhs, [0.0]])
    psi, *_ = np.linalg.lstsq(a, b, rcond=None)
    assert np.max(np.abs(lap @ psi - rhs)) < 1e-9 * max(np.max(np.abs(rhs)), 1.0)
    return psi
