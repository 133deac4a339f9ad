"""Probabilists' Hermite polynomials and the matching Gaussian quadrature.

Everything in this module is built around the He_n family, orthogonal on
the real line with respect to the weight exp(-x^2/2):

    integral He_m(x) He_n(x) exp(-x^2/2) dx = m! sqrt(2 pi) delta_mn

Values come from the stable three-term upward recursion

    He_0 = 1,  He_1 = x,  He_{n+1}(x) = x He_n(x) - n He_{n-1}(x)

and zeros/quadrature nodes from the symmetric tridiagonal Jacobi matrix
of the recursion (zero diagonal, off-diagonal sqrt(k)).  Both stay well
conditioned for the n <= 100 range used by the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

__all__ = [
    "SQRT_2PI",
    "QuadratureRule",
    "greatest_zero",
    "hermite_eval",
    "hermite_seq",
    "quadrature",
]

SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def hermite_eval(n: int, x):
    """Evaluate He_n at x (scalar or ndarray).

    Negative degrees evaluate to 0, matching the convention used by the
    moment recursions elsewhere in the package.
    """
    if n < 0:
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
    return hermite_seq(n, x)[n]


def hermite_seq(n: int, x):
    """Values of He_0 .. He_n at x, stacked along a new leading axis.

    Parameters
    ----------
    n : int
        Highest degree, n >= 0.
    x : scalar or ndarray
        Evaluation points.

    Returns
    -------
    ndarray of shape (n + 1,) + shape(x)
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    xa = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + xa.shape, dtype=float)
    out[0] = 1.0
    if n >= 1:
        out[1] = xa
    for k in range(1, n):
        out[k + 1] = xa * out[k] - k * out[k - 1]
    return out


@lru_cache(maxsize=None)
def greatest_zero(n: int) -> float:
    """Largest zero of He_n.

    Zeros of He_n are the eigenvalues of the n x n Jacobi matrix with
    zero diagonal and off-diagonal entries sqrt(1), ..., sqrt(n - 1).
    """
    if n < 1:
        raise ValueError("degree must be >= 1")
    if n == 1:
        return 0.0
    d = np.zeros(n)
    e = np.sqrt(np.arange(1.0, n))
    return float(eigvalsh_tridiagonal(d, e)[-1])


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss quadrature rule for the weight exp(-x^2/2) on the real line."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values) -> float:
        """Contract sampled integrand values with the weights."""
        return float(np.dot(self.weights, values))


def quadrature(n: int) -> QuadratureRule:
    """n-point Gauss rule for integral g(x) exp(-x^2/2) dx.

    Exact for polynomials of degree <= 2n - 1.  Nodes are the zeros of
    He_n from the Jacobi matrix.  Weights use the Christoffel form

        w_i = sqrt(2 pi) / sum_{k<n} He_k(x_i)^2 / k!

    evaluated with the normalized recursion; unlike the squared first
    eigenvector components this stays strictly positive even for the
    extreme nodes, whose weights underflow the eigenvector route near
    n = 60.  Weights are then rescaled so they sum to sqrt(2 pi)
    exactly, keeping the rule consistent with the zeroth Gaussian
    moment at every order.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return QuadratureRule(np.zeros(1), np.array([SQRT_2PI]), 1)
    d = np.zeros(n)
    e = np.sqrt(np.arange(1.0, n))
    vals = eigvalsh_tridiagonal(d, e)
    # The matrix is persymmetric, so the spectrum is symmetric about 0;
    # fold the computed nodes to make that exact in floating point.
    x = 0.5 * (vals - vals[::-1])
    # normalized recursion: psi_k = He_k / sqrt(k!), psi_{k+1} =
    # (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, n):
        prev, cur = cur, (x * cur - np.sqrt(k - 1.0) * prev) / np.sqrt(float(k))
        total += cur * cur
    w = SQRT_2PI / total
    w = 0.5 * (w + w[::-1])
    w *= SQRT_2PI / w.sum()
    return QuadratureRule(x, w, n)
