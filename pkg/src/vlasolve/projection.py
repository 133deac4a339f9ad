"""Frame changes, re-expansion and velocity multiplication for expansions.

Moving an expansion from frame (u1, theta1) to frame (u2, theta2) while
matching every moment of total degree <= M is a lower triangular linear
map on the coefficients.  It separates over dimensions into the discrete
convolution

    g_beta = sum_{j <= beta_d} T_j^(d) f_{beta - j e_d}   applied per d,

whose kernel obeys

    T_0 = 1,   T_1 = u1_d - u2_d,
    (j + 1) T_{j+1} = (u1_d - u2_d) T_j + (theta1 - theta2) T_{j-1},

i.e. the coefficients of exp((u1_d - u2_d) z + (theta1 - theta2) z^2/2).
The same map is the exact time-one flow of the frame-transport ODE

    dF_alpha/dtau = sum_d S^2 (theta1 R F_{alpha - 2 e_d}
                               + w_d sqrt(theta1) F_{alpha - e_d})

with w = (u1 - u2)/sqrt(theta2), uh = sqrt(theta1/theta2),
R(tau) = (uh - 1)/((uh - 1) tau + 1) and S = 1 - tau R: both generators
are nilpotent down-shifts, so the time-ordered exponential collapses to
exp(int a dz-shift + int b dz^2-shift) with int_0^1 S^2 w sqrt(theta1)
= u1 - u2 and int_0^1 S^2 R theta1 = (theta1 - theta2)/2.  ``project``
uses the kernel; ``project_ode`` integrates the ODE (Runge-Kutta with
step doubling) and exists as an independent cross-check.
"""

from __future__ import annotations

import numpy as np

from .basis import MomentBasis, take_shift
from .state import CellState, _macroscopic_arrays

__all__ = [
    "frame_kernel",
    "multiply_v1_truncate",
    "project",
    "project_coeffs",
    "project_ode",
    "reexpand_equilibrium",
]

# Kernel entries below this size contribute less than roundoff to any
# coefficient and are skipped in the convolution.
_KERNEL_TINY = 1e-20


def frame_kernel(basis: MomentBasis, du: np.ndarray, dtheta: np.ndarray) -> np.ndarray:
    """Convolution kernels for a frame change, shape (..., D, M + 1).

    du = u_from - u_to (componentwise), dtheta = theta_from - theta_to.
    """
    du = np.asarray(du, dtype=float)
    dtheta = np.asarray(dtheta, dtype=float)
    out = np.zeros(du.shape + (basis.M + 1,))
    out[..., 0] = 1.0
    out[..., 1] = du
    dth = dtheta[..., None]
    for j in range(1, basis.M):
        out[..., j + 1] = (du * out[..., j] + dth * out[..., j - 1]) / (j + 1)
    return out


def project_coeffs(basis, coeffs, u_from, theta_from, u_to, theta_to):
    """Batched frame change of raw coefficient arrays.

    Shapes: coeffs (..., size), u (..., D), theta (...).
    """
    du = np.asarray(u_from, float) - np.asarray(u_to, float)
    dth = np.asarray(theta_from, float) - np.asarray(theta_to, float)
    T = frame_kernel(basis, du, dth)
    out = np.asarray(coeffs, dtype=float)
    src = out
    flatT = np.abs(T).reshape(-1, basis.D, basis.M + 1)
    for d in range(basis.D):
        tmax = flatT[:, d, :].max(axis=0)
        jmax = int(np.nonzero(tmax > _KERNEL_TINY)[0][-1])
        if jmax == 0:
            continue
        out = _convolve_dim(basis, out, T[..., d, :], d, jmax)
    if out is src:
        out = out.copy()
    return out


def _convolve_dim(basis, coeffs, T, d, jmax):
    if basis.D == 1:
        out = T[..., 0, None] * coeffs
        for j in range(1, jmax + 1):
            out[..., j:] += T[..., j, None] * coeffs[..., :-j]
        return out
    out = T[..., 0, None] * coeffs
    cur = coeffs
    down = basis.down[d]
    for j in range(1, jmax + 1):
        cur = take_shift(cur, down)
        out += T[..., j, None] * cur
    return out


def project(cell: CellState, u_to, theta_to: float) -> CellState:
    """Re-expand a cell about a new frame, preserving moments <= M."""
    theta_to = float(theta_to)
    if not theta_to > 0.0:
        raise ValueError("target temperature must be positive")
    u_to = np.atleast_1d(np.asarray(u_to, dtype=float))
    c = project_coeffs(cell.basis, cell.coeffs, cell.u, cell.theta, u_to, theta_to)
    return CellState(cell.basis, c, u_to, theta_to)


def reexpand_equilibrium(cell: CellState) -> CellState:
    """Project a cell onto the frame defined by its own macroscopic state."""
    c, u, th = _reexpand_arrays(cell.basis, cell.coeffs[None], cell.u[None],
                                np.array([cell.theta]))
    return CellState(cell.basis, c[0], u[0], float(th[0]))


def _reexpand_arrays(basis, coeffs, u, theta):
    rho, u_new, th_new = _macroscopic_arrays(basis, coeffs, u, theta)
    if not np.all(th_new > 0.0):
        raise ValueError("nonpositive temperature in re-expansion")
    c = project_coeffs(basis, coeffs, u, theta, u_new, th_new)
    return c, u_new, th_new


def multiply_v1_coeffs(basis, coeffs, u1, theta):
    """Coefficients of v_1 * f truncated back to |alpha| <= M.

    out_alpha = theta f_{alpha - e_1} + u_1 f_alpha + (alpha_1 + 1) f_{alpha + e_1}

    The |alpha| = M + 1 tail produced by the theta-shift is dropped; the
    dropped basis function is orthogonal to all polynomials of degree
    <= M, so moments of v_1 f up to degree M - 1 survive exactly.
    """
    u1 = np.asarray(u1, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = u1[..., None] * coeffs
    if basis.D == 1:
        out[..., 1:] += theta[..., None] * coeffs[..., :-1]
        out[..., :-1] += np.arange(1.0, basis.M + 1) * coeffs[..., 1:]
        return out
    out += theta[..., None] * take_shift(coeffs, basis.down[0])
    out += (basis.indices[:, 0] + 1.0) * take_shift(coeffs, basis.up[0])
    return out


def multiply_v1_truncate(cell: CellState) -> CellState:
    """Cell-level wrapper around :func:`multiply_v1_coeffs`."""
    c = multiply_v1_coeffs(cell.basis, cell.coeffs, cell.u[0], cell.theta)
    return CellState(cell.basis, c, cell.u.copy(), cell.theta)


def project_ode(cell: CellState, u_to, theta_to: float,
                substeps: int | None = None, rtol: float = 1e-11) -> CellState:
    """Frame change by integrating the transport ODE (reference path).

    Classical fourth-order Runge-Kutta over tau in [0, 1].  When
    ``substeps`` is None the step count doubles from 1 until successive
    answers agree to ``rtol`` (relative, max norm) or 64 substeps are
    reached.  ``project`` is the production route; this integrator keeps
    the construction honest and is used by the test suite.
    """
    b = cell.basis
    theta_to = float(theta_to)
    if not theta_to > 0.0:
        raise ValueError("target temperature must be positive")
    u_to = np.atleast_1d(np.asarray(u_to, dtype=float))
    th1 = cell.theta
    w = (cell.u - u_to) / np.sqrt(theta_to)
    uh = np.sqrt(th1 / theta_to)
    sq_th1 = np.sqrt(th1)

    down = b.down
    down2 = np.empty_like(down)
    for d in range(b.D):
        dp = down[d]
        down2[d] = np.where(dp < 0, -1, down[d][np.maximum(dp, 0)])

    def rhs(tau, F):
        S = 1.0 / ((uh - 1.0) * tau + 1.0)
        R = (uh - 1.0) * S
        out = np.zeros_like(F)
        for d in range(b.D):
            out += S * S * (th1 * R * take_shift(F, down2[d])
                            + w[d] * sq_th1 * take_shift(F, down[d]))
        return out

    def sweep(nsub):
        F = cell.coeffs.astype(float).copy()
        h = 1.0 / nsub
        for i in range(nsub):
            t0 = i * h
            k1 = rhs(t0, F)
            k2 = rhs(t0 + 0.5 * h, F + 0.5 * h * k1)
            k3 = rhs(t0 + 0.5 * h, F + 0.5 * h * k2)
            k4 = rhs(t0 + h, F + h * k3)
            F = F + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return F

    if substeps is not None:
        F = sweep(int(substeps))
    else:
        scale = max(1.0, float(np.max(np.abs(cell.coeffs))))
        nsub, F = 1, sweep(1)
        while nsub < 64:
            nsub *= 2
            F2 = sweep(nsub)
            done = np.max(np.abs(F2 - F)) <= rtol * scale
            F = F2
            if done:
                break
    return CellState(b, F, u_to, theta_to)
