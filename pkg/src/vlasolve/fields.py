"""Discrete Poisson solve, electric field, acceleration and BGK damping.

The potential solve works on the three-point periodic stencil

    -(psi_{j+1} - 2 psi_j + psi_{j-1}) / dx^2 = (q/eps0) (rho_j - background)

which is singular (constants are the null space).  The right side gets
its mean removed explicitly, the system is closed by pinning psi_0 = 0,
and the zero-mean gauge is restored afterwards.  The reduced system on
psi_1 .. psi_{N-1} is strictly tridiagonal and diagonally dominant, so a
banded direct solve is exact to roundoff; the dropped row 0 is then
satisfied automatically because the row sums of the stencil vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .state import GridState

__all__ = [
    "FieldState",
    "acceleration_step",
    "bgk_step",
    "electric_field",
    "solve_fields",
    "solve_poisson",
]


@dataclass
class FieldState:
    """Potential and field of one Poisson solve.

    psi is kept in the zero-mean gauge and satisfies the three-point
    stencil to the solver tolerance; efield is its centred difference.
    charge_params records the (q, m, eps0) the solve was made with.
    """

    psi: np.ndarray
    efield: np.ndarray
    charge_params: tuple[float, float, float]


def solve_poisson(rho, dx: float, q: float = 1.0, eps0: float = 1.0,
                  background: float = 1.0) -> np.ndarray:
    """Zero-mean periodic potential for the given density profile.

    Raises if the right side is farther than 1e-10 (relative) from
    mean-free, which in a run signals a mass-normalization bug rather
    than roundoff.
    """
    rho = np.asarray(rho, dtype=float)
    n = rho.size
    if n < 2:
        raise ValueError("need at least two cells")
    rhs = (q / eps0) * (rho - background)
    mean = rhs.mean()
    scale = max(1.0, float(np.abs(rhs).max()))
    if abs(mean) > 1e-10 * scale:
        raise ValueError(
            f"source mean {mean!r} is not zero: density is inconsistent with the background"
        )
    rhs = rhs - mean
    psi = _pinned_solve(rhs, dx)
    # One round of iterative refinement; this takes the residual down to
    # the float64 representability floor eps |psi| / dx^2 of the stencil.
    resid = rhs - (-(np.roll(psi, -1) - 2.0 * psi + np.roll(psi, 1)) / (dx * dx))
    psi += _pinned_solve(resid - resid.mean(), dx)
    psi -= psi.mean()
    return psi


def _pinned_solve(rhs: np.ndarray, dx: float) -> np.ndarray:
    """Solve the stencil with psi_0 pinned to zero (no gauge adjustment)."""
    n = rhs.size
    psi = np.empty(n)
    psi[0] = 0.0
    if n == 2:
        # two unknowns, one pinned: 2 psi_1 / dx^2 = rhs_1
        psi[1] = 0.5 * rhs[1] * dx * dx
    else:
        ab = np.zeros((3, n - 1))
        ab[0, 1:] = -1.0
        ab[1, :] = 2.0
        ab[2, :-1] = -1.0
        psi[1:] = solve_banded((1, 1), ab, rhs[1:] * (dx * dx))
    return psi


def electric_field(psi: np.ndarray, dx: float) -> np.ndarray:
    """Centred-difference field E_j = -(psi_{j+1} - psi_{j-1}) / (2 dx)."""
    return -(np.roll(psi, -1) - np.roll(psi, 1)) / (2.0 * dx)


def solve_fields(rho: np.ndarray, dx: float, q: float = 1.0, m: float = 1.0,
                 eps0: float = 1.0, background: float = 1.0) -> FieldState:
    """Solve for the potential and differentiate it in one call."""
    psi = solve_poisson(rho, dx, q=q, eps0=eps0, background=background)
    return FieldState(psi, electric_field(psi, dx), (q, m, eps0))


def acceleration_step(grid: GridState, efield: np.ndarray, dt: float,
                      q_over_m: float = 1.0) -> GridState:
    """Apply the field impulse exactly by translating each frame.

    A constant-in-v force for time dt translates the distribution by
    dt (q/m) E, which for a Hermite expansion is a pure shift of the
    expansion centre: coefficients and theta are untouched, so the cell
    stays in its equilibrium frame.
    """
    efield = np.asarray(efield, dtype=float)
    if efield.shape != (grid.n_cells,):
        raise ValueError("field array does not match the grid")
    u = grid.u.copy()
    u[:, 0] += dt * q_over_m * efield
    return GridState(grid.basis, grid.coeffs.copy(), u, grid.theta.copy(),
                     grid.dx, grid.length, grid.time)


def bgk_step(grid: GridState, nu: float, dt: float) -> GridState:
    """Exact BGK relaxation over dt: damp all |alpha| >= 2 coefficients.

    The local Maxwellian shares the cell's (rho, u, theta), so in the
    equilibrium frame the collision operator leaves f_0 and f_{e_i}
    alone and multiplies every higher coefficient by exp(-nu dt).
    Macroscopic moments are untouched.
    """
    if nu < 0.0:
        raise ValueError("collision frequency must be nonnegative")
    coeffs = grid.coeffs.copy()
    if nu > 0.0:
        factor = np.exp(-nu * dt)
        coeffs[:, grid.basis.orders >= 2] *= factor
    return GridState(grid.basis, coeffs, grid.u.copy(), grid.theta.copy(),
                     grid.dx, grid.length, grid.time)
