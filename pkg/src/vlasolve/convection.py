"""Finite-volume convection update for the moment grid.

One update of cell j consists of

    f_j <- f_j - dt/dx (F_{j+1/2} - F_{j-1/2}) + K_j

where F are HLL numerical fluxes of v_1 f and K_j is the top-order
correction that makes the truncated system hyperbolic: for |alpha| = M
the x-derivative of the (dropped) order M+1 coefficients is replaced by
macroscopic gradient terms, discretized with centred differences of the
beginning-of-step frames,

    K_alpha = -dt (alpha_1 + 1) sum_d (f_{alpha - e_d + e_1} du_d/dx
                                       + 1/2 f_{alpha - 2 e_d + e_1} dtheta/dx).

Fluxes for cell j are assembled in cell j's own frame: each neighbour is
projected into that frame first, so the same physical interface flux is
evaluated twice per step, once per adjacent frame.  Projection preserves
moments through degree M and the truncated v_1 multiplication preserves
them through degree M - 1, which is what makes the flux differences
telescope and gives exact mass and momentum conservation.

After the update every cell is re-expanded about its new equilibrium
frame, so signal speeds and field solves always see fresh macroscopic
values.
"""

from __future__ import annotations

import numpy as np

from .basis import take_shift
from .hermite import greatest_zero
from .projection import (
    _reexpand_arrays,
    multiply_v1_coeffs,
    multiply_v1_truncate,
    project,
    project_coeffs,
)
from .state import CellState, GridState

__all__ = [
    "convection_step",
    "hll_flux",
    "regularization_increment",
    "signal_speeds",
]


class BlowupError(RuntimeError):
    """Raised when the update produces NaNs or a nonpositive density."""

    def __init__(self, message, step=None, time=None, cell=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.cell = cell


def signal_speeds(left: CellState, right: CellState) -> tuple[float, float]:
    """HLL wave-speed estimates at the interface between two cells.

    The extreme characteristic speeds of the regularized system about a
    frame (u, theta) are u_1 +/- C sqrt(theta) with C the greatest zero
    of He_{M+1}.
    """
    if left.basis is not right.basis and (
        left.basis.M != right.basis.M or left.basis.D != right.basis.D
    ):
        raise ValueError("cells must share a basis")
    C = greatest_zero(left.basis.M + 1)
    sl = C * np.sqrt(left.theta)
    sr = C * np.sqrt(right.theta)
    lam_l = min(left.u[0] - sl, right.u[0] - sr)
    lam_r = max(left.u[0] + sl, right.u[0] + sr)
    return float(lam_l), float(lam_r)


def hll_flux(left: CellState, right: CellState, target_frame) -> CellState:
    """HLL flux of v_1 f through an interface, expanded in target_frame.

    Both input states are projected into target_frame before anything is
    multiplied or mixed, so the branches combine coefficients of one
    common basis.
    """
    u_t, th_t = target_frame
    lam_l, lam_r = signal_speeds(left, right)
    fl = project(left, u_t, th_t)
    fr = project(right, u_t, th_t)
    vl = multiply_v1_truncate(fl)
    vr = multiply_v1_truncate(fr)
    if lam_l >= 0.0:
        c = vl.coeffs
    elif lam_r <= 0.0:
        c = vr.coeffs
    else:
        c = (lam_r * vl.coeffs - lam_l * vr.coeffs
             + lam_l * lam_r * (fr.coeffs - fl.coeffs)) / (lam_r - lam_l)
    return CellState(left.basis, c, fl.u.copy(), fl.theta)


def regularization_increment(grid: GridState, j: int, dt: float) -> np.ndarray:
    """Top-order hyperbolicity correction for cell j (zero elsewhere)."""
    b = grid.basis
    n = grid.n_cells
    jm, jp = (j - 1) % n, (j + 1) % n
    gu = (grid.u[jp] - grid.u[jm]) / (2.0 * grid.dx)
    gth = (grid.theta[jp] - grid.theta[jm]) / (2.0 * grid.dx)
    return _reg_core(b, grid.coeffs[j][None], gu[None], np.array([gth]), dt)[0]


def _reg_core(basis, coeffs, gu, gth, dt):
    """Batched K increment; coeffs (..., P), gu (..., D), gth (...)."""
    m1, m2 = basis.reg_maps
    acc = np.zeros_like(coeffs)
    for d in range(basis.D):
        acc += take_shift(coeffs, m1[d]) * gu[..., d, None]
        acc += 0.5 * take_shift(coeffs, m2[d]) * gth[..., None]
    out = (-dt) * (basis.indices[:, 0] + 1.0) * acc
    out[..., ~basis.top_mask] = 0.0
    return out


def _hll_arrays(vl, vr, cl, cr, lam_l, lam_r):
    """Branch-selected HLL combination over a batch of interfaces."""
    ll = lam_l[:, None]
    rr = lam_r[:, None]
    mid = (rr * vl - ll * vr + ll * rr * (cr - cl)) / (rr - ll)
    return np.where(ll >= 0.0, vl, np.where(rr <= 0.0, vr, mid))


def convection_step(grid: GridState, dt: float) -> GridState:
    """Advance the convection part of the equations by one step of dt."""
    b = grid.basis
    c, u, th = grid.coeffs, grid.u, grid.theta
    if grid.n_cells < 2:
        raise ValueError("need at least two cells for a periodic update")
    u1 = u[:, 0]
    C = greatest_zero(b.M + 1)
    s = C * np.sqrt(th)
    # interface i = j + 1/2 sits between cells j and j+1
    lam_l = np.minimum(u1 - s, np.roll(u1 - s, -1))
    lam_r = np.maximum(u1 + s, np.roll(u1 + s, -1))
    c_right = project_coeffs(b, np.roll(c, -1, axis=0), np.roll(u, -1, axis=0),
                             np.roll(th, -1), u, th)
    c_left = project_coeffs(b, np.roll(c, 1, axis=0), np.roll(u, 1, axis=0),
                            np.roll(th, 1), u, th)
    v_own = multiply_v1_coeffs(b, c, u1, th)
    v_right = multiply_v1_coeffs(b, c_right, u1, th)
    v_left = multiply_v1_coeffs(b, c_left, u1, th)
    flux_p = _hll_arrays(v_own, v_right, c, c_right, lam_l, lam_r)
    flux_m = _hll_arrays(v_left, v_own, c_left, c, np.roll(lam_l, 1),
                         np.roll(lam_r, 1))
    gu = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * grid.dx)
    gth = (np.roll(th, -1) - np.roll(th, 1)) / (2.0 * grid.dx)
    c_new = c - (dt / grid.dx) * (flux_p - flux_m)
    c_new += _reg_core(b, c, gu, gth, dt)
    rho = c_new[:, 0]
    if not np.all(np.isfinite(c_new)):
        bad = int(np.argwhere(~np.isfinite(c_new))[0][0])
        raise BlowupError(f"non-finite coefficients in cell {bad}",
                          time=grid.time, cell=bad)
    if not np.all(rho > 0.0):
        bad = int(np.argmin(rho))
        raise BlowupError(f"nonpositive density {rho[bad]!r} in cell {bad}",
                          time=grid.time, cell=bad)
    c2, u2, th2 = _reexpand_arrays(b, c_new, u, th)
    return GridState(b, c2, u2, th2, grid.dx, grid.length, grid.time)
