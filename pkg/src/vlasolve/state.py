"""Cell and grid containers plus the macroscopic reconstruction.

The expansion of a distribution about a local frame (u, theta) is

    f(v) = sum_alpha  f_alpha * H_alpha(xi),      xi = (v - u) / sqrt(theta)

with the per-dimension basis factor

    H_alpha(xi) = prod_d (2 pi)^(-1/2) theta^(-(alpha_d + 1)/2)
                  He_{alpha_d}(xi_d) exp(-xi_d^2 / 2).

With that normalization the low moments read off the coefficients:

    integral f dv            = f_0
    integral v_i f dv        = u_i f_0 + f_{e_i}
    integral |v|^2 f dv      = |u|^2 f_0 + 2 u . f_e + 2 sum_d f_{2 e_d}
                               + D theta f_0

A cell is in its *equilibrium frame* when f_{e_i} = 0 for all i and
sum_d f_{2 e_d} = 0, i.e. when (u, theta) are the actual bulk velocity
and scaled temperature of the cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .basis import MomentBasis, get_basis
from .hermite import hermite_seq

__all__ = [
    "CellState",
    "GridState",
    "derived_moments",
    "eval_distribution",
    "macroscopic",
    "maxwellian_cell",
    "write_grid_csv",
]


@dataclass
class CellState:
    """Coefficients of one cell together with its expansion frame."""

    basis: MomentBasis
    coeffs: np.ndarray  # (size,)
    u: np.ndarray       # (D,)
    theta: float

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float))
        self.theta = float(self.theta)
        if self.coeffs.shape != (self.basis.size,):
            raise ValueError(
                f"expected {self.basis.size} coefficients, got {self.coeffs.shape}"
            )
        if self.u.shape != (self.basis.D,):
            raise ValueError(f"frame velocity must have shape ({self.basis.D},)")
        if not self.theta > 0.0:
            raise ValueError("frame temperature must be positive")

    @property
    def rho(self) -> float:
        return float(self.coeffs[0])

    def copy(self) -> "CellState":
        return CellState(self.basis, self.coeffs.copy(), self.u.copy(), self.theta)


@dataclass
class GridState:
    """Periodic 1-D grid of cells sharing one basis.

    Arrays are cell-major: coeffs[j] are the coefficients of cell j,
    whose centre sits at x = (j + 1/2) dx.
    """

    basis: MomentBasis
    coeffs: np.ndarray   # (N, size)
    u: np.ndarray        # (N, D)
    theta: np.ndarray    # (N,)
    dx: float
    length: float
    time: float = 0.0
    # electric field of the step that produced this state, if any
    efield: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return self.coeffs.shape[0]

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def rho(self) -> np.ndarray:
        return self.coeffs[:, 0]

    def cell(self, j: int) -> CellState:
        return CellState(self.basis, self.coeffs[j].copy(), self.u[j].copy(),
                         float(self.theta[j]))

    def copy(self) -> "GridState":
        return GridState(self.basis, self.coeffs.copy(), self.u.copy(),
                         self.theta.copy(), self.dx, self.length, self.time)


def maxwellian_cell(basis: MomentBasis, rho: float, u, theta: float) -> CellState:
    """Cell whose distribution is the Maxwellian with moments (rho, u, theta)."""
    if not rho > 0.0:
        raise ValueError("density must be positive")
    c = np.zeros(basis.size)
    c[0] = rho
    return CellState(basis, c, u, theta)


def macroscopic(cell: CellState) -> tuple[float, np.ndarray, float]:
    """Density, bulk velocity and scaled temperature of a cell.

    Works in any expansion frame; inverts the moment relations quoted in
    the module docstring.  Raises on nonpositive density, which in the
    solver signals a blown-up state.
    """
    rho, u, theta = _macroscopic_arrays(
        cell.basis, cell.coeffs[None], cell.u[None], np.array([cell.theta])
    )
    return float(rho[0]), u[0], float(theta[0])


def _macroscopic_arrays(basis, coeffs, u, theta):
    """Vectorized macroscopic reconstruction over leading axes."""
    rho = coeffs[..., 0]
    if not np.all(rho > 0.0):
        raise ValueError("nonpositive density in macroscopic reconstruction")
    e_slots = [basis.unit(d) for d in range(basis.D)]
    du = np.stack([coeffs[..., s] for s in e_slots], axis=-1) / rho[..., None]
    u_new = u + du
    twos = [basis.position(tuple(2 if i == d else 0 for i in range(basis.D)))
            for d in range(basis.D)]
    s2 = sum(coeffs[..., s] for s in twos)
    theta_new = theta + (2.0 * s2 / rho - (du * du).sum(axis=-1)) / basis.D
    return rho, u_new, theta_new


def derived_moments(cell: CellState) -> tuple[np.ndarray, np.ndarray]:
    """Heat flux vector q and pressure tensor p of an equilibrium-frame cell.

    q_i   = 2 f_{3 e_i} + sum_d f_{2 e_d + e_i}
    p_ij  = rho theta delta_ij + (1 + delta_ij) f_{e_i + e_j}

    The trace identity sum_d p_dd = D rho theta holds because the cell
    is assumed to be in its equilibrium frame (sum_d f_{2 e_d} = 0).
    """
    b = cell.basis
    D = b.D
    c = cell.coeffs
    rho, _, theta = macroscopic(cell)
    q = np.zeros(D)
    for i in range(D):
        for d in range(D):
            alpha = [2 if j == d else 0 for j in range(D)]
            alpha[i] += 1
            q[i] += c[b.position(alpha)]
        q[i] += 2.0 * c[b.position([3 if j == i else 0 for j in range(D)])]
    p = np.zeros((D, D))
    for i in range(D):
        for j in range(D):
            alpha = [0] * D
            alpha[i] += 1
            alpha[j] += 1
            p[i, j] = (1.0 + (i == j)) * c[b.position(alpha)]
            if i == j:
                p[i, j] += rho * theta
    return q, p


def eval_distribution(cell: CellState, v) -> float | np.ndarray:
    """Point values of the expanded distribution.

    Parameters
    ----------
    v : array_like, shape (D,) or (..., D)
        Velocity point(s).

    Notes
    -----
    Collecting the shared Gaussian factor first,

        f(v) = (2 pi theta)^(-D/2) exp(-|xi|^2/2)
               * sum_alpha f_alpha theta^(-|alpha|/2) prod_d He_{alpha_d}(xi_d)
    """
    b = cell.basis
    va = np.asarray(v, dtype=float)
    scalar = va.shape == (b.D,)
    va = va.reshape((-1, b.D)) if scalar else va
    xi = (va - cell.u) / np.sqrt(cell.theta)
    tables = hermite_seq(b.M, xi)            # (M+1, ..., D)
    poly = np.zeros(xi.shape[:-1])
    scale = cell.theta ** (-0.5 * b.orders)
    for p in range(b.size):
        term = np.ones_like(poly)
        for d in range(b.D):
            term = term * tables[b.indices[p, d], ..., d]
        poly += cell.coeffs[p] * scale[p] * term
    gauss = (2.0 * np.pi * cell.theta) ** (-0.5 * b.D) * np.exp(
        -0.5 * (xi * xi).sum(axis=-1)
    )
    out = gauss * poly
    return float(out[0]) if scalar else out


def write_grid_csv(grid: GridState, path, include_coeffs: bool = False) -> None:
    """Dump one row per cell: x, rho, u1, theta and optionally f_<alpha>."""
    b = grid.basis
    header = ["x", "rho", "u1", "theta"]
    if include_coeffs:
        for p in range(b.size):
            alpha = grid.basis.indices[p]
            header.append("f_" + "_".join(str(int(a)) for a in alpha))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j in range(grid.n_cells):
            row = [repr(float(grid.x[j])), repr(float(grid.rho[j])),
                   repr(float(grid.u[j, 0])), repr(float(grid.theta[j]))]
            if include_coeffs:
                row += [repr(float(c)) for c in grid.coeffs[j]]
            w.writerow(row)
