"""Run configuration, operator-split time stepping and energy diagnostics.

A step advances the grid by a CFL-limited dt through, in order:
convection (HLL fluxes plus the top-order correction, with re-expansion),
the Poisson solve and field acceleration using the post-convection
density, and, when collisions are on, the exact BGK damping factor.
The ordering matters and is pinned by a golden-trace regression test.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .basis import get_basis
from .convection import BlowupError, convection_step
from .fields import acceleration_step, bgk_step, solve_fields
from .hermite import greatest_zero
from .state import GridState

__all__ = [
    "EnergyTrace",
    "SimConfig",
    "cfl_timestep",
    "diagnostics",
    "initialize",
    "run",
    "step",
]

TRACE_COLUMNS = ("t", "E_h", "E_p", "E_total", "mass", "momentum")


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one run.

    Required: expansion degree M, cell count N, wave number k and end
    time t_end.  The domain length is always one perturbation period,
    L = 2 pi / k.  A is the relative density perturbation amplitude,
    nu the BGK collision frequency; q, m, eps0 are the species charge,
    mass and the permittivity of the normalized system.
    """

    M: int
    N: int
    k: float
    t_end: float
    D: int = 1
    A: float = 0.01
    nu: float = 0.0
    cfl: float = 0.45
    q: float = 1.0
    m: float = 1.0
    eps0: float = 1.0

    def __post_init__(self):
        if not isinstance(self.M, (int, np.integer)) or self.M < 3:
            raise ValueError("M must be an integer >= 3")
        if not isinstance(self.N, (int, np.integer)) or self.N < 4:
            raise ValueError("N must be an integer >= 4")
        if self.D not in (1, 2, 3):
            raise ValueError("D must be 1, 2 or 3")
        if not self.k > 0.0:
            raise ValueError("k must be positive")
        if not abs(self.A) < 1.0:
            raise ValueError("|A| must be < 1 to keep the density positive")
        if self.nu < 0.0:
            raise ValueError("nu must be nonnegative")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if not self.m > 0.0:
            raise ValueError("m must be positive")
        if not self.eps0 > 0.0:
            raise ValueError("eps0 must be positive")

    @property
    def L(self) -> float:
        return 2.0 * math.pi / self.k

    @property
    def dx(self) -> float:
        return self.L / self.N


@dataclass
class EnergyTrace:
    """Per-step diagnostics of a run (column layout in TRACE_COLUMNS)."""

    t: np.ndarray
    E_h: np.ndarray
    E_p: np.ndarray
    E_total: np.ndarray
    mass: np.ndarray
    momentum: np.ndarray

    @classmethod
    def from_rows(cls, rows) -> "EnergyTrace":
        arr = np.asarray(rows, dtype=float).reshape(-1, 6)
        return cls(*(arr[:, i].copy() for i in range(6)))

    def __len__(self) -> int:
        return self.t.size

    def row(self, i: int) -> tuple[float, ...]:
        return tuple(float(getattr(self, c)[i]) for c in TRACE_COLUMNS)

    def to_csv(self, path, every: int = 1) -> None:
        """Write the trace; ``every`` downsamples but always keeps the last row."""
        if every < 1:
            raise ValueError("every must be >= 1")
        keep = list(range(0, len(self), every))
        if keep[-1] != len(self) - 1:
            keep.append(len(self) - 1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for i in keep:
                w.writerow(f"{v:.17g}" for v in self.row(i))

    @classmethod
    def from_csv(cls, path) -> "EnergyTrace":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if tuple(h.strip() for h in header) != TRACE_COLUMNS:
                raise ValueError(
                    f"unexpected trace header {header!r}; want {','.join(TRACE_COLUMNS)}"
                )
            rows = [[float(v) for v in row] for row in r if row]
        return cls.from_rows(rows)


def initialize(config: SimConfig) -> GridState:
    """Maxwellian background with a cosine density perturbation.

    rho_j = 1 + A cos(k x_j) at cell centres x_j = (j + 1/2) dx,
    u = 0 and theta = 1 everywhere.
    """
    basis = get_basis(config.M, config.D)
    n = config.N
    dx = config.dx
    x = (np.arange(n) + 0.5) * dx
    coeffs = np.zeros((n, basis.size))
    coeffs[:, 0] = 1.0 + config.A * np.cos(config.k * x)
    u = np.zeros((n, basis.D))
    theta = np.ones(n)
    return GridState(basis, coeffs, u, theta, dx, config.L, 0.0)


def cfl_timestep(grid: GridState, config: SimConfig | float = 0.45) -> float:
    """dt = cfl dx / max_j (|u1_j| + C sqrt(theta_j)), C the fastest wave.

    ``config`` may be a full SimConfig (its cfl field is used) or the
    bare cfl number.
    """
    cfl = getattr(config, "cfl", config)
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    C = greatest_zero(grid.basis.M + 1)
    speed = np.abs(grid.u[:, 0]) + C * np.sqrt(grid.theta)
    top = float(speed.max())
    if not top > 0.0:
        raise ValueError("every cell has zero signal speed, dt is unbounded")
    return cfl * grid.dx / top


def _solve_field(grid: GridState, config: SimConfig) -> np.ndarray:
    fs = solve_fields(grid.rho, grid.dx, q=config.q, m=config.m,
                      eps0=config.eps0)
    return fs.efield


def step(grid: GridState, config: SimConfig) -> GridState:
    """One operator-split step at the current CFL-limited dt."""
    dt = cfl_timestep(grid, config)
    g = convection_step(grid, dt)
    efield = _solve_field(g, config)
    g = acceleration_step(g, efield, dt, q_over_m=config.q / config.m)
    if config.nu > 0.0:
        g = bgk_step(g, config.nu, dt)
    g.time = grid.time + dt
    g.efield = efield
    return g


def diagnostics(grid: GridState, efield: np.ndarray) -> tuple[float, ...]:
    """One trace row: (t, E_h, E_p, E_total, mass, momentum).

    E_h = dx sum_j E_j^2 and E_p = dx sum_j (rho |u|^2 + D rho theta);
    their sum drifts at the level of the scheme's dissipation and is a
    resolution diagnostic, not a conserved quantity.  Mass and momentum
    are the exactly conserved pair.
    """
    dx = grid.dx
    rho = grid.rho
    e_h = dx * float(np.dot(efield, efield))
    u_sq = (grid.u * grid.u).sum(axis=1)
    e_p = dx * float(np.sum(rho * u_sq + grid.basis.D * rho * grid.theta))
    mass = dx * float(np.sum(rho))
    momentum = dx * float(np.sum(rho * grid.u[:, 0] + grid.coeffs[:, grid.basis.unit(0)]))
    return (grid.time, e_h, e_p, e_h + e_p, mass, momentum)


def run(config: SimConfig) -> EnergyTrace:
    """Run from the cosine initial data until t >= t_end.

    Records a diagnostics row for the initial state and after every
    step.  The last step may overshoot t_end slightly since dt is never
    clamped.  Raises BlowupError (with step/time/cell attached) if the
    state degenerates.
    """
    grid = initialize(config)
    rows = [diagnostics(grid, _solve_field(grid, config))]
    nstep = 0
    while grid.time < config.t_end:
        try:
            grid = step(grid, config)
        except BlowupError as err:
            err.step = nstep + 1
            raise
        rows.append(diagnostics(grid, grid.efield))
        nstep += 1
    return EnergyTrace.from_rows(rows)


def config_field_types() -> dict[str, type]:
    """Map of SimConfig field name -> python type (used by the CLI parser)."""
    out = {}
    for f in dataclass_fields(SimConfig):
        out[f.name] = int if f.type in ("int", int) else float
    return out
