"""Hermite-moment solver for the 1D Vlasov-Poisson(-BGK) equations.

The distribution function is expanded in Hermite functions about a
local velocity frame per cell; truncation at total degree M plus a
top-order closure correction gives a hyperbolic system that is advanced
with HLL fluxes, an exact field impulse and an exact BGK factor.
Analysis helpers fit Landau damping rates, extrapolate them in the grid
spacing and in the expansion degree, and locate recurrence times.
"""

from .analysis import (
    DampingFit,
    ExtrapolationFit,
    NoRecurrenceError,
    auto_fit,
    detect_recurrence,
    extrapolate_rate,
    fit_damping_rate,
    moment_convergence,
)
from .basis import MomentBasis, get_basis, index_set
from .convection import (
    BlowupError,
    convection_step,
    hll_flux,
    regularization_increment,
    signal_speeds,
)
from .cli import cli_main
from .fields import (
    FieldState,
    acceleration_step,
    bgk_step,
    electric_field,
    solve_fields,
    solve_poisson,
)
from .hermite import QuadratureRule, greatest_zero, hermite_eval, quadrature
from .projection import (
    multiply_v1_truncate,
    project,
    project_ode,
    reexpand_equilibrium,
)
from .simulation import (
    EnergyTrace,
    SimConfig,
    cfl_timestep,
    diagnostics,
    initialize,
    run,
    step,
)
from .state import (
    CellState,
    GridState,
    derived_moments,
    eval_distribution,
    macroscopic,
    maxwellian_cell,
    write_grid_csv,
)

__version__ = "0.1.0"
