"""Equilibrium wage-posting search model: solve, simulate, estimate, decompose.

The hot numerical kernels run on a compiled extension when it is
available; ``searchgap.BACKEND`` names the active implementation.
"""

from ._backend import BACKEND
from .params import (
    FrictionParams,
    InvalidSegmentError,
    ParetoProductivity,
    ReservationWageDist,
    SegmentParams,
)
from .equilibrium import (
    EquilibriumError,
    EquilibriumSolution,
    equilibrium_unemployment,
    actual_wage_cdf,
    lowest_wage,
    offer_cdf_from_wage_density,
    productivity_from_wage,
    recover_productivity,
    solve_equilibrium,
    solve_wage_offer_curve,
    unemployed_mixture,
    wage_curve_residual,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FrictionParams",
    "ReservationWageDist",
    "ParetoProductivity",
    "SegmentParams",
    "InvalidSegmentError",
    "EquilibriumError",
    "EquilibriumSolution",
    "lowest_wage",
    "solve_wage_offer_curve",
    "solve_equilibrium",
    "equilibrium_unemployment",
    "actual_wage_cdf",
    "unemployed_mixture",
    "offer_cdf_from_wage_density",
    "productivity_from_wage",
    "recover_productivity",
    "wage_curve_residual",
    "__version__",
]
