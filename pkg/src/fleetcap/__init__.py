"""Multi-modal fleet assignment with organizational and rental vehicles under an emission cap."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ConfigurationError,
    Dimensions,
    DimensionError,
    Instance,
    ModelOptions,
    Solution,
    Variant,
    Violation,
    budget_usage,
    check_feasible,
    evaluate_objective,
    rental_share,
    total_emissions,
)
from .ilp import IlpProblem, VarIndexMap, build_ilp, encode_solution, export_lp_text, extract_solution  # noqa: E402
from .simplex import LpSolution, solve_lp, verify_lp_certificate  # noqa: E402
from .bnb import IlpResult, SolveParams, solve_ilp  # noqa: E402
from .oracle import brute_force_solve, enumeration_size  # noqa: E402
from .generate import GenSpec, generate, texas_preset  # noqa: E402
from .solve import SolveReport, solve_instance  # noqa: E402
from .analysis import SweepResult, cap_grid, cost_delta_percent, min_emissions, sweep_emission_cap  # noqa: E402
