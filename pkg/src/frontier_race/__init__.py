"""Time-budgeted metaheuristics for cardinality-constrained portfolio selection."""

from frontier_race.dataset import (
    AssetUniverse,
    DatasetFormatError,
    Uef,
    load_uef,
    load_uef_file,
    load_universe_file,
    parse_universe,
)
from frontier_race.evaluation import (
    ErrorReport,
    FrontierPoint,
    evaluate_points,
    evaluate_solution_set,
    mpe,
    percentage_error,
)
from frontier_race.model import (
    InfeasibleSpecError,
    Portfolio,
    ProblemSpec,
    check_feasible,
    lambda_grid,
    objective,
    portfolio_stats,
)
from frontier_race.sampling import RngStream, find_starting_portfolios
from frontier_race.solvers import (
    Budget,
    GaProfile,
    SaProfile,
    SolutionSet,
    TsProfile,
    profile_for_budget,
    run,
)

__all__ = [
    "AssetUniverse",
    "Budget",
    "DatasetFormatError",
    "ErrorReport",
    "FrontierPoint",
    "GaProfile",
    "InfeasibleSpecError",
    "Portfolio",
    "ProblemSpec",
    "RngStream",
    "SaProfile",
    "SolutionSet",
    "TsProfile",
    "Uef",
    "check_feasible",
    "evaluate_points",
    "evaluate_solution_set",
    "find_starting_portfolios",
    "lambda_grid",
    "load_uef",
    "load_uef_file",
    "load_universe_file",
    "mpe",
    "objective",
    "parse_universe",
    "percentage_error",
    "portfolio_stats",
    "profile_for_budget",
    "run",
]

__version__ = "0.1.0"
