"""In-repo LP and mixed-binary solver used by the decomposition and the baselines."""

from .bnb import BnbResult, BnbStatus, relative_gap, solve_bnb
from .lpfile import dumps_lp, loads_lp, read_lp, write_lp
from .simplex import (
    EQ,
    GE,
    LE,
    LpProblem,
    LpResult,
    LpStatus,
    check_farkas,
    dual_objective,
    duals_for_rows,
    slacks,
    solve_lp,
)

__all__ = [
    "EQ", "GE", "LE",
    "LpProblem", "LpResult", "LpStatus", "BnbResult", "BnbStatus",
    "solve_lp", "solve_bnb", "check_farkas", "dual_objective", "duals_for_rows",
    "slacks", "relative_gap",
    "dumps_lp", "loads_lp", "read_lp", "write_lp",
]
