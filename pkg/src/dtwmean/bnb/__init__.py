"""Branch-and-bound over the mean formulations."""

from .decode import ConsistencyError, complete_assignment, decode_paths, extract_solution
from .heuristic import HeuristicResult, medoid, primal_heuristic
from .lp import LPError
from .simplex import solve_lp
from .solver import BranchAndBound, SolveResult, SolverConfig, gap, lp_relax, solve
