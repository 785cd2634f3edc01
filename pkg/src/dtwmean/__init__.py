"""Exact Fréchet means of time series under dynamic time warping."""

from .bounds import bound_profile, bounds_report, eval_f, frechet_lb, lb_imp, lb_sim, ub_imp, ub_sim
from .oracle import OracleRefusal, OracleResult, brute_force_mean, optimal_z_for_paths
from .series import Instance, TimeSeries, block_reduce, load_ucr, parse_ucr, sample_instance
from .warping import GlobalConstraint, WarpingPath, dtw

__version__ = "0.1.0"
