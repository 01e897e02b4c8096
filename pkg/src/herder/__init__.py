"""Ant Colony Optimization with Aphids for the dynamic multidimensional knapsack."""

__version__ = "0.1.0"

from .aco_core import AcoParams, PheromoneField, run_iteration
from .datasets import DatasetError, generate_dmkp, parse_dmkp, read_best_known, read_dmkp, write_dmkp
from .metrics import aggregate, convergence_curve, gap_slip, result_gap, t_test
from .problem import DmkpInstance, MkpState, Solution, evaluate_profit, heuristic, is_feasible, random_mkp
from .runner import RunConfig, RunRecord, StateResult, run_batch, run_dynamic, state_budget
from .strategies import AphidParams, StrategyKind

__all__ = [
    "AcoParams",
    "AphidParams",
    "DatasetError",
    "DmkpInstance",
    "MkpState",
    "PheromoneField",
    "RunConfig",
    "RunRecord",
    "Solution",
    "StateResult",
    "StrategyKind",
    "aggregate",
    "convergence_curve",
    "evaluate_profit",
    "gap_slip",
    "generate_dmkp",
    "heuristic",
    "is_feasible",
    "parse_dmkp",
    "random_mkp",
    "read_best_known",
    "read_dmkp",
    "result_gap",
    "run_batch",
    "run_dynamic",
    "state_budget",
    "t_test",
    "write_dmkp",
]
