"""Exact toolkit for linear equations with min and max operators."""

from .conditions import (ConditionReport, ConvexCombination, Status, Verdict,
                         check_c1_general, check_c1_nonneg, check_c2, check_c3,
                         check_c4, check_conditions)
from .core import (Affine, Const, DecisionQuery, InstanceError, LemmSystem, Max,
                   Min, Solution, Var, dump_system, flatten, load_system,
                   parse_system, strategies, strategy_matrix, verify_certificate)
from .lp import LpProblem, lp_solve
from .reductions import (CnfFormula, mlp_to_lemm, normalize_sum_to_1,
                         parse_dimacs, partition_to_lemm,
                         sat_to_condition_instance, to_min_only)
from .solvers import (BudgetExceeded, Decision, PreconditionError, decide,
                      solve_auto, solve_enumerate, solve_fixed_strategy,
                      solve_lp_one_type, solve_value_iteration)

__version__ = "0.1.0"
