"""Exact solver for linear recurrences and coupled difference/differential
systems whose solutions are eps-expansions with nested-sum coefficients."""

from .algebra import (DivisionByZero, PoleAtPoint, PoleAtZero, RationalFunction, ZeroPolynomial,
                      eval_eps_zero, nonneg_integer_roots, shift_N)
from .epsilon import (EpsRecurrence, LaurentExpansion, RhsTooShallow, constant_term_recurrence,
                      generate_expansion, initial_value_demand, peel_order)
from .ode import (BoundaryInconsistent, CoupledDifferentialSystem, ode_to_recurrence,
                  solve_coupled_ode, term_to_operator)
from .recurrence import (Inconclusive, InsufficientInitialValues, NotNestedSum, RecurrenceEquation,
                         Solved, factor_dalembert, hypergeometric_solutions, polynomial_solutions,
                         solution_space, solve_recurrence)
from .sums import (Expr, HarmonicSum, HyperProduct, NestedSum, S, antidifference, canonicalize,
                   evaluate, nested_sum, quasi_shuffle_product, shift)
from .syntax import ParseError, expr_to_str, parse_expr, parse_ratfun
from .uncoupling import (CoupledDifferenceSystem, OrderPlan, UncoupledForm, analyze, solve_coupled,
                         to_first_order, uncouple)
from .verify import SelfCheckFailed, SingularLeading, pointwise_equal, unroll, unroll_eps, unroll_system

__version__ = "0.1.0"

__all__ = [
    "DivisionByZero",
    "PoleAtPoint",
    "PoleAtZero",
    "RationalFunction",
    "ZeroPolynomial",
    "eval_eps_zero",
    "nonneg_integer_roots",
    "shift_N",
    "EpsRecurrence",
    "LaurentExpansion",
    "RhsTooShallow",
    "constant_term_recurrence",
    "generate_expansion",
    "initial_value_demand",
    "peel_order",
    "BoundaryInconsistent",
    "CoupledDifferentialSystem",
    "ode_to_recurrence",
    "solve_coupled_ode",
    "term_to_operator",
    "Inconclusive",
    "InsufficientInitialValues",
    "NotNestedSum",
    "RecurrenceEquation",
    "Solved",
    "factor_dalembert",
    "hypergeometric_solutions",
    "polynomial_solutions",
    "solution_space",
    "solve_recurrence",
    "Expr",
    "HarmonicSum",
    "HyperProduct",
    "NestedSum",
    "S",
    "antidifference",
    "canonicalize",
    "evaluate",
    "nested_sum",
    "quasi_shuffle_product",
    "shift",
    "ParseError",
    "expr_to_str",
    "parse_expr",
    "parse_ratfun",
    "CoupledDifferenceSystem",
    "OrderPlan",
    "UncoupledForm",
    "analyze",
    "solve_coupled",
    "to_first_order",
    "uncouple",
    "SelfCheckFailed",
    "SingularLeading",
    "pointwise_equal",
    "unroll",
    "unroll_eps",
    "unroll_system",
]
