"""Growth series of indexed grammars: an exhaustive derivation oracle and a
depth-capped functional-equation solver, with exact integer coefficients."""

from .grammar import (BOTTOM, Grammar, GrammarError, LoadingClass, Production, RhsVar,
                      StructureReport, apply_production, check_structure, classify_loading,
                      parse_grammar, render_grammar)
from .series import (BivariateGrid, CountVector, SeriesOrderError, TruncSeries, diagonal_sum,
                     expand_rational, reference_sequence, ts_add, ts_div, ts_mul)
from .oracle import (BalanceEstimate, DerivationConfig, ParikhGrid, Var, WordCounts,
                     ambiguity_scan, enumerate_words, estimate_balance, growth_coefficients,
                     parikh_grid, step_expand)
from .dsv import (DepthExhausted, EquationSystem, EvalConfig, MemoTable, NoStabilization,
                  ParikhUnsound, SolveResult, SolverError, build_equation_view, eval_variable,
                  parikh_equivalence_check, solve)

__version__ = "0.1.0"
