"""Solvers: conic backend, WMMSE stage, STAR stage, alternation and baselines."""

from star_iscc.solver.ao import SolveReport, TerminationReason, algorithm3
from star_iscc.solver.baselines import SchemeKind, solve_scheme

__all__ = ["SchemeKind", "SolveReport", "TerminationReason", "algorithm3", "solve_scheme"]
