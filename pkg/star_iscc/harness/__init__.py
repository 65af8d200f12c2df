"""Experiment harness: Monte Carlo sweeps, convergence curves, beampatterns, self-checks."""

from star_iscc.harness.experiments import (
    ResultRow,
    run_beampattern,
    run_convergence,
    run_sweep,
    summarize_sweep,
)
from star_iscc.harness.validate import ValidationReport, run_validate

__all__ = [
    "ResultRow",
    "ValidationReport",
    "run_beampattern",
    "run_convergence",
    "run_sweep",
    "run_validate",
    "summarize_sweep",
]
