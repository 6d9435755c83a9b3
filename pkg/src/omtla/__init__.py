"""Optimization modulo linear arithmetic over rationals, integers and mixed domains."""
from .arith import NEG_INF, POS_INF, DeltaRational, Rational
from .context import Options, SolverContext, Statistics
from .engine import OptimizationOutcome, ObjectiveResult, optimize

__all__ = ["DeltaRational", "NEG_INF", "ObjectiveResult", "OptimizationOutcome", "Options",
           "POS_INF", "Rational", "SolverContext", "Statistics", "optimize"]
__version__ = "0.1.0"
