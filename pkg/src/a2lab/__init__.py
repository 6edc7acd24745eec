"""Exact piecewise power-law numerics for sharp weighted L2 bounds of sparse operators."""

from .logpos import ONE, ZERO, LogPos, Rat, coord, log2q, log_close, lsum
from .piecewise import (
    DomainError, Piece, PiecewisePowerFn, PowerTerm, StepFn, average, constant, indicator, integrate_term, power,
)
from .weights import (
    Restricted, SelfSimilarFn, WeightPair, eval_sigma, lacunary_pair, level_integrals, parse_pair_spec, power_pair,
    tail_integrals,
)

__version__ = "0.1.0"
