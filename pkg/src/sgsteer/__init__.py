"""Stern-Gerlach single-particle entanglement, collapse and steering simulations."""

from .measurement import CollapsedState, Outcome, Setting, measure, outcome_probabilities
from .numerics import DomainError, QuadratureError, RngStream
from .wavefunction import PhysParams, branch_overlap, branch_phi, evaluate_state

__version__ = "0.1.0"

__all__ = [
    "CollapsedState",
    "DomainError",
    "Outcome",
    "PhysParams",
    "QuadratureError",
    "RngStream",
    "Setting",
    "branch_overlap",
    "branch_phi",
    "evaluate_state",
    "measure",
    "outcome_probabilities",
]
