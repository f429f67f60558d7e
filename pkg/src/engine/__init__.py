"""
Concurrent solve engine and verification ledger for laboratory studies.
"""

from .compute_engine import SolveEngine, SolveTask, TaskOutcome
from .verification import VerificationEngine

__all__ = ['SolveEngine', 'SolveTask', 'TaskOutcome', 'VerificationEngine']
