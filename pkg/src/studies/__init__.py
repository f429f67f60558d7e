"""
Scientific studies over the truncated road-field eigenproblem.
"""

from .common import StudyContext, PointSolve
from .bounds import BoundsReport, bounds_check, dirichlet_eig, road_dirichlet_eig
from .convergence import ConvergenceReport, converge_in_R
from .sweeps import (SweepReport, sweep, lipschitz_witness, ConditionCheck,
                     check_condition_strict, strict_monotonicity_probe)
from .harnack import CoefficientSampler, HarnackReport, harnack_study
from .decay import DecayEnvelope, decay_envelope

__all__ = [
    'StudyContext', 'PointSolve',
    'BoundsReport', 'bounds_check', 'dirichlet_eig', 'road_dirichlet_eig',
    'ConvergenceReport', 'converge_in_R',
    'SweepReport', 'sweep', 'lipschitz_witness', 'ConditionCheck', 'check_condition_strict',
    'strict_monotonicity_probe',
    'CoefficientSampler', 'HarnackReport', 'harnack_study',
    'DecayEnvelope', 'decay_envelope',
]
