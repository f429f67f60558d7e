"""
Error hierarchy for the road-field laboratory.
Every error carries a machine-readable kind that ends up in the result document.
"""

from typing import Dict, Any, Optional, List


class LabError(Exception):
    """Base error with a machine-readable kind and structured details."""

    kind = 'numerical'

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Serialize for the `error` field of a result document."""
        return {'kind': self.kind, 'message': self.message, **self.details}


class ConfigError(LabError):
    """Invalid configuration value; details carry the offending key path."""

    kind = 'config'

    def __init__(self, message: str, key_path: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if key_path is not None:
            details['key_path'] = key_path
        super().__init__(message, details)
        self.key_path = key_path


class ExpressionSyntaxError(LabError):
    """Malformed expression text."""

    kind = 'parse'

    def __init__(self, message: str, offset: int, expected: Optional[List[str]] = None):
        super().__init__(message, {'offset': offset, 'expected': sorted(expected or [])})
        self.offset = offset
        self.expected = sorted(expected or [])


class UnknownIdentifierError(LabError):
    """Identifier that is neither a variable, a constant nor a known function."""

    kind = 'parse'

    def __init__(self, message: str, offset: int, name: str):
        super().__init__(message, {'offset': offset, 'identifier': name})
        self.offset = offset
        self.name = name


class EvaluationDomainError(LabError):
    """Evaluation left the real domain (division by zero, sqrt of a negative, overflow)."""

    kind = 'domain'

    def __init__(self, message: str, subexpression: str):
        super().__init__(message, {'subexpression': subexpression})
        self.subexpression = subexpression


class BoundViolationError(ConfigError):
    """Sampled coefficient exceeds its declared bound."""

    kind = 'bound'


class GridError(LabError):
    kind = 'grid'


class AssemblyError(LabError):
    kind = 'assembly'


class SolverError(LabError):
    kind = 'numerical'


class ConvergenceError(SolverError):
    """Iteration budget exhausted; details carry the residual history."""

    def __init__(self, message: str, residual_history: List[float]):
        super().__init__(message, {'residual_history': [float(r) for r in residual_history[-20:]],
                                   'iterations': len(residual_history)})
        self.residual_history = list(residual_history)


class PositivityError(SolverError):
    """A Perron vector lost strict positivity."""

    kind = 'positivity'


class ConditionNotVerifiedError(LabError):
    """The strict decay condition could not be verified for the given parameters."""

    kind = 'condition'


class InvariantViolation(LabError):
    """An asserted numerical invariant failed."""

    kind = 'invariant'
