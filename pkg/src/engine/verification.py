"""
Verification ledger for asserted numerical invariants.
Records every check in an audit trail and hashes result payloads for reproducibility.
"""

import hashlib
import json
from typing import Dict, Any, List
from dataclasses import dataclass, field
import logging

logger = logging.getLogger(__name__)


@dataclass
class VerificationResult:
    """Result of one asserted check."""
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)


class VerificationEngine:
    """
    Ledger of invariant checks for one run.

    Provides:
    - Named pass/fail records with numeric details
    - Failure listing for exit-code decisions
    - SHA-256 digests of canonical result payloads
    """

    def __init__(self):
        self.verification_history: List[VerificationResult] = []

    def check(self, name: str, passed: bool, **details) -> bool:
        """
        Record an asserted check.

        Args:
            name: Stable check identifier, e.g. 'lower_bound'
            passed: Outcome
            **details: Numeric context (margins, tolerances)

        Returns:
            bool: The outcome, for chaining
        """
        result = VerificationResult(name, bool(passed), details)
        self.verification_history.append(result)
        if passed:
            logger.debug(f"Check {name} passed: {details}")
        else:
            logger.warning(f"Check {name} FAILED: {details}")
        return bool(passed)

    def failures(self) -> List[VerificationResult]:
        return [v for v in self.verification_history if not v.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failures()

    @staticmethod
    def hash_result(result: Dict[str, Any]) -> str:
        """Create a SHA-256 hash of a result payload in canonical JSON form."""
        result_str = json.dumps(result, sort_keys=True)
        return hashlib.sha256(result_str.encode()).hexdigest()

    def get_verification_history(self, limit: int = 100) -> List[Dict[str, Any]]:
        return [{'name': v.name, 'passed': v.passed, 'details': v.details}
                for v in self.verification_history[-limit:]]

    def get_verification_stats(self) -> Dict[str, Any]:
        """Get verification statistics."""
        total = len(self.verification_history)
        passed = sum(1 for v in self.verification_history if v.passed)
        return {
            'total_checks': total,
            'passed_checks': passed,
            'pass_rate': passed / max(total, 1),
            'failed': [v.name for v in self.failures()]
        }
