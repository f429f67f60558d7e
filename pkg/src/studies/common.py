"""
Shared plumbing for studies: grid construction, assembly and solving for one parameter point.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

from discretization.assembly import SystemMatrix, assemble, AUTO
from discretization.grid import TruncatedGrid, build_grid, HALFDISK
from discretization.params import ProblemParams
from eigen.eigsolve import EigenResult, SolverConfig, principal_eig
from engine.compute_engine import SolveEngine
from engine.verification import VerificationEngine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointSolve:
    system: SystemMatrix
    eig: EigenResult

    @property
    def grid(self) -> TruncatedGrid:
        return self.system.grid

    @property
    def lam(self) -> float:
        return self.eig.lam


@dataclass
class StudyContext:
    """Settings shared by every solve of a study."""
    solver: SolverConfig = field(default_factory=SolverConfig)
    shape: str = HALFDISK
    drift_scheme: str = AUTO
    allow_peclet_violation: bool = False
    engine: Optional[SolveEngine] = None
    verifier: Optional[VerificationEngine] = None

    def __post_init__(self):
        if self.engine is None:
            self.engine = SolveEngine(1)
        if self.verifier is None:
            self.verifier = VerificationEngine()

    def grid(self, params: ProblemParams, R: float, h: float) -> TruncatedGrid:
        return build_grid(R, h, self.shape, params.sides)

    def assemble(self, params: ProblemParams, grid: TruncatedGrid) -> SystemMatrix:
        return assemble(grid, params, self.drift_scheme, self.allow_peclet_violation)

    def solve(self, params: ProblemParams, R: float, h: float) -> PointSolve:
        system = self.assemble(params, self.grid(params, R, h))
        return PointSolve(system, principal_eig(system, self.solver))

    def solve_many(self, params_list, R: float, h: float, task_type: str):
        """Solve several parameter points at one (R, h); returns TaskOutcomes in order."""
        return self.engine.map(task_type, lambda p: self.solve(p, R, h), params_list)


def relative_change(new: float, old: float) -> float:
    return abs(new - old) / max(abs(old), 1e-300)
