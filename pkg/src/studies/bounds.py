"""
Analytic eigenvalue bounds and Dirichlet comparison eigenvalues.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, Tuple

from discretization.assembly import assemble_field_dirichlet, assemble_road_dirichlet
from discretization.grid import TruncatedGrid
from discretization.params import ProblemParams
from eigen.eigsolve import principal_eig
from fields.coefficients import sup_on_region, OUTER
from studies.common import StudyContext

logger = logging.getLogger(__name__)


@dataclass
class BoundsReport:
    lower: float
    upper_road: float
    upper_dirichlet: Dict[int, float]
    upper_road_finite: float
    lam: float
    satisfied: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lower': self.lower,
            'upper_road': self.upper_road,
            'upper_dirichlet': [self.upper_dirichlet[s] for s in sorted(self.upper_dirichlet)],
            'upper_road_finite': self.upper_road_finite,
            'lambda': self.lam,
            'satisfied': dict(self.satisfied),
            'road_margin': self.lam - self.upper_road,
        }


def dirichlet_eig(params: ProblemParams, side: int, grid: TruncatedGrid,
                  ctx: Optional[StudyContext] = None) -> float:
    """Principal eigenvalue of one field with Dirichlet data on the whole boundary, y = 0 included."""
    ctx = ctx or StudyContext()
    system = assemble_field_dirichlet(grid, params, side, ctx.drift_scheme, ctx.allow_peclet_violation)
    return principal_eig(system, ctx.solver).lam


def road_dirichlet_eig(params: ProblemParams, grid: TruncatedGrid, ctx: Optional[StudyContext] = None) -> float:
    """Principal eigenvalue of the road operator alone with zero end values."""
    ctx = ctx or StudyContext()
    system = assemble_road_dirichlet(grid, params, ctx.drift_scheme, ctx.allow_peclet_violation)
    return principal_eig(system, ctx.solver).lam


def analytic_bounds(params: ProblemParams, grid: TruncatedGrid) -> Tuple[float, float]:
    """
    (lower, upper_road) with lower = min{0, -sup a_i, -sup f} and
    upper_road = c^2/(4D) + sum mu_i - min f. Suprema are grid-sampled.
    """
    sups = [sup_on_region(params.side(i).a, grid, OUTER, 0.0) for i in params.sides]
    upper_road = params.c ** 2 / (4 * params.D) + sum(params.side(i).mu for i in params.sides)
    if params.f is not None:
        sups.append(sup_on_region(params.f, grid, OUTER, 0.0))
        road_values = params.f.values(grid.road_nodes, 0.0)
        upper_road -= float(road_values.min())
    return min([0.0] + [-s for s in sups]), upper_road


def bounds_check(params: ProblemParams, grid: TruncatedGrid, ctx: Optional[StudyContext] = None) -> BoundsReport:
    """
    Solve at one truncation and compare with the bounds.

    The lower bound and the finite-R comparison bounds (road alone, each
    field alone) hold at every R and are asserted; the analytic road bound
    is a statement about the limit and is reported with its margin.
    """
    ctx = ctx or StudyContext()
    lam = ctx.solve(params, grid.R, grid.h).lam
    lower, upper_road = analytic_bounds(params, grid)
    upper_dirichlet = {i: dirichlet_eig(params, i, grid, ctx) for i in params.sides}
    road_finite = road_dirichlet_eig(params, grid, ctx)

    tol = 1e-8 * (1.0 + abs(lam))
    satisfied = {
        'lower': lam >= lower - tol,
        'upper_road': lam <= upper_road + 1e-6,
        'upper_road_finite': lam <= road_finite + tol,
    }
    for i, value in upper_dirichlet.items():
        satisfied[f'upper_dirichlet_{i}'] = lam <= value + tol

    verifier = ctx.verifier
    verifier.check('lower_bound', satisfied['lower'], lam=lam, lower=lower)
    verifier.check('road_comparison', satisfied['upper_road_finite'], lam=lam, bound=road_finite)
    for i, value in upper_dirichlet.items():
        verifier.check(f'field{i}_dirichlet_comparison', satisfied[f'upper_dirichlet_{i}'], lam=lam, bound=value)

    logger.info(f"Bounds at R={grid.R}: lower={lower:.6g} <= lambda={lam:.8g}; "
                f"road margin {lam - upper_road:.4g}; Dirichlet {upper_dirichlet}")
    return BoundsReport(lower, upper_road, upper_dirichlet, road_finite, lam, satisfied)
