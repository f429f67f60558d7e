"""
Parameter sweeps: continuity witnesses, monotonicity checks and the strict
monotonicity probe under the strict decay condition.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Sequence

import numpy as np

from errors import ConfigError
from discretization.grid import TruncatedGrid
from discretization.params import ProblemParams, SWEEP_PATHS, DIFFUSION_PATHS, SHIFT_PATHS
from fields.coefficients import CoefficientField, sup_on_region, OUTER
from studies.common import StudyContext

logger = logging.getLogger(__name__)

NON_DECREASING = 'non_decreasing'
NON_INCREASING = 'non_increasing'
MONOTONE_SLACK = 1e-8
STRICT_MARGIN = 1e-8
LIPSCHITZ_MAX_VARIATION = 0.5


def expected_direction(params: ProblemParams, path: str) -> Optional[str]:
    """Direction guaranteed for driftless systems, None where nothing is guaranteed."""
    if not params.driftless:
        return None
    if path in DIFFUSION_PATHS:
        return NON_DECREASING
    if path in SHIFT_PATHS:
        return NON_INCREASING
    return None


@dataclass
class SweepReport:
    path: str
    values: List[float]
    lambdas: List[float]
    residuals: List[float]
    iterations: List[int]
    difference_quotients: List[float]
    direction: Optional[str] = None
    monotone_ok: Optional[bool] = None
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def max_difference_quotient(self) -> float:
        finite = [abs(q) for q in self.difference_quotients if np.isfinite(q)]
        return max(finite) if finite else 0.0

    def rows(self) -> List[Dict[str, Any]]:
        return [{'index': i, 'parameter_or_radius': v, 'lambda': lam, 'residual': res, 'iterations': it}
                for i, (v, lam, res, it) in enumerate(zip(self.values, self.lambdas, self.residuals, self.iterations))]

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'path': self.path,
            'values': list(self.values),
            'lambdas': list(self.lambdas),
            'difference_quotients': list(self.difference_quotients),
            'max_difference_quotient': self.max_difference_quotient,
        }
        if self.monotone_ok is not None:
            result['monotone_ok'] = self.monotone_ok
            result['direction'] = self.direction
        if self.failures:
            result['failures'] = dict(self.failures)
        return result


def sweep(params: ProblemParams, path: str, values: Sequence[float], grid: TruncatedGrid,
          ctx: Optional[StudyContext] = None) -> SweepReport:
    """
    Principal eigenvalue along one parameter path.

    Points are solved concurrently; a failing point is recorded and skipped.
    Monotonicity is asserted only for driftless systems along diffusion or
    growth-shift paths, within MONOTONE_SLACK.
    """
    ctx = ctx or StudyContext()
    if path not in SWEEP_PATHS:
        raise ConfigError(f"Unknown sweep path {path!r}; expected one of {SWEEP_PATHS}",
                          key_path='study.sweep.path')
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ConfigError("A sweep needs at least two values", key_path='study.sweep.values')
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"Sweep values must be strictly increasing, got {values}",
                          key_path='study.sweep.values')

    points = [params.with_value(path, v) for v in values]
    logger.info(f"Sweeping {path} over {len(values)} values at R={grid.R}, h={grid.h}")
    outcomes = ctx.solve_many(points, grid.R, grid.h, task_type='sweep_point')

    kept_values, lambdas, residuals, iterations = [], [], [], []
    failures = {}
    for value, outcome in zip(values, outcomes):
        if not outcome.ok:
            failures[repr(value)] = str(outcome.error)
            continue
        kept_values.append(value)
        lambdas.append(float(outcome.result.lam))
        residuals.append(float(outcome.result.eig.residual))
        iterations.append(int(outcome.result.eig.iterations))

    quotients = [float((l1 - l0) / (v1 - v0))
                 for v0, v1, l0, l1 in zip(kept_values, kept_values[1:], lambdas, lambdas[1:])]
    report = SweepReport(path, kept_values, lambdas, residuals, iterations, quotients, failures=failures)

    direction = expected_direction(params, path)
    if direction is not None:
        steps = np.diff(lambdas)
        worst = float(np.min(steps)) if direction == NON_DECREASING else float(-np.max(steps))
        report.direction = direction
        report.monotone_ok = bool(len(steps) == 0 or worst >= -MONOTONE_SLACK)
        ctx.verifier.check(f'monotone_{path}', report.monotone_ok, direction=direction,
                           worst_step=worst if len(steps) else 0.0)
    elif not params.driftless:
        logger.info(f"Drift present: monotonicity along {path} is reported, not asserted")
    return report


def geometric_ladder(base: float, ratio: float, n_points: int) -> List[float]:
    if n_points < 2 or ratio <= 0 or ratio == 1:
        raise ConfigError(f"Invalid ladder (ratio={ratio}, n_points={n_points})")
    return [float(base * ratio ** k) for k in range(n_points)]


def lipschitz_witness(params: ProblemParams, path: str, grid: TruncatedGrid, base: float,
                      ratio: float = 2.0, n_points: int = 5,
                      ctx: Optional[StudyContext] = None,
                      max_variation: float = LIPSCHITZ_MAX_VARIATION) -> Dict[str, Any]:
    """
    Compare the largest difference quotient on a geometric ladder with the one
    on a refined ladder spanning the same interval (ratio square-rooted).
    The slope counts as bounded when the two differ by less than max_variation.

    Returns:
        {'coarse_max', 'refined_max', 'relative_variation', 'bounded', 'coarse', 'refined'}
    """
    ctx = ctx or StudyContext()
    coarse = sweep(params, path, geometric_ladder(base, ratio, n_points), grid, ctx)
    refined = sweep(params, path, geometric_ladder(base, np.sqrt(ratio), 2 * n_points - 1), grid, ctx)
    coarse_max = coarse.max_difference_quotient
    refined_max = refined.max_difference_quotient
    variation = abs(refined_max - coarse_max) / max(coarse_max, refined_max, 1e-300)
    logger.info(f"Lipschitz witness for {path}: coarse {coarse_max:.6g}, refined {refined_max:.6g}")
    bounded = ctx.verifier.check('lipschitz_bounded', variation < max_variation, path=path,
                                 variation=float(variation), tolerance=max_variation)
    return {
        'path': path,
        'coarse_max': coarse_max,
        'refined_max': refined_max,
        'relative_variation': float(variation),
        'bounded': bool(bounded),
        'coarse': coarse.to_dict(),
        'refined': refined.to_dict(),
    }


@dataclass
class ConditionCheck:
    """Outcome of the strict decay condition test with its diagnostics."""
    holds: bool
    lam_estimate: float
    probe_radius: float
    outer_sups: Dict[int, float]
    margin: float
    reasons: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'lambda_estimate': self.lam_estimate,
            'probe_radius': self.probe_radius,
            'outer_sups': {str(i): v for i, v in self.outer_sups.items()},
            'reasons': list(self.reasons),
        }


def check_condition_strict(params: ProblemParams, grids: Sequence[TruncatedGrid], lam_estimate: float,
                           margin: float = 1e-8) -> ConditionCheck:
    """
    Strict decay condition: lam <= 0 and, for every side, the growth rate
    sampled outside the half-disk of radius R/2 of the largest grid stays
    below -lam - margin.
    """
    if not grids:
        raise ConfigError("Condition check needs at least one grid")
    largest = max(grids, key=lambda g: g.R)
    probe_radius = largest.R / 2
    outer = {i: sup_on_region(params.side(i).a, largest, OUTER, probe_radius) for i in params.sides}
    reasons = []
    if lam_estimate > 0:
        reasons.append(f"lambda estimate {lam_estimate:.6g} is positive")
    for i, value in outer.items():
        if not value < -lam_estimate - margin:
            reasons.append(f"outer sup of a{i} = {value:.6g} is not below {-lam_estimate - margin:.6g}")
    holds = not reasons
    logger.info(f"Strict condition {'holds' if holds else 'fails'} at r={probe_radius}: "
                f"outer sups {outer}, lambda {lam_estimate:.6g}")
    return ConditionCheck(holds, float(lam_estimate), float(probe_radius), outer, margin, reasons)


@dataclass
class ProbeResult:
    lam_base: float
    lam_bumped: float
    asserted: bool
    notes: List[str] = field(default_factory=list)

    @property
    def margin(self) -> float:
        return self.lam_base - self.lam_bumped

    def to_dict(self) -> Dict[str, Any]:
        return {'lambda_base': self.lam_base, 'lambda_bumped': self.lam_bumped,
                'margin': self.margin, 'asserted': self.asserted, 'notes': list(self.notes)}


def strict_monotonicity_probe(params: ProblemParams, bump: CoefficientField, grid: TruncatedGrid,
                              ctx: Optional[StudyContext] = None,
                              condition: Optional[ConditionCheck] = None) -> ProbeResult:
    """
    Add a non-negative bump to the growth rate of every active side and compare eigenvalues.

    The strict decrease is asserted only when the strict condition holds for
    the base parameters and the sampled bump is non-negative and vanishes
    outside the half-disk of radius R/2.
    """
    ctx = ctx or StudyContext()
    base = ctx.solve(params, grid.R, grid.h)
    if condition is None:
        condition = check_condition_strict(params, [grid], base.lam)

    k, j = grid.closed_lattice()
    samples = bump.values(k * grid.h, j * grid.h)
    notes = []
    if np.any(samples < 0):
        raise ConfigError("Probe bump must be non-negative", key_path='study.strict_probe.bump_expr')
    if not np.any(samples > 0):
        notes.append('bump vanishes on the grid')
        return ProbeResult(base.lam, base.lam, False, notes)

    supported = sup_on_region(bump, grid, OUTER, grid.R / 2) <= 0.0
    if not supported:
        logger.warning("Probe bump is not supported inside the half-disk of radius R/2; margin is reported only")
        notes.append('bump support exceeds R/2')
    if not condition:
        notes.append('strict condition not verified')

    bumped_params = params
    for i in params.sides:
        bumped_params = bumped_params.with_growth(i, params.side(i).a.plus(bump))
    bumped = ctx.solve(bumped_params, grid.R, grid.h)

    asserted = bool(condition) and supported
    result = ProbeResult(float(base.lam), float(bumped.lam), asserted, notes)
    if asserted:
        ctx.verifier.check('strict_monotonicity', result.margin > STRICT_MARGIN, margin=result.margin)
    logger.info(f"Strict probe: lambda {result.lam_base:.10g} -> {result.lam_bumped:.10g} "
                f"(margin {result.margin:.3e}, asserted={asserted})")
    return result
