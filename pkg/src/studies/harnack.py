"""
Harnack ratio study over seeded random coefficient systems.

Each draw replaces the road potential and the field growth rates by random
trigonometric sums bounded by a declared constant, solves the principal
eigenproblem and measures sup/inf of the positive eigenfunction over the inner
half-disk of radius r.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional

import numpy as np

from errors import ConfigError, PositivityError
from discretization.params import ProblemParams
from fields.coefficients import CoefficientField
from studies.common import StudyContext, PointSolve, relative_change

logger = logging.getLogger(__name__)

_DIGITS = 6


def _floor(value: float) -> float:
    return float(np.floor(value * 10 ** _DIGITS) / 10 ** _DIGITS)


class CoefficientSampler:
    """
    Seeded generator of bounded coefficient draws (f, g_1, g_2).

    Every draw is a sum of `modes` sine terms whose amplitudes are rounded
    down, so the declared bound holds exactly for the printed expression.
    """

    def __init__(self, seed: int, bound: float = 1.0, modes: int = 3, max_frequency: float = 1.0):
        if bound < 0:
            raise ConfigError(f"Sampler bound must be non-negative, got {bound}", key_path='study.harnack.bound')
        if modes < 1:
            raise ConfigError(f"Sampler needs at least one mode, got {modes}", key_path='study.harnack.modes')
        self.seed = int(seed)
        self.bound = float(bound)
        self.modes = int(modes)
        self.max_frequency = float(max_frequency)
        self.rng = np.random.default_rng(self.seed)

    def _text(self, variables: List[str]) -> str:
        if self.bound == 0:
            return '0.0'
        weights = self.rng.random(self.modes)
        total = self.bound * self.rng.random()
        amplitudes = [_floor(total * w / weights.sum()) for w in weights]
        terms = []
        for amplitude in amplitudes:
            freqs = [_floor(self.max_frequency * self.rng.random()) for _ in variables]
            phase = _floor(2 * np.pi * self.rng.random())
            argument = ' + '.join(f'{w!r}*{v}' for w, v in zip(freqs, variables))
            terms.append(f'{amplitude!r}*sin({argument} + {phase!r})')
        return ' + '.join(terms)

    def draw(self, sides) -> Dict[str, CoefficientField]:
        """One draw: {'f': road potential, 'g1': ..., 'g2': ...} for the given sides."""
        result = {'f': CoefficientField.from_text(self._text(['x']), self.bound)}
        for i in sides:
            result[f'g{i}'] = CoefficientField.from_text(self._text(['x', 'y']), self.bound)
        return result

    def draws(self, n_draws: int, sides) -> List[Dict[str, CoefficientField]]:
        return [self.draw(sides) for _ in range(n_draws)]


def apply_draw(params: ProblemParams, draw: Dict[str, CoefficientField]) -> ProblemParams:
    result = params.with_road_potential(draw['f'])
    for i in params.sides:
        result = result.with_growth(i, draw[f'g{i}'])
    return result


def harnack_ratio(point: PointSolve, r: float) -> float:
    """
    max of the component suprema over min of the component infima on
    the road interval (-r, r) and the field half-disks of radius r.
    """
    grid = point.grid
    u, fields = grid.split(point.eig.vector)
    road_mask = np.abs(grid.road_k) * grid.h < r - 1e-12
    k = grid.field_lattice[:, 0]
    j = grid.field_lattice[:, 1]
    field_mask = (k.astype(float) ** 2 + j.astype(float) ** 2) * grid.h ** 2 < r * r - 1e-12
    pieces = [u[road_mask]] + [v[field_mask] for v in fields.values()]
    pieces = [p for p in pieces if p.size]
    if not pieces:
        raise ConfigError(f"No grid node lies within r={r}", key_path='study.harnack.r')
    sup = max(float(np.max(p)) for p in pieces)
    inf = min(float(np.min(p)) for p in pieces)
    if not inf > 0:
        raise PositivityError(f"Eigenfunction infimum {inf:.3e} on the inner region is not positive",
                              {'infimum': inf, 'r': r})
    return sup / inf


@dataclass
class HarnackReport:
    r: float
    R: float
    h: float
    ratios: List[float]
    coefficients: List[Dict[str, str]] = field(default_factory=list)
    doubled_ratios: Optional[List[float]] = None
    refined_ratios: Optional[List[float]] = None
    failures: Dict[int, str] = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return len(self.ratios) + len(self.failures)

    @property
    def max_ratio(self) -> Optional[float]:
        return max(self.ratios) if self.ratios else None

    @property
    def doubling_drift(self) -> Optional[float]:
        if not self.doubled_ratios:
            return None
        return max(relative_change(b, a) for a, b in zip(self.ratios, self.doubled_ratios))

    @property
    def refinement_drift(self) -> Optional[float]:
        if not self.refined_ratios:
            return None
        return relative_change(max(self.refined_ratios), self.max_ratio)

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'r': self.r,
            'R': self.R,
            'h': self.h,
            'n_draws': self.n_draws,
            'ratios': list(self.ratios),
            'max_ratio': self.max_ratio,
            'coefficients': list(self.coefficients),
        }
        if self.refinement_drift is not None:
            result['refinement_drift'] = self.refinement_drift
        if self.doubling_drift is not None:
            result['doubling_drift'] = self.doubling_drift
        if self.failures:
            result['failures'] = {str(k): v for k, v in self.failures.items()}
        return result


def harnack_study(params: ProblemParams, sampler: CoefficientSampler, n_draws: int, R: float, r: float,
                  h: float, ctx: Optional[StudyContext] = None, refine: bool = True, double: bool = True,
                  doubling_tolerance: float = 0.2, refinement_tolerance: float = 0.1) -> HarnackReport:
    """
    Harnack ratios of principal eigenfunctions of randomized systems.

    Args:
        params: Base parameters; diffusivities, drifts and exchange rates are kept
        sampler: Seeded coefficient generator
        n_draws: Number of random systems
        R: Truncation radius
        r: Inner radius, at most R/2
        h: Grid spacing
        ctx: Study settings
        refine: Also solve every draw at h/2
        double: Also solve every draw at 2R

    Returns:
        HarnackReport; failing draws are recorded with their diagnostics
    """
    ctx = ctx or StudyContext()
    if n_draws < 1:
        raise ConfigError(f"n_draws must be positive, got {n_draws}", key_path='study.harnack.n_draws')
    if not 0 < r <= R / 2:
        raise ConfigError(f"Inner radius r={r} must lie in (0, R/2] with R={R}", key_path='study.harnack.r')

    draws = sampler.draws(n_draws, params.sides)

    def run_draw(draw):
        system = apply_draw(params, draw)
        ratios = {'base': harnack_ratio(ctx.solve(system, R, h), r)}
        if double:
            ratios['doubled'] = harnack_ratio(ctx.solve(system, 2 * R, h), r)
        if refine:
            ratios['refined'] = harnack_ratio(ctx.solve(system, R, h / 2), r)
        return ratios

    logger.info(f"Harnack study: {n_draws} draws, R={R}, r={r}, h={h}, seed={sampler.seed}")
    outcomes = ctx.engine.map('harnack_draw', run_draw, draws)

    report = HarnackReport(float(r), float(R), float(h), [],
                           doubled_ratios=[] if double else None,
                           refined_ratios=[] if refine else None)
    for index, (draw, outcome) in enumerate(zip(draws, outcomes)):
        if not outcome.ok:
            report.failures[index] = str(outcome.error)
            continue
        report.ratios.append(outcome.result['base'])
        report.coefficients.append({name: c.text for name, c in draw.items()})
        if double:
            report.doubled_ratios.append(outcome.result['doubled'])
        if refine:
            report.refined_ratios.append(outcome.result['refined'])

    verifier = ctx.verifier
    verifier.check('harnack_draws_solved', not report.failures, failures=len(report.failures))
    verifier.check('harnack_ratio_bounds',
                   all(np.isfinite(q) and q >= 1.0 for q in report.ratios),
                   max_ratio=report.max_ratio)
    if report.doubling_drift is not None:
        verifier.check('harnack_doubling_stability', report.doubling_drift < doubling_tolerance,
                       drift=report.doubling_drift, tolerance=doubling_tolerance)
    if report.refinement_drift is not None:
        verifier.check('harnack_refinement_stability', report.refinement_drift < refinement_tolerance,
                       drift=report.refinement_drift, tolerance=refinement_tolerance)
    logger.info(f"Harnack max ratio {report.max_ratio}, doubling drift {report.doubling_drift}, "
                f"refinement drift {report.refinement_drift}")
    return report
