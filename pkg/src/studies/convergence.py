"""
Convergence of the truncated eigenvalue as the truncation radius grows.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit, OptimizeWarning

from errors import ConfigError, LabError
from discretization.params import ProblemParams
from studies.common import StudyContext

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3


@dataclass
class ConvergenceReport:
    h: float
    radii: List[float] = field(default_factory=list)
    lambdas: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    iterations: List[int] = field(default_factory=list)
    monotone_violation: float = 0.0
    tolerance: float = 0.0
    extrapolated_limit: Optional[float] = None
    fit_exponent: Optional[float] = None

    @property
    def last_change(self) -> Optional[float]:
        if len(self.lambdas) < 2:
            return None
        return abs(self.lambdas[-1] - self.lambdas[-2])

    def rows(self) -> List[Dict[str, Any]]:
        return [{'index': i, 'parameter_or_radius': R, 'lambda': lam, 'residual': res, 'iterations': it}
                for i, (R, lam, res, it) in enumerate(zip(self.radii, self.lambdas, self.residuals, self.iterations))]

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'radii': list(self.radii),
            'lambdas': list(self.lambdas),
            'monotone_violation': self.monotone_violation,
            'monotone_tolerance': self.tolerance,
            'h': self.h,
        }
        if self.extrapolated_limit is not None:
            result['extrapolated_limit'] = self.extrapolated_limit
            result['fit_exponent'] = self.fit_exponent
        if self.last_change is not None:
            result['last_change'] = self.last_change
        return result


def _power_law(R, limit, scale, exponent):
    return limit + scale * np.power(R, -exponent)


def fit_power_law(radii: Sequence[float], lambdas: Sequence[float]) -> Optional[Dict[str, float]]:
    """
    Least-squares fit lambda(R) = limit + C R^-p.

    Returns:
        {'limit', 'scale', 'exponent'} or None when the fit does not converge
    """
    R = np.asarray(radii, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    if len(R) < MIN_FIT_POINTS:
        return None
    guess = (lam[-1], (lam[0] - lam[-1]) * R[0] ** 2, 2.0)
    try:
        with warnings.catch_warnings():
            # covariance is unused; an exactly determined fit only warns about it
            warnings.simplefilter('ignore', OptimizeWarning)
            popt, _ = curve_fit(_power_law, R, lam, p0=guess, maxfev=20000)
    except (RuntimeError, ValueError) as e:
        logger.warning(f"Power-law fit failed: {e}")
        return None
    if not np.all(np.isfinite(popt)):
        logger.warning("Power-law fit returned non-finite parameters")
        return None
    return {'limit': float(popt[0]), 'scale': float(popt[1]), 'exponent': float(popt[2])}


def converge_in_R(params: ProblemParams, radii: Sequence[float], h: float,
                  ctx: Optional[StudyContext] = None,
                  tolerance_factor: float = 10.0) -> ConvergenceReport:
    """
    Solve on an increasing radius ladder and check near-monotone decrease.

    Radii are solved concurrently. The first failing radius aborts the study;
    the raised error carries the report of the radii solved before it under
    details['partial'].

    Args:
        params: Problem parameters
        radii: Strictly increasing truncation radii, each a multiple of h
        h: Grid spacing
        ctx: Study settings
        tolerance_factor: Violations up to tolerance_factor * h^2 * max(1, |lambda|) are accepted

    Returns:
        ConvergenceReport
    """
    ctx = ctx or StudyContext()
    radii = [float(R) for R in radii]
    if not radii:
        raise ConfigError("Radius ladder is empty", key_path='study.radii')
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError(f"Radii must be strictly increasing, got {radii}", key_path='study.radii')

    logger.info(f"R-convergence study over {radii} at h={h}")
    outcomes = ctx.engine.map('radius', lambda R: ctx.solve(params, R, h), radii)

    report = ConvergenceReport(h=float(h))
    for R, outcome in zip(radii, outcomes):
        if not outcome.ok:
            error = outcome.error
            if not isinstance(error, LabError):
                error = LabError(f"Solve at R={R} failed: {error}")
            error.details['failed_radius'] = R
            error.details['partial'] = _finish(report, params, ctx, tolerance_factor).to_dict()
            raise error
        eig = outcome.result.eig
        report.radii.append(R)
        report.lambdas.append(float(eig.lam))
        report.residuals.append(float(eig.residual))
        report.iterations.append(int(eig.iterations))
    return _finish(report, params, ctx, tolerance_factor)


def _finish(report: ConvergenceReport, params: ProblemParams, ctx: StudyContext,
            tolerance_factor: float) -> ConvergenceReport:
    lam = np.asarray(report.lambdas, dtype=float)
    if len(lam) >= 2:
        report.monotone_violation = float(max(0.0, np.max(np.diff(lam))))
    scale = max(1.0, float(np.max(np.abs(lam)))) if len(lam) else 1.0
    report.tolerance = tolerance_factor * report.h ** 2 * scale
    if len(lam) >= 2:
        ctx.verifier.check('monotone_in_R', report.monotone_violation <= report.tolerance,
                           violation=report.monotone_violation, tolerance=report.tolerance)

    tail = max(MIN_FIT_POINTS, len(lam) - len(lam) // 2)
    fit = fit_power_law(report.radii[-tail:], report.lambdas[-tail:])
    if fit is not None:
        report.extrapolated_limit = fit['limit']
        report.fit_exponent = fit['exponent']
        logger.info(f"Extrapolated limit {fit['limit']:.8g}, exponent {fit['exponent']:.3f}")
    return report
