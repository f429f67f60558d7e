"""
Exponential decay envelopes of the principal eigenfunction.

For beta > 0 the triple (e^{-alpha|x|}, gamma_i e^{-alpha|x| - beta y}) with
gamma_i = mu_i / (d_i beta + nu_i) and alpha^2 = beta * sum(d_i gamma_i) / (2D)
satisfies the exchange conditions exactly. It is a supersolution outside the
core half-disk of radius rho when

    d_i (alpha^2 + beta^2) <= -sup_{outside} a_i - lambda^rho   for every side
    beta * sum(d_i gamma_i) / 2 - sup_{outside} f >= lambda^rho

where lambda^rho is the truncated eigenvalue at radius rho.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, ConditionNotVerifiedError
from discretization.grid import TruncatedGrid, ROAD
from discretization.params import ProblemParams
from fields.coefficients import sup_on_region, OUTER
from studies.common import StudyContext, PointSolve
from studies.sweeps import ConditionCheck, check_condition_strict

logger = logging.getLogger(__name__)

DEFAULT_BETAS = tuple(2.0 ** -k for k in range(11))


@dataclass
class DecayEnvelope:
    rho: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Dict[int, float] = field(default_factory=dict)
    prefactor: Optional[float] = None
    lam_rho: Optional[float] = None
    feasible: bool = False
    text_form_feasible: Optional[bool] = None
    max_violation: Optional[float] = None
    min_slack: Optional[float] = None
    worst_node: Optional[Dict[str, Any]] = None
    nodes_checked: int = 0
    candidates_tried: int = 0

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'rho': self.rho,
            'alpha': self.alpha,
            'beta': self.beta,
            'gamma1': self.gamma.get(1),
            'gamma2': self.gamma.get(2),
            'prefactor': self.prefactor,
            'lambda_rho': self.lam_rho,
            'feasible': self.feasible,
            'max_violation': self.max_violation,
            'min_slack': self.min_slack,
            'nodes_checked': self.nodes_checked,
            'candidates_tried': self.candidates_tried,
        }
        if self.text_form_feasible is not None:
            result['text_form_feasible'] = self.text_form_feasible
        if self.worst_node is not None:
            result['worst_node'] = self.worst_node
        return result


def envelope_constants(params: ProblemParams, beta: float) -> Tuple[float, Dict[int, float]]:
    """(alpha, {side: gamma}) for a given beta >= 0."""
    if beta < 0:
        raise ConfigError(f"beta must be non-negative, got {beta}", key_path='study.decay.betas')
    gamma = {i: params.side(i).mu / (params.side(i).d * beta + params.side(i).nu) for i in params.sides}
    weighted = sum(params.side(i).d * gamma[i] for i in params.sides)
    alpha = math.sqrt(weighted * beta / (2 * params.D))
    return alpha, gamma


def envelope_values(grid: TruncatedGrid, alpha: float, beta: float, gamma: Dict[int, float],
                    prefactor: float) -> np.ndarray:
    """Envelope at every unknown of the grid in global order."""
    road = prefactor * np.exp(-alpha * np.abs(grid.road_nodes))
    nodes = grid.field_lattice * grid.h
    shape = np.exp(-alpha * np.abs(nodes[:, 0]) - beta * nodes[:, 1])
    return np.concatenate([road] + [prefactor * gamma[i] * shape for i in grid.sides])


def rho_ladder(R: float, h: float) -> List[float]:
    """R/8, R/4, R/2 rounded down to multiples of h; radii below 2h and duplicates are dropped."""
    ladder = []
    for fraction in (8, 4, 2):
        rho = math.floor(R / fraction / h + 1e-9) * h
        if rho >= 2 * h and rho not in ladder:
            ladder.append(float(rho))
    return ladder


def _feasibility(params: ProblemParams, grid: TruncatedGrid, rho: float, beta: float,
                 lam_rho: float) -> Tuple[bool, bool]:
    alpha, gamma = envelope_constants(params, beta)
    fields_ok = all(
        params.side(i).d * (alpha ** 2 + beta ** 2) <= -sup_on_region(params.side(i).a, grid, OUTER, rho) - lam_rho
        for i in params.sides
    )
    f_sup = sup_on_region(params.f, grid, OUTER, rho) if params.f is not None else 0.0
    weighted = sum(params.side(i).d * gamma[i] for i in params.sides)
    road_ok = beta * weighted / 2 - f_sup >= lam_rho
    text_road_ok = weighted / 2 - f_sup >= lam_rho
    return fields_ok and road_ok, fields_ok and text_road_ok


def _prefactor(grid: TruncatedGrid, vector: np.ndarray, rho: float, alpha: float, beta: float) -> float:
    u, fields = grid.split(vector)
    road_inner = np.abs(grid.road_k) * grid.h < rho - 1e-12
    k = grid.field_lattice[:, 0].astype(float)
    j = grid.field_lattice[:, 1].astype(float)
    field_inner = (k ** 2 + j ** 2) * grid.h ** 2 < rho ** 2 - 1e-12
    sups = [float(np.max(u[road_inner]))] if np.any(road_inner) else []
    sups += [float(np.max(v[field_inner])) for v in fields.values() if np.any(field_inner)]
    return max(sups) * math.exp(2 * (alpha + beta) * rho)


def decay_envelope(params: ProblemParams, point: PointSolve,
                   rhos: Optional[Sequence[float]] = None, betas: Optional[Sequence[float]] = None,
                   ctx: Optional[StudyContext] = None,
                   condition: Optional[ConditionCheck] = None) -> DecayEnvelope:
    """
    Search the ladders for the first feasible (rho, beta) and check pointwise
    domination of the sup-normalized eigenfunction at every unknown.

    Radii are tried in increasing order, betas in the given order (largest
    first by default). An infeasible search returns feasible=False.

    Raises:
        ConditionNotVerifiedError: drift present or the strict condition fails
    """
    ctx = ctx or StudyContext()
    grid = point.grid
    if not params.driftless:
        raise ConditionNotVerifiedError("Decay envelopes need a driftless system",
                                        {'c': params.c})
    if condition is None:
        condition = check_condition_strict(params, [grid], point.lam)
    if not condition:
        raise ConditionNotVerifiedError("condition strict unverified", {'reasons': condition.reasons})

    rhos = sorted(float(r) for r in (rhos or rho_ladder(grid.R, grid.h)))
    betas = [float(b) for b in (betas or DEFAULT_BETAS)]
    if rhos and rhos[-1] >= grid.R:
        raise ConfigError(f"Envelope radii must stay below R={grid.R}, got {rhos}", key_path='study.decay.rhos')
    for rho in rhos:
        if abs(rho / grid.h - round(rho / grid.h)) > 1e-9:
            raise ConfigError(f"Envelope radius {rho} is not a multiple of h={grid.h}", key_path='study.decay.rhos')

    vector = point.eig.vector / np.max(point.eig.vector)
    result = DecayEnvelope()
    for rho in rhos:
        lam_rho = ctx.solve(params, rho, grid.h).lam
        for beta in betas:
            result.candidates_tried += 1
            feasible, text_feasible = _feasibility(params, grid, rho, beta, lam_rho)
            if feasible != text_feasible:
                logger.warning(f"Road inequality forms disagree at rho={rho}, beta={beta}: "
                               f"with beta {feasible}, text form {text_feasible}")
            if not feasible:
                continue
            alpha, gamma = envelope_constants(params, beta)
            result.rho, result.beta, result.alpha, result.gamma = rho, beta, alpha, gamma
            result.lam_rho = float(lam_rho)
            result.feasible = True
            result.text_form_feasible = text_feasible
            result.prefactor = _prefactor(grid, vector, rho, alpha, beta)
            _dominate(result, grid, vector)
            ctx.verifier.check('decay_domination', result.max_violation <= 0.0,
                               max_violation=result.max_violation, worst_node=result.worst_node)
            logger.info(f"Decay envelope rho={rho}, beta={beta}, alpha={alpha:.6g}, "
                        f"max violation {result.max_violation:.3e}")
            return result
    logger.warning(f"No feasible envelope in rho={rhos}, beta={betas}")
    return result


def _dominate(result: DecayEnvelope, grid: TruncatedGrid, vector: np.ndarray) -> None:
    envelope = envelope_values(grid, result.alpha, result.beta, result.gamma, result.prefactor)
    slack = envelope - vector
    worst = int(np.argmin(slack))
    result.nodes_checked = int(len(vector))
    result.min_slack = float(slack[worst])
    result.max_violation = float(max(0.0, -slack[worst]))
    if result.max_violation > 0:
        component, local = grid.component_of(worst)
        x, y = grid.coordinates()[worst]
        result.worst_node = {'component': component if component == ROAD else f'field{component}',
                             'local_index': local, 'x': float(x), 'y': float(y)}
