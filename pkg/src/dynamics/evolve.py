"""
Implicit Euler integration of dx/dt = -A x and decay-rate extraction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.linear_model import LinearRegression

from errors import ConfigError, SolverError
from discretization.assembly import SystemMatrix, gershgorin_floor
from discretization.grid import TruncatedGrid
from eigen.eigsolve import EigenResult
from engine.verification import VerificationEngine

logger = logging.getLogger(__name__)

INITIAL_STATES = ('ones', 'eigenvector', 'bump')
MIN_SNAPSHOTS = 10
RATE_TOLERANCE = 0.02
SHAPE_TOLERANCE = 1e-6
POSITIVITY_TOLERANCE = 1e-12


@dataclass
class EvolveConfig:
    dt: float = 0.01
    steps: int = 2000
    burn_in: float = 0.5
    initial: str = 'ones'
    snapshot_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", key_path='evolve.dt')
        if not (isinstance(self.steps, int) and self.steps >= 1):
            raise ConfigError(f"steps must be a positive integer, got {self.steps}", key_path='evolve.steps')
        if not 0 <= self.burn_in < 1:
            raise ConfigError(f"burn_in must lie in [0, 1), got {self.burn_in}", key_path='evolve.burn_in')
        if self.initial not in INITIAL_STATES:
            raise ConfigError(f"initial must be one of {INITIAL_STATES}, got {self.initial!r}",
                              key_path='evolve.initial')

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> 'EvolveConfig':
        return cls(
            dt=config.get('dt', 0.01),
            steps=config.get('steps', 2000),
            burn_in=config.get('burn_in', 0.5),
            initial=config.get('initial', 'ones'),
            snapshot_every=config.get('snapshot_every', 1),
        )


@dataclass
class Trajectory:
    times: List[float]
    sup_norms: List[float]
    state_final: np.ndarray
    log_sup_norms: Optional[List[float]] = field(default=None)
    # smallest component of the sup-normalized state over all snapshots
    min_component: Optional[float] = None

    def log_norms(self) -> np.ndarray:
        if self.log_sup_norms is not None:
            return np.asarray(self.log_sup_norms)
        return np.log(np.asarray(self.sup_norms))


def _matrix(system) -> sp.csr_matrix:
    return system.A if isinstance(system, SystemMatrix) else sp.csr_matrix(system, dtype=float)


class ImplicitEulerStepper:
    """Factorizes I + dt*A once and applies it repeatedly."""

    def __init__(self, system, dt: float):
        if not dt > 0:
            raise ConfigError(f"dt must be positive, got {dt}", key_path='evolve.dt')
        A = _matrix(system)
        floor = gershgorin_floor(A) if A.shape[0] else 0.0
        if 1.0 + dt * floor <= 0:
            raise SolverError(
                f"I + dt*A may be singular: 1 + dt*floor = {1.0 + dt * floor:.3e}; "
                f"use dt < {1.0 / max(-floor, 1e-300):.3e}"
            )
        self.dt = dt
        self.lu = spla.splu((sp.identity(A.shape[0], format='csr') + dt * A).tocsc())

    def step(self, x: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(x, dtype=float))


def step_implicit(x: np.ndarray, dt: float, system) -> np.ndarray:
    """One implicit Euler step: solve (I + dt*A) x' = x."""
    return ImplicitEulerStepper(system, dt).step(x)


def initial_state(grid: TruncatedGrid, kind: str, eig: Optional[EigenResult] = None) -> np.ndarray:
    if kind == 'ones':
        return np.ones(grid.N)
    if kind == 'eigenvector':
        if eig is None:
            raise ConfigError("Eigenvector start needs a solved eigenpair", key_path='evolve.initial')
        return np.array(eig.vector, dtype=float)
    if kind == 'bump':
        coords = grid.coordinates()
        return np.exp(-(coords[:, 0] ** 2 + coords[:, 1] ** 2))
    raise ConfigError(f"Unknown initial state {kind!r}", key_path='evolve.initial')


def evolve(system, x0: np.ndarray, dt: float, steps: int, snapshot_every: int = 1) -> Trajectory:
    """
    Integrate dx/dt = -A x from x0.

    The state is renormalized every step; the accumulated log-scale keeps
    sup norms representable for long horizons.
    """
    stepper = ImplicitEulerStepper(system, dt)
    x = np.asarray(x0, dtype=float).copy()
    norm = float(np.max(np.abs(x)))
    if norm <= 0:
        raise ConfigError("Initial state must be non-zero", key_path='evolve.initial')
    log_scale = np.log(norm)
    x = x / norm
    times = [0.0]
    log_norms = [log_scale]
    min_component = float(np.min(x))
    for n in range(1, steps + 1):
        x = stepper.step(x)
        norm = float(np.max(np.abs(x)))
        if not np.isfinite(norm) or norm <= 0:
            raise SolverError(f"Sup norm collapsed at step {n}")
        log_scale += np.log(norm)
        x = x / norm
        if n % snapshot_every == 0 or n == steps:
            times.append(n * dt)
            log_norms.append(log_scale)
            min_component = min(min_component, float(np.min(x)))
    state_final = x * np.exp(log_scale) if abs(log_scale) < 700 else x
    return Trajectory(times, [float(np.exp(v)) for v in log_norms], state_final, log_norms, min_component)


def decay_rate(traj: Trajectory, burn_in_fraction: float) -> float:
    """
    Negated least-squares slope of log sup-norm against time after the burn-in prefix.

    Args:
        traj: Trajectory with strictly increasing times
        burn_in_fraction: Fraction of snapshots to discard, in [0, 1)

    Returns:
        Estimate of the principal eigenvalue
    """
    times = np.asarray(traj.times, dtype=float)
    logs = traj.log_norms()
    start = int(np.floor(burn_in_fraction * len(times)))
    times, logs = times[start:], logs[start:]
    if len(times) < MIN_SNAPSHOTS:
        raise SolverError(f"Need at least {MIN_SNAPSHOTS} snapshots after burn-in, got {len(times)}")
    model = LinearRegression().fit(times.reshape(-1, 1), logs)
    return float(-model.coef_[0])


def rate_check(system: SystemMatrix, eig: EigenResult, cfg: EvolveConfig,
               verifier: Optional[VerificationEngine] = None) -> Dict[str, Any]:
    """
    Evolve from the configured start and compare the observed rate with lambda.

    With a verifier, records:
    - evolve_rate: relative rate error within RATE_TOLERANCE
    - evolve_positivity: no snapshot component below -POSITIVITY_TOLERANCE
    - evolve_shape_drift: eigenvector starts keep their shape within SHAPE_TOLERANCE
    """
    x0 = initial_state(system.grid, cfg.initial, eig)
    traj = evolve(system, x0, cfg.dt, cfg.steps, cfg.snapshot_every)
    rate = decay_rate(traj, cfg.burn_in)
    relative_error = abs(rate - eig.lam) / max(abs(eig.lam), 1e-300)
    logger.info(f"Decay rate {rate:.8g} vs lambda {eig.lam:.8g} (relative error {relative_error:.3e})")
    result = {
        'rate': rate,
        'lambda_ref': float(eig.lam),
        'relative_error': float(relative_error),
        'min_component': traj.min_component,
    }
    if cfg.initial == 'eigenvector':
        start = x0 / np.max(np.abs(x0))
        final = traj.state_final / np.max(np.abs(traj.state_final))
        result['shape_drift'] = float(np.max(np.abs(final - start)))

    if verifier is not None:
        verifier.check('evolve_rate', relative_error <= RATE_TOLERANCE,
                       relative_error=float(relative_error), tolerance=RATE_TOLERANCE)
        verifier.check('evolve_positivity', traj.min_component >= -POSITIVITY_TOLERANCE,
                       min_component=traj.min_component, tolerance=POSITIVITY_TOLERANCE)
        if 'shape_drift' in result:
            verifier.check('evolve_shape_drift', result['shape_drift'] <= SHAPE_TOLERANCE,
                           shape_drift=result['shape_drift'], tolerance=SHAPE_TOLERANCE)
    return result
