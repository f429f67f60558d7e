"""
Run configuration: built-in defaults, YAML file, key=value overrides and validation.
"""

import copy
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Any, List, Optional, Sequence

import yaml
from dotenv import load_dotenv

from errors import ConfigError, LabError
from discretization.grid import build_grid, SHAPES
from discretization.params import ProblemParams, FieldSide
from dynamics.evolve import EvolveConfig
from eigen.eigsolve import SolverConfig
from fields.coefficients import CoefficientField
from studies.common import StudyContext
from engine.compute_engine import SolveEngine
from engine.verification import VerificationEngine

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = 'configs/config.yaml'

DEFAULTS: Dict[str, Any] = {
    'road': {
        'D': 1.0, 'c': 0.0,
        'mu1': 1.0, 'mu2': 1.0, 'nu1': 1.0, 'nu2': 1.0,
        'f_expr': None, 'f_bound': 0.0,
        'sides': 2,
    },
    'field1': {'d': 1.0, 'c': 0.0, 'a_expr': '0', 'a_bound': 0.0},
    'field2': {'d': 1.0, 'c': 0.0, 'a_expr': '0', 'a_bound': 0.0},
    'grid': {'R': 10.0, 'h': 0.5, 'shape': 'halfdisk'},
    'solver': {
        'tol': 1e-10, 'max_iter': 10000, 'shift': 'auto',
        'drift_scheme': 'auto', 'allow_peclet_violation': False,
        'linear_solver': 'auto', 'krylov_tol': 1e-12,
    },
    'study': {
        'seed': 12345,
        'max_workers': 4,
        'radii': [5.0, 10.0, 20.0],
        'monotonicity_tolerance_factor': 10.0,
        'sweep': {'path': 'D', 'values': [0.5, 1.0, 2.0, 4.0]},
        'lipschitz': {'enabled': False, 'path': 'd1', 'base': 1.0, 'ratio': 1.01, 'n_points': 5},
        'strict_probe': {'bump_expr': None, 'bump_bound': 1.0},
        'harnack': {
            'n_draws': 20, 'r': 2.0, 'R': 20.0, 'h': 0.25,
            'bound': 1.0, 'modes': 3, 'max_frequency': 1.0,
            'refine': True, 'double': True,
            'doubling_tolerance': 0.2, 'refinement_tolerance': 0.1,
        },
        'decay': {'rhos': None, 'betas': None},
    },
    'evolve': {'dt': 0.01, 'steps': 2000, 'burn_in': 0.5, 'initial': 'ones', 'snapshot_every': 1},
    'output': {'path': None, 'format': 'json', 'csv': True, 'dump_eigenvector': False},
}

_FLOAT_KEYS = {
    'road': ('D', 'c', 'mu1', 'mu2', 'nu1', 'nu2', 'f_bound'),
    'field1': ('d', 'c', 'a_bound'),
    'field2': ('d', 'c', 'a_bound'),
    'grid': ('R', 'h'),
    'solver': ('tol', 'krylov_tol'),
    'evolve': ('dt', 'burn_in'),
}


def load_environment() -> None:
    """Load a .env file if one exists; existing variables win."""
    load_dotenv(override=False)


def default_config_path() -> str:
    return os.getenv('ROADFIELD_CONFIG', DEFAULT_CONFIG_PATH)


def _merge(base: Dict[str, Any], update: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    for key, value in update.items():
        path = f'{prefix}{key}'
        if key not in base:
            raise ConfigError(f"Unknown configuration key {path!r}", key_path=path)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"Section {path!r} must be a mapping", key_path=path)
            _merge(base[key], value, f'{path}.')
        else:
            base[key] = value
    return base


def parse_override(text: str) -> Dict[str, Any]:
    """'study.harnack.r=2' -> {'study': {'harnack': {'r': 2}}} with the value typed by YAML."""
    if '=' not in text:
        raise ConfigError(f"Override {text!r} is not of the form key.path=value")
    key_path, raw = text.split('=', 1)
    keys = [k for k in key_path.strip().split('.') if k]
    if not keys:
        raise ConfigError(f"Override {text!r} has an empty key path")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError(f"Override value {raw!r} is not valid YAML: {e}", key_path=key_path)
    for key in reversed(keys):
        value = {key: value}
    return value


def _as_float(value: Any, key_path: str) -> float:
    # yaml reads '1e-10' without a dot as text
    if isinstance(value, bool):
        raise ConfigError(f"{key_path} must be a number, got {value!r}", key_path=key_path)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key_path} must be a number, got {value!r}", key_path=key_path)


@dataclass
class RunConfig:
    """Effective configuration of one run."""
    data: Dict[str, Any]
    source: Optional[str] = None

    def section(self, name: str) -> Dict[str, Any]:
        return self.data[name]

    def echo(self) -> Dict[str, Any]:
        return copy.deepcopy(self.data)

    def _coefficient(self, text: Any, bound: Any, key_path: str) -> CoefficientField:
        try:
            return CoefficientField.from_text(text, bound)
        except LabError as e:
            e.details.setdefault('key_path', key_path)
            raise

    def to_params(self) -> ProblemParams:
        road = self.data['road']
        sides = road['sides']
        if sides not in (1, 2):
            raise ConfigError(f"road.sides must be 1 or 2, got {sides!r}", key_path='road.sides')
        fields = {}
        for i in range(1, sides + 1):
            section = self.data[f'field{i}']
            a = self._coefficient(section['a_expr'], section['a_bound'], f'field{i}.a_expr')
            fields[i] = FieldSide(d=section['d'], c=section['c'], mu=road[f'mu{i}'], nu=road[f'nu{i}'], a=a)
        f = None
        if road['f_expr'] is not None:
            f = self._coefficient(road['f_expr'], road['f_bound'], 'road.f_expr')
        return ProblemParams(D=road['D'], c=road['c'], fields=fields, f=f)

    @property
    def sides(self):
        return (1, 2) if self.data['road']['sides'] == 2 else (1,)

    def solver_config(self) -> SolverConfig:
        return SolverConfig.from_config(self.data['solver'])

    def evolve_config(self) -> EvolveConfig:
        return EvolveConfig.from_config(self.data['evolve'])

    def grid(self):
        g = self.data['grid']
        return build_grid(g['R'], g['h'], g['shape'], self.sides)

    def study_context(self) -> StudyContext:
        solver = self.data['solver']
        return StudyContext(
            solver=self.solver_config(),
            shape=self.data['grid']['shape'],
            drift_scheme=solver['drift_scheme'],
            allow_peclet_violation=bool(solver['allow_peclet_violation']),
            engine=SolveEngine(self.data['study']['max_workers']),
            verifier=VerificationEngine(),
        )

    def validate(self) -> ProblemParams:
        """Re-check every constraint at load; returns the validated parameters."""
        for section, keys in _FLOAT_KEYS.items():
            for key in keys:
                self.data[section][key] = _as_float(self.data[section][key], f'{section}.{key}')
        if self.data['grid']['shape'] not in SHAPES:
            raise ConfigError(f"grid.shape must be one of {SHAPES}", key_path='grid.shape')
        if self.data['solver']['drift_scheme'] not in ('central', 'upwind', 'auto'):
            raise ConfigError("solver.drift_scheme must be central, upwind or auto", key_path='solver.drift_scheme')
        if not isinstance(self.data['study']['max_workers'], int) or self.data['study']['max_workers'] < 1:
            raise ConfigError("study.max_workers must be a positive integer", key_path='study.max_workers')
        self.data['study']['radii'] = [_as_float(r, 'study.radii') for r in self.data['study']['radii']]

        params = self.to_params()
        self.solver_config()
        self.evolve_config()
        try:
            grid = self.grid()
        except LabError as e:
            raise ConfigError(str(e), key_path='grid')

        k, j = grid.closed_lattice()
        x, y = k * grid.h, j * grid.h
        for i in params.sides:
            params.side(i).a.check_bound(x, y, label=f'field{i}.a_expr')
        if params.f is not None:
            params.f.check_bound(grid.road_nodes, 0.0 * grid.road_nodes, label='road.f_expr')
        return params


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Defaults, then the YAML file, then overrides.

    Args:
        path: YAML file; None uses ROADFIELD_CONFIG or configs/config.yaml when it exists
        overrides: 'key.path=value' strings applied after the file

    Returns:
        Validated RunConfig
    """
    data = copy.deepcopy(DEFAULTS)
    source = path
    if source is None:
        candidate = default_config_path()
        source = candidate if Path(candidate).exists() else None
    if source is not None:
        try:
            with open(source, 'r') as f:
                loaded = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"Cannot read configuration {source}: {e}")
        except yaml.YAMLError as e:
            raise ConfigError(f"Configuration {source} is not valid YAML: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"Configuration {source} must be a mapping of sections")
        _merge(data, loaded)
    for text in overrides:
        _merge(data, parse_override(text))
    config = RunConfig(data, source)
    config.validate()
    logger.info(f"Loaded configuration from {source or 'defaults'} with {len(overrides)} override(s)")
    return config

