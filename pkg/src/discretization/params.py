"""
Physical constants and coefficient fields of the road-field system.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

from errors import ConfigError
from fields.coefficients import CoefficientField

logger = logging.getLogger(__name__)

# parameter paths accepted by sweeps
SWEEP_PATHS = ('D', 'c', 'd1', 'd2', 'c1', 'c2', 'mu1', 'mu2', 'nu1', 'nu2', 'a_shift1', 'a_shift2')
DIFFUSION_PATHS = ('D', 'd1', 'd2')
SHIFT_PATHS = ('a_shift1', 'a_shift2')


@dataclass(frozen=True)
class FieldSide:
    """Field diffusivity, drift, growth coefficient and exchange rates of one side."""
    d: float
    c: float
    mu: float
    nu: float
    a: CoefficientField


@dataclass(frozen=True)
class ProblemParams:
    D: float
    c: float
    fields: Dict[int, FieldSide]
    f: Optional[CoefficientField] = None

    def __post_init__(self):
        self.validate()

    @property
    def sides(self) -> Tuple[int, ...]:
        return tuple(sorted(self.fields))

    def side(self, i: int) -> FieldSide:
        if i not in self.fields:
            raise ConfigError(f"Field side {i} is not active", key_path=f'field{i}')
        return self.fields[i]

    def validate(self) -> None:
        """Diffusivities and exchange rates must be strictly positive."""
        if not self.D > 0:
            raise ConfigError(f"Road diffusivity must be positive, got {self.D}", key_path='road.D')
        if tuple(sorted(self.fields)) not in ((1, 2), (1,)):
            raise ConfigError(f"Active sides must be (1, 2) or (1,), got {tuple(sorted(self.fields))}",
                              key_path='road.sides')
        for i, side in self.fields.items():
            for name, value, path in (('d', side.d, f'field{i}.d'),
                                      ('mu', side.mu, f'road.mu{i}'),
                                      ('nu', side.nu, f'road.nu{i}')):
                if not value > 0:
                    raise ConfigError(f"{name}{i} must be positive, got {value}", key_path=path)
        if self.f is not None and not self.f.is_x_only:
            raise ConfigError("Road potential may depend on x only", key_path='road.f_expr')

    @property
    def driftless(self) -> bool:
        return self.c == 0 and all(side.c == 0 for side in self.fields.values())

    @property
    def side_symmetric(self) -> bool:
        """True when both sides share d, mu, nu and the same growth expression."""
        if self.sides != (1, 2):
            return False
        one, two = self.fields[1], self.fields[2]
        return (one.d == two.d and one.mu == two.mu and one.nu == two.nu and one.c == two.c
                and one.a.expression == two.a.expression)

    def with_value(self, path: str, value: float) -> 'ProblemParams':
        """Copy with one sweepable parameter replaced (a_shift adds a constant to a_i)."""
        if path not in SWEEP_PATHS:
            raise ConfigError(f"Unknown sweep path {path!r}; expected one of {SWEEP_PATHS}",
                              key_path='study.sweep.path')
        value = float(value)
        if path == 'D':
            return replace(self, D=value)
        if path == 'c':
            return replace(self, c=value)
        side = int(path[-1])
        if side not in self.fields:
            raise ConfigError(f"Sweep path {path} targets inactive side {side}", key_path='study.sweep.path')
        name = path[:-1]
        fields = dict(self.fields)
        if name == 'a_shift':
            fields[side] = replace(fields[side], a=fields[side].a.shifted(value))
            return replace(self, fields=fields)
        fields[side] = replace(fields[side], **{name: value})
        return replace(self, fields=fields)

    def with_growth(self, side: int, coefficient: CoefficientField) -> 'ProblemParams':
        fields = dict(self.fields)
        fields[side] = replace(self.side(side), a=coefficient)
        return replace(self, fields=fields)

    def with_road_potential(self, coefficient: Optional[CoefficientField]) -> 'ProblemParams':
        return replace(self, f=coefficient)
