"""
Coefficient fields a(x, y) and f(x) built from parsed expressions.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from errors import BoundViolationError, GridError, ConfigError
from fields.expression import Expression, parse, BinaryOp, Number, to_text

logger = logging.getLogger(__name__)

INNER = 'inner'
OUTER = 'outer'

# lattice-unit slack for the disk test on grid-sampled regions
_RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class CoefficientField:
    """Evaluable scalar field with a user-declared global bound on |a|."""
    expression: Expression
    declared_bound: float

    @classmethod
    def from_text(cls, text: Union[str, float, int], bound: float) -> 'CoefficientField':
        if isinstance(text, bool):
            raise ConfigError(f"Expression must be text or a number, got {text!r}")
        if isinstance(text, (int, float)):
            text = repr(float(text))
        if bound is None or float(bound) < 0:
            raise ConfigError(f"Declared bound must be a non-negative number, got {bound!r}")
        return cls(parse(text), float(bound))

    @classmethod
    def constant(cls, value: float) -> 'CoefficientField':
        return cls.from_text(repr(float(value)), abs(float(value)))

    @property
    def text(self) -> str:
        return to_text(self.expression.root)

    @property
    def is_x_only(self) -> bool:
        return 'y' not in self.expression.variables

    def values(self, x, y) -> np.ndarray:
        return self.expression.evaluate(x, y)

    def shifted(self, delta: float) -> 'CoefficientField':
        """Field a + delta; the declared bound grows by |delta|."""
        root = BinaryOp('+', self.expression.root, Number(float(delta)))
        return CoefficientField(Expression(root, to_text(root)), self.declared_bound + abs(float(delta)))

    def plus(self, other: 'CoefficientField') -> 'CoefficientField':
        root = BinaryOp('+', self.expression.root, other.expression.root)
        return CoefficientField(Expression(root, to_text(root)),
                                self.declared_bound + other.declared_bound)

    def check_bound(self, x, y, label: str = 'coefficient') -> None:
        """Raise BoundViolationError if any sampled |value| exceeds the declared bound."""
        values = np.abs(self.values(x, y))
        if values.size == 0:
            return
        worst = int(np.argmax(values))
        tolerance = 1e-12 * max(1.0, self.declared_bound)
        if values.flat[worst] > self.declared_bound + tolerance:
            xs = np.broadcast_to(np.asarray(x, dtype=float), values.shape).flat[worst]
            ys = np.broadcast_to(np.asarray(y, dtype=float), values.shape).flat[worst]
            raise BoundViolationError(
                f"|{label}| = {values.flat[worst]:.6g} at ({xs:.6g}, {ys:.6g}) exceeds "
                f"declared bound {self.declared_bound:.6g}",
                key_path=label,
                details={'x': float(xs), 'y': float(ys), 'value': float(values.flat[worst])}
            )


def sup_on_region(coefficient: CoefficientField, grid, region: str, radius: float) -> float:
    """
    Grid-sampled supremum of a coefficient inside or outside a half-disk.

    The sample set is every lattice node of the closed truncated domain,
    trace row included. `inner` keeps nodes with x^2 + y^2 < radius^2,
    `outer` keeps nodes with x^2 + y^2 >= radius^2. This approximates the
    true supremum from below.

    Args:
        coefficient: Field to sample
        grid: TruncatedGrid supplying the lattice
        region: 'inner' or 'outer'
        radius: Half-disk radius, at most grid.R

    Returns:
        Maximum sampled value
    """
    if region not in (INNER, OUTER):
        raise ValueError(f"Unknown region {region!r}")
    if radius < 0 or radius > grid.R * (1 + 1e-12):
        raise GridError(f"Radius {radius} outside [0, {grid.R}]")
    k, j = grid.closed_lattice()
    r2 = (radius / grid.h) ** 2
    dist2 = k.astype(float) ** 2 + j.astype(float) ** 2
    if region == INNER:
        mask = dist2 < r2 - _RADIUS_SLACK
    else:
        mask = dist2 >= r2 - _RADIUS_SLACK
    if not np.any(mask):
        raise GridError(f"Empty {region} region for radius {radius} on grid R={grid.R}, h={grid.h}")
    values = coefficient.values(k[mask] * grid.h, j[mask] * grid.h)
    return float(np.max(values))
