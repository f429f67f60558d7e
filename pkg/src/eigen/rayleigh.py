"""
Discrete variational quotients evaluated from the shared stiffness/mass pencil.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from errors import SolverError, ConfigError
from discretization.assembly import PencilLayout, SymmetricPencil, assemble_symmetric, variational_pencil
from discretization.grid import TruncatedGrid
from discretization.params import ProblemParams

logger = logging.getLogger(__name__)


def pencil_field_coordinates(grid: TruncatedGrid) -> np.ndarray:
    """(side_size, 2) coordinates of one side block: trace row, then interior nodes."""
    trace = np.column_stack([grid.road_nodes, np.zeros(grid.n_road)])
    return np.vstack([trace, grid.field_lattice * grid.h])


@dataclass(eq=False)
class DiscreteTriple:
    """Road values and per-side field values on the trace row and interior nodes; Dirichlet nodes are implicit zeros."""
    u: np.ndarray
    v: Dict[int, np.ndarray]
    grid: TruncatedGrid

    def layout(self) -> PencilLayout:
        return PencilLayout(self.grid.n_road, self.grid.n_field, tuple(sorted(self.v)))

    def to_vector(self) -> np.ndarray:
        layout = self.layout()
        for side, values in self.v.items():
            if len(values) != layout.side_size:
                raise ConfigError(f"Field {side} has {len(values)} values, expected {layout.side_size}")
        if len(self.u) != layout.n_road:
            raise ConfigError(f"Road has {len(self.u)} values, expected {layout.n_road}")
        return layout.join(self.u, self.v)

    def scaled(self, alpha: float) -> 'DiscreteTriple':
        return DiscreteTriple(alpha * np.asarray(self.u), {s: alpha * np.asarray(v) for s, v in self.v.items()}, self.grid)

    @classmethod
    def from_vector(cls, pencil: SymmetricPencil, x: np.ndarray) -> 'DiscreteTriple':
        u, v = pencil.layout.split(np.asarray(x, dtype=float))
        return cls(u.copy(), {s: values.copy() for s, values in v.items()}, pencil.grid)

    @classmethod
    def from_functions(cls, grid: TruncatedGrid, road: Callable, field: Callable,
                       sides: Tuple[int, ...] = (1, 2)) -> 'DiscreteTriple':
        """Sample road(x) and field(side, x, y) on the unknown nodes."""
        coords = pencil_field_coordinates(grid)
        u = np.asarray(road(grid.road_nodes), dtype=float)
        v = {s: np.asarray(field(s, coords[:, 0], coords[:, 1]), dtype=float) for s in sides}
        return cls(u, v, grid)


def _ratio(pencil: SymmetricPencil, x: np.ndarray) -> float:
    denominator = float(x @ (pencil.B @ x))
    if denominator == 0:
        raise SolverError("Quotient of the zero triple is undefined")
    return float(x @ (pencil.K @ x)) / denominator


def quotient(t: DiscreteTriple, params: ProblemParams, pencil: Optional[SymmetricPencil] = None) -> float:
    """(t.Kt)/(t.Bt) for the pencil of assemble_symmetric."""
    if pencil is None:
        pencil = assemble_symmetric(t.grid, params)
    return _ratio(pencil, t.to_vector())


def quotient_symmetric_case(u: np.ndarray, v: np.ndarray, grid: TruncatedGrid, params: ProblemParams) -> float:
    """
    Reduced quotient for identical sides, equal to quotient((u, v, v)).

    Numerator (mu/2) D int u'^2 + nu int(d |grad v|^2 - a v^2) + int (mu u - nu v)^2,
    denominator (mu/2) int u^2 + nu int v^2.
    """
    if not params.side_symmetric:
        raise ConfigError("Symmetric-case quotient needs d1=d2, mu1=mu2, nu1=nu2 and a1=a2")
    side = params.side(1)
    pencil = variational_pencil(grid, params, road_weight=0.5 * side.mu,
                                field_weights={1: side.nu}, exchange_weights={1: 1.0}, sides=(1,))
    return _ratio(pencil, pencil.layout.join(u, {1: v}))


def quotient_single_field(u: np.ndarray, v: np.ndarray, grid: TruncatedGrid, params: ProblemParams) -> float:
    """
    Quotient of the one-sided model:
    mu D int u'^2 + nu int(d |grad v|^2 - a v^2) + int (mu u - nu v)^2 over mu int u^2 + nu int v^2.
    """
    side = params.side(1)
    pencil = variational_pencil(grid, params, road_weight=side.mu,
                                field_weights={1: side.nu}, exchange_weights={1: 1.0}, sides=(1,))
    return _ratio(pencil, pencil.layout.join(u, {1: v}))
