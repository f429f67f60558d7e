"""
Truncated computational domain: road interval (-R, R) and field half-disks.
Lattice nodes are (x, y) = (k*h, j*h); all membership tests run on the integers (k, j).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from errors import GridError

logger = logging.getLogger(__name__)

HALFDISK = 'halfdisk'
RECTANGLE = 'rectangle'
SHAPES = (HALFDISK, RECTANGLE)

UNKNOWN = 'unknown'
DIRICHLET = 'dirichlet'
TRACE = 'trace'
OUTSIDE = 'outside'

ROAD = 'road'

_LATTICE_TOL = 1e-9


def _interior(k: np.ndarray, j: np.ndarray, n: int, shape: str) -> np.ndarray:
    k = np.asarray(k)
    j = np.asarray(j)
    if shape == HALFDISK:
        return (j >= 1) & (k * k + j * j < n * n)
    return (j >= 1) & (j <= n - 1) & (np.abs(k) <= n - 1)


@dataclass(frozen=True, eq=False)
class TruncatedGrid:
    """
    Uniform lattice on I_R and Omega_R.

    Unknowns are ordered road left-to-right, then the field nodes of each
    active side, row-major bottom-up. Every side shares one field node set.
    """
    R: float
    h: float
    shape: str
    n: int
    sides: Tuple[int, ...]
    road_k: np.ndarray
    field_lattice: np.ndarray
    field_index: np.ndarray

    @property
    def road_nodes(self) -> np.ndarray:
        return self.road_k * self.h

    @property
    def n_road(self) -> int:
        return len(self.road_k)

    @property
    def n_field(self) -> int:
        return len(self.field_lattice)

    @property
    def N(self) -> int:
        return self.n_road + len(self.sides) * self.n_field

    def field_nodes(self, side: int) -> np.ndarray:
        self._check_side(side)
        return self.field_lattice * self.h

    def trace_columns(self, side: int) -> np.ndarray:
        """Local field index of the node (x_k, h) above each road node."""
        self._check_side(side)
        return self.local_field_index(self.road_k, np.ones_like(self.road_k))

    def local_field_index(self, k, j) -> np.ndarray:
        """Local field index of lattice nodes (k, j), -1 where not an unknown."""
        k = np.asarray(k)
        j = np.asarray(j)
        inside = (np.abs(k) <= self.n) & (j >= 0) & (j <= self.n)
        result = np.full(np.broadcast(k, j).shape, -1, dtype=np.int64)
        kk = np.broadcast_to(k, result.shape)
        jj = np.broadcast_to(j, result.shape)
        result[inside] = self.field_index[kk[inside] + self.n, jj[inside]]
        return result

    def offset(self, component: Union[str, int]) -> int:
        if component == ROAD:
            return 0
        self._check_side(component)
        return self.n_road + self.sides.index(component) * self.n_field

    def global_index(self, component: Union[str, int], local: int) -> int:
        size = self.n_road if component == ROAD else self.n_field
        if not 0 <= local < size:
            raise GridError(f"Local index {local} out of range for {component}")
        return self.offset(component) + int(local)

    def component_of(self, index: int) -> Tuple[Union[str, int], int]:
        if not 0 <= index < self.N:
            raise GridError(f"Global index {index} out of range 0..{self.N - 1}")
        if index < self.n_road:
            return ROAD, int(index)
        block, local = divmod(index - self.n_road, self.n_field)
        return self.sides[block], int(local)

    @property
    def block_layout(self) -> Dict[str, Tuple[int, int]]:
        layout = {ROAD: (0, self.n_road)}
        for side in self.sides:
            start = self.offset(side)
            layout[f'field{side}'] = (start, start + self.n_field)
        return layout

    def split(self, vector: np.ndarray) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
        """Split a global vector into road values and per-side field values."""
        vector = np.asarray(vector)
        if vector.shape[0] != self.N:
            raise GridError(f"Vector length {vector.shape[0]} does not match N={self.N}")
        fields = {side: vector[self.offset(side):self.offset(side) + self.n_field] for side in self.sides}
        return vector[:self.n_road], fields

    def coordinates(self) -> np.ndarray:
        """(N, 2) coordinates of all unknowns in global order; road nodes sit at y = 0."""
        road = np.column_stack([self.road_nodes, np.zeros(self.n_road)])
        blocks = [road] + [self.field_lattice * self.h for _ in self.sides]
        return np.vstack(blocks)

    def closed_lattice(self) -> Tuple[np.ndarray, np.ndarray]:
        """Integer coordinates of every lattice node of the closed truncated domain."""
        k, j = np.meshgrid(np.arange(-self.n, self.n + 1), np.arange(0, self.n + 1), indexing='xy')
        k = k.ravel()
        j = j.ravel()
        if self.shape == HALFDISK:
            keep = k * k + j * j <= self.n * self.n
            return k[keep], j[keep]
        return k, j

    def _check_side(self, side) -> None:
        if side not in self.sides:
            raise GridError(f"Side {side!r} is not active (active sides: {self.sides})")


def build_grid(R: float, h: float, shape: str = HALFDISK, sides: Tuple[int, ...] = (1, 2)) -> TruncatedGrid:
    """
    Build the truncated grid.

    Args:
        R: Truncation radius
        h: Uniform spacing; R/h must be an integer >= 2
        shape: 'halfdisk' or 'rectangle'
        sides: Active field sides, (1, 2) or (1,)

    Returns:
        TruncatedGrid with deterministic node ordering
    """
    if shape not in SHAPES:
        raise GridError(f"Unknown grid shape {shape!r}; expected one of {SHAPES}")
    if not (np.isfinite(R) and np.isfinite(h)) or R <= 0 or h <= 0:
        raise GridError(f"R and h must be positive, got R={R}, h={h}")
    sides = tuple(sides)
    if sides not in ((1, 2), (1,)):
        raise GridError(f"Sides must be (1, 2) or (1,), got {sides}")
    ratio = R / h
    n = int(round(ratio))
    if abs(ratio - n) > _LATTICE_TOL * max(1.0, ratio):
        raise GridError(f"R/h = {ratio} is not an integer")
    if n < 2:
        raise GridError(f"R/h = {n} leaves no interior nodes (need at least 2)")

    road_k = np.arange(-(n - 1), n, dtype=np.int64)

    # row-major bottom-up: j outer, k inner
    k_all, j_all = np.meshgrid(np.arange(-(n - 1), n), np.arange(1, n), indexing='xy')
    k_all = k_all.ravel().astype(np.int64)
    j_all = j_all.ravel().astype(np.int64)
    keep = _interior(k_all, j_all, n, shape)
    field_lattice = np.column_stack([k_all[keep], j_all[keep]])

    field_index = np.full((2 * n + 1, n + 1), -1, dtype=np.int64)
    field_index[field_lattice[:, 0] + n, field_lattice[:, 1]] = np.arange(len(field_lattice))

    grid = TruncatedGrid(float(R), float(h), shape, n, sides, road_k, field_lattice, field_index)
    logger.debug(f"Built {shape} grid R={R}, h={h}: {grid.n_road} road + "
                 f"{len(sides)}x{grid.n_field} field unknowns (N={grid.N})")
    return grid


def _lattice_coordinate(value: float, h: float, axis: str) -> int:
    ratio = value / h
    nearest = int(round(ratio))
    if abs(ratio - nearest) > _LATTICE_TOL * max(1.0, abs(ratio)):
        raise GridError(f"{axis} = {value} is not on the lattice of spacing {h}")
    return nearest


def classify_node(grid: TruncatedGrid, x: float, y: float) -> str:
    """Classify a lattice point as unknown, dirichlet, trace or outside."""
    k = _lattice_coordinate(x, grid.h, 'x')
    j = _lattice_coordinate(y, grid.h, 'y')
    if j < 0 or j > grid.n or abs(k) > grid.n:
        return OUTSIDE
    if j == 0:
        return TRACE if abs(k) < grid.n else DIRICHLET
    if bool(_interior(k, j, grid.n, grid.shape)):
        return UNKNOWN
    return DIRICHLET
