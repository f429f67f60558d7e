"""
Sparse assembly of the discrete road-field eigenproblem.

`assemble` builds A for A x = lambda x with the exchange condition eliminated
through the trace value T_i = (mu_i u + (d_i/h) v(x, h)) / (nu_i + d_i/h).
`assemble_symmetric` builds the stiffness/mass pencil (K, B) of the
variational quotient with explicit trace unknowns.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, List

import numpy as np
import scipy.sparse as sp

from errors import AssemblyError
from discretization.grid import TruncatedGrid, ROAD
from discretization.params import ProblemParams, FieldSide

logger = logging.getLogger(__name__)

CENTRAL = 'central'
UPWIND = 'upwind'
AUTO = 'auto'
DRIFT_SCHEMES = (CENTRAL, UPWIND, AUTO)

TRAPEZOID_TRACE_WEIGHT = 0.5


@dataclass(frozen=True)
class TraceElimination:
    """Affine trace value T = road_weight * u_k + field_weight * v(x_k, h)."""
    road_weight: float
    field_weight: float

    def apply(self, u, v_first):
        return self.road_weight * np.asarray(u) + self.field_weight * np.asarray(v_first)


def eliminate_trace(params: ProblemParams, side: int, h: float) -> TraceElimination:
    """
    Solve the one-sided exchange condition d (v1 - T)/h + mu u - nu T = 0 for T.

    Both weights are strictly positive, so the elimination keeps
    non-negative data non-negative.
    """
    field = params.side(side)
    dh = field.d / h
    denominator = field.nu + dh
    return TraceElimination(field.mu / denominator, dh / denominator)


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    A: sp.csr_matrix
    grid: TruncatedGrid
    params: ProblemParams
    block_layout: Dict[str, Tuple[int, int]]
    peclet_ok: bool
    zmatrix_ok: bool
    drift_scheme: str

    @property
    def N(self) -> int:
        return self.A.shape[0]


def peclet_numbers(grid: TruncatedGrid, params: ProblemParams) -> Dict[str, float]:
    numbers = {ROAD: abs(params.c) * grid.h / (2 * params.D)}
    for i, field in params.fields.items():
        numbers[f'field{i}'] = abs(field.c) * grid.h / (2 * field.d)
    return numbers


def resolve_drift_scheme(scheme: str, peclet_ok: bool, allow_peclet_violation: bool = False) -> str:
    if scheme not in DRIFT_SCHEMES:
        raise AssemblyError(f"Unknown drift scheme {scheme!r}; expected one of {DRIFT_SCHEMES}")
    if scheme == AUTO:
        return CENTRAL if peclet_ok else UPWIND
    if scheme == CENTRAL and not peclet_ok and not allow_peclet_violation:
        raise AssemblyError(
            "Central drift violates the grid Peclet condition; refine h, use upwind, "
            "or set solver.allow_peclet_violation"
        )
    return scheme


def _drift_stencil(c: float, h: float, scheme: str) -> Tuple[float, float, float]:
    """(minus, diagonal, plus) contributions of -c w' to a row."""
    if c == 0:
        return 0.0, 0.0, 0.0
    if scheme == CENTRAL:
        return c / (2 * h), 0.0, -c / (2 * h)
    if c > 0:
        return 0.0, c / h, -c / h
    return c / h, -c / h, 0.0


class _Triplets:
    """COO accumulator."""

    def __init__(self):
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []

    def add(self, rows, cols, vals) -> None:
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        self.rows.append(rows)
        self.cols.append(cols)
        self.vals.append(vals)

    def add_symmetric(self, p, q, w) -> None:
        """Edge energy w (x_p - x_q)^2: both off-diagonal halves added together."""
        p = np.asarray(p, dtype=np.int64).ravel()
        q = np.asarray(q, dtype=np.int64).ravel()
        w = np.broadcast_to(np.asarray(w, dtype=float), p.shape).ravel()
        self.add(p, p, w)
        self.add(q, q, w)
        self.add(np.column_stack([p, q]).ravel(), np.column_stack([q, p]).ravel(),
                 np.repeat(-w, 2))

    def to_csr(self, n: int) -> sp.csr_matrix:
        if self.rows:
            rows = np.concatenate(self.rows)
            cols = np.concatenate(self.cols)
            vals = np.concatenate(self.vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        return matrix


def _road_rows(grid: TruncatedGrid, params: ProblemParams, scheme: str, exchange: bool,
               triplets: _Triplets) -> np.ndarray:
    """Road tridiagonal off-diagonals; returns the diagonal for the caller to finish."""
    h = grid.h
    nr = grid.n_road
    idx = np.arange(nr)
    minus, drift_diag, plus = _drift_stencil(params.c, h, scheme)
    diffusion = params.D / h ** 2
    triplets.add(idx[1:], idx[:-1], -diffusion + minus)
    triplets.add(idx[:-1], idx[1:], -diffusion + plus)
    diag = np.full(nr, 2 * diffusion + drift_diag)
    diag += sum(field.mu for field in params.fields.values())
    if exchange:
        for i, field in params.fields.items():
            diag -= field.nu * eliminate_trace(params, i, h).road_weight
    if params.f is not None:
        diag -= params.f.values(grid.road_nodes, 0.0)
    return diag


def _field_rows(grid: TruncatedGrid, field: FieldSide, scheme: str, row_offset: int,
                trace: Optional[TraceElimination], triplets: _Triplets) -> None:
    """Five-point rows of one side; neighbors at y = 0 become T or zero (no trace)."""
    h = grid.h
    k = grid.field_lattice[:, 0]
    j = grid.field_lattice[:, 1]
    local = np.arange(grid.n_field)
    diffusion = field.d / h ** 2
    minus, drift_diag, plus = _drift_stencil(field.c, h, scheme)

    for dk, dj, value in ((1, 0, -diffusion + plus), (-1, 0, -diffusion + minus), (0, 1, -diffusion)):
        neighbor = grid.local_field_index(k + dk, j + dj)
        hit = neighbor >= 0
        triplets.add(row_offset + local[hit], row_offset + neighbor[hit], value)
    below = grid.local_field_index(k, j - 1)
    deep = j >= 2
    triplets.add(row_offset + local[deep], row_offset + below[deep], -diffusion)

    diag = np.full(grid.n_field, 4 * diffusion + drift_diag)
    first = j == 1
    if trace is not None:
        diag[first] -= diffusion * trace.field_weight
        triplets.add(row_offset + local[first], k[first] + grid.n - 1, -diffusion * trace.road_weight)
    diag = diag - field.a.values(k * h, j * h)
    triplets.add(row_offset + local, row_offset + local, diag)


def _zmatrix_ok(matrix: sp.csr_matrix) -> bool:
    coo = matrix.tocoo()
    off = coo.row != coo.col
    return bool(np.all(coo.data[off] <= 0.0))


def assemble(grid: TruncatedGrid, params: ProblemParams, drift_scheme: str = AUTO,
             allow_peclet_violation: bool = False) -> SystemMatrix:
    """
    Assemble A for the truncated eigenproblem with the exchange condition eliminated.

    Args:
        grid: TruncatedGrid
        params: ProblemParams whose active sides match the grid
        drift_scheme: 'central', 'upwind' or 'auto' (central when the Peclet condition holds)
        allow_peclet_violation: Permit central drift past the Peclet limit

    Returns:
        SystemMatrix with sorted CSR storage
    """
    if tuple(grid.sides) != params.sides:
        raise AssemblyError(f"Grid sides {grid.sides} do not match parameter sides {params.sides}")
    peclet_ok = all(value <= 1.0 for value in peclet_numbers(grid, params).values())
    scheme = resolve_drift_scheme(drift_scheme, peclet_ok, allow_peclet_violation)

    triplets = _Triplets()
    road_diag = _road_rows(grid, params, scheme, exchange=True, triplets=triplets)
    triplets.add(np.arange(grid.n_road), np.arange(grid.n_road), road_diag)

    road_idx = np.arange(grid.n_road)
    for i in params.sides:
        trace = eliminate_trace(params, i, grid.h)
        offset = grid.offset(i)
        field = params.side(i)
        triplets.add(road_idx, offset + grid.trace_columns(i), -field.nu * trace.field_weight)
        _field_rows(grid, field, scheme, offset, trace, triplets)

    A = triplets.to_csr(grid.N)
    system = SystemMatrix(A, grid, params, grid.block_layout, peclet_ok, _zmatrix_ok(A), scheme)
    logger.debug(f"Assembled A: N={grid.N}, nnz={A.nnz}, scheme={scheme}, "
                 f"peclet_ok={peclet_ok}, zmatrix_ok={system.zmatrix_ok}")
    return system


def assemble_field_dirichlet(grid: TruncatedGrid, params: ProblemParams, side: int,
                             drift_scheme: str = AUTO, allow_peclet_violation: bool = False) -> SystemMatrix:
    """Single-field block with Dirichlet data on the whole boundary, y = 0 included."""
    field = params.side(side)
    peclet_ok = abs(field.c) * grid.h / (2 * field.d) <= 1.0
    scheme = resolve_drift_scheme(drift_scheme, peclet_ok, allow_peclet_violation)
    triplets = _Triplets()
    _field_rows(grid, field, scheme, 0, None, triplets)
    A = triplets.to_csr(grid.n_field)
    return SystemMatrix(A, grid, params, {f'field{side}': (0, grid.n_field)}, peclet_ok, _zmatrix_ok(A), scheme)


def assemble_road_dirichlet(grid: TruncatedGrid, params: ProblemParams, drift_scheme: str = AUTO,
                            allow_peclet_violation: bool = False) -> SystemMatrix:
    """Road operator -D u'' - c u' + (sum mu_i - f) u alone on I_R with zero end values."""
    peclet_ok = abs(params.c) * grid.h / (2 * params.D) <= 1.0
    scheme = resolve_drift_scheme(drift_scheme, peclet_ok, allow_peclet_violation)
    triplets = _Triplets()
    diag = _road_rows(grid, params, scheme, exchange=False, triplets=triplets)
    triplets.add(np.arange(grid.n_road), np.arange(grid.n_road), diag)
    A = triplets.to_csr(grid.n_road)
    return SystemMatrix(A, grid, params, {ROAD: (0, grid.n_road)}, peclet_ok, _zmatrix_ok(A), scheme)


def gershgorin_floor(A) -> float:
    """min_k (A_kk - sum_{j != k} |A_kj|)."""
    matrix = sp.csr_matrix(A)
    diag = matrix.diagonal()
    abs_row = np.asarray(abs(matrix).sum(axis=1)).ravel()
    return float(np.min(diag - (abs_row - np.abs(diag))))


@dataclass(frozen=True)
class PencilLayout:
    """Unknown layout with explicit traces: road, then per side trace row followed by interior nodes."""
    n_road: int
    n_field: int
    sides: Tuple[int, ...]

    @property
    def side_size(self) -> int:
        return self.n_road + self.n_field

    @property
    def N(self) -> int:
        return self.n_road + len(self.sides) * self.side_size

    def offset(self, side: int) -> int:
        return self.n_road + self.sides.index(side) * self.side_size

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
        x = np.asarray(x)
        return x[:self.n_road], {s: x[self.offset(s):self.offset(s) + self.side_size] for s in self.sides}

    def join(self, u: np.ndarray, v: Dict[int, np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(u, dtype=float)] + [np.asarray(v[s], dtype=float) for s in self.sides])


@dataclass(frozen=True, eq=False)
class SymmetricPencil:
    K: sp.csr_matrix
    B: sp.csr_matrix
    grid: TruncatedGrid
    params: ProblemParams
    layout: PencilLayout

    @property
    def mass(self) -> np.ndarray:
        return self.B.diagonal()


def variational_pencil(grid: TruncatedGrid, params: ProblemParams,
                       road_weight: float = 1.0,
                       field_weights: Optional[Dict[int, float]] = None,
                       exchange_weights: Optional[Dict[int, float]] = None,
                       sides: Optional[Tuple[int, ...]] = None,
                       trace_weight: float = TRAPEZOID_TRACE_WEIGHT) -> SymmetricPencil:
    """
    Weighted quadratic forms of the variational quotient with explicit traces.

    The numerator is
        road_weight * (D sum (du)^2/h - h sum f u^2)
        + sum_i field_weights[i] * (d_i * edge sums - quadrature of a_i v_i^2)
        + sum_i exchange_weights[i] * h sum_k (mu_i u_k - nu_i v_i(x_k, 0))^2
    and the denominator road_weight * h sum u^2 + sum_i field_weights[i] * quadrature of v_i^2.
    Node weights are h^2, scaled by trace_weight on the y = 0 row; horizontal
    edges on that row carry trace_weight too. trace_weight = 0 leaves the
    trace rows massless, reproducing the eliminated operator exactly.
    """
    if not params.driftless:
        raise AssemblyError("Variational pencil requires c = c_i = 0")
    sides = tuple(sides) if sides is not None else params.sides
    if field_weights is None:
        field_weights = {i: params.side(i).nu / params.side(i).mu for i in sides}
    if exchange_weights is None:
        exchange_weights = {i: 1.0 / params.side(i).mu for i in sides}

    h = grid.h
    n = grid.n
    nr = grid.n_road
    layout = PencilLayout(nr, grid.n_field, sides)
    stiffness = _Triplets()
    mass = np.zeros(layout.N)

    # road: edges between neighbours and to the Dirichlet ends
    road_idx = np.arange(nr)
    edge_w = road_weight * params.D / h
    stiffness.add_symmetric(road_idx[:-1], road_idx[1:], edge_w)
    stiffness.add([0, nr - 1], [0, nr - 1], edge_w)
    if params.f is not None:
        stiffness.add(road_idx, road_idx, -road_weight * h * params.f.values(grid.road_nodes, 0.0))
    mass[:nr] = road_weight * h

    trace_k = grid.road_k
    nodes_k = np.concatenate([trace_k, grid.field_lattice[:, 0]])
    nodes_j = np.concatenate([np.zeros(nr, dtype=np.int64), grid.field_lattice[:, 1]])

    def pencil_local(k, j):
        interior = grid.local_field_index(k, j)
        local = np.where(interior >= 0, interior + nr, -1)
        on_trace = (j == 0) & (np.abs(k) <= n - 1)
        return np.where(on_trace, k + n - 1, local)

    row_factor = np.where(nodes_j == 0, trace_weight, 1.0)
    node_weight = h * h * row_factor
    local_nodes = np.arange(layout.side_size)

    for i in sides:
        field = params.side(i)
        offset = layout.offset(i)
        wf = field_weights[i]
        for dk, dj, edge_factor in ((1, 0, row_factor), (-1, 0, row_factor), (0, 1, 1.0)):
            neighbor = pencil_local(nodes_k + dk, nodes_j + dj)
            weights = np.broadcast_to(wf * field.d * edge_factor, nodes_k.shape)
            dirichlet = neighbor < 0
            stiffness.add(offset + local_nodes[dirichlet], offset + local_nodes[dirichlet], weights[dirichlet])
            if dk == -1:
                continue
            inner = ~dirichlet
            stiffness.add_symmetric(offset + local_nodes[inner], offset + neighbor[inner], weights[inner])
        growth = field.a.values(nodes_k * h, nodes_j * h)
        stiffness.add(offset + local_nodes, offset + local_nodes, -wf * growth * node_weight)
        mass[offset:offset + layout.side_size] = wf * node_weight

        # exchange (mu u - nu v0)^2 with weight h per road node
        we = exchange_weights[i] * h
        trace_idx = offset + road_idx
        stiffness.add(road_idx, road_idx, we * field.mu ** 2)
        stiffness.add(trace_idx, trace_idx, we * field.nu ** 2)
        stiffness.add(np.column_stack([road_idx, trace_idx]).ravel(),
                      np.column_stack([trace_idx, road_idx]).ravel(),
                      np.repeat(-we * field.mu * field.nu, 2 * nr))

    K = stiffness.to_csr(layout.N)
    B = sp.diags(mass).tocsr()
    B.eliminate_zeros()
    B.sort_indices()
    return SymmetricPencil(K, B, grid, params, layout)


def assemble_symmetric(grid: TruncatedGrid, params: ProblemParams) -> SymmetricPencil:
    """Stiffness/mass pencil (K, B) of the variational quotient; traces are unknowns."""
    pencil = variational_pencil(grid, params)
    logger.debug(f"Assembled symmetric pencil: N={pencil.layout.N}, nnz(K)={pencil.K.nnz}")
    return pencil


def assemble_trace_pencil(grid: TruncatedGrid, params: ProblemParams) -> SymmetricPencil:
    """Explicit-trace pencil whose trace rows carry zero mass; equivalent to the eliminated A."""
    return variational_pencil(grid, params, trace_weight=0.0)
