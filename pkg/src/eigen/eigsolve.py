"""
Principal eigenpair solvers.

Shifted inverse power iteration on the M-matrix resolvent (A + sI)^-1, a dense
oracle for small systems, and a shift-invert solver for the symmetric pencil.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from errors import ConfigError, SolverError, ConvergenceError, PositivityError
from discretization.assembly import SystemMatrix, SymmetricPencil, gershgorin_floor

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 2000
DIRECT = 'direct'
KRYLOV = 'krylov'
AUTO = 'auto'

_RESHIFT_EVERY = 5
_MAX_RESHIFTS = 25


@dataclass
class SolverConfig:
    """Inverse iteration settings; `shift` is 'auto' or an explicit real."""
    tol: float = 1e-10
    max_iter: int = 10000
    shift: Union[str, float] = AUTO
    linear_solver: str = AUTO
    krylov_tol: float = 1e-12
    krylov_threshold: int = 300000
    check_irreducible: bool = True
    dense_threshold: int = 400

    def __post_init__(self):
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError(f"tol must be positive, got {self.tol!r}", key_path='solver.tol')
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ConfigError(f"max_iter must be an integer >= 1, got {self.max_iter!r}", key_path='solver.max_iter')
        if self.shift != AUTO and not isinstance(self.shift, (int, float)):
            raise ConfigError(f"shift must be 'auto' or a number, got {self.shift!r}", key_path='solver.shift')
        if self.linear_solver not in (AUTO, DIRECT, KRYLOV):
            raise ConfigError(f"Unknown linear solver {self.linear_solver!r}", key_path='solver.linear_solver')

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> 'SolverConfig':
        return cls(
            tol=config.get('tol', 1e-10),
            max_iter=config.get('max_iter', 10000),
            shift=config.get('shift', AUTO),
            linear_solver=config.get('linear_solver', AUTO),
            krylov_tol=config.get('krylov_tol', 1e-12),
            krylov_threshold=config.get('krylov_threshold', 300000),
        )


@dataclass
class EigenResult:
    lam: float
    vector: np.ndarray
    residual: float
    iterations: int
    positivity_margin: float
    spectral_gap_hint: Optional[float] = None
    collatz_lower: Optional[float] = None
    collatz_upper: Optional[float] = None
    shift: Optional[float] = None
    residual_history: List[float] = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.vector)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': float(self.lam),
            'residual': float(self.residual),
            'iterations': int(self.iterations),
            'positivity_margin': float(self.positivity_margin),
            'N': int(self.N),
        }


def _as_csr(system) -> sp.csr_matrix:
    if isinstance(system, SystemMatrix):
        return system.A
    if sp.issparse(system):
        return sp.csr_matrix(system, dtype=float)
    return sp.csr_matrix(np.asarray(system, dtype=float))


def _is_zmatrix(A: sp.csr_matrix) -> bool:
    coo = A.tocoo()
    return bool(np.all(coo.data[coo.row != coo.col] <= 0.0))


def is_irreducible(A) -> bool:
    """Strong connectivity of the off-diagonal sparsity graph."""
    matrix = _as_csr(A)
    n_components, _ = connected_components(matrix, directed=True, connection='strong')
    return n_components == 1


def shift_floor(A) -> float:
    """
    Smallest shift s = 1 + max(0, -Gershgorin floor) making A + sI strictly
    diagonally dominant with positive diagonal.
    """
    return 1.0 + max(0.0, -gershgorin_floor(_as_csr(A)))


def collatz_wielandt_bracket(A, x: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    """min and max of (Ax)_i / x_i; brackets the Perron value for positive x and irreducible Z-matrix A."""
    x = np.asarray(x, dtype=float)
    if x.size == 0 or np.any(x <= 0):
        return None, None
    ratios = (_as_csr(A) @ x) / x
    return float(np.min(ratios)), float(np.max(ratios))


class _ShiftedSolver:
    """Solves (A + sI) y = rhs by sparse LU or preconditioned BiCGSTAB."""

    def __init__(self, A: sp.csr_matrix, shift: float, method: str, krylov_tol: float):
        self.shift = shift
        self.method = method
        self.krylov_tol = krylov_tol
        self.matrix = (A + shift * sp.identity(A.shape[0], format='csr')).tocsc()
        try:
            if method == DIRECT:
                self.lu = spla.splu(self.matrix)
            else:
                self.ilu = spla.spilu(self.matrix, drop_tol=1e-5, fill_factor=10)
                self.preconditioner = spla.LinearOperator(self.matrix.shape, self.ilu.solve)
        except RuntimeError as e:
            raise SolverError(f"Factorization of A + {shift:.6g} I failed: {e}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.method == DIRECT:
            return self.lu.solve(rhs)
        try:
            y, info = spla.bicgstab(self.matrix, rhs, rtol=self.krylov_tol, M=self.preconditioner)
        except TypeError:
            # scipy < 1.12 spells the relative tolerance `tol`
            y, info = spla.bicgstab(self.matrix, rhs, tol=self.krylov_tol, M=self.preconditioner)
        if info != 0:
            raise SolverError(f"BiCGSTAB did not converge (info={info})")
        return y


def resolvent_apply(system, rhs: np.ndarray, shift: Optional[float] = None) -> np.ndarray:
    """(A + sI)^-1 rhs with s = shift_floor(A) unless given."""
    A = _as_csr(system)
    s = shift_floor(A) if shift is None else float(shift)
    return _ShiftedSolver(A, s, DIRECT, 0.0).solve(np.asarray(rhs, dtype=float))


def principal_eig(system, cfg: Optional[SolverConfig] = None,
                  start: Optional[np.ndarray] = None) -> EigenResult:
    """
    Principal eigenpair by shifted inverse power iteration.

    Args:
        system: SystemMatrix, sparse matrix or dense array
        cfg: SolverConfig; shift 'auto' starts at shift_floor(A) and tightens
            it with the Collatz-Wielandt lower bracket, never crossing below -lambda_1
        start: Positive start vector, all-ones by default

    Returns:
        EigenResult with sup-normalized strictly positive vector
    """
    cfg = cfg or SolverConfig()
    A = _as_csr(system)
    N = A.shape[0]
    if cfg.check_irreducible and not is_irreducible(A):
        raise SolverError("Matrix is reducible; the Perron vector is not unique")

    method = cfg.linear_solver
    if method == AUTO:
        method = KRYLOV if N > cfg.krylov_threshold else DIRECT
    floor = shift_floor(A)
    adaptive = cfg.shift == AUTO and _is_zmatrix(A)
    s = floor if cfg.shift == AUTO else float(cfg.shift)
    if cfg.shift != AUTO and s < floor:
        logger.warning(f"Explicit shift {s:.6g} is below the positivity floor {floor:.6g}")
    solver = _ShiftedSolver(A, s, method, cfg.krylov_tol)

    x = np.ones(N) if start is None else np.asarray(start, dtype=float).copy()
    history: List[float] = []
    lam = np.nan
    reshifts = 0
    for iteration in range(1, cfg.max_iter + 1):
        y = solver.solve(x)
        if not np.all(np.isfinite(y)):
            raise SolverError(f"Linear solve produced non-finite values at iteration {iteration}")
        scale = np.max(np.abs(y))
        if scale == 0:
            raise SolverError("Linear solve returned the zero vector")
        x = y / scale
        Ax = A @ x
        lam = float(x @ Ax / (x @ x))
        residual = float(np.max(np.abs(Ax - lam * x)) / np.max(np.abs(x)))
        history.append(residual)
        if residual <= cfg.tol:
            break
        if adaptive and iteration % _RESHIFT_EVERY == 0 and reshifts < _MAX_RESHIFTS:
            lower, _ = collatz_wielandt_bracket(A, x)
            if lower is not None:
                margin = max(0.5 * max(lam - lower, 0.0), 1e-6 * (1.0 + abs(lower)))
                candidate = margin - lower
                if candidate < s - 1e-12 * (1.0 + abs(s)):
                    s = candidate
                    solver = _ShiftedSolver(A, s, method, cfg.krylov_tol)
                    reshifts += 1
    else:
        raise ConvergenceError(
            f"Inverse iteration did not reach tol={cfg.tol:g} in {cfg.max_iter} iterations "
            f"(last residual {history[-1]:.3e})", history
        )

    if np.sum(x) < 0:
        x = -x
    margin = float(np.min(x))
    if margin <= 0:
        raise PositivityError(
            f"Converged vector has a non-positive component (min {margin:.3e}); "
            "the Z-matrix assumption is broken",
            {'min_component': margin, 'index': int(np.argmin(x))}
        )
    lower, upper = collatz_wielandt_bracket(A, x)
    logger.info(f"Principal eigenvalue {lam:.12g} (N={N}, iterations={iteration}, "
                f"residual={history[-1]:.2e}, shift={s:.6g}, reshifts={reshifts})")
    return EigenResult(lam, x, history[-1], iteration, margin,
                       collatz_lower=lower, collatz_upper=upper, shift=s, residual_history=history)


def dense_principal_eig(system) -> EigenResult:
    """
    Oracle: full unsymmetric eigendecomposition, minimal real part selected.

    Raises:
        SolverError: oversized system, complex or multiple minimal eigenvalue,
            sign-indefinite eigenvector or non-positive gap
    """
    A = _as_csr(system)
    N = A.shape[0]
    if N > ORACLE_MAX_N:
        raise SolverError(f"Dense oracle limited to N <= {ORACLE_MAX_N}, got N={N}")
    dense = A.toarray()
    w, V = scipy.linalg.eig(dense)
    idx = int(np.argmin(w.real))
    lam = w[idx]
    scale = max(1.0, float(np.max(np.abs(w))))
    if abs(lam.imag) > 1e-8 * scale:
        raise SolverError(f"Minimal eigenvalue {lam} is not real")
    others = np.delete(w, idx)
    gap = None
    if others.size:
        if np.min(np.abs(others - lam)) <= 1e-8 * scale:
            raise SolverError(f"Minimal eigenvalue {lam.real:.12g} is not simple")
        gap = float(np.min(others.real) - lam.real)
        if gap <= 0:
            raise SolverError(f"Non-positive spectral gap {gap:.3e}")

    v = V[:, idx].real
    v = v * np.sign(v[np.argmax(np.abs(v))])
    v = v / np.max(np.abs(v))
    if np.min(v) < -1e-8:
        raise SolverError(f"Principal eigenvector is sign-indefinite (min component {np.min(v):.3e})")
    lam = float(lam.real)
    residual = float(np.max(np.abs(dense @ v - lam * v)))
    logger.debug(f"Dense oracle eigenvalue {lam:.12g} (N={N}, gap={gap})")
    return EigenResult(lam, v, residual, 0, float(np.min(v)), spectral_gap_hint=gap)


def _pencil_matrices(K, B) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    if isinstance(K, SymmetricPencil):
        return K.K, K.B
    return sp.csr_matrix(K, dtype=float), sp.csr_matrix(B, dtype=float)


def _finish_pencil(K: sp.csr_matrix, B: sp.csr_matrix, x: np.ndarray, iterations: int) -> EigenResult:
    x = np.asarray(x, dtype=float).real
    if np.sum(x) < 0:
        x = -x
    x = x / np.max(np.abs(x))
    Bx = B @ x
    lam = float(x @ (K @ x) / (x @ Bx))
    residual = float(np.max(np.abs(K @ x - lam * Bx)) / np.max(np.abs(Bx)))
    return EigenResult(lam, x, residual, iterations, float(np.min(x)))


def symmetric_principal_eig(K, B=None, cfg: Optional[SolverConfig] = None) -> EigenResult:
    """
    Smallest eigenvalue of K x = lambda B x for symmetric K and positive diagonal B.

    Small pencils use a dense generalized symmetric solver; larger ones use
    shift-invert Lanczos with sigma below the Gershgorin floor of B^-1 K,
    re-shifted once on failure. The returned eigenvalue is the quotient
    (x.Kx)/(x.Bx) of the returned vector.
    """
    cfg = cfg or SolverConfig()
    K, B = _pencil_matrices(K, B)
    if (K != K.T).nnz != 0:
        raise SolverError("Stiffness matrix is not exactly symmetric")
    mass = B.diagonal()
    if (B - sp.diags(mass)).count_nonzero() != 0 or np.any(mass <= 0):
        raise SolverError("Mass matrix must be diagonal with positive entries")
    N = K.shape[0]

    if N <= cfg.dense_threshold:
        _, vectors = scipy.linalg.eigh(K.toarray(), B.toarray(), subset_by_index=[0, 0])
        return _finish_pencil(K, B, vectors[:, 0], 0)

    diag = K.diagonal()
    abs_row = np.asarray(abs(K).sum(axis=1)).ravel()
    sigma = float(np.min((diag - (abs_row - np.abs(diag))) / mass)) - 1.0
    for attempt in range(2):
        try:
            _, vectors = spla.eigsh(K.tocsc(), k=1, M=B.tocsc(), sigma=sigma, which='LM',
                                    v0=np.ones(N), maxiter=cfg.max_iter)
            result = _finish_pencil(K, B, vectors[:, 0], 1)
            logger.info(f"Pencil eigenvalue {result.lam:.12g} (N={N}, sigma={sigma:.6g})")
            return result
        except (spla.ArpackNoConvergence, spla.ArpackError, RuntimeError) as e:
            logger.warning(f"Shift-invert pencil solve failed at sigma={sigma:.6g}: {e}")
            sigma -= 1.0 + abs(sigma)
    raise SolverError("Pencil eigensolver failed after re-shift")


def dense_pencil_eig(pencil: SymmetricPencil) -> float:
    """
    Smallest finite eigenvalue of a pencil whose mass may vanish on some rows.

    Massless unknowns are removed by an exact Schur complement, leaving a
    symmetric definite problem.
    """
    K = pencil.K.toarray()
    mass = pencil.B.diagonal()
    keep = mass > 0
    drop = ~keep
    S = K[np.ix_(keep, keep)]
    if np.any(drop):
        coupling = K[np.ix_(drop, keep)]
        S = S - coupling.T @ scipy.linalg.solve(K[np.ix_(drop, drop)], coupling, assume_a='pos')
        S = 0.5 * (S + S.T)
    w = scipy.linalg.eigh(S, np.diag(mass[keep]), eigvals_only=True, subset_by_index=[0, 0])
    return float(w[0])
