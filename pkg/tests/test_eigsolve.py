import math

import numpy as np
import pytest
import scipy.sparse as sp

from errors import ConfigError, ConvergenceError, SolverError
from discretization.assembly import assemble, assemble_symmetric
from discretization.grid import build_grid
from eigen.eigsolve import (
    SolverConfig, principal_eig, dense_principal_eig, symmetric_principal_eig, dense_pencil_eig,
    collatz_wielandt_bracket, resolvent_apply, shift_floor, is_irreducible
)

TINY_LAMBDA = (34 - 12 * math.sqrt(2) - 2 * math.sqrt(13)) / 3


def test_iterative_matches_closed_form(tiny_grid, unit_params):
    result = principal_eig(assemble(tiny_grid, unit_params))
    assert result.lam == pytest.approx(TINY_LAMBDA, abs=1e-9)
    assert result.residual <= 1e-10
    assert result.positivity_margin > 0
    assert np.max(result.vector) == pytest.approx(1.0)
    assert result.to_dict()['N'] == 9


def test_shift_floor_of_tiny_system(tiny_grid, unit_params):
    assert shift_floor(assemble(tiny_grid, unit_params)) == pytest.approx(1.0)


@pytest.mark.parametrize("a", [0.0, 0.5, "tanh(2*(5 - sqrt(x^2 + y^2)))", "1 - 0.1*(x^2 + y^2)"])
def test_iterative_agrees_with_dense_oracle(make_params, a):
    system = assemble(build_grid(6.0, 0.5), make_params(a=a, a_bound=3.0))
    iterative = principal_eig(system)
    dense = dense_principal_eig(system)
    assert abs(iterative.lam - dense.lam) <= 1e-8 * (1 + abs(dense.lam))
    assert dense.spectral_gap_hint > 0
    np.testing.assert_allclose(iterative.vector, dense.vector, atol=1e-6)


def test_collatz_bracket_contains_eigenvalue(small_grid, niche_params):
    result = principal_eig(assemble(small_grid, niche_params))
    assert result.collatz_lower <= result.lam + 1e-9
    assert result.lam <= result.collatz_upper + 1e-9
    assert collatz_wielandt_bracket(np.eye(2), np.array([1.0, -1.0])) == (None, None)


@pytest.mark.parametrize("R, h, a", [
    (1.0, 0.5, 0.0),
    (6.0, 0.375, "tanh(2*(5 - sqrt(x^2 + y^2)))"),
])
def test_resolvent_columns_are_positive(make_params, R, h, a):
    grid = build_grid(R, h)
    system = assemble(grid, make_params(a=a))
    rng = np.random.default_rng(4242)
    for k in rng.integers(0, grid.N, size=10):
        rhs = np.zeros(grid.N)
        rhs[k] = 1.0
        assert np.all(resolvent_apply(system, rhs) > 0)


def test_drift_system_converges(small_grid, make_params):
    system = assemble(small_grid, make_params(a=0.5, c=1.5, field_c=0.5))
    iterative = principal_eig(system)
    assert iterative.lam == pytest.approx(dense_principal_eig(system).lam, abs=1e-8)


def test_krylov_and_explicit_shift_paths(small_grid, niche_params):
    system = assemble(small_grid, niche_params)
    reference = principal_eig(system).lam
    krylov = principal_eig(system, SolverConfig(linear_solver='krylov'))
    assert krylov.lam == pytest.approx(reference, abs=1e-8)
    shifted = principal_eig(system, SolverConfig(shift=5.0))
    assert shifted.lam == pytest.approx(reference, abs=1e-8)


def test_iteration_budget_exhausted(small_grid, niche_params):
    with pytest.raises(ConvergenceError) as excinfo:
        principal_eig(assemble(small_grid, niche_params), SolverConfig(tol=1e-15, max_iter=1))
    assert excinfo.value.details['iterations'] == 1
    assert len(excinfo.value.residual_history) == 1


def test_reducible_matrix_rejected():
    A = sp.diags([1.0, 2.0, 3.0]).tocsr()
    assert not is_irreducible(A)
    with pytest.raises(SolverError):
        principal_eig(A)


def test_diagonal_fixture_without_irreducibility_check():
    A = sp.diags([2.0, 3.0, 5.0]).tocsr()
    result = principal_eig(A, SolverConfig(check_irreducible=False))
    assert result.lam == pytest.approx(2.0, abs=1e-9)
    assert result.vector[0] == pytest.approx(1.0)
    assert np.all(result.vector[1:] < 1e-6)


def test_two_by_two_fixture():
    A = np.array([[2.0, -1.0], [-1.0, 2.0]])
    for result in (principal_eig(A), dense_principal_eig(A)):
        assert result.lam == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(result.vector, [1.0, 1.0], atol=1e-10)
    assert dense_principal_eig(A).spectral_gap_hint == pytest.approx(2.0)


def test_identity_pencil():
    identity = sp.identity(4, format='csr')
    assert symmetric_principal_eig(identity, identity).lam == pytest.approx(1.0, abs=1e-12)


def test_dense_oracle_size_limit():
    with pytest.raises(SolverError):
        dense_principal_eig(sp.identity(2001, format='csr'))


@pytest.mark.parametrize("kwargs", [
    {'tol': 0.0},
    {'max_iter': 0},
    {'shift': 'low'},
    {'linear_solver': 'qr'},
])
def test_solver_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_solver_config_from_mapping():
    cfg = SolverConfig.from_config({'tol': 1e-8, 'shift': 2.0})
    assert cfg.tol == 1e-8
    assert cfg.shift == 2.0
    assert cfg.max_iter == 10000


def test_symmetric_solver_dense_and_sparse_paths(small_grid, niche_params):
    pencil = assemble_symmetric(small_grid, niche_params)
    dense = symmetric_principal_eig(pencil)
    assert dense.lam == pytest.approx(dense_pencil_eig(pencil), abs=1e-10)
    sparse = symmetric_principal_eig(pencil, cfg=SolverConfig(dense_threshold=0))
    assert sparse.lam == pytest.approx(dense.lam, abs=1e-8)
    assert np.all(sparse.vector > 0)


def test_symmetric_solver_rejects_unsymmetric_stiffness():
    K = sp.csr_matrix(np.array([[2.0, -1.0], [0.0, 2.0]]))
    with pytest.raises(SolverError):
        symmetric_principal_eig(K, sp.identity(2, format='csr'))
