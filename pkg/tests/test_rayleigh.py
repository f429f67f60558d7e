import numpy as np
import pytest

from errors import ConfigError, SolverError
from discretization.assembly import assemble_symmetric
from discretization.grid import build_grid
from eigen.eigsolve import symmetric_principal_eig
from eigen.rayleigh import (
    DiscreteTriple, quotient, quotient_symmetric_case, quotient_single_field, pencil_field_coordinates
)

NICHE = "tanh(2*(5 - sqrt(x^2 + y^2)))"


@pytest.fixture
def niche_pencil(small_grid, niche_params):
    return assemble_symmetric(small_grid, niche_params)


def _random_triple(rng, grid, sides=(1, 2)):
    size = grid.n_road + grid.n_field
    return DiscreteTriple(rng.uniform(0.0, 1.0, grid.n_road),
                          {s: rng.uniform(0.0, 1.0, size) for s in sides}, grid)


def test_minimizer_attains_the_eigenvalue(niche_params, niche_pencil):
    result = symmetric_principal_eig(niche_pencil)
    triple = DiscreteTriple.from_vector(niche_pencil, result.vector)
    assert quotient(triple, niche_params, niche_pencil) == pytest.approx(result.lam, rel=1e-12, abs=1e-12)


def test_random_positive_triples_stay_above_minimum(rng, small_grid, niche_params, niche_pencil):
    lam = symmetric_principal_eig(niche_pencil).lam
    for _ in range(200):
        value = quotient(_random_triple(rng, small_grid), niche_params, niche_pencil)
        assert value >= lam - 1e-10 * (1 + abs(lam))


def test_quotient_is_scale_invariant(rng, small_grid, niche_params, niche_pencil):
    triple = _random_triple(rng, small_grid)
    assert quotient(triple.scaled(3.5), niche_params, niche_pencil) == pytest.approx(
        quotient(triple, niche_params, niche_pencil), rel=1e-12)


def test_quotient_builds_its_own_pencil(rng, small_grid, niche_params, niche_pencil):
    triple = _random_triple(rng, small_grid)
    assert quotient(triple, niche_params) == pytest.approx(quotient(triple, niche_params, niche_pencil), rel=1e-14)


def test_symmetric_case_matches_full_quotient(rng, small_grid, make_params):
    params = make_params(a=NICHE, mu=2.0, nu=0.5)
    size = small_grid.n_road + small_grid.n_field
    u = rng.uniform(0.0, 1.0, small_grid.n_road)
    v = rng.uniform(0.0, 1.0, size)
    full = quotient(DiscreteTriple(u, {1: v, 2: v}, small_grid), params)
    assert quotient_symmetric_case(u, v, small_grid, params) == pytest.approx(full, rel=1e-12)


def test_symmetric_case_requires_identical_sides(small_grid, make_params):
    params = make_params(a=0.5)
    params = params.with_value('d2', 2.0)
    size = small_grid.n_road + small_grid.n_field
    with pytest.raises(ConfigError):
        quotient_symmetric_case(np.ones(small_grid.n_road), np.ones(size), small_grid, params)


def test_single_field_matches_one_sided_quotient(rng, make_params):
    grid = build_grid(2.0, 0.5, sides=(1,))
    params = make_params(a=NICHE, mu=2.0, nu=0.5, sides=(1,))
    size = grid.n_road + grid.n_field
    u = rng.uniform(0.0, 1.0, grid.n_road)
    v = rng.uniform(0.0, 1.0, size)
    full = quotient(DiscreteTriple(u, {1: v}, grid), params)
    assert quotient_single_field(u, v, grid, params) == pytest.approx(full, rel=1e-12)


def test_sampled_functions(small_grid, niche_params, niche_pencil):
    lam = symmetric_principal_eig(niche_pencil).lam
    triple = DiscreteTriple.from_functions(
        small_grid,
        road=lambda x: np.exp(-x ** 2),
        field=lambda side, x, y: np.exp(-(x ** 2 + y ** 2)),
    )
    assert len(triple.v[1]) == len(pencil_field_coordinates(small_grid))
    assert quotient(triple, niche_params, niche_pencil) >= lam - 1e-10


def test_degenerate_triples(small_grid, niche_params, niche_pencil):
    size = small_grid.n_road + small_grid.n_field
    zero = DiscreteTriple(np.zeros(small_grid.n_road), {1: np.zeros(size), 2: np.zeros(size)}, small_grid)
    with pytest.raises(SolverError):
        quotient(zero, niche_params, niche_pencil)
    short = DiscreteTriple(np.ones(small_grid.n_road), {1: np.ones(3), 2: np.ones(size)}, small_grid)
    with pytest.raises(ConfigError):
        quotient(short, niche_params, niche_pencil)
