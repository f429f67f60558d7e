import math

import numpy as np
import pytest

from errors import ConditionNotVerifiedError, ConfigError
from discretization.grid import build_grid
from studies.decay import decay_envelope, envelope_constants, envelope_values, rho_ladder


@pytest.fixture(scope='module')
def niche_grid():
    return build_grid(16.0, 0.5)


@pytest.fixture
def niche_point(ctx, niche_grid, niche_params):
    return ctx.solve(niche_params, niche_grid.R, niche_grid.h)


def test_envelope_constants(unit_params):
    alpha, gamma = envelope_constants(unit_params, 0.5)
    assert gamma == pytest.approx({1: 2 / 3, 2: 2 / 3})
    assert alpha == pytest.approx(math.sqrt(1 / 3))
    alpha, gamma = envelope_constants(unit_params, 0.0)
    assert alpha == 0.0
    assert gamma[1] == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        envelope_constants(unit_params, -1.0)


def test_envelope_values_without_decay(small_grid):
    values = envelope_values(small_grid, 0.0, 0.0, {1: 0.5, 2: 0.25}, 2.0)
    road, fields = small_grid.split(values)
    np.testing.assert_allclose(road, 2.0)
    np.testing.assert_allclose(fields[1], 1.0)
    np.testing.assert_allclose(fields[2], 0.5)


def test_rho_ladder():
    assert rho_ladder(16.0, 0.5) == [2.0, 4.0, 8.0]
    assert rho_ladder(2.0, 0.5) == [1.0]


def test_niche_eigenfunction_is_dominated(ctx, niche_point, niche_params):
    envelope = decay_envelope(niche_params, niche_point, rhos=[4.0, 6.0], ctx=ctx)
    assert envelope.feasible
    assert envelope.rho in (4.0, 6.0)
    assert envelope.max_violation == 0.0
    assert envelope.min_slack >= 0.0
    assert envelope.nodes_checked == niche_point.grid.N
    assert envelope.worst_node is None
    assert ctx.verifier.all_passed
    payload = envelope.to_dict()
    assert payload['gamma1'] == payload['gamma2']


def test_refuses_without_the_condition(ctx, small_grid, constant_params):
    point = ctx.solve(constant_params, small_grid.R, small_grid.h)
    with pytest.raises(ConditionNotVerifiedError) as excinfo:
        decay_envelope(constant_params, point, ctx=ctx)
    assert excinfo.value.kind == 'condition'
    assert excinfo.value.details['reasons']


def test_refuses_with_drift(ctx, small_grid, make_params):
    params = make_params(a=0.5, c=1.0)
    point = ctx.solve(params, small_grid.R, small_grid.h)
    with pytest.raises(ConditionNotVerifiedError):
        decay_envelope(params, point, ctx=ctx)


@pytest.mark.parametrize("rhos", [[16.0], [4.3]])
def test_rejects_bad_radii(ctx, niche_point, niche_params, rhos):
    with pytest.raises(ConfigError):
        decay_envelope(niche_params, niche_point, rhos=rhos, ctx=ctx)
