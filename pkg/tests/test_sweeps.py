import pytest

from errors import ConfigError
from discretization.grid import build_grid
from fields.coefficients import CoefficientField
from studies.sweeps import (
    sweep, lipschitz_witness, geometric_ladder, check_condition_strict, strict_monotonicity_probe,
    expected_direction, NON_DECREASING, NON_INCREASING
)

NEAR_BUMP = "0.5*max(0, 1 - x^2 - y^2)"
FAR_BUMP = "0.5*max(0, 1 - (x - 14.5)^2 - y^2)"


@pytest.fixture(scope='module')
def niche_grid():
    return build_grid(16.0, 0.5)


def test_expected_directions(unit_params, make_params):
    assert expected_direction(unit_params, 'D') == NON_DECREASING
    assert expected_direction(unit_params, 'd2') == NON_DECREASING
    assert expected_direction(unit_params, 'a_shift1') == NON_INCREASING
    assert expected_direction(unit_params, 'mu1') is None
    assert expected_direction(make_params(c=1.0), 'D') is None


def test_growth_shift_moves_one_side(constant_params):
    shifted = constant_params.with_value('a_shift1', 0.2)
    assert shifted.side(1).a.values(0.0, 1.0) == pytest.approx(0.7)
    assert shifted.side(2).a.values(0.0, 1.0) == pytest.approx(0.5)
    assert shifted.side(1).a.declared_bound == pytest.approx(0.7)


@pytest.mark.parametrize("path", ['D', 'd1', 'd2'])
def test_diffusion_sweep_is_non_decreasing(ctx, small_grid, constant_params, path):
    report = sweep(constant_params, path, [0.5, 1.0, 2.0, 4.0], small_grid, ctx)
    assert report.monotone_ok
    assert report.direction == NON_DECREASING
    assert all(q >= -1e-8 for q in report.difference_quotients)
    assert len(report.rows()) == 4
    assert ctx.verifier.all_passed


def test_growth_shift_sweep_is_non_increasing(ctx, small_grid, constant_params):
    report = sweep(constant_params, 'a_shift1', [0.0, 0.1, 0.2], small_grid, ctx)
    assert report.monotone_ok
    assert report.lambdas[0] > report.lambdas[-1]
    assert report.max_difference_quotient <= 1.0 + 1e-8


def test_drift_sweep_is_only_reported(ctx, small_grid, make_params):
    report = sweep(make_params(c=1.0), 'D', [1.0, 2.0], small_grid, ctx)
    assert report.monotone_ok is None
    assert 'monotone_ok' not in report.to_dict()
    assert ctx.verifier.get_verification_history() == []


@pytest.mark.parametrize("path, values", [
    ('kappa', [1.0, 2.0]),
    ('D', [1.0]),
    ('D', [2.0, 1.0]),
])
def test_sweep_rejects(ctx, small_grid, unit_params, path, values):
    with pytest.raises(ConfigError):
        sweep(unit_params, path, values, small_grid, ctx)


def test_geometric_ladder():
    assert geometric_ladder(1.0, 2.0, 4) == [1.0, 2.0, 4.0, 8.0]
    with pytest.raises(ConfigError):
        geometric_ladder(1.0, 1.0, 4)


def test_lipschitz_witness(ctx, small_grid, constant_params):
    witness = lipschitz_witness(constant_params, 'd1', small_grid, 1.0, 1.01, 5, ctx)
    assert len(witness['refined']['values']) == 9
    assert witness['coarse_max'] > 0
    assert witness['refined']['values'][-1] == pytest.approx(1.01 ** 4)
    assert 0 <= witness['relative_variation'] < 0.5
    assert witness['bounded']
    assert ctx.verifier.all_passed


def test_lipschitz_witness_flags_an_unbounded_slope(ctx, small_grid, constant_params):
    witness = lipschitz_witness(constant_params, 'd1', small_grid, 1.0, 2.0, 5, ctx, max_variation=0.0)
    assert not witness['bounded']
    assert [f.name for f in ctx.verifier.failures()] == ['lipschitz_bounded']


def test_condition_fails_for_constant_growth(ctx, small_grid, constant_params):
    lam = ctx.solve(constant_params, small_grid.R, small_grid.h).lam
    condition = check_condition_strict(constant_params, [small_grid], lam)
    assert not condition
    assert condition.reasons


def test_condition_holds_for_a_niche(ctx, niche_grid, niche_params):
    lam = ctx.solve(niche_params, niche_grid.R, niche_grid.h).lam
    condition = check_condition_strict(niche_params, [build_grid(8.0, 0.5), niche_grid], lam)
    assert lam < 0
    assert condition.holds
    assert condition.probe_radius == 8.0
    assert condition.to_dict()['outer_sups']['1'] < -0.99


def test_strict_probe_near_and_far(ctx, niche_grid, niche_params):
    near = strict_monotonicity_probe(niche_params, CoefficientField.from_text(NEAR_BUMP, 0.5), niche_grid, ctx)
    assert near.asserted
    assert near.margin > 1e-8
    far = strict_monotonicity_probe(niche_params, CoefficientField.from_text(FAR_BUMP, 0.5), niche_grid, ctx)
    assert not far.asserted
    assert 'bump support exceeds R/2' in far.notes
    assert near.margin > far.margin
    assert ctx.verifier.all_passed


def test_strict_probe_zero_bump(ctx, small_grid, niche_params):
    result = strict_monotonicity_probe(niche_params, CoefficientField.from_text("0", 0.0), small_grid, ctx)
    assert result.margin == 0.0
    assert not result.asserted


def test_strict_probe_rejects_negative_bump(ctx, small_grid, niche_params):
    with pytest.raises(ConfigError):
        strict_monotonicity_probe(niche_params, CoefficientField.from_text("-1", 1.0), small_grid, ctx)
