import numpy as np
import pytest

from errors import ConfigError, GridError
from studies.convergence import converge_in_R, fit_power_law


def test_lambda_decreases_with_radius(ctx, constant_params):
    report = converge_in_R(constant_params, [2.0, 4.0, 8.0], 0.5, ctx)
    assert report.radii == [2.0, 4.0, 8.0]
    assert np.all(np.diff(report.lambdas) < 0)
    assert report.monotone_violation == 0.0
    assert min(report.lambdas) > -0.5
    assert report.last_change == pytest.approx(report.lambdas[-2] - report.lambdas[-1])
    assert ctx.verifier.all_passed


def test_rows_follow_the_ladder(ctx, unit_params):
    report = converge_in_R(unit_params, [1.0, 2.0], 0.5, ctx)
    rows = report.rows()
    assert [row['parameter_or_radius'] for row in rows] == [1.0, 2.0]
    assert [row['index'] for row in rows] == [0, 1]
    assert set(rows[0]) == {'index', 'parameter_or_radius', 'lambda', 'residual', 'iterations'}
    payload = report.to_dict()
    assert 'extrapolated_limit' not in payload
    assert payload['monotone_tolerance'] == pytest.approx(10.0 * 0.25 * max(1.0, max(abs(l) for l in report.lambdas)))


def test_single_radius(ctx, unit_params):
    report = converge_in_R(unit_params, [2.0], 0.5, ctx)
    assert report.last_change is None
    assert report.monotone_violation == 0.0


@pytest.mark.parametrize("radii", [[], [4.0, 2.0], [2.0, 2.0]])
def test_bad_ladders(ctx, unit_params, radii):
    with pytest.raises(ConfigError):
        converge_in_R(unit_params, radii, 0.5, ctx)


def test_failure_keeps_partial_results(ctx, unit_params):
    with pytest.raises(GridError) as excinfo:
        converge_in_R(unit_params, [2.0, 4.0, 4.3], 0.5, ctx)
    details = excinfo.value.details
    assert details['failed_radius'] == 4.3
    assert details['partial']['radii'] == [2.0, 4.0]


def test_power_law_fit_recovers_limit():
    radii = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    lambdas = -0.5 + 3.0 * radii ** -2.0
    fit = fit_power_law(radii, lambdas)
    assert fit['limit'] == pytest.approx(-0.5, abs=1e-6)
    assert fit['exponent'] == pytest.approx(2.0, rel=1e-4)


def test_power_law_fit_needs_three_points():
    assert fit_power_law([1.0, 2.0], [0.5, 0.4]) is None


@pytest.mark.slow
def test_constant_growth_squeeze_at_large_radius(ctx, constant_params):
    report = converge_in_R(constant_params, [5.0, 10.0, 20.0, 40.0], 0.25, ctx)
    assert np.all(np.diff(report.lambdas) < 0)
    assert report.monotone_violation <= 1e-3
    assert abs(report.lambdas[-1] - (-0.5)) <= 0.02
    assert report.lambdas[-1] > -0.5


@pytest.mark.slow
def test_zero_growth_limit_is_zero(ctx, unit_params):
    report = converge_in_R(unit_params, [10.0, 20.0, 40.0], 0.5, ctx)
    assert np.all(np.diff(report.lambdas) < 0)
    assert 0.0 < report.lambdas[-1] <= 0.02
