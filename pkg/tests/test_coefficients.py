import numpy as np
import pytest

from errors import BoundViolationError, ConfigError, GridError
from fields.coefficients import CoefficientField, sup_on_region, INNER, OUTER


def test_constant_field_declares_its_magnitude():
    field = CoefficientField.constant(-0.5)
    assert field.declared_bound == 0.5
    np.testing.assert_array_equal(field.values(np.array([0.0, 3.0]), np.array([1.0, 2.0])), [-0.5, -0.5])
    assert field.is_x_only


def test_from_text_accepts_numbers():
    field = CoefficientField.from_text(2, 2.0)
    assert field.values(1.0, 1.0) == 2.0


@pytest.mark.parametrize("text, bound", [(True, 1.0), ("x", -1.0), ("x", None)])
def test_from_text_rejects_bad_input(text, bound):
    with pytest.raises(ConfigError):
        CoefficientField.from_text(text, bound)


def test_check_bound_reports_worst_point():
    field = CoefficientField.from_text("x", 1.0)
    x = np.array([0.0, 0.5, 2.0])
    with pytest.raises(BoundViolationError) as excinfo:
        field.check_bound(x, np.zeros(3), label='field1.a_expr')
    assert excinfo.value.kind == 'bound'
    assert excinfo.value.details['x'] == 2.0
    assert excinfo.value.key_path == 'field1.a_expr'


def test_check_bound_passes_on_equality():
    CoefficientField.from_text("sin(x)", 1.0).check_bound(np.array([np.pi / 2]), np.array([0.0]))


def test_shifted_and_plus():
    base = CoefficientField.from_text("x*y", 4.0)
    shifted = base.shifted(-0.25)
    assert shifted.values(1.0, 2.0) == pytest.approx(1.75)
    assert shifted.declared_bound == pytest.approx(4.25)
    total = base.plus(CoefficientField.constant(1.0))
    assert total.values(2.0, 2.0) == pytest.approx(5.0)
    assert not total.is_x_only


def test_sup_on_region(small_grid):
    field = CoefficientField.from_text("x", 2.0)
    assert sup_on_region(field, small_grid, OUTER, 1.0) == pytest.approx(2.0)
    assert sup_on_region(field, small_grid, INNER, 1.0) == pytest.approx(0.5)


def test_sup_on_region_rejects_bad_radius(small_grid):
    field = CoefficientField.constant(1.0)
    with pytest.raises(GridError):
        sup_on_region(field, small_grid, OUTER, 3.0)
    with pytest.raises(GridError):
        sup_on_region(field, small_grid, INNER, 0.0)
