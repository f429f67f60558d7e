import numpy as np
import pytest

from discretization.grid import build_grid
from discretization.params import ProblemParams, FieldSide
from fields.coefficients import CoefficientField
from studies.common import StudyContext
from engine.compute_engine import SolveEngine

NICHE = "tanh(2*(5 - sqrt(x^2 + y^2)))"


@pytest.fixture
def make_params():
    """Factory for parameters with identical sides unless overridden."""
    def factory(a=0.0, D=1.0, c=0.0, d=1.0, field_c=0.0, mu=1.0, nu=1.0, sides=(1, 2), f=None,
                a_bound=None):
        if isinstance(a, str):
            growth = CoefficientField.from_text(a, 1.0 if a_bound is None else a_bound)
        else:
            growth = CoefficientField.constant(a)
        fields = {i: FieldSide(d=d, c=field_c, mu=mu, nu=nu, a=growth) for i in sides}
        potential = CoefficientField.from_text(f, 1.0) if f is not None else None
        return ProblemParams(D=D, c=c, fields=fields, f=potential)
    return factory


@pytest.fixture
def unit_params(make_params):
    return make_params()


@pytest.fixture
def constant_params(make_params):
    return make_params(a=0.5)


@pytest.fixture
def niche_params(make_params):
    return make_params(a=NICHE)


@pytest.fixture
def tiny_grid():
    """R = 1, h = 0.5: three road nodes and three field nodes per side (N = 9)."""
    return build_grid(1.0, 0.5)


@pytest.fixture
def small_grid():
    return build_grid(2.0, 0.5)


@pytest.fixture
def ctx():
    context = StudyContext(engine=SolveEngine(2))
    yield context
    context.engine.shutdown()


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
