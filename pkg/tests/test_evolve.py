import numpy as np
import pytest
import scipy.sparse as sp

from errors import ConfigError, SolverError
from discretization.assembly import assemble
from discretization.grid import build_grid
from dynamics.evolve import (
    EvolveConfig, Trajectory, evolve, decay_rate, rate_check, step_implicit, initial_state
)
from eigen.eigsolve import principal_eig
from engine.verification import VerificationEngine


def test_zero_operator_is_identity():
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(step_implicit(x, 0.1, sp.csr_matrix((3, 3))), x)


def test_step_keeps_positive_data_positive(rng, small_grid, niche_params):
    system = assemble(small_grid, niche_params)
    x = rng.uniform(0.1, 1.0, small_grid.N)
    assert np.all(step_implicit(x, 0.05, system) > 0)


def test_step_is_first_order_consistent(tiny_grid, unit_params):
    system = assemble(tiny_grid, unit_params)
    x = np.linspace(1.0, 2.0, tiny_grid.N)
    errors = []
    for dt in (1e-3, 5e-4):
        explicit = x - dt * (system.A @ x)
        errors.append(np.max(np.abs(step_implicit(x, dt, system) - explicit)))
    assert 3.5 < errors[0] / errors[1] < 4.5


def test_decay_rate_of_exact_exponential():
    times = np.arange(50) * 0.1
    traj = Trajectory(list(times), list(np.exp(-0.7 * times)), np.zeros(1))
    assert decay_rate(traj, 0.5) == pytest.approx(0.7, abs=1e-10)


def test_decay_rate_needs_enough_snapshots():
    traj = Trajectory([0.0, 0.1, 0.2, 0.3], [1.0, 0.9, 0.8, 0.7], np.zeros(1))
    with pytest.raises(SolverError):
        decay_rate(traj, 0.0)


def test_evolution_keeps_the_eigenvector_shape(small_grid, niche_params):
    system = assemble(small_grid, niche_params)
    eig = principal_eig(system)
    traj = evolve(system, eig.vector, 0.01, 100)
    shape = traj.state_final / np.max(traj.state_final)
    assert np.max(np.abs(shape - eig.vector)) <= 1e-6
    assert len(traj.times) == 101


def test_snapshot_spacing(tiny_grid, unit_params):
    traj = evolve(assemble(tiny_grid, unit_params), np.ones(tiny_grid.N), 0.01, 25, snapshot_every=10)
    assert traj.times == pytest.approx([0.0, 0.1, 0.2, 0.25])


def test_rate_from_eigenvector_start(constant_params):
    system = assemble(build_grid(10.0, 0.5), constant_params)
    eig = principal_eig(system)
    report = rate_check(system, eig, EvolveConfig(dt=0.001, steps=200, burn_in=0.0, initial='eigenvector'))
    assert report['relative_error'] <= 1e-3



def test_rate_check_records_passing_checks(constant_params):
    system = assemble(build_grid(4.0, 0.5), constant_params)
    eig = principal_eig(system)
    verifier = VerificationEngine()
    report = rate_check(system, eig, EvolveConfig(dt=0.01, steps=50, initial='eigenvector'), verifier)
    checks = {c['name']: c['passed'] for c in verifier.get_verification_history()}
    assert checks == {'evolve_rate': True, 'evolve_positivity': True, 'evolve_shape_drift': True}
    assert report['min_component'] > 0
    assert report['shape_drift'] <= 1e-6


def test_coarse_time_step_fails_the_rate_check(constant_params):
    system = assemble(build_grid(4.0, 0.5), constant_params)
    eig = principal_eig(system)
    verifier = VerificationEngine()
    report = rate_check(system, eig, EvolveConfig(dt=1.0, steps=24, burn_in=0.0, initial='eigenvector'), verifier)
    # implicit Euler decays like log(1 + dt*lambda) / dt
    assert report['rate'] == pytest.approx(np.log1p(eig.lam), rel=1e-6)
    assert report['relative_error'] > 0.02
    assert [f.name for f in verifier.failures()] == ['evolve_rate']


def test_flat_start_has_no_shape_check(tiny_grid, unit_params):
    system = assemble(tiny_grid, unit_params)
    verifier = VerificationEngine()
    report = rate_check(system, principal_eig(system), EvolveConfig(dt=0.01, steps=20), verifier)
    assert 'shape_drift' not in report
    assert 'evolve_shape_drift' not in [c['name'] for c in verifier.get_verification_history()]
    assert report['min_component'] > 0

@pytest.mark.slow
def test_rate_from_flat_start(constant_params):
    system = assemble(build_grid(10.0, 0.5), constant_params)
    eig = principal_eig(system)
    report = rate_check(system, eig, EvolveConfig(dt=0.02, steps=5000, burn_in=0.5))
    assert report['relative_error'] <= 0.02
    assert report['lambda_ref'] == eig.lam


@pytest.mark.parametrize("kwargs", [
    {'dt': 0.0},
    {'steps': 0},
    {'burn_in': 1.0},
    {'initial': 'random'},
])
def test_evolve_config_validation(kwargs):
    with pytest.raises(ConfigError):
        EvolveConfig(**kwargs)


def test_initial_states(small_grid):
    assert np.all(initial_state(small_grid, 'ones') == 1.0)
    bump = initial_state(small_grid, 'bump')
    assert bump.shape == (small_grid.N,)
    assert bump[small_grid.n_road // 2] == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        initial_state(small_grid, 'eigenvector')
