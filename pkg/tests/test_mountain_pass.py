import numpy as np
import pytest

from core.errors import EndpointNotFound, GeometryBroken, MaxIter
from core.functionals import energy, rayleigh, rayleigh_trunc
from core.minimax import SolverOptions, setup_linking, verify_linking_values
from core.mountain_pass import find_endpoint, initial_path, path_maximum, respline, solve_mountain_pass_path


def _arclengths(spec, piece):
    coeffs = piece @ spec.mass @ spec.eigenvectors
    return np.sqrt(np.sum(spec.weights * np.diff(coeffs, axis=0) ** 2, axis=1))


def test_initial_path(problem_k0):
    u1 = 5.0 * problem_k0.spectral.unit_mode(0)
    path = initial_path(u1, 9)
    assert path.shape == (9, problem_k0.mesh.n)
    assert not np.any(path[0])
    assert np.array_equal(path[-1], u1)


def test_respline_keeps_the_moved_vertex(problem_k0, rng):
    spec = problem_k0.spectral
    path = initial_path(4.0 * spec.unit_mode(0), 11)
    path[4] += 0.5 * spec.unit_mode(1)
    path[7] += 0.1 * rng.standard_normal(spec.size)
    new = respline(spec, path, 4)
    assert new.shape == path.shape
    assert np.array_equal(new[4], path[4])
    assert np.array_equal(new[0], path[0]) and np.array_equal(new[-1], path[-1])
    # chords never exceed the arclength of the polyline they sample
    assert _arclengths(spec, new[:5]).sum() <= _arclengths(spec, path[:5]).sum() * (1.0 + 1e-12)


def test_respline_of_a_straight_path_is_uniform(problem_k0):
    spec = problem_k0.spectral
    u1 = 3.0 * spec.unit_mode(0)
    path = np.array([t * u1 for t in (0.0, 0.1, 0.15, 0.5, 0.9, 1.0)])
    new = respline(spec, path, 3)
    lengths = _arclengths(spec, new[:4])
    assert np.allclose(lengths, lengths[0], rtol=1e-10)


def test_endpoint_search(problem_k0):
    direction = problem_k0.spectral.unit_mode(0)
    t, u1 = find_endpoint(problem_k0, direction, 0.01, 1.0, 1e4)
    assert rayleigh(problem_k0, u1, 0.01) < 0.0
    assert t > 1.0
    with pytest.raises(EndpointNotFound):
        find_endpoint(problem_k0, direction, 0.01, 1.0, 0.5)


def test_initial_path_crosses_the_sphere_above_the_infimum(problem_k0, constants_k0):
    p, E = problem_k0, 0.01
    geometry = setup_linking(p, E, constants=constants_k0)
    values = verify_linking_values(p, geometry.frame, E, geometry.tp)
    r = constants_k0.r_k_lambda
    t_end, u1 = find_endpoint(p, p.spectral.unit_mode(0), E, r, 1024.0 * r)
    assert t_end >= r
    i, u, value = path_maximum(p, initial_path(u1, 33), E, geometry.tp)
    assert 0 < i < 32
    assert value >= values.a - 1e-9
    assert value == pytest.approx(rayleigh_trunc(p, u, E, geometry.tp))


def test_needs_lambda_below_first_eigenvalue(problem_k1):
    with pytest.raises(GeometryBroken):
        solve_mountain_pass_path(problem_k1, 0.01)


@pytest.mark.slow
def test_agrees_with_local_minimax(problem_k0, constants_k0, solution_k0):
    result = solve_mountain_pass_path(problem_k0, 0.01, constants=constants_k0)
    assert result.converged
    assert result.algo == "mpa"
    assert abs(energy(problem_k0, result.u, result.mu) - 0.01) <= 1e-8
    assert result.mu == pytest.approx(solution_k0.mu, rel=1e-6)


def test_iteration_budget_outside_the_newton_basin(problem_k0, constants_k0):
    with pytest.raises(MaxIter):
        solve_mountain_pass_path(problem_k0, 0.01, opts=SolverOptions(max_iter=0, newton_basin=1e-12),
                                 constants=constants_k0)
