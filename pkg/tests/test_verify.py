import numpy as np
import pytest

from core.errors import EmptyTrace
from core.functionals import rayleigh
from core.minimax import TraceRecord
from core.verify import (cerami_identity_check, cerami_monitor, embedding_constant, fd_gradient_check,
                         fibering_profile, norm_equivalence_check, random_fields, small_ball_negativity,
                         zero_level_decay)
from core.spectral import norm1
from tests.conftest import low_mode_field


def test_l2_embedding_constant_is_spectral(problem_k0, problem_k1):
    for p in (problem_k0, problem_k1):
        spec = p.spectral
        value = embedding_constant(spec, 2.0, restarts=2, subspace="Wplus", mesh=p.mesh)
        assert value == pytest.approx(1.0 / np.sqrt(spec.weights[spec.k:].min()), rel=1e-8)


def test_embedding_constant_bounds_samples(problem_k0, rng):
    p = problem_k0
    value = embedding_constant(p.spectral, 4.0, mesh=p.mesh)
    for u in random_fields(p.spectral, np.ones(20), rng):
        uq = p.mesh.at_quadrature(u)
        assert np.sum(np.abs(uq) ** 4 * p.mesh.weights) ** 0.25 <= value * (1.0 + 1e-9)


def test_more_restarts_never_lower_the_estimate(problem_k1):
    spec = problem_k1.spectral
    one = embedding_constant(spec, 3.0, restarts=1, subspace="Wplus")
    four = embedding_constant(spec, 3.0, restarts=4, subspace="Wplus")
    assert four >= one


@pytest.mark.parametrize("kwargs", [{"r": 0.5}, {"r": 2.0, "subspace": "Wminus"}])
def test_embedding_constant_rejects(problem_k0, kwargs):
    with pytest.raises(ValueError):
        embedding_constant(problem_k0.spectral, **kwargs)


def test_random_fields_have_the_given_norms(problem_k1, rng):
    radii = np.array([0.1, 1.0, 7.5])
    for radius, u in zip(radii, random_fields(problem_k1.spectral, radii, rng)):
        assert norm1(problem_k1.spectral, u)[2] == pytest.approx(radius)


def test_fibering_geometry(problem_k0):
    p = problem_k0
    u = p.spectral.unit_mode(0)
    profile = fibering_profile(p, u, np.zeros(p.mesh.n), 0.01, np.linspace(0.0, 100.0, 2001))
    assert profile.skipped[0] and not profile.skipped[1:].any()
    assert profile.values[1] < 0.0
    assert profile.peak_value > 0.0
    assert profile.values[-1] <= -100.0


def test_fibering_rejects_zero_direction(problem_k0):
    zero = np.zeros(problem_k0.mesh.n)
    with pytest.raises(ValueError):
        fibering_profile(problem_k0, zero, zero, 0.01, [1.0])


def test_small_ball_negativity(problem_k0):
    E = 0.01
    report = small_ball_negativity(problem_k0, E, 0.9 * np.sqrt(2 * E), samples=1000)
    assert report.asserted
    assert report.holds
    assert report.worst < 0.0
    outside = small_ball_negativity(problem_k0, E, 10.0, samples=10)
    assert not outside.asserted and outside.holds is None


def test_cerami_monitor():
    with pytest.raises(EmptyTrace):
        cerami_monitor([])
    trace = [TraceRecord(m, 1.0, 10.0 ** -m, 1.0 + 0.01 * m, 0.5) for m in range(8)]
    report = cerami_monitor(trace)
    assert report.bounded and report.lq_away_from_zero
    assert report.final_scaled_residual == pytest.approx(1.07e-7)
    assert report.findings == []

    trace.append(TraceRecord(8, 1.0, 1e-9, 1e6, 1e-6))
    report = cerami_monitor(trace)
    assert not report.bounded and not report.lq_away_from_zero
    assert len(report.findings) == 2


def test_cerami_identity_is_an_equality_for_pure_powers(problem_k1, rng):
    for _ in range(3):
        u = low_mode_field(problem_k1.spectral, rng, scale=2.0)
        check = cerami_identity_check(problem_k1, u, 0.05)
        assert check.holds
        assert check.lhs == pytest.approx(check.rhs, rel=1e-8, abs=1e-8)


def test_zero_level_decay(problem_k0):
    u = problem_k0.spectral.unit_mode(0)
    values = zero_level_decay(problem_k0, u, [1e-1, 1e-2, 1e-3, 1e-4])
    assert np.all(values > 0.0)
    assert np.all(np.diff(values) < 0.0)
    assert values[-1] < 0.1


def test_norm_equivalence_check(problem_k1):
    check = norm_equivalence_check(problem_k1, samples=50)
    assert check.holds
    assert check.c0 <= check.min_ratio <= check.max_ratio <= check.c1 * (1.0 + 1e-10)


def test_gradient_check_arguments(problem_k0):
    u = problem_k0.spectral.unit_mode(0)
    with pytest.raises(ValueError):
        fd_gradient_check(problem_k0, "rayleigh_trunc", u, u)
    with pytest.raises(ValueError):
        fd_gradient_check(problem_k0, "hessian", u, u)
    with pytest.raises(ValueError):
        fd_gradient_check(problem_k0, "energy", u, u, h=0.0)


def test_solution_passes_cerami_monitor(solution_k0):
    report = cerami_monitor(solution_k0.trace)
    assert report.bounded
    assert report.final_scaled_residual <= 1e-6
