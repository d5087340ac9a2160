import math

import numpy as np
import pytest

from core.errors import EnergyOutOfRange, GeometryBroken, InvalidParameters, MaxIterInner, MaxIterOuter, NoGap
from core.functionals import TruncationParams, build_problem, discrete_eigenvalues, energy, rayleigh, rayleigh_trunc
from core.mesh import build_mesh
from core.minimax import (Constants, SaddleResult, SolverOptions, build_linking_frame, estimate_constants,
                          merge_results, peak_selection, setup_linking, solve_saddle, start_directions,
                          verify_linking_values)
from core.nonlinearity import pure_power
from core.spectral import norm1, split
from core.verify import fibering_profile


def test_closed_form_constants():
    constants = Constants.from_bounds(C1=1.0, epsilon=0.25, C2=0.25, gamma=4.0)
    assert constants.r_k_lambda == pytest.approx(math.sqrt(0.75), abs=1e-12)
    assert constants.E_k_lambda == pytest.approx(0.140625, abs=1e-12)
    r = constants.r_k_lambda
    assert constants.f(r) == pytest.approx(constants.E_k_lambda)
    assert constants.f(0.99 * r) < constants.E_k_lambda
    assert constants.f(1.01 * r) < constants.E_k_lambda


def test_constants_scan_agrees_with_closed_form(constants_k0):
    r = np.linspace(0.0, 3.0 * constants_k0.r_k_lambda, 300001)
    i = int(np.argmax(constants_k0.f(r)))
    assert r[i] == pytest.approx(constants_k0.r_k_lambda, rel=1e-4)
    assert constants_k0.f(r[i]) == pytest.approx(constants_k0.E_k_lambda, rel=1e-9)


@pytest.mark.parametrize("kwargs", [
    {"C1": 1.0, "epsilon": 1.0, "C2": 0.25, "gamma": 4.0},
    {"C1": 1.0, "epsilon": 0.25, "C2": 0.0, "gamma": 4.0},
    {"C1": 1.0, "epsilon": 0.25, "C2": 0.25, "gamma": 2.0},
])
def test_invalid_bounds(kwargs):
    with pytest.raises(InvalidParameters):
        Constants.from_bounds(**kwargs)


def test_energy_range_and_delta():
    constants = Constants.from_bounds(C1=1.0, epsilon=0.25, C2=0.25, gamma=4.0)
    for E in (0.0, -1.0, constants.E_k_lambda, 1.0):
        with pytest.raises(EnergyOutOfRange):
            constants.check_energy(E)
    constants.check_energy(0.1)
    assert constants.delta_E(0.1) > 0.0
    assert constants.delta_E(constants.E_k_lambda) == pytest.approx(0.0)
    assert Constants.rho_est(0.02) == pytest.approx(0.2)


def test_estimated_constants_with_given_embedding(problem_k0):
    constants = estimate_constants(problem_k0, embed=lambda r: 1.0)
    gap = problem_k0.spectral.eigenvalues[0] - problem_k0.lam
    assert constants.C1 == pytest.approx(1.0 / gap)
    assert constants.epsilon == pytest.approx(gap / 4.0)
    assert constants.C2 == pytest.approx(0.25)
    assert constants.r_k_lambda == pytest.approx(math.sqrt(0.75))


def test_estimated_constants_magnitudes(constants_k0):
    assert 1.0 < constants_k0.r_k_lambda < 10.0
    assert 0.1 < constants_k0.E_k_lambda < 10.0


def test_no_gap_above_the_spectrum():
    mesh = build_mesh(4)
    p = build_problem(mesh, 1.5 * discrete_eigenvalues(mesh)[-1], 1.5, pure_power(4.0))
    with pytest.raises(NoGap):
        estimate_constants(p, embed=lambda r: 1.0)


def test_frame_validation(problem_k1):
    spec = problem_k1.spectral
    with pytest.raises(GeometryBroken):
        build_linking_frame(spec, 1, T=1.0, r_k_lambda=2.0)
    with pytest.raises(ValueError):
        build_linking_frame(spec, 0, T=4.0, r_k_lambda=1.0)


def test_frame_boundaries(problem_k0, problem_k1):
    frame = build_linking_frame(problem_k0.spectral, 0, T=4.0, samples=5, r_k_lambda=1.0)
    assert frame.boundary_c() == []
    ends = frame.boundary_d()
    assert len(ends) == 2
    assert norm1(problem_k0.spectral, ends[1])[2] == pytest.approx(4.0)

    frame = build_linking_frame(problem_k1.spectral, 1, T=4.0, samples=5, r_k_lambda=1.0)
    assert frame.minus_sphere.shape == (2, problem_k1.mesh.n)
    assert len(frame.boundary_c()) == 5 * 2
    assert len(frame.boundary_d()) == 2 * 5 * 2
    # u_bar lies in W+ with unit norm
    assert norm1(problem_k1.spectral, frame.u_bar_plus)[1] == pytest.approx(0.0, abs=1e-12)


def test_linking_values(problem_k0, constants_k0, problem_k1, constants_k1):
    for p, constants in ((problem_k0, constants_k0), (problem_k1, constants_k1)):
        E = 0.2 * constants.E_k_lambda
        geometry = setup_linking(p, E, constants=constants)
        values = verify_linking_values(p, geometry.frame, E, geometry.tp)
        assert values.linked
        assert values.b <= 0.0 < values.a
        assert geometry.frame.T > constants.r_k_lambda


def test_small_frame_breaks_linking(problem_k0, constants_k0):
    E = 0.2 * constants_k0.E_k_lambda
    tp = TruncationParams(0.5 * min(constants_k0.r_k_lambda, math.sqrt(2 * E)))
    r = constants_k0.r_k_lambda
    frame = build_linking_frame(problem_k0.spectral, 0, T=1.01 * r, r_k_lambda=r)
    with pytest.raises(GeometryBroken) as info:
        verify_linking_values(problem_k0, frame, E, tp)
    assert "increase T" in str(info.value)
    values = verify_linking_values(problem_k0, frame, E, tp, raise_on_failure=False)
    assert not values.linked


def test_peak_selection_finds_the_fibering_maximum(problem_k0, constants_k0):
    E = 0.01
    geometry = setup_linking(problem_k0, E, constants=constants_k0)
    frame = geometry.frame
    peak = peak_selection(problem_k0, frame, frame.u_bar_plus, E, geometry.tp)
    profile = fibering_profile(problem_k0, frame.u_bar_plus, np.zeros(problem_k0.mesh.n), E,
                               np.linspace(0.0, frame.T, 2001))
    assert peak.value >= profile.peak_value - 1e-9
    assert peak.coords[-1] == pytest.approx(profile.peak_t, abs=2 * frame.T / 2000)


def test_peak_selection_accepts_a_stalled_search_at_the_peak(problem_k0, constants_k0):
    E = 0.01
    geometry = setup_linking(problem_k0, E, constants=constants_k0)
    frame, tp = geometry.frame, geometry.tp
    peak = peak_selection(problem_k0, frame, frame.u_bar_plus, E, tp)
    # a gradient tolerance below rounding cannot be met from the converged peak
    again = peak_selection(problem_k0, frame, frame.u_bar_plus, E, tp, warm=peak.coords,
                           tol_inner=1e-16, max_inner=5000)
    assert again.value == pytest.approx(peak.value, rel=1e-10)
    assert again.grad_norm <= 1e-6 * (1.0 + abs(again.value))


def test_peak_selection_budget(problem_k0, constants_k0):
    E = 0.01
    geometry = setup_linking(problem_k0, E, constants=constants_k0)
    with pytest.raises(MaxIterInner) as info:
        peak_selection(problem_k0, geometry.frame, geometry.frame.u_bar_plus, E, geometry.tp,
                       tol_inner=1e-14, max_inner=1)
    assert info.value.witness["iterations"] >= 1


def test_peak_selection_on_a_grid_for_k1(problem_k1, constants_k1):
    p = problem_k1
    E = 0.2 * constants_k1.E_k_lambda
    geometry = setup_linking(p, E, constants=constants_k1)
    frame, tp = geometry.frame, geometry.tp
    v = frame.u_bar_plus
    e1 = p.spectral.unit_mode(0)
    peak = peak_selection(p, frame, v, E, tp)
    assert peak.coords.shape == (2,)
    assert peak.coords[-1] > 0.0

    s_grid = np.linspace(-frame.T, frame.T, 101)
    t_grid = np.linspace(0.0, frame.T, 51)
    values = np.array([[rayleigh_trunc(p, s * e1 + t * v, E, tp) for t in t_grid] for s in s_grid])
    assert peak.value >= values.max() - 1e-9
    assert peak.value == pytest.approx(rayleigh_trunc(p, peak.coords[0] * e1 + peak.coords[1] * v, E, tp))


def test_options_from_config():
    opts = SolverOptions.from_config({"tol_grad": 1e-7, "k_check": 3, "algo": "lmm"})
    assert opts.tol_grad == 1e-7
    assert opts.multi_start == 1


def _result(mu, residual, converged):
    return SaddleResult(u=np.zeros(3), mu=mu, E_target=0.1, E_achieved=0.1, dual_residual=residual,
                        norm1=1.0, iterations=1, converged=converged, trace=[])


def test_merge_results():
    best = merge_results([_result(1.0, 1e-12, True), _result(2.0, 1e-11, True), _result(5.0, 1.0, False)])
    assert best.mu == 1.0
    best = merge_results([_result(1.0, 1e-12, True), _result(2.0, 1e-12, True)])
    assert best.mu == 2.0
    best = merge_results([_result(1.0, 1e-3, False), _result(2.0, 1e-2, False)])
    assert best.mu == 1.0
    best = merge_results([_result(1.0, 1e-3, False), _result(0.5, 1e-9, True)])
    assert best.mu == 0.5


def test_start_directions(problem_k1):
    spec = problem_k1.spectral
    directions = start_directions(spec, 5, seed=3)
    assert len(directions) == 5
    for d in directions:
        plus, minus, total = norm1(spec, d)
        assert total == pytest.approx(1.0)
        assert minus == pytest.approx(0.0, abs=1e-12)


def test_energy_outside_range(problem_k0, constants_k0):
    with pytest.raises(EnergyOutOfRange):
        solve_saddle(problem_k0, constants_k0.E_k_lambda * 1.1, constants=constants_k0)


def test_truncation_radius_too_large(problem_k0, constants_k0):
    with pytest.raises(GeometryBroken):
        solve_saddle(problem_k0, 0.01, tp=TruncationParams(1.0), constants=constants_k0)


def test_solution_at_prescribed_energy(problem_k0, solution_k0):
    p, result = problem_k0, solution_k0
    assert result.converged
    assert result.mu > 0.0
    assert result.dual_residual <= 1e-10
    assert abs(energy(p, result.u, result.mu) - 0.01) <= 1e-8
    assert abs(rayleigh(p, result.u, 0.01) - result.mu) <= 1e-8
    assert result.norm1 > result.rho
    # ground state: one sign
    assert abs(result.u.sum()) == pytest.approx(np.abs(result.u).sum())


def test_solution_lies_above_the_sphere_infimum(problem_k0, constants_k0, solution_k0):
    p, result = problem_k0, solution_k0
    geometry = setup_linking(p, 0.01, constants=constants_k0)
    values = verify_linking_values(p, geometry.frame, 0.01, geometry.tp)
    assert result.rho == geometry.tp.rho
    assert result.mu >= values.a - 1e-8
    # the cut-off is inactive at the critical point
    assert result.norm1 >= result.rho
    tp = TruncationParams(result.rho)
    assert rayleigh_trunc(p, result.u, 0.01, tp) == pytest.approx(rayleigh(p, result.u, 0.01), rel=1e-14)


def test_solution_trace(solution_k0):
    trace = solution_k0.trace
    assert trace[0].iteration == 0
    assert trace[-1].residual < trace[0].residual
    summary = solution_k0.summary()
    assert "u" not in summary and "trace" not in summary
    assert summary["algo"] == "lmm"


def test_multi_start_is_deterministic(problem_k0, constants_k0):
    opts = SolverOptions(multi_start=3, seed=7)
    first = solve_saddle(problem_k0, 0.01, opts=opts, constants=constants_k0)
    second = solve_saddle(problem_k0, 0.01, opts=opts, constants=constants_k0)
    assert first.mu == second.mu
    assert np.array_equal(first.u, second.u)


@pytest.mark.slow
def test_linking_solution_for_k1(problem_k1, constants_k1):
    p = problem_k1
    E = 0.2 * constants_k1.E_k_lambda
    geometry = setup_linking(p, E, constants=constants_k1)
    values = verify_linking_values(p, geometry.frame, E, geometry.tp)
    assert values.b <= 0.0 < values.a
    result = solve_saddle(p, E, geometry.tp, constants=constants_k1, frame=geometry.frame)
    assert result.converged
    assert result.k == 1
    assert result.mu >= values.a - 1e-8
    assert rayleigh_trunc(p, result.u, E, geometry.tp) == pytest.approx(result.mu, abs=1e-8)
    assert abs(energy(p, result.u, result.mu) - E) <= 1e-8
    assert abs(rayleigh(p, result.u, E) - result.mu) <= 1e-8
    u_plus, _ = split(p.spectral, result.u)
    assert result.h_plus == pytest.approx(result.norm1_plus**2, rel=1e-8)
    assert norm1(p.spectral, u_plus)[2] == pytest.approx(result.norm1_plus)
    assert result.norm1_plus > 0.0


def test_outer_budget_outside_the_newton_basin(problem_k0, constants_k0):
    opts = SolverOptions(max_outer=0, newton_basin=1e-12)
    with pytest.raises(MaxIterOuter) as info:
        solve_saddle(problem_k0, 0.01, opts=opts, constants=constants_k0)
    assert info.value.exit_code == 3
