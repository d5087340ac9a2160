"""Shared small problems; the fixtures are session scoped because eigendecompositions and solves dominate the run time."""

import numpy as np
import pytest

from core.functionals import build_problem, discrete_eigenvalues
from core.mesh import build_mesh
from core.minimax import estimate_constants, solve_saddle
from core.nonlinearity import pure_power
from core.spectral import resolve_lambda


def make_problem(n, lambda_spec, q=1.5, gamma=4.0):
    mesh = build_mesh(n)
    lam = resolve_lambda(discrete_eigenvalues(mesh), lambda_spec)
    return build_problem(mesh, lam, q, pure_power(gamma))


def low_mode_field(spec, rng, modes=8, scale=1.0):
    """Random combination of the lowest modes, scaled to ||.||_1 = scale"""
    y = np.zeros(spec.size)
    y[:modes] = rng.standard_normal(modes)
    y *= scale / np.linalg.norm(y)
    return spec.from_coefficients(y / np.sqrt(spec.weights))


@pytest.fixture(scope="session")
def problem_k0():
    """lambda = lambda_1 / 2 on 60 interior nodes"""
    return make_problem(60, "0.5")


@pytest.fixture(scope="session")
def problem_k1():
    """lambda halfway between lambda_1 and lambda_2; odd n keeps the mesh symmetric about 1/2"""
    return make_problem(61, "gap:1:0.5")


@pytest.fixture(scope="session")
def problem_full():
    """lambda = lambda_1 / 2 at the full size of 200 interior nodes"""
    return make_problem(200, "0.5")


@pytest.fixture(scope="session")
def constants_full(problem_full):
    return estimate_constants(problem_full)


@pytest.fixture(scope="session")
def constants_k0(problem_k0):
    return estimate_constants(problem_k0)


@pytest.fixture(scope="session")
def constants_k1(problem_k1):
    return estimate_constants(problem_k1)


@pytest.fixture(scope="session")
def solution_k0(problem_k0, constants_k0):
    return solve_saddle(problem_k0, 0.01, constants=constants_k0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
