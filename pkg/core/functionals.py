"""
Energy functional, energy-level Rayleigh quotient, its truncation and their gradients
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg

from core.errors import InvalidParameters, ZeroDenominator
from core.mesh import Field, Mesh, integrate, mass, stiffness
from core.nonlinearity import Nonlinearity
from core.spectral import SpectralData, eigendecompose, h_lambda, norm1, TOL_RES

logger = logging.getLogger(__name__)

ZERO_LQ = 1e-14
METRICS = ("h1", "norm1")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Discretized data of -u'' - lambda u = mu |u|^(q-2) u + g(x, u) on (0, 1)"""
    mesh: Mesh
    lam: float
    q: float
    nonlinearity: Nonlinearity
    spectral: SpectralData
    K: np.ndarray
    M: np.ndarray
    K_factor: Tuple[np.ndarray, bool]

    @property
    def k(self) -> int:
        return self.spectral.k

    def solve_K(self, form: np.ndarray) -> Field:
        return scipy.linalg.cho_solve(self.K_factor, form)


@dataclass(frozen=True)
class TruncationParams:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidParameters(f"rho must be positive, got {self.rho}")


@dataclass
class Gradient:
    """A derivative as dual form, its Riesz representative and the dual norm of the form"""
    form: np.ndarray
    riesz: Field
    dual_residual: float


def discrete_eigenvalues(mesh: Mesh) -> np.ndarray:
    """Ascending eigenvalues of the discrete Dirichlet Laplacian (lambda independent)"""
    return scipy.linalg.eigh(stiffness(mesh), mass(mesh), eigvals_only=True)


def build_problem(mesh: Mesh, lam: float, q: float, nonlinearity: Nonlinearity,
                  tol_res: float = TOL_RES) -> ProblemSpec:
    """
    Assemble K and M, factor K and split the space for the given lambda

    Raises:
        InvalidParameters: unless 1 < q < 2 < gamma
        ResonantLambda: when lambda sits on the discrete spectrum
    """
    if not 1.0 < q < 2.0 < nonlinearity.gamma:
        raise InvalidParameters(
            f"Need 1 < q < 2 < gamma, got q={q}, gamma={nonlinearity.gamma}")
    K, M = stiffness(mesh), mass(mesh)
    spectral = eigendecompose(K, M, lam, tol_res)
    logger.info("Problem on %r: lambda=%.10g (k=%d), q=%g, %s gamma=%g",
                mesh, lam, spectral.k, q, nonlinearity.name, nonlinearity.gamma)
    return ProblemSpec(mesh=mesh, lam=float(lam), q=float(q), nonlinearity=nonlinearity,
                       spectral=spectral, K=K, M=M, K_factor=scipy.linalg.cho_factor(K))


# ------------------------------------------------------------------ #
# Building blocks                                                    #
# ------------------------------------------------------------------ #

def lq_power(p: ProblemSpec, u: Field) -> float:
    """|u|_Lq^q"""
    q = p.q
    return integrate(p.mesh, lambda x, s: np.abs(s) ** q, u)


def potential(p: ProblemSpec, u: Field) -> float:
    """int G(x, u) dx"""
    return integrate(p.mesh, p.nonlinearity.G, u)


def power_form(p: ProblemSpec, u: Field) -> np.ndarray:
    """(int |u|^(q-2) u phi_i)_i, the derivative of (1/q)|u|_Lq^q"""
    uq = p.mesh.at_quadrature(u)
    return p.mesh.assemble_load(np.sign(uq) * np.abs(uq) ** (p.q - 1.0))


def g_form(p: ProblemSpec, u: Field) -> np.ndarray:
    """(int g(x, u) phi_i)_i"""
    uq = p.mesh.at_quadrature(u)
    return p.mesh.assemble_load(np.broadcast_to(p.nonlinearity.g(p.mesh.quad_points, uq), uq.shape))


def _quadratic_form(p: ProblemSpec, u: Field) -> np.ndarray:
    """Dual form of the derivative of (1/2) H_lambda: (K - lambda M) u"""
    return p.K @ u - p.lam * (p.M @ u)


def riesz(p: ProblemSpec, form: np.ndarray, metric: str = "h1") -> Field:
    """Representative of a dual form in the H1_0 inner product (K) or in the ||.||_1 inner product"""
    if metric == "h1":
        return p.solve_K(form)
    if metric == "norm1":
        return p.spectral.riesz_norm1(form)
    raise InvalidParameters(f"Unknown metric {metric!r}, expected one of {METRICS}")


def _gradient(p: ProblemSpec, form: np.ndarray, metric: str) -> Gradient:
    w = p.solve_K(form)
    dual = float(np.sqrt(max(form @ w, 0.0)))
    return Gradient(form=form, riesz=w if metric == "h1" else riesz(p, form, metric), dual_residual=dual)


def dual_norm(p: ProblemSpec, form: np.ndarray) -> float:
    """||F||_* = sqrt(F^T K^-1 F)"""
    return float(np.sqrt(max(form @ p.solve_K(form), 0.0)))


# ------------------------------------------------------------------ #
# Functionals                                                        #
# ------------------------------------------------------------------ #

def energy(p: ProblemSpec, u: Field, mu: float) -> float:
    """E_mu(u) = 1/2 H_lambda(u) - (mu/q) |u|_Lq^q - int G(x, u)"""
    return 0.5 * h_lambda(p.K, p.M, p.lam, u) - (mu / p.q) * lq_power(p, u) - potential(p, u)


def _quotient_parts(p: ProblemSpec, u: Field, E: float) -> Tuple[float, float]:
    """Numerator and denominator of R^E"""
    lq = lq_power(p, u)
    if lq ** (1.0 / p.q) <= ZERO_LQ:
        raise ZeroDenominator("|u|_Lq vanishes, R^E is undefined", witness={"lq_norm": lq ** (1.0 / p.q)})
    numerator = 0.5 * h_lambda(p.K, p.M, p.lam, u) - potential(p, u) - E
    return numerator, lq / p.q


def rayleigh(p: ProblemSpec, u: Field, E: float) -> float:
    """Energy-level Rayleigh quotient R^E(u) = (1/2 H_lambda - int G - E) / ((1/q) |u|_Lq^q)"""
    numerator, denominator = _quotient_parts(p, u, E)
    return numerator / denominator


def rayleigh_energy_shift(p: ProblemSpec, u: Field, E0: float, E1: float) -> float:
    """R^E1(u) computed from R^E0(u): R^E0(u) - (E1 - E0) / ((1/q) |u|_Lq^q)"""
    numerator, denominator = _quotient_parts(p, u, E0)
    return numerator / denominator - (E1 - E0) / denominator


def phi_rho(rho: float, s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Smooth cutoff: 0 for |s| < rho/2, 1 for |s| > rho, C-infinity in between

    Built from the bump exp(-1/x) as psi(x) / (psi(x) + psi(1 - x)).
    """
    x = (np.abs(np.asarray(s, dtype=float)) - 0.5 * rho) / (0.5 * rho)
    a, b = _psi(x), _psi(1.0 - x)
    value = a / (a + b)
    return float(value) if value.ndim == 0 else value


def phi_rho_prime(rho: float, s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Derivative of phi_rho with respect to s"""
    s = np.asarray(s, dtype=float)
    x = (np.abs(s) - 0.5 * rho) / (0.5 * rho)
    a, b = _psi(x), _psi(1.0 - x)
    da, db = _psi_prime(x), _psi_prime(1.0 - x)
    dx = (da * b + a * db) / (a + b) ** 2
    value = dx * (2.0 / rho) * np.sign(s)
    return float(value) if value.ndim == 0 else value


def _psi(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _psi_prime(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    # exp(-1/x)/x^2 underflows to 0 well before x = 1e-3
    pos = x > 1e-3
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def rayleigh_trunc(p: ProblemSpec, u: Field, E: float, tp: TruncationParams) -> float:
    """R^E_rho(u) = phi_rho(||u||_1) R^E(u), and 0 on the ball ||u||_1 <= rho/2"""
    n1 = norm1(p.spectral, u)[2]
    if n1 <= 0.5 * tp.rho:
        return 0.0
    return phi_rho(tp.rho, n1) * rayleigh(p, u, E)


# ------------------------------------------------------------------ #
# Gradients                                                          #
# ------------------------------------------------------------------ #

def energy_form(p: ProblemSpec, u: Field, mu: float) -> np.ndarray:
    """Assembled DE_mu(u)(phi_i)"""
    return _quadratic_form(p, u) - mu * power_form(p, u) - g_form(p, u)


def grad_energy(p: ProblemSpec, u: Field, mu: float, metric: str = "h1") -> Gradient:
    """Metric gradient of E_mu and the dual residual ||DE_mu(u)||_*"""
    return _gradient(p, energy_form(p, u, mu), metric)


def rayleigh_form(p: ProblemSpec, u: Field, E: float) -> Tuple[float, np.ndarray]:
    """R^E(u) and the assembled DR^E(u)(phi_i) by the quotient rule"""
    numerator, denominator = _quotient_parts(p, u, E)
    value = numerator / denominator
    d_numerator = _quadratic_form(p, u) - g_form(p, u)
    form = (d_numerator - value * power_form(p, u)) / denominator
    return value, form


def grad_rayleigh(p: ProblemSpec, u: Field, E: float, metric: str = "h1") -> Gradient:
    """Metric gradient of R^E; vanishes exactly where DE_mu(u) = 0 with mu = R^E(u)"""
    _, form = rayleigh_form(p, u, E)
    return _gradient(p, form, metric)


def rayleigh_trunc_form(p: ProblemSpec, u: Field, E: float, tp: TruncationParams) -> Tuple[float, np.ndarray]:
    """R^E_rho(u) and its assembled derivative by the product rule"""
    n1 = norm1(p.spectral, u)[2]
    if n1 <= 0.5 * tp.rho:
        return 0.0, np.zeros(p.mesh.n)
    value, form = rayleigh_form(p, u, E)
    phi = phi_rho(tp.rho, n1)
    dphi = phi_rho_prime(tp.rho, n1)
    if dphi != 0.0:
        form = phi * form + dphi * value * p.spectral.norm1_form(u)
    elif phi != 1.0:
        form = phi * form
    return phi * value, form


def grad_rayleigh_trunc(p: ProblemSpec, u: Field, E: float, tp: TruncationParams,
                        metric: str = "h1") -> Gradient:
    """Metric gradient of R^E_rho; zero on the ball ||u||_1 <= rho/2"""
    _, form = rayleigh_trunc_form(p, u, E, tp)
    return _gradient(p, form, metric)


def energy_tangent(p: ProblemSpec, u: Field, mu: float, eps_reg: Optional[float] = None) -> np.ndarray:
    """
    Second derivative of E_mu assembled as a matrix

    The factor |u|^(q-2) is replaced by (u^2 + eps_reg^2)^((q-2)/2) when eps_reg is given.
    """
    uq = p.mesh.at_quadrature(u)
    if eps_reg is None:
        power = np.abs(uq) ** (p.q - 2.0)
    else:
        power = (uq**2 + eps_reg**2) ** (0.5 * (p.q - 2.0))
    dg = np.broadcast_to(p.nonlinearity.dg_ds(p.mesh.quad_points, uq), uq.shape)
    weight = mu * (p.q - 1.0) * power + dg
    return p.K - p.lam * p.M - p.mesh.assemble_tangent(weight)
