"""
Independent oracles and diagnostic probes for the solver
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from core.errors import EmptyTrace, ZeroDenominator
from core.functionals import (ProblemSpec, TruncationParams, energy, energy_form, lq_power,
                              rayleigh, rayleigh_form, rayleigh_trunc, rayleigh_trunc_form)
from core.mesh import Field, Mesh, build_mesh
from core.spectral import SpectralData, h_lambda, norm_equivalence

logger = logging.getLogger(__name__)

FUNCTIONALS = ("energy", "rayleigh", "rayleigh_trunc")
SUBSPACES = ("all", "Wplus")


def fd_gradient_check(p: ProblemSpec, functional: str, u: Field, v: Field, h: float = 1e-5,
                      mu: float = 1.0, E: float = 0.0, tp: Optional[TruncationParams] = None) -> float:
    """
    Relative error between the assembled directional derivative and a central difference

    Args:
        functional: "energy" (uses mu), "rayleigh" (uses E) or "rayleigh_trunc" (uses E and tp)
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if functional == "energy":
        value = lambda w: energy(p, w, mu)
        form = energy_form(p, u, mu)
    elif functional == "rayleigh":
        value = lambda w: rayleigh(p, w, E)
        form = rayleigh_form(p, u, E)[1]
    elif functional == "rayleigh_trunc":
        if tp is None:
            raise ValueError("rayleigh_trunc needs truncation parameters")
        value = lambda w: rayleigh_trunc(p, w, E, tp)
        form = rayleigh_trunc_form(p, u, E, tp)[1]
    else:
        raise ValueError(f"Unknown functional {functional!r}, expected one of {FUNCTIONALS}")

    analytic = float(form @ v)
    central = (value(u + h * v) - value(u - h * v)) / (2.0 * h)
    return abs(analytic - central) / (abs(analytic) + 1e-12)


@dataclass
class FiberingProfile:
    """Samples of t -> R^E(t u + v)"""
    t_grid: np.ndarray
    values: np.ndarray
    peak_t: float
    peak_value: float
    skipped: np.ndarray     # grid points where t u + v vanishes


def _rayleigh_accurate(p: ProblemSpec, w: Field, E: float) -> float:
    """R^E(w), re-accumulated with math.fsum when the terms are huge"""
    value = rayleigh(p, w, E)
    if math.isfinite(value) and abs(value) <= 1e12:
        return value
    mesh = p.mesh
    uq = mesh.at_quadrature(w)
    G_terms = (p.nonlinearity.G(mesh.quad_points, uq) * mesh.weights).ravel()
    lq_terms = (np.abs(uq) ** p.q * mesh.weights).ravel()
    h = math.fsum(w * (p.K @ w)) - p.lam * math.fsum(w * (p.M @ w))
    numerator = 0.5 * h - math.fsum(G_terms) - E
    return numerator / (math.fsum(lq_terms) / p.q)


def fibering_profile(p: ProblemSpec, u: Field, v: Field, E: float, t_grid: Sequence[float]) -> FiberingProfile:
    """Sample the fibering map along t; points where t u + v = 0 are skipped and flagged"""
    if not np.any(u):
        raise ValueError("Fibering direction u must be nonzero")
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.full(len(t_grid), np.nan)
    skipped = np.zeros(len(t_grid), dtype=bool)
    for i, t in enumerate(t_grid):
        try:
            values[i] = _rayleigh_accurate(p, t * u + v, E)
        except ZeroDenominator:
            skipped[i] = True
    if np.all(skipped):
        raise ValueError("Every grid point was skipped")
    i = int(np.nanargmax(values))
    return FiberingProfile(t_grid=t_grid, values=values, peak_t=float(t_grid[i]),
                           peak_value=float(values[i]), skipped=skipped)


@dataclass
class NegativityReport:
    worst: float
    witness_norm: float
    asserted: bool              # the probe radius is within sqrt(2E) and E > 0
    holds: Optional[bool]       # None when not asserted


def random_fields(spec: SpectralData, radii: np.ndarray, rng: np.random.Generator, modes: int = 32) -> List[Field]:
    """Fields with the given ||.||_1 norms and random directions in the lowest modes"""
    n = spec.size
    modes = min(modes, n)
    sqrt_w = np.sqrt(spec.weights)
    fields = []
    for radius in radii:
        y = np.zeros(n)
        y[:modes] = rng.standard_normal(modes)
        y *= radius / np.linalg.norm(y)
        fields.append(spec.from_coefficients(y / sqrt_w))
    return fields


def small_ball_negativity(p: ProblemSpec, E: float, rho_probe: float, samples: int = 1000,
                          seed: int = 0) -> NegativityReport:
    """
    Largest R^E over random nonzero fields with ||u||_1 <= rho_probe

    The sign is asserted only for E > 0 and rho_probe <= sqrt(2E); otherwise a
    positive value is reported as a finding.
    """
    rng = np.random.default_rng(seed)
    radii = rho_probe * rng.uniform(0.05, 1.0, samples)
    worst, witness = -math.inf, 0.0
    for radius, u in zip(radii, random_fields(p.spectral, radii, rng)):
        value = rayleigh(p, u, E)
        if value > worst:
            worst, witness = value, float(radius)

    asserted = E > 0.0 and rho_probe <= math.sqrt(2.0 * E)
    holds = bool(worst < 0.0) if asserted else None
    if asserted and not holds:
        logger.warning("R^E is positive inside the ball of radius %g: %g", rho_probe, worst)
    return NegativityReport(worst=float(worst), witness_norm=witness, asserted=asserted, holds=holds)


def embedding_constant(spec: SpectralData, r: float, restarts: int = 4, subspace: str = "all",
                       mesh: Optional[Mesh] = None, seed: int = 0, max_iter: int = 500,
                       tol: float = 1e-13) -> float:
    """
    Estimate of S_r = max |u|_Lr / ||u||_1 over the discrete space or over W+

    In coordinates y = sqrt(w) c the problem is the maximization of the convex
    function |u|_Lr^r on the unit sphere, so the fixed-point iteration
    y <- grad / |grad| increases it monotonically. The first start is the
    lowest-weight mode, the others are seeded random mixtures; the best value is
    a lower bound for the discrete constant.
    """
    if r < 1:
        raise ValueError(f"Exponent must be at least 1, got {r}")
    if subspace not in SUBSPACES:
        raise ValueError(f"Unknown subspace {subspace!r}, expected one of {SUBSPACES}")
    mesh = mesh or build_mesh(spec.size)
    if mesh.n != spec.size:
        raise ValueError(f"Mesh of size {mesh.n} does not match spectral data of size {spec.size}")

    n = spec.size
    first = spec.k if subspace == "Wplus" else 0
    sqrt_w = np.sqrt(spec.weights)

    def to_field(y):
        return spec.from_coefficients(y / sqrt_w)

    def power(y):
        uq = mesh.at_quadrature(to_field(y))
        return float(np.sum(np.abs(uq) ** r * mesh.weights))

    def ascent(y):
        uq = mesh.at_quadrature(to_field(y))
        form = mesh.assemble_load(r * np.sign(uq) * np.abs(uq) ** (r - 1.0))
        g = (spec.eigenvectors.T @ form) / sqrt_w
        g[:first] = 0.0
        return g

    rng = np.random.default_rng(seed)
    best = 0.0
    for attempt in range(restarts):
        y = np.zeros(n)
        if attempt == 0:
            y[first + int(np.argmin(spec.weights[first:]))] = 1.0
        else:
            y[first:] = rng.standard_normal(n - first) / np.arange(1, n - first + 1)
            y /= np.linalg.norm(y)
        value = power(y)
        for _ in range(max_iter):
            g = ascent(y)
            g_norm = np.linalg.norm(g)
            if g_norm == 0.0:
                break
            y_new = g / g_norm
            value_new = power(y_new)
            if value_new <= value * (1.0 + tol):
                value = max(value, value_new)
                break
            y, value = y_new, value_new
        best = max(best, value)
        logger.debug("embedding r=%g start %d: %.12g", r, attempt, value ** (1.0 / r))
    return best ** (1.0 / r)


@dataclass
class CeramiReport:
    sup_norm1: float
    final_scaled_residual: float
    lq_trajectory: List[float]
    bounded: bool
    lq_away_from_zero: bool
    findings: List[str] = field(default_factory=list)


def cerami_monitor(trace, bound_factor: float = 1e3, collapse_ratio: float = 1e-3) -> CeramiReport:
    """
    Boundedness of ||u_m||_1, the scaled residual (1 + ||u_m||_1) ||DR^E(u_m)||_*
    and the |u_m|_Lq trajectory along a solver trace

    Raises:
        EmptyTrace: the trace has no records
    """
    if not trace:
        raise EmptyTrace("Cerami monitor needs at least one trace record")
    norms = [record.norm1 for record in trace]
    lq = [record.lq_norm for record in trace]
    last = trace[-1]
    sup_norm = float(max(norms))
    bounded = sup_norm <= bound_factor * (1.0 + norms[0])
    away = min(lq) > collapse_ratio * max(lq)
    findings = []
    if not bounded:
        findings.append(f"iterates grow: sup ||u_m||_1 = {sup_norm:.6g}")
    if not away:
        findings.append(f"|u_m|_Lq drops to {min(lq):.3g}")
    return CeramiReport(sup_norm1=sup_norm, final_scaled_residual=(1.0 + last.norm1) * last.residual,
                        lq_trajectory=lq, bounded=bounded, lq_away_from_zero=away, findings=findings)


@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    holds: bool


def cerami_identity_check(p: ProblemSpec, u: Field, E: float) -> IdentityCheck:
    """
    (alpha - q) R^E(u) - DR^E(u)(u) >= q/|u|_q^q [((alpha - 2)/2) H_lambda(u) - alpha E]

    The gap is int (g u - alpha G) / ((1/q)|u|_q^q), zero for a pure power.
    """
    alpha = p.nonlinearity.alpha
    value, form = rayleigh_form(p, u, E)
    lhs = (alpha - p.q) * value - float(form @ u)
    rhs = p.q / lq_power(p, u) * (0.5 * (alpha - 2.0) * h_lambda(p.K, p.M, p.lam, u) - alpha * E)
    slack = 1e-10 * (abs(lhs) + abs(rhs) + 1.0)
    return IdentityCheck(lhs=lhs, rhs=rhs, holds=bool(lhs >= rhs - slack))


def zero_level_decay(p: ProblemSpec, u: Field, t_values: Sequence[float]) -> np.ndarray:
    """R^0(t u) for each t; tends to 0 as t -> 0+"""
    return np.array([rayleigh(p, t * u, 0.0) for t in t_values])


@dataclass
class EquivalenceCheck:
    c0: float
    c1: float
    min_ratio: float
    max_ratio: float
    holds: bool


def norm_equivalence_check(p: ProblemSpec, samples: int = 100, seed: int = 0) -> EquivalenceCheck:
    """Sample ||u||_W^2 / ||u||_1^2 against the computed constants c0, c1"""
    c0, c1 = norm_equivalence(p.spectral)
    rng = np.random.default_rng(seed)
    ratios = []
    for u in random_fields(p.spectral, np.ones(samples), rng, modes=p.spectral.size):
        ratios.append(float(u @ (p.K @ u)))
    lo, hi = min(ratios), max(ratios)
    holds = c0 * (1.0 - 1e-10) <= lo and hi <= c1 * (1.0 + 1e-10)
    return EquivalenceCheck(c0=c0, c1=c1, min_ratio=lo, max_ratio=hi, holds=bool(holds))
