"""
Continuation in the prescribed energy and the zero-energy limit
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from core.errors import AllFailed, ConvergenceError, EnergyOutOfRange, GeometryBroken, NotCauchy
from core.functionals import ProblemSpec
from core.minimax import (Constants, Geometry, SaddleResult, SolverOptions, estimate_constants,
                          make_result, merge_results, setup_linking, solve_saddle)
from core.refine import newton_refine
from core.spectral import norm1

logger = logging.getLogger(__name__)

TOL_MONO = 1e-6


@dataclass
class SweepRow:
    E: float
    mu: float
    dual_residual: float
    converged: bool
    iterations: int
    E_achieved: float = math.nan
    retried: bool = False


@dataclass
class SweepResult:
    """mu(E) along an ascending list of energies"""
    rows: List[SweepRow]
    monotone: bool
    mu_bar_0: Optional[float] = None
    solutions: List[Optional[SaddleResult]] = field(default_factory=list, repr=False)


def is_monotone(rows: Sequence[SweepRow], tol: float = TOL_MONO) -> bool:
    """mu nonincreasing in E across converged rows"""
    mus = [row.mu for row in rows if row.converged]
    return all(b <= a + tol for a, b in zip(mus, mus[1:]))


def _extrapolate(rows: Sequence[SweepRow]) -> Optional[float]:
    """Linear extrapolation to E = 0 from the two lowest converged energies"""
    done = [row for row in rows if row.converged]
    if len(done) < 2:
        return None
    a, b = done[0], done[1]
    return a.mu - a.E * (b.mu - a.mu) / (b.E - a.E)


def _row(E: float, result: Optional[SaddleResult], retried: bool = False) -> SweepRow:
    if result is None:
        return SweepRow(E=E, mu=math.nan, dual_residual=math.nan, converged=False, iterations=0)
    return SweepRow(E=E, mu=result.mu, dual_residual=result.dual_residual, converged=result.converged,
                    iterations=result.iterations, E_achieved=result.E_achieved, retried=retried)


def _validate_energies(E_list: Sequence[float], constants: Constants) -> List[float]:
    energies = [float(E) for E in E_list]
    if not energies:
        raise EnergyOutOfRange("Empty energy list")
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise EnergyOutOfRange("Energies must be strictly ascending", witness={"E_list": energies})
    for E in energies:
        constants.check_energy(E)
    return energies


def sweep_energy(p: ProblemSpec, E_list: Sequence[float], opts: Optional[SolverOptions] = None,
                 constants: Optional[Constants] = None, cold: bool = False) -> SweepResult:
    """
    Solve at each energy with a frame and rho fixed for the whole sweep

    Energies are visited from high to low, each solve warm-started from the
    previous one. A row whose mu drops below the previous (higher-energy) mu by
    more than TOL_MONO is treated as a branch jump and retried with a cold
    multi-start. With cold=True every energy is solved independently, on a
    thread pool when opts.workers > 1.

    Raises:
        EnergyOutOfRange: an energy is outside (0, E_k_lambda)
        AllFailed: no row converged
    """
    opts = opts or SolverOptions()
    constants = constants or estimate_constants(p, restarts=opts.embed_restarts, seed=opts.seed)
    energies = _validate_energies(E_list, constants)
    geometry = setup_linking(p, energies[-1], opts, E_min=energies[0], constants=constants)
    logger.info("Sweep of %d energies in [%g, %g], rho=%.6g, T=%.6g", len(energies),
                energies[0], energies[-1], geometry.tp.rho, geometry.frame.T)

    if cold:
        solutions = _sweep_cold(p, energies, opts, geometry)
        rows = [_row(E, result) for E, result in zip(energies, solutions)]
    else:
        solutions, rows = _sweep_warm(p, energies, opts, geometry)

    if not any(row.converged for row in rows):
        raise AllFailed("No energy of the sweep converged", witness={"E_list": energies})
    monotone = is_monotone(rows)
    if not monotone:
        logger.warning("mu(E) is not monotone across the converged rows")
    return SweepResult(rows=rows, monotone=monotone, mu_bar_0=_extrapolate(rows), solutions=solutions)


def _solve_or_none(p: ProblemSpec, E: float, opts: SolverOptions, geometry: Geometry,
                   warm=None) -> Optional[SaddleResult]:
    try:
        return solve_saddle(p, E, geometry.tp, opts, geometry.constants, geometry.frame, warm=warm)
    except ConvergenceError as e:
        logger.warning("Solve at E=%g failed: %s", E, e)
        return None


def _sweep_cold(p: ProblemSpec, energies: List[float], opts: SolverOptions, geometry: Geometry):
    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            return list(pool.map(lambda E: _solve_or_none(p, E, opts, geometry), energies))
    return [_solve_or_none(p, E, opts, geometry) for E in energies]


def _sweep_warm(p: ProblemSpec, energies: List[float], opts: SolverOptions, geometry: Geometry):
    solutions: List[Optional[SaddleResult]] = [None] * len(energies)
    rows: List[Optional[SweepRow]] = [None] * len(energies)
    previous: Optional[SaddleResult] = None
    retry_opts = dataclasses.replace(opts, multi_start=max(3, opts.multi_start))

    for j in reversed(range(len(energies))):
        E = energies[j]
        warm = previous.u if previous is not None and previous.converged else None
        result = _solve_or_none(p, E, opts, geometry, warm=warm)
        retried = False
        if previous is not None and previous.converged and (
                result is None or not result.converged or result.mu < previous.mu - TOL_MONO):
            logger.warning("Branch jump at E=%g (mu=%s after %.12g); retrying with multi-start",
                           E, "failed" if result is None else f"{result.mu:.12g}", previous.mu)
            candidates = [c for c in (result, _solve_or_none(p, E, retry_opts, geometry)) if c is not None]
            if candidates:
                monotone = [c for c in candidates if c.converged and c.mu >= previous.mu - TOL_MONO]
                result = merge_results(monotone or candidates)
            retried = True
        solutions[j] = result
        rows[j] = _row(E, result, retried)
        if result is not None and result.converged:
            previous = result
    return solutions, rows


@dataclass
class ZeroEnergyRow:
    E: float
    mu: float
    delta_mu: float
    delta_u: float
    converged: bool


@dataclass
class ZeroEnergyResult:
    solution: SaddleResult
    mu_bar_0: float
    rows: List[ZeroEnergyRow]
    cauchy_mu: bool
    cauchy_u: bool


def zero_energy_limit(p: ProblemSpec, opts: Optional[SolverOptions] = None, E_start: float = 0.01,
                      steps: int = 12, tol_mu: float = 1e-4, tol_u: float = 1e-3,
                      constants: Optional[Constants] = None) -> ZeroEnergyResult:
    """
    Solve at E_m = E_start 2^-m, m = 0..steps, warm-started, until two consecutive
    differences satisfy |mu_m - mu_{m-1}| <= tol_mu and ||u_m - u_{m-1}||_1 <= tol_u;
    the last solution is then refined against E_mu(u) = 0.

    Raises:
        GeometryBroken: lambda is not below lambda_1
        NotCauchy: the sequence does not settle within the given steps
    """
    opts = opts or SolverOptions()
    spec = p.spectral
    if spec.k != 0:
        raise GeometryBroken(f"The zero-energy limit needs lambda < lambda_1, got k={spec.k}",
                             witness={"k": spec.k})
    constants = constants or estimate_constants(p, restarts=opts.embed_restarts, seed=opts.seed)
    energies = [E_start * 2.0**-m for m in range(steps + 1)]
    geometry = setup_linking(p, energies[0], opts, E_min=energies[-1], constants=constants)

    rows: List[ZeroEnergyRow] = []
    previous: Optional[SaddleResult] = None
    settled = 0
    for E in energies:
        result = solve_saddle(p, E, geometry.tp, opts, geometry.constants, geometry.frame,
                              warm=None if previous is None else previous.u)
        if previous is None:
            delta_mu = delta_u = math.nan
        else:
            delta_mu = result.mu - previous.mu
            delta_u = norm1(spec, result.u - previous.u)[2]
            if result.mu < previous.mu - TOL_MONO:
                logger.warning("mu decreased from %.12g to %.12g at E=%g", previous.mu, result.mu, E)
        rows.append(ZeroEnergyRow(E=E, mu=result.mu, delta_mu=delta_mu, delta_u=delta_u,
                                  converged=result.converged))
        logger.info("E=%.6g mu=%.12g dmu=%.3g du=%.3g", E, result.mu, delta_mu, delta_u)
        previous = result
        settled = settled + 1 if abs(delta_mu) <= tol_mu and delta_u <= tol_u else 0
        if settled >= 2:
            break
    else:
        raise NotCauchy(f"No Cauchy behaviour after {steps} halvings of E",
                        witness={"E": energies[-1], "delta_mu": rows[-1].delta_mu, "delta_u": rows[-1].delta_u})

    refined = newton_refine(p, previous.u, previous.mu, 0.0, tol=opts.newton_tol, tol_E=opts.newton_tol,
                            max_iter=opts.newton_max_iter)
    solution = make_result(p, refined, 0.0, geometry.tp, geometry.frame.T, list(previous.trace),
                           previous.iterations, opts, previous.algo)
    logger.info("Zero-energy solution: mu=%.12g |E|=%.3e", solution.mu, abs(solution.E_achieved))
    return ZeroEnergyResult(solution=solution, mu_bar_0=solution.mu, rows=rows,
                            cauchy_mu=abs(rows[-1].delta_mu) <= tol_mu, cauchy_u=rows[-1].delta_u <= tol_u)
