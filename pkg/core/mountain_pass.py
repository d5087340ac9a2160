"""
Path-following mountain pass algorithm for the case lambda < lambda_1
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import scipy.optimize

from core.errors import CollapseToZero, EndpointNotFound, GeometryBroken
from core.functionals import (ProblemSpec, TruncationParams, dual_norm, lq_power, rayleigh,
                              rayleigh_trunc, rayleigh_trunc_form, riesz)
from core.mesh import Field
from core.minimax import Constants, SaddleResult, SolverOptions, TraceRecord, finish, setup_linking
from core.spectral import SpectralData, norm1

logger = logging.getLogger(__name__)


def find_endpoint(p: ProblemSpec, direction: Field, E: float, t0: float, cap: float) -> Tuple[float, Field]:
    """Double t from t0 until R^E(t direction) < 0"""
    t = t0
    while t <= cap:
        u1 = t * direction
        if rayleigh(p, u1, E) < 0.0:
            logger.debug("Path endpoint at t=%.6g", t)
            return t, u1
        t *= 2.0
    raise EndpointNotFound(f"R^E stays nonnegative along the ray up to t={cap:.6g}",
                           witness={"t_cap": cap, "E": E})


def initial_path(u1: Field, points: int) -> np.ndarray:
    """Straight path from 0 to u1, one row per point"""
    return np.linspace(0.0, 1.0, points)[:, None] * u1[None, :]


def path_maximum(p: ProblemSpec, path: np.ndarray, E: float, tp: TruncationParams) -> Tuple[int, Field, float]:
    """
    Interior maximum of R^E_rho on the polyline, refined along the two adjacent segments

    Returns:
        Index of the vertex, the refined point (which replaces that vertex) and its value
    """
    values = [rayleigh_trunc(p, u, E, tp) for u in path[1:-1]]
    i = 1 + int(np.argmax(values))
    left, mid, right = path[i - 1], path[i], path[i + 1]

    def point(s):
        return mid + s * (mid - left) if s < 0.0 else mid + s * (right - mid)

    res = scipy.optimize.minimize_scalar(lambda s: -rayleigh_trunc(p, point(s), E, tp),
                                         bounds=(-1.0, 1.0), method="bounded",
                                         options={"xatol": 1e-10})
    best = values[i - 1]
    if -res.fun > best:
        return i, point(float(res.x)), float(-res.fun)
    return i, mid.copy(), float(best)


def _respline_piece(spec: SpectralData, piece: np.ndarray) -> np.ndarray:
    """Redistribute the vertices of a polyline at equal ||.||_1 arclength, keeping its ends"""
    if len(piece) <= 2:
        return piece
    coeffs = piece @ spec.mass @ spec.eigenvectors
    lengths = np.sqrt(np.sum(spec.weights * np.diff(coeffs, axis=0) ** 2, axis=1))
    arc = np.concatenate(([0.0], np.cumsum(lengths)))
    if arc[-1] == 0.0:
        return piece
    targets = np.linspace(0.0, arc[-1], len(piece))
    out = np.empty_like(piece)
    for j, s in enumerate(targets):
        seg = min(int(np.searchsorted(arc, s, side="right")) - 1, len(lengths) - 1)
        frac = 0.0 if lengths[seg] == 0.0 else (s - arc[seg]) / lengths[seg]
        out[j] = piece[seg] + frac * (piece[seg + 1] - piece[seg])
    out[0], out[-1] = piece[0], piece[-1]
    return out


def respline(spec: SpectralData, path: np.ndarray, i: int) -> np.ndarray:
    """Respline both sides of vertex i separately so that i stays the moved vertex"""
    left = _respline_piece(spec, path[:i + 1])
    right = _respline_piece(spec, path[i:])
    return np.vstack((left, right[1:]))


def _metric_inner(p: ProblemSpec, metric: str, a: Field, b: Field) -> float:
    if metric == "h1":
        return float(a @ (p.K @ b))
    return p.spectral.inner1(a, b)


def solve_mountain_pass_path(p: ProblemSpec, E: float, tp: Optional[TruncationParams] = None,
                             opts: Optional[SolverOptions] = None,
                             constants: Optional[Constants] = None) -> SaddleResult:
    """
    Classic mountain pass iteration on a polyline from 0 to an endpoint with R^E < 0

    Each step locates the path maximum, pushes it along the negative metric
    gradient with its path-tangent component removed, then resplines each side
    of the maximum. The result is refined by Newton's method.

    Raises:
        GeometryBroken: k != 0 or rho too large
        EndpointNotFound: no endpoint with R^E < 0 below T_cap r_k_lambda
        MaxIter: the path maximum does not become critical
    """
    opts = opts or SolverOptions()
    spec = p.spectral
    if spec.k != 0:
        raise GeometryBroken(f"The mountain pass path needs lambda < lambda_1, got k={spec.k}",
                             witness={"k": spec.k})
    if constants is None or tp is None:
        geometry = setup_linking(p, E, opts, constants=constants)
        constants = geometry.constants
        tp = tp or geometry.tp
    constants.check_energy(E)
    bound = min(constants.r_k_lambda, constants.rho_est(E))
    if not tp.rho < bound:
        raise GeometryBroken(f"rho={tp.rho!r} must be below {bound!r}", witness={"rho": tp.rho, "bound": bound})

    r = constants.r_k_lambda
    t_end, u1 = find_endpoint(p, spec.unit_mode(0), E, r, opts.T_cap * r)
    path = initial_path(u1, opts.path_points)

    trace: List[TraceRecord] = []
    converged = False
    step = None
    it = 0
    for it in range(opts.max_iter + 1):
        i, w, value = path_maximum(p, path, E, tp)
        path[i] = w
        value, form = rayleigh_trunc_form(p, w, E, tp)
        residual = dual_norm(p, form)
        n1 = norm1(spec, w)[2]
        lq = lq_power(p, w) ** (1.0 / p.q)
        trace.append(TraceRecord(it, value, residual, n1, lq, step or 0.0))
        if lq < opts.tol_collapse:
            raise CollapseToZero("Path maximum collapsed to 0", witness={"iteration": it})
        if residual <= opts.tol_grad * (1.0 + n1):
            converged = True
            break
        if it == opts.max_iter:
            break
        if it % 50 == 0:
            logger.debug("mpa %d: max=%.12g residual=%.3e", it, value, residual)

        d = -riesz(p, form, opts.metric)
        tangent = path[i + 1] - path[i - 1]
        tt = _metric_inner(p, opts.metric, tangent, tangent)
        if tt > 0.0:
            d = d - _metric_inner(p, opts.metric, d, tangent) / tt * tangent
        slope = float(form @ d)
        d_norm = math.sqrt(max(spec.inner1(d, d), 0.0))
        if slope >= 0.0 or d_norm == 0.0:
            logger.warning("No descent direction at the path maximum, iteration %d", it)
            break

        step = min(1.0, 0.5 * n1 / d_norm) if step is None else min(2.0 * step, 0.5 * n1 / d_norm)
        for _ in range(opts.armijo_max):
            w_trial = w + step * d
            if rayleigh_trunc(p, w_trial, E, tp) <= value + opts.armijo_c * step * slope:
                path[i] = w_trial
                break
            step *= 0.5
        else:
            logger.warning("Armijo backtracking failed at iteration %d", it)
            break
        path = respline(spec, path, i)

    return finish(p, path[i], E, tp, t_end, trace, it, converged, opts, "mpa")
