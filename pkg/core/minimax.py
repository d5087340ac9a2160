"""
Linking geometry and the local minimax search for saddle points of the truncated quotient
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.optimize

from core.errors import (CollapseToZero, ConvergenceError, EnergyOutOfRange, GeometryBroken,
                         InvalidParameters, MaxIter, MaxIterInner, MaxIterOuter, NoGap, UnboundedAscent)
from core.functionals import (ProblemSpec, TruncationParams, dual_norm, energy, grad_energy,
                              lq_power, rayleigh, rayleigh_form, rayleigh_trunc, rayleigh_trunc_form, riesz)
from core.mesh import Field
from core.refine import Refinement, newton_refine
from core.spectral import SpectralData, h_lambda, norm1, split
from core.verify import cerami_monitor, embedding_constant

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Constants:
    """
    Positivity constants on the sphere S+_r of W+

    For u in W+ with ||u||_1 = r the numerator of R^E is at least f(r) - E,
    f(r) = 1/2 (1 - C1 eps) r^2 - C2 r^gamma, which peaks at r_k_lambda with
    value E_k_lambda.
    """
    epsilon: float
    C1: float
    C2: float
    gamma: float
    q: float
    S_q: float
    r_k_lambda: float
    E_k_lambda: float

    @classmethod
    def from_bounds(cls, C1: float, epsilon: float, C2: float, gamma: float,
                    q: float = 1.5, S_q: float = 1.0) -> "Constants":
        """Closed-form maximizer and maximum of f"""
        if not 0.0 < C1 * epsilon < 1.0:
            raise InvalidParameters(f"Need 0 < C1 eps < 1, got {C1 * epsilon}")
        if C2 <= 0 or gamma <= 2:
            raise InvalidParameters(f"Need C2 > 0 and gamma > 2, got C2={C2}, gamma={gamma}")
        a = 1.0 - C1 * epsilon
        r = (a / (gamma * C2)) ** (1.0 / (gamma - 2.0))
        E_max = 0.5 * a * r**2 - C2 * r**gamma
        return cls(epsilon=epsilon, C1=C1, C2=C2, gamma=gamma, q=q, S_q=S_q,
                   r_k_lambda=r, E_k_lambda=E_max)

    def f(self, r):
        return 0.5 * (1.0 - self.C1 * self.epsilon) * np.square(r) - self.C2 * np.power(r, self.gamma)

    def delta_E(self, E: float) -> float:
        """Lower bound of R^E on S+_r"""
        return self.q * (self.E_k_lambda - E) / (self.S_q**self.q * self.r_k_lambda**self.q)

    @staticmethod
    def rho_est(E: float) -> float:
        """Radius of the ball around 0 on which R^E < 0"""
        return math.sqrt(2.0 * E)

    def check_energy(self, E: float):
        if not 0.0 < E < self.E_k_lambda:
            raise EnergyOutOfRange(
                f"E={E!r} must lie in (0, E_k_lambda) with E_k_lambda={self.E_k_lambda:.10g}",
                witness={"E": E, "E_k_lambda": self.E_k_lambda})

    def as_dict(self) -> Dict[str, float]:
        return dataclasses.asdict(self)


def estimate_constants(p: ProblemSpec, embed: Optional[Callable[[float], float]] = None,
                       restarts: int = 4, seed: int = 0) -> Constants:
    """
    Constants for the spectral gap of p

    C1 = 1/(lambda_{k+1} - lambda) is the squared L2 embedding constant of W+,
    eps = 1/(4 C1) and C2 = C(eps) S_gamma^gamma with S_gamma the L^gamma
    embedding constant of W+ in the norm ||.||_1.

    Args:
        p: The problem
        embed: Maps an exponent r to the embedding constant S_r of W+; defaults
            to the ascent estimate of core.verify.embedding_constant
    """
    spec = p.spectral
    if spec.k >= spec.size:
        raise NoGap(f"lambda={p.lam!r} lies above the discrete spectrum, no eigenvalue lambda_{spec.k + 1}",
                    witness={"k": spec.k, "size": spec.size})
    if embed is None:
        def embed(r: float) -> float:
            return embedding_constant(spec, r, restarts=restarts, subspace="Wplus", mesh=p.mesh, seed=seed)

    nl = p.nonlinearity
    C1 = 1.0 / (spec.eigenvalues[spec.k] - p.lam)
    epsilon = 1.0 / (4.0 * C1)
    S_gamma, S_q = embed(nl.gamma), embed(p.q)
    C2 = nl.growth_constant(epsilon) * S_gamma**nl.gamma
    constants = Constants.from_bounds(C1, epsilon, C2, nl.gamma, p.q, S_q)
    logger.info("Constants: C1=%.6g C2=%.6g r=%.6g E_k=%.6g", C1, C2,
                constants.r_k_lambda, constants.E_k_lambda)
    return constants


# ------------------------------------------------------------------ #
# Linking sets                                                       #
# ------------------------------------------------------------------ #

@dataclass(frozen=True, eq=False)
class LinkingFrame:
    """Direction u_bar_plus in W+, size T and the sampled boundary B0 of B = {t u_bar + s v}"""
    k: int
    u_bar_plus: Field
    T: float
    r_k_lambda: float
    minus_sphere: np.ndarray    # rows are unit ||.||_1 vectors of W-
    samples: int

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.samples)

    def boundary_c(self) -> List[Field]:
        """B0^c: s = T, 0 <= t <= T"""
        return [t * self.u_bar_plus + self.T * v for t in self.grid() for v in self.minus_sphere]

    def boundary_d(self) -> List[Field]:
        """B0^d: t in {0, T}, 0 <= s <= T; the two endpoints {0, T u_bar} when k = 0"""
        if self.k == 0:
            return [np.zeros_like(self.u_bar_plus), self.T * self.u_bar_plus]
        return [t * self.u_bar_plus + s * v
                for t in (0.0, self.T) for s in self.grid() for v in self.minus_sphere]

    def with_direction(self, direction: Field) -> "LinkingFrame":
        return dataclasses.replace(self, u_bar_plus=direction)


def normalize1(spec: SpectralData, u: Field) -> Field:
    total = norm1(spec, u)[2]
    if total == 0.0:
        raise ValueError("Cannot normalize the zero field")
    return u / total


def build_linking_frame(spec: SpectralData, k: int, T: float, samples: int = 33,
                        sphere_samples: Optional[int] = None, r_k_lambda: float = 0.0,
                        direction: Optional[Field] = None, seed: int = 0) -> LinkingFrame:
    """
    Deterministic sample grids over B0^c and B0^d

    Args:
        spec: Spectral data of the problem
        k: Dimension of W-
        T: Size of the linking set, larger than r_k_lambda
        samples: Points of the t- and s-grids on [0, T]
        sphere_samples: Points on the unit sphere of W- (k >= 2; k = 1 always uses the two poles)
        r_k_lambda: Radius of the sphere S+ that B0 must link with
        direction: Initial W+ direction, e_{k+1} when omitted
        seed: Seed of the random sphere points
    """
    if k != spec.k:
        raise ValueError(f"Frame dimension k={k} does not match the splitting index {spec.k}")
    if not T > r_k_lambda:
        raise GeometryBroken(f"T={T!r} must exceed r_k_lambda={r_k_lambda!r}",
                             witness={"T": T, "r_k_lambda": r_k_lambda})
    if samples < 2:
        raise ValueError(f"Need at least 2 grid samples, got {samples}")

    if direction is None:
        u_bar = spec.unit_mode(k)
    else:
        u_bar = normalize1(spec, split(spec, direction)[0])

    n = spec.size
    if k == 0:
        sphere = np.zeros((0, n))
    else:
        modes = [spec.unit_mode(i) for i in range(k)]
        points = [sign * e for e in modes for sign in (1.0, -1.0)]
        if k >= 2:
            extra = (sphere_samples if sphere_samples is not None else 10 * k) - len(points)
            rng = np.random.default_rng(seed)
            for _ in range(max(extra, 0)):
                y = rng.standard_normal(k)
                points.append(sum(coef * e for coef, e in zip(y / np.linalg.norm(y), modes)))
        sphere = np.array(points)

    return LinkingFrame(k=k, u_bar_plus=u_bar, T=float(T), r_k_lambda=float(r_k_lambda),
                        minus_sphere=sphere, samples=int(samples))


@dataclass
class LinkingValues:
    """Sampled sup of R^E_rho over B0^c, B0^d, B0 and inf over S+_r"""
    b_c: float
    b_d: float
    b: float
    a: float
    witness: Dict[str, Any] = field(default_factory=dict)

    @property
    def linked(self) -> bool:
        return self.b <= 0.0 < self.a


def _sup(p: ProblemSpec, points: List[Field], E: float, tp: TruncationParams) -> Tuple[float, int]:
    if not points:
        return -math.inf, -1
    values = [rayleigh_trunc(p, u, E, tp) for u in points]
    i = int(np.argmax(values))
    return float(values[i]), i


def sphere_plus_samples(spec: SpectralData, r: float, samples: int = 64, seed: int = 0) -> List[Field]:
    """
    Points of S+_r: the mode e_{k+1}, random mixtures of the next six modes and
    random mixtures of all W+ modes with decaying weights
    """
    k, n = spec.k, spec.size
    rng = np.random.default_rng(seed)
    sqrt_w = np.sqrt(spec.weights)
    points = [r * spec.unit_mode(k)]
    low = min(6, n - k)
    decay = 1.0 / np.arange(1, n - k + 1)
    for j in range(1, samples):
        y = np.zeros(n)
        if j % 2:
            y[k:k + low] = rng.standard_normal(low)
        else:
            y[k:] = rng.standard_normal(n - k) * decay
        y *= r / np.linalg.norm(y)
        points.append(spec.from_coefficients(y / sqrt_w))
    return points


def verify_linking_values(p: ProblemSpec, frame: LinkingFrame, E: float, tp: TruncationParams,
                          plus_samples: int = 64, seed: int = 0, raise_on_failure: bool = True) -> LinkingValues:
    """
    Sampled linking values b_c, b_d, b = max(b_c, b_d) and a

    Raises:
        GeometryBroken: when b > 0 (increase T) or a <= 0 (decrease E)
    """
    b_c, i_c = _sup(p, frame.boundary_c(), E, tp)
    b_d, i_d = _sup(p, frame.boundary_d(), E, tp)
    sphere = sphere_plus_samples(p.spectral, frame.r_k_lambda, plus_samples, seed)
    a_values = [rayleigh_trunc(p, u, E, tp) for u in sphere]
    i_a = int(np.argmin(a_values))
    values = LinkingValues(b_c=b_c, b_d=b_d, b=max(b_c, b_d), a=float(a_values[i_a]),
                           witness={"b_c_index": i_c, "b_d_index": i_d, "a_index": i_a})
    logger.info("Linking values at E=%g: b_c=%.6g b_d=%.6g a=%.6g", E, b_c, b_d, values.a)

    if raise_on_failure and not values.linked:
        if values.b > 0.0:
            hint = "increase T"
            witness = {"b": values.b, "T": frame.T, "set": "B0^c" if b_c >= b_d else "B0^d"}
        else:
            hint = "decrease E"
            witness = {"a": values.a, "r_k_lambda": frame.r_k_lambda, "E": E}
        raise GeometryBroken(f"Linking geometry fails (b={values.b:.6g}, a={values.a:.6g}); {hint}",
                             witness=witness)
    return values


def choose_frame(p: ProblemSpec, E: float, tp: TruncationParams, constants: Constants,
                 opts: "SolverOptions", direction: Optional[Field] = None) -> LinkingFrame:
    """Start at T = T_factor r_k_lambda and double until the sampled b_d is <= 0"""
    r = constants.r_k_lambda
    T = opts.T_factor * r
    while T <= opts.T_cap * r:
        frame = build_linking_frame(p.spectral, p.k, T, samples=opts.linking_samples,
                                    r_k_lambda=r, direction=direction, seed=opts.seed)
        b_d, _ = _sup(p, frame.boundary_d(), E, tp)
        if b_d <= 0.0:
            logger.debug("Frame T=%.6g (b_d=%.6g)", T, b_d)
            return frame
        T *= 2.0
    raise GeometryBroken(f"b_d stays positive up to T={opts.T_cap}*r_k_lambda",
                         witness={"T": T / 2.0, "E": E})


# ------------------------------------------------------------------ #
# Peak selection                                                     #
# ------------------------------------------------------------------ #

@dataclass
class Peak:
    """Maximizer of R^E_rho over span{e_1..e_k, v} with nonnegative v-coefficient"""
    u: Field
    coords: np.ndarray      # (s_1, ..., s_k, t) in the ||.||_1-orthonormal basis
    value: float
    form: np.ndarray        # assembled DR^E_rho(u)
    grad_norm: float        # subspace gradient norm
    iterations: int


def peak_selection(p: ProblemSpec, frame: LinkingFrame, v: Field, E: float, tp: TruncationParams,
                   warm: Optional[np.ndarray] = None, tol_inner: float = 1e-9,
                   max_inner: int = 200, tol_stall: float = 1e-6) -> Peak:
    """
    Quasi-Newton ascent of R^E_rho in the k+1 coordinates of span{e_1..e_k, v}

    The default start is the point r_k_lambda v. Coordinates are bounded by
    4T; reaching the bound means the quotient does not decay along the subspace.
    A line search that stalls before tol_inner is reached (rounding limit near an
    already converged peak) is restarted once with fresh curvature memory; the
    point is then accepted when the subspace gradient is below
    tol_stall (1 + |value|).

    Raises:
        MaxIterInner: the iteration budget runs out, or a stalled search ends
            with the subspace gradient above tol_stall (1 + |value|)
        UnboundedAscent: the ascent runs to the coordinate bound
    """
    spec, k = p.spectral, frame.k
    basis = np.column_stack([spec.unit_mode(i) for i in range(k)] + [v])

    if warm is None:
        x0 = np.zeros(k + 1)
        x0[-1] = frame.r_k_lambda if frame.r_k_lambda > tp.rho else 2.0 * tp.rho
    else:
        x0 = np.array(warm, dtype=float)
        x0[-1] = max(x0[-1], 0.0)
        if np.linalg.norm(x0) <= tp.rho:
            x0[-1] = max(frame.r_k_lambda, 2.0 * tp.rho)

    def objective(x):
        value, form = rayleigh_trunc_form(p, basis @ x, E, tp)
        return -value, -(basis.T @ form)

    cap = 4.0 * frame.T
    bounds = [(-cap, cap)] * k + [(0.0, cap)]

    def ascend(start):
        res = scipy.optimize.minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds,
                                      options={"maxiter": max_inner, "gtol": tol_inner, "ftol": 0.0})
        grad = -res.jac
        if res.x[-1] <= 0.0 and grad[-1] < 0.0:
            grad[-1] = 0.0
        return res, float(np.linalg.norm(grad))

    res, grad_norm = ascend(x0)
    iterations = int(res.nit)
    # status 1: iteration or evaluation budget exhausted
    stalled = not res.success and res.status != 1
    if stalled and grad_norm > 1e3 * tol_inner:
        retry, retry_norm = ascend(res.x)
        iterations += int(retry.nit)
        if retry_norm <= grad_norm:
            res, grad_norm = retry, retry_norm
            stalled = not res.success and res.status != 1

    x = res.x
    if np.any(np.abs(x) >= cap * (1.0 - 1e-9)):
        raise UnboundedAscent("Peak selection ran to the coordinate bound",
                              witness={"coords": x.tolist(), "bound": cap})

    if not res.success and grad_norm > 1e3 * tol_inner:
        if stalled and grad_norm <= tol_stall * (1.0 + abs(res.fun)):
            logger.debug("Peak selection stalled at gradient %.3e (%s); accepted", grad_norm, res.message)
        else:
            raise MaxIterInner(f"Peak selection stopped: {res.message}",
                               witness={"grad_norm": grad_norm, "iterations": iterations})

    u = basis @ x
    value, form = rayleigh_trunc_form(p, u, E, tp)
    return Peak(u=u, coords=x, value=value, form=form, grad_norm=grad_norm, iterations=iterations)


def peak_coordinates(spec: SpectralData, u: Field) -> Tuple[Field, np.ndarray]:
    """W+ direction of u and its coordinates (s_1..s_k, t) for a warm start"""
    u_plus, _ = split(spec, u)
    plus = norm1(spec, u_plus)[2]
    if plus == 0.0:
        raise ValueError("Warm start has no W+ component")
    c = spec.coefficients(u)
    s = c[:spec.k] * np.sqrt(spec.weights[:spec.k])
    return u_plus / plus, np.concatenate((s, [plus]))


# ------------------------------------------------------------------ #
# Solver                                                             #
# ------------------------------------------------------------------ #

@dataclass
class SolverOptions:
    tol_grad: float = 1e-6
    tol_E: float = 1e-8
    tol_inner: float = 1e-9
    tol_collapse: float = 1e-8
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    newton_basin: float = 1e-3
    max_outer: int = 500
    max_inner: int = 200
    armijo_c: float = 1e-4
    armijo_max: int = 40
    metric: str = "h1"
    multi_start: int = 1
    seed: int = 0
    workers: int = 1
    T_factor: float = 4.0
    T_cap: float = 2.0**10
    rho_factor: float = 0.5
    linking_samples: int = 33
    plus_samples: int = 64
    embed_restarts: int = 4
    path_points: int = 33
    max_iter: int = 2000

    @classmethod
    def from_config(cls, section: Dict[str, Any]) -> "SolverOptions":
        """Pick the option fields out of a configuration section"""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{key: value for key, value in section.items() if key in names})


@dataclass
class TraceRecord:
    iteration: int
    value: float
    residual: float
    norm1: float
    lq_norm: float
    step: float = 0.0


@dataclass
class SaddleResult:
    """Critical point u with multiplier mu at prescribed energy"""
    u: Field
    mu: float
    E_target: float
    E_achieved: float
    dual_residual: float
    norm1: float
    iterations: int
    converged: bool
    trace: List[TraceRecord]
    rho: float = 0.0
    T: float = 0.0
    k: int = 0
    norm1_plus: float = 0.0
    norm1_minus: float = 0.0
    h_plus: float = 0.0
    h_minus: float = 0.0
    lq_norm: float = 0.0
    algo: str = "lmm"
    newton_iterations: int = 0

    def summary(self) -> Dict[str, Any]:
        """Scalar fields only"""
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
                if f.name not in ("u", "trace")}


def make_result(p: ProblemSpec, refined: Refinement, E: float, tp: TruncationParams, T: float,
                trace: List[TraceRecord], iterations: int, opts: SolverOptions, algo: str) -> SaddleResult:
    """Assemble a SaddleResult and decide convergence from the refined pair"""
    u, mu = refined.u, refined.mu
    spec = p.spectral
    u_plus, u_minus = split(spec, u)
    plus, minus, total = norm1(spec, u)
    E_achieved = energy(p, u, mu)
    residual = grad_energy(p, u, mu).dual_residual
    converged = bool(residual <= opts.tol_grad * (1.0 + total) and abs(E_achieved - E) <= opts.tol_E
                     and mu > 0.0 and total > tp.rho)
    return SaddleResult(
        u=u, mu=mu, E_target=E, E_achieved=E_achieved, dual_residual=residual, norm1=total,
        iterations=iterations, converged=converged, trace=trace, rho=tp.rho, T=T, k=spec.k,
        norm1_plus=plus, norm1_minus=minus, h_plus=h_lambda(p.K, p.M, p.lam, u_plus),
        h_minus=h_lambda(p.K, p.M, p.lam, u_minus), lq_norm=lq_power(p, u) ** (1.0 / p.q),
        algo=algo, newton_iterations=refined.iterations)


def finish(p: ProblemSpec, u: Field, E: float, tp: TruncationParams, T: float, trace: List[TraceRecord],
           iterations: int, converged: bool, opts: SolverOptions, algo: str) -> SaddleResult:
    """Hand the descent iterate to Newton, or fail when it is outside the basin"""
    residual = trace[-1].residual
    if not converged:
        if residual > opts.newton_basin:
            error = MaxIter if algo == "mpa" else MaxIterOuter
            raise error(f"{algo} stopped after {iterations} iterations with residual {residual:.3e}",
                               witness={"residual": residual, "iterations": iterations})
        logger.warning("%s stopped after %d iterations at residual %.3e; refining with Newton",
                       algo, iterations, residual)
    if norm1(p.spectral, u)[2] <= tp.rho:
        raise CollapseToZero("Descent ended inside the truncation ball", witness={"rho": tp.rho})

    refined = newton_refine(p, u, rayleigh(p, u, E), E, tol=opts.newton_tol, tol_E=opts.newton_tol,
                            max_iter=opts.newton_max_iter)
    # the refined point closes the trace
    value, form = rayleigh_form(p, refined.u, E)
    trace.append(TraceRecord(trace[-1].iteration + 1, value, dual_norm(p, form),
                             norm1(p.spectral, refined.u)[2], lq_power(p, refined.u) ** (1.0 / p.q)))
    report = cerami_monitor(trace)
    for finding in report.findings:
        logger.warning("Cerami monitor: %s", finding)

    result = make_result(p, refined, E, tp, T, trace, iterations, opts, algo)
    logger.info("%s at E=%g: mu=%.12g residual=%.3e converged=%s",
                algo, E, result.mu, result.dual_residual, result.converged)
    return result


def _solve_lmm(p: ProblemSpec, E: float, tp: TruncationParams, opts: SolverOptions,
               frame: LinkingFrame, warm: Optional[Field]) -> SaddleResult:
    spec = p.spectral
    if warm is None:
        v, coords = frame.u_bar_plus, None
    else:
        v, coords = peak_coordinates(spec, warm)

    def select(direction, start):
        return peak_selection(p, frame, direction, E, tp, warm=start,
                              tol_inner=opts.tol_inner, max_inner=opts.max_inner, tol_stall=opts.tol_grad)

    peak = select(v, coords)
    trace: List[TraceRecord] = []
    tau = None
    converged = False
    m = 0
    for m in range(opts.max_outer + 1):
        n1 = norm1(spec, peak.u)[2]
        residual = dual_norm(p, peak.form)
        lq = lq_power(p, peak.u) ** (1.0 / p.q)
        trace.append(TraceRecord(m, peak.value, residual, n1, lq, tau or 0.0))
        if lq < opts.tol_collapse:
            raise CollapseToZero("|u|_Lq collapsed along the descent", witness={"iteration": m, "lq_norm": lq})
        if residual <= opts.tol_grad * (1.0 + n1):
            converged = True
            break
        if m == opts.max_outer:
            break
        if m % 25 == 0:
            logger.debug("lmm %d: value=%.12g residual=%.3e norm=%.6g", m, peak.value, residual, n1)

        d_plus, _ = split(spec, -riesz(p, peak.form, opts.metric))
        d_t = d_plus - spec.inner1(d_plus, v) * v
        slope = peak.coords[-1] * float(peak.form @ d_t)
        d_norm = math.sqrt(max(spec.inner1(d_t, d_t), 0.0))
        if slope >= 0.0 or d_norm == 0.0:
            logger.warning("No descent direction on the sphere at iteration %d", m)
            break

        tau = min(1.0, 0.5 / d_norm) if tau is None else min(2.0 * tau, 0.5 / d_norm)
        for _ in range(opts.armijo_max):
            v_trial = normalize1(spec, v + tau * d_t)
            trial = select(v_trial, peak.coords)
            if trial.value <= peak.value + opts.armijo_c * tau * slope:
                v, peak = v_trial, trial
                break
            tau *= 0.5
        else:
            logger.warning("Armijo backtracking failed at iteration %d", m)
            break

    return finish(p, peak.u, E, tp, frame.T, trace, m, converged, opts, "lmm")


def start_directions(spec: SpectralData, count: int, seed: int = 0) -> List[Field]:
    """e_{k+1}, e_{k+2}, their mixture, then random low-mode W+ mixtures"""
    k, n = spec.k, spec.size
    directions = [spec.unit_mode(k)]
    if count > 1 and k + 1 < n:
        directions.append(spec.unit_mode(k + 1))
    if count > 2 and k + 1 < n:
        directions.append(normalize1(spec, spec.unit_mode(k) + spec.unit_mode(k + 1)))
    rng = np.random.default_rng(seed)
    low = min(6, n - k)
    sqrt_w = np.sqrt(spec.weights)
    while len(directions) < count:
        y = np.zeros(n)
        y[k:k + low] = rng.standard_normal(low) / np.arange(1, low + 1)
        directions.append(normalize1(spec, spec.from_coefficients(y / sqrt_w)))
    return directions[:count]


def merge_results(results: List[SaddleResult]) -> SaddleResult:
    """Converged first, then lowest dual residual, then highest mu"""
    return min(results, key=lambda r: (not r.converged, r.dual_residual, -r.mu))


def _multi_start(p: ProblemSpec, E: float, tp: TruncationParams, opts: SolverOptions,
                 frame: LinkingFrame) -> SaddleResult:
    directions = start_directions(p.spectral, opts.multi_start, opts.seed)

    def run(direction):
        try:
            return _solve_lmm(p, E, tp, opts, frame.with_direction(direction), None)
        except ConvergenceError as e:
            logger.warning("Start failed: %s", e)
            return e

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            outcomes = list(pool.map(run, directions))
    else:
        outcomes = [run(d) for d in directions]

    results = [o for o in outcomes if isinstance(o, SaddleResult)]
    if not results:
        raise outcomes[0]
    best = merge_results(results)
    logger.info("Multi-start: %d/%d runs finished, mu values %s", len(results), len(outcomes),
                ", ".join(f"{r.mu:.8g}" for r in results))
    return best


@dataclass
class Geometry:
    constants: Constants
    tp: TruncationParams
    frame: LinkingFrame


def setup_linking(p: ProblemSpec, E: float, opts: Optional[SolverOptions] = None,
                  E_min: Optional[float] = None, constants: Optional[Constants] = None) -> Geometry:
    """
    Constants, rho = rho_factor min(r_k_lambda, sqrt(2 E_min)) and a frame valid at E_min

    The quotient decreases in E, so a frame with b_d <= 0 at the lowest energy
    serves every energy above it.
    """
    opts = opts or SolverOptions()
    constants = constants or estimate_constants(p, restarts=opts.embed_restarts, seed=opts.seed)
    E_min = E if E_min is None else E_min
    constants.check_energy(E)
    constants.check_energy(E_min)
    tp = TruncationParams(opts.rho_factor * min(constants.r_k_lambda, constants.rho_est(E_min)))
    frame = choose_frame(p, E_min, tp, constants, opts)
    return Geometry(constants, tp, frame)


def solve_saddle(p: ProblemSpec, E: float, tp: Optional[TruncationParams] = None,
                 opts: Optional[SolverOptions] = None, constants: Optional[Constants] = None,
                 frame: Optional[LinkingFrame] = None, warm: Optional[Field] = None) -> SaddleResult:
    """
    Local minimax method on the truncated quotient R^E_rho

    The outer loop moves the direction v on the unit sphere of W+ by projected
    gradient steps with Armijo backtracking on v -> max R^E_rho(span{W-, v});
    the inner loop is the peak selection. The final iterate is refined by
    Newton's method so that E_mu(u) = E and DE_mu(u) = 0 hold to tolerance.

    Raises:
        EnergyOutOfRange, GeometryBroken: preconditions
        MaxIterOuter, CollapseToZero, MaxIterInner, UnboundedAscent: the search failed
    """
    opts = opts or SolverOptions()
    if constants is None or tp is None or frame is None:
        geometry = setup_linking(p, E, opts, constants=constants)
        constants = geometry.constants
        tp = tp or geometry.tp
        frame = frame or geometry.frame
    constants.check_energy(E)
    bound = min(constants.r_k_lambda, constants.rho_est(E))
    if not tp.rho < bound:
        raise GeometryBroken(f"rho={tp.rho!r} must be below min(r_k_lambda, sqrt(2E))={bound!r}",
                             witness={"rho": tp.rho, "bound": bound})

    if opts.multi_start > 1 and warm is None:
        return _multi_start(p, E, tp, opts, frame)
    return _solve_lmm(p, E, tp, opts, frame, warm)
