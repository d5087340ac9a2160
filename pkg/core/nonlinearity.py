"""
Nonlinearity registry and numerical checks of the growth assumptions (A1)-(A3)
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from core.errors import InvalidParameters
from core.mesh import PointwiseFunction

logger = logging.getLogger(__name__)

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]

_X_SAMPLES = np.linspace(0.0, 1.0, 1001)


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """g(x, s), its primitive G and its s-derivative, with the exponents of (A1)-(A3)"""
    name: str
    g: PointwiseFunction
    G: PointwiseFunction
    dg_ds: PointwiseFunction
    gamma: float
    alpha: float
    R0: float
    c_min: float = float("nan")
    c_max: float = float("nan")
    growth: Optional[Callable[[float], float]] = field(default=None, repr=False)
    params: Dict[str, float] = field(default_factory=dict)

    def growth_constant(self, eps: float) -> float:
        """
        C(eps) with G(x, s) <= eps/2 s^2 + C(eps) |s|^gamma

        Closed form when the registry entry supplies one, otherwise the supremum
        over a sample grid.
        """
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if self.growth is not None:
            return float(self.growth(eps))
        s = np.concatenate((-np.logspace(-6, 3, 400), np.logspace(-6, 3, 400)))
        X, S = np.meshgrid(np.linspace(0.0, 1.0, 21), s, indexing="ij")
        excess = (self.G(X, S) - 0.5 * eps * S**2) / np.abs(S) ** self.gamma
        return float(max(np.max(excess), 0.0))


def _coefficient(c: Coefficient):
    """Turn a constant or a function of x into (callable, c_min, c_max)"""
    if callable(c):
        values = np.asarray(c(_X_SAMPLES), dtype=float)
        return c, float(values.min()), float(values.max())
    value = float(c)
    return (lambda x: value), value, value


def pure_power(gamma: float, c: Coefficient = 1.0) -> Nonlinearity:
    """
    g = c(x) |s|^(gamma-2) s, G = c(x) |s|^gamma / gamma

    Args:
        gamma: Exponent, must exceed 2
        c: Positive constant or function of x bounded below by a positive number
    """
    if gamma <= 2:
        raise InvalidParameters(f"pure_power needs gamma > 2, got {gamma}")
    coef, c_min, c_max = _coefficient(c)
    if c_min <= 0:
        raise InvalidParameters(f"pure_power needs c(x) >= c_min > 0, got c_min={c_min}")

    return Nonlinearity(
        name="pure_power",
        g=lambda x, s: coef(x) * np.abs(s) ** (gamma - 2) * s,
        G=lambda x, s: coef(x) * np.abs(s) ** gamma / gamma,
        dg_ds=lambda x, s: coef(x) * (gamma - 1) * np.abs(s) ** (gamma - 2),
        gamma=float(gamma),
        alpha=float(gamma),
        R0=1.0,
        c_min=c_min,
        c_max=c_max,
        growth=lambda eps: c_max / gamma,
        params={"gamma": float(gamma), "c_min": c_min, "c_max": c_max},
    )


def power_sum(gamma: float, beta: float, c: Coefficient = 1.0, d: float = 1.0) -> Nonlinearity:
    """
    g = c(x) |s|^(gamma-2) s + d |s|^(beta-2) s with 2 < beta < gamma

    The lower power sets the Ambrosetti-Rabinowitz exponent alpha = beta.
    """
    if not 2 < beta < gamma:
        raise InvalidParameters(f"power_sum needs 2 < beta < gamma, got beta={beta}, gamma={gamma}")
    if d <= 0:
        raise InvalidParameters(f"power_sum needs d > 0, got {d}")
    coef, c_min, c_max = _coefficient(c)
    if c_min <= 0:
        raise InvalidParameters(f"power_sum needs c(x) >= c_min > 0, got c_min={c_min}")

    def growth(eps: float) -> float:
        # d|s|^beta/beta <= eps/2 s^2 below s_star, <= (d/beta) s_star^(beta-gamma) |s|^gamma above
        s_star = (eps * beta / (2.0 * d)) ** (1.0 / (beta - 2.0))
        return c_max / gamma + (d / beta) * s_star ** (beta - gamma)

    return Nonlinearity(
        name="power_sum",
        g=lambda x, s: coef(x) * np.abs(s) ** (gamma - 2) * s + d * np.abs(s) ** (beta - 2) * s,
        G=lambda x, s: coef(x) * np.abs(s) ** gamma / gamma + d * np.abs(s) ** beta / beta,
        dg_ds=lambda x, s: (coef(x) * (gamma - 1) * np.abs(s) ** (gamma - 2)
                            + d * (beta - 1) * np.abs(s) ** (beta - 2)),
        gamma=float(gamma),
        alpha=float(beta),
        R0=1.0,
        c_min=c_min,
        c_max=c_max,
        growth=growth,
        params={"gamma": float(gamma), "beta": float(beta), "c_min": c_min, "c_max": c_max, "d": float(d)},
    )


def custom(g: PointwiseFunction, G: PointwiseFunction, dg_ds: PointwiseFunction,
           gamma: float, alpha: float, R0: float, name: str = "custom") -> Nonlinearity:
    """Plugin hook for a user supplied nonlinearity; no checks are made here"""
    return Nonlinearity(name=name, g=g, G=G, dg_ds=dg_ds,
                        gamma=float(gamma), alpha=float(alpha), R0=float(R0))


NONLINEARITIES: Dict[str, Callable[..., Nonlinearity]] = {
    "pure_power": pure_power,
    "power_sum": power_sum,
}


def get_nonlinearity(name: str, **params) -> Nonlinearity:
    """Build a registry entry by name"""
    if name not in NONLINEARITIES:
        raise InvalidParameters(f"Unknown nonlinearity: {name}")
    try:
        return NONLINEARITIES[name](**params)
    except TypeError as e:
        raise InvalidParameters(f"Bad parameters for {name}: {params}") from e


@dataclass
class AssumptionCheck:
    """Outcome of one assumption on the sample grid"""
    name: str
    passed: bool
    estimate: float
    witness: Optional[Dict[str, float]] = None
    note: str = ""


@dataclass
class AssumptionReport:
    nonlinearity: str
    checks: List[AssumptionCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> AssumptionCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def format(self) -> str:
        """Plain-text pass/fail report"""
        lines = [f"nonlinearity: {self.nonlinearity}"]
        for item in self.checks:
            status = "PASS" if item.passed else "FAIL"
            line = f"  {item.name:<10} {status}  estimate={item.estimate:.6g}"
            if item.note:
                line += f"  ({item.note})"
            if item.witness:
                point = ", ".join(f"{key}={value:.6g}" for key, value in item.witness.items())
                line += f"  witness: {point}"
            lines.append(line)
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def default_s_grid() -> np.ndarray:
    positive = np.logspace(-8, 2, 201)
    return np.concatenate((-positive[::-1], [0.0], positive))


def default_x_grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, 21)


def _witness(X, S, mask) -> Dict[str, float]:
    i = tuple(np.argwhere(mask)[0])
    return {"x": float(X[i]), "s": float(S[i])}


def check_assumptions(nl: Nonlinearity, s_grid: Optional[np.ndarray] = None,
                      x_grid: Optional[np.ndarray] = None, tol_A1: float = 1e-6,
                      tol_growth: float = 0.1) -> AssumptionReport:
    """
    Evaluate (A1)-(A3) and the primitive relation on a grid

    Failures are reported as data with a witness point; nothing is raised.
    """
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    x_grid = default_x_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    X, S = np.meshgrid(x_grid, s_grid, indexing="ij")
    g, G = nl.g(X, S), nl.G(X, S)
    checks = []

    # primitive: G(x, s) = int_0^s g(x, t) dt, by 32-point Gauss-Legendre on [0, s]
    xi, w = np.polynomial.legendre.leggauss(32)
    T = 0.5 * S[..., None] * (1.0 + xi)
    integral = 0.5 * S * np.sum(w * nl.g(X[..., None], T), axis=-1)
    defect = np.abs(G - integral) / (1.0 + np.abs(G))
    at_zero = np.max(np.abs(nl.G(x_grid, np.zeros_like(x_grid))))
    ok = bool(at_zero <= 1e-14 and np.max(defect) <= 1e-6)
    checks.append(AssumptionCheck(
        "primitive", ok, float(np.max(defect)),
        None if ok else _witness(X, S, defect == np.max(defect)),
        note=f"|G(x,0)|={at_zero:.3g}"))

    # (A1): g(x,0) = 0 and limsup g/s <= 0 as s -> 0
    g_zero = np.max(np.abs(nl.g(x_grid, np.zeros_like(x_grid))))
    probes = 10.0 ** -np.arange(2, 15)
    Xp, Sp = np.meshgrid(x_grid, np.concatenate((probes, -probes)), indexing="ij")
    ratios = nl.g(Xp, Sp) / Sp
    per_scale = np.maximum(ratios[:, :len(probes)].max(axis=0), ratios[:, len(probes):].max(axis=0))
    estimate = float(per_scale[-1])
    decaying = bool(np.all(np.diff(per_scale) <= 0) and per_scale[-1] <= 1e-3 * abs(per_scale[0]))
    ok = bool(g_zero == 0.0 and (estimate <= tol_A1 or decaying))
    checks.append(AssumptionCheck(
        "A1", ok, estimate,
        None if ok else {"s": float(probes[-1]), "g/s": estimate, "g(x,0)": float(g_zero)},
        note="limsup g/s as s->0"))

    # (A2): |g| <= C (1 + |s|^(gamma-1)); the ratio must not keep growing in the tail
    ratio = np.abs(g) / (1.0 + np.abs(S) ** (nl.gamma - 1))
    s_max = np.max(np.abs(s_grid))
    tail = np.abs(S) >= 0.5 * s_max
    C = float(np.max(ratio))
    body_max = float(np.max(ratio[~tail])) if np.any(~tail) else 0.0
    tail_max = float(np.max(ratio[tail]))
    ok = bool(np.isfinite(C) and tail_max <= (1.0 + tol_growth) * max(body_max, 1e-300))
    checks.append(AssumptionCheck(
        "A2", ok, C, None if ok else _witness(X, S, tail & (ratio == tail_max)),
        note="constant C"))

    # (A3): G > 0 for s != 0, and alpha G <= g s for |s| >= R0
    nonzero = S != 0.0
    bad = nonzero & ~(G > 0.0)
    ok_positive = not np.any(bad)
    checks.append(AssumptionCheck(
        "A3-pos", ok_positive, float(np.min(G[nonzero])),
        None if ok_positive else _witness(X, S, bad),
        note="min G over s != 0"))

    large = np.abs(S) >= nl.R0
    slack = g * S - nl.alpha * G
    scale = 1e-12 * (np.abs(g * S) + np.abs(nl.alpha * G))
    bad = large & (slack < -scale)
    ok_ar = not np.any(bad)
    checks.append(AssumptionCheck(
        "A3-AR", ok_ar, float(np.min(slack[large])) if np.any(large) else 0.0,
        None if ok_ar else _witness(X, S, bad),
        note="min (g s - alpha G) for |s| >= R0"))

    report = AssumptionReport(nl.name, checks)
    logger.info("Assumption check for %s: %s", nl.name, "pass" if report.passed else "fail")
    return report
