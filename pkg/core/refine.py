"""
Newton refinement of the prescribed-energy system DE_mu(u) = 0, E_mu(u) = E
"""

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg

from core.errors import NoProgress, SingularJacobian
from core.functionals import ProblemSpec, dual_norm, energy, energy_form, energy_tangent, lq_power, power_form
from core.mesh import Field

logger = logging.getLogger(__name__)

EPS_REG = 1e-10


@dataclass
class Refinement:
    """Refined pair; unpacks as (u, mu)"""
    u: Field
    mu: float
    iterations: int
    dual_residual: float
    energy_defect: float

    def __iter__(self) -> Iterator:
        return iter((self.u, self.mu))


def _residuals(p: ProblemSpec, u: Field, mu: float, E: float):
    F = energy_form(p, u, mu)
    return F, energy(p, u, mu) - E


def newton_refine(p: ProblemSpec, u0: Field, mu0: float, E: float, tol: float = 1e-10,
                  tol_E: float = 1e-10, max_iter: int = 30, eps_reg: float = EPS_REG,
                  max_backtracks: int = 30) -> Refinement:
    """
    Newton's method on the (n+1)-dimensional system in (u, mu)

        DE_mu(u) = 0        (assembled against the hat functions)
        E_mu(u) - E = 0

    The |u|^(q-2) factor of the Jacobian is regularized with eps_reg; residuals
    are always evaluated exactly. The step is damped by backtracking on the merit
    ||DE_mu(u)||_*^2 + (E_mu(u) - E)^2.

    Raises:
        SingularJacobian: the bordered Jacobian cannot be solved
        NoProgress: backtracking fails to reduce the merit
    """
    u, mu = np.array(u0, dtype=float), float(mu0)
    F, c = _residuals(p, u, mu, E)
    residual = dual_norm(p, F)
    merit = residual**2 + c**2

    iteration = 0
    while not (residual <= tol and abs(c) <= tol_E):
        if iteration >= max_iter:
            raise NoProgress(
                f"Newton did not converge in {max_iter} iterations",
                witness={"dual_residual": residual, "energy_defect": c, "mu": mu})
        iteration += 1

        n = p.mesh.n
        J = np.empty((n + 1, n + 1))
        J[:n, :n] = energy_tangent(p, u, mu, eps_reg=eps_reg)
        J[:n, n] = -power_form(p, u)
        J[n, :n] = F
        J[n, n] = -lq_power(p, u) / p.q
        rhs = -np.concatenate((F, [c]))
        try:
            step = scipy.linalg.solve(J, rhs)
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise SingularJacobian("Bordered Jacobian is singular",
                                   witness={"iteration": iteration, "mu": mu}) from e
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("Newton step is not finite", witness={"iteration": iteration, "mu": mu})

        alpha = 1.0
        for _ in range(max_backtracks):
            u_trial, mu_trial = u + alpha * step[:n], mu + alpha * step[n]
            F_trial, c_trial = _residuals(p, u_trial, mu_trial, E)
            residual_trial = dual_norm(p, F_trial)
            merit_trial = residual_trial**2 + c_trial**2
            if merit_trial < (1.0 - 1e-4 * alpha) * merit:
                break
            alpha *= 0.5
        else:
            raise NoProgress("Line search failed to reduce the merit",
                             witness={"iteration": iteration, "merit": merit})

        u, mu = u_trial, mu_trial
        F, c, residual, merit = F_trial, c_trial, residual_trial, merit_trial
        logger.debug("newton %d: step=%.3g residual=%.3e defect=%.3e", iteration, alpha, residual, c)

    if iteration:
        logger.info("Newton refined in %d iterations: residual=%.3e, energy defect=%.3e, mu=%.12g",
                    iteration, residual, c, mu)
    return Refinement(u=u, mu=mu, iterations=iteration, dual_residual=residual, energy_defect=c)
