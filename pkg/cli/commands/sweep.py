"""
sweep and zero-energy subcommands
"""

import dataclasses

import numpy as np

from cli.app import _float_list
from cli.commands.solve import profile_rows, result_payload
from core.continuation import sweep_energy, zero_energy_limit


def register(subparsers, common):
    parser = subparsers.add_parser("sweep", parents=[common], help="mu(E) over a list of energies")
    parser.add_argument("--E-list", dest="E_list", type=_float_list, help="ascending comma separated energies")
    parser.add_argument("--E-count", dest="E_count", type=int,
                        help="log-spaced energies in (E_low, E_high_frac E_k) when no list is given")
    parser.add_argument("--cold", action="store_true", help="solve every energy independently")
    parser.set_defaults(handler=run_sweep)

    parser = subparsers.add_parser("zero-energy", parents=[common], help="limit E -> 0 for lambda < lambda_1")
    parser.add_argument("--E-start", dest="E_start", type=float)
    parser.add_argument("--steps", type=int, help="number of halvings of E")
    parser.set_defaults(handler=run_zero_energy)


def energy_list(context):
    task = context.config.section("task")
    if task["E_list"]:
        return [float(E) for E in task["E_list"]]
    upper = task["E_high_frac"] * context.constants().E_k_lambda
    return list(np.logspace(np.log10(task["E_low"]), np.log10(upper), task["E_count"]))


def run_sweep(args, context) -> int:
    p = context.problem()
    energies = energy_list(context)
    result = sweep_energy(p, energies, context.options(), context.constants(),
                          cold=context.config.get("task", "cold"))

    rows = [(row.E, row.mu, row.dual_residual, row.iterations, row.converged) for row in result.rows]
    context.writer.write_csv("sweep.csv", ("E", "mu", "residual", "iterations", "converged"), rows)
    context.writer.write_json("sweep.json", {
        "rows": [dataclasses.asdict(row) for row in result.rows],
        "monotone": result.monotone,
        "mu_bar_0": result.mu_bar_0,
        "lambda": p.lam,
    })

    print(f"{'E':>14}  {'mu':>20}  {'residual':>10}  converged")
    for row in result.rows:
        flag = "yes" if row.converged else "no"
        if row.retried:
            flag += " (retried)"
        print(f"{row.E:>14.6g}  {row.mu:>20.12g}  {row.dual_residual:>10.2e}  {flag}")
    print(f"monotone: {result.monotone}")
    if result.mu_bar_0 is not None:
        print(f"extrapolated mu(0): {result.mu_bar_0:.10g}")
    return 0


def run_zero_energy(args, context) -> int:
    p = context.problem()
    task = context.config.section("task")
    result = zero_energy_limit(p, context.options(), E_start=task["E_start"],
                               steps=task["zero_energy_steps"], constants=context.constants())
    solution = result.solution

    payload = result_payload(solution)
    payload.update({
        "mu_bar_0": result.mu_bar_0,
        "rows": [dataclasses.asdict(row) for row in result.rows],
        "cauchy_mu": result.cauchy_mu,
        "cauchy_u": result.cauchy_u,
        "lambda": p.lam,
    })
    context.writer.write_json("zero_energy.json", payload)
    context.writer.write_csv("zero_energy.csv", ("E", "mu", "delta_mu", "delta_u", "converged"),
                             [(r.E, r.mu, r.delta_mu, r.delta_u, r.converged) for r in result.rows])
    context.writer.write_csv("profile.csv", ("x", "u"), profile_rows(p.mesh, solution.u))

    for row in result.rows:
        print(f"E={row.E:<12.6g} mu={row.mu:.12g}  dmu={row.delta_mu:.3g}  du={row.delta_u:.3g}")
    print(f"zero-energy solution: mu={solution.mu:.12g} |E|={abs(solution.E_achieved):.3e} "
          f"residual={solution.dual_residual:.3e} converged={solution.converged}")
    return 0 if solution.converged else 3
