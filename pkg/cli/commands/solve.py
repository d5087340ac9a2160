"""
solve subcommand
"""

import dataclasses

import numpy as np

from core.minimax import SaddleResult, setup_linking, solve_saddle, verify_linking_values
from core.mountain_pass import solve_mountain_pass_path


def register(subparsers, common):
    parser = subparsers.add_parser("solve", parents=[common], help="saddle point at one prescribed energy")
    parser.add_argument("--E", type=float, help="prescribed energy")
    parser.add_argument("--E-frac", dest="E_frac", type=float, help="energy as a fraction of E_k_lambda")
    parser.set_defaults(handler=run_solve)


def profile_rows(mesh, u):
    """(x, u(x)) including the boundary nodes"""
    x = np.concatenate(([0.0], mesh.nodes, [1.0]))
    values = np.concatenate(([0.0], u, [0.0]))
    return list(zip(x, values))


def result_payload(result: SaddleResult):
    return {
        "result": result.summary(),
        "u": result.u,
        "trace": [dataclasses.asdict(record) for record in result.trace],
    }


def run_solve(args, context) -> int:
    p = context.problem()
    opts = context.options()
    constants = context.constants()
    E = context.target_energy()
    algo = context.config.get("solver", "algo")

    geometry = setup_linking(p, E, opts, constants=constants)
    values = verify_linking_values(p, geometry.frame, E, geometry.tp, plus_samples=opts.plus_samples, seed=opts.seed)

    if algo == "mpa":
        result = solve_mountain_pass_path(p, E, geometry.tp, opts, constants)
    else:
        result = solve_saddle(p, E, geometry.tp, opts, constants, geometry.frame)

    payload = result_payload(result)
    payload["linking"] = dataclasses.asdict(values)
    payload["constants"] = constants.as_dict()
    payload["lambda"] = p.lam
    context.writer.write_json("solution.json", payload)
    context.writer.write_csv("profile.csv", ("x", "u"), profile_rows(p.mesh, result.u))

    print(f"{algo} at E={E:.10g}: mu={result.mu:.15g}")
    print(f"  converged={result.converged} residual={result.dual_residual:.3e} "
          f"|E - E_target|={abs(result.E_achieved - E):.3e}")
    print(f"  ||u||_1={result.norm1:.10g} (plus {result.norm1_plus:.6g}, minus {result.norm1_minus:.6g}) "
          f"rho={result.rho:.6g} iterations={result.iterations}")
    print(f"  linking values: b={values.b:.6g} a={values.a:.6g}")
    return 0 if result.converged else 3
