"""
eig and constants subcommands
"""

import math

from core.functionals import discrete_eigenvalues
from core.mesh import build_mesh


def register(subparsers, common):
    parser = subparsers.add_parser("eig", parents=[common], help="discrete Dirichlet eigenvalues vs k^2 pi^2")
    parser.add_argument("--count", dest="eig_count", type=int, help="number of eigenvalues to list")
    parser.set_defaults(handler=run_eig)

    parser = subparsers.add_parser("constants", parents=[common], help="r_k_lambda, E_k_lambda and related constants")
    parser.add_argument("--E", type=float, help="energy at which to evaluate delta_E and rho(E)")
    parser.set_defaults(handler=run_constants)


def run_eig(args, context) -> int:
    problem = context.config.section("problem")
    mesh = build_mesh(problem["n"], problem["quad_order"])
    eigenvalues = discrete_eigenvalues(mesh)
    count = min(context.config.get("task", "eig_count"), len(eigenvalues))

    rows = []
    for i in range(count):
        exact = ((i + 1) * math.pi) ** 2
        rows.append((i + 1, eigenvalues[i], (eigenvalues[i] - exact) / exact))
    context.writer.write_csv("eigenvalues.csv", ("index", "lambda_i", "rel_error"), rows)

    print(f"{'i':>4}  {'lambda_i':>22}  {'rel. error vs i^2 pi^2':>24}")
    for index, value, error in rows:
        print(f"{index:>4}  {value:>22.15g}  {error:>24.3e}")
    return 0


def run_constants(args, context) -> int:
    p = context.problem()
    constants = context.constants()
    E = context.target_energy()
    spec = p.spectral

    payload = {
        "lambda": p.lam,
        "k": spec.k,
        "lambda_k": float(spec.eigenvalues[spec.k - 1]) if spec.k > 0 else None,
        "lambda_k_plus_1": float(spec.eigenvalues[spec.k]),
        "constants": constants.as_dict(),
        "E": E,
        "rho_est": constants.rho_est(E) if E >= 0 else None,
        "delta_E": constants.delta_E(E) if 0 < E < constants.E_k_lambda else None,
    }
    context.writer.write_json("constants.json", payload)

    print(f"lambda = {p.lam:.12g}  (k = {spec.k})")
    for key, value in constants.as_dict().items():
        print(f"  {key:<12} {value:.12g}")
    if payload["delta_E"] is not None:
        print(f"  delta_E({E:g}) = {payload['delta_E']:.12g}, rho(E) = {payload['rho_est']:.12g}")
    else:
        print(f"  E = {E:g} is outside (0, E_k_lambda)")
    return 0
