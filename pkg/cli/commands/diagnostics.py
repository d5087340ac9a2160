"""
fiber, check-gradients, check-assumptions and embed subcommands

The check subcommands exit with 1 when a check fails.
"""

import numpy as np

from core.functionals import TruncationParams
from core.nonlinearity import check_assumptions
from core.spectral import norm1
from core.verify import FUNCTIONALS, embedding_constant, fd_gradient_check, fibering_profile, random_fields

GRADIENT_TOLERANCES = {"energy": 1e-6, "rayleigh": 1e-6, "rayleigh_trunc": 1e-5}


def register(subparsers, common):
    parser = subparsers.add_parser("fiber", parents=[common], help="profile of t -> R^E(t e_{k+1})")
    parser.add_argument("--E", type=float)
    parser.add_argument("--t-max", dest="t_max", type=float)
    parser.add_argument("--t-points", dest="t_points", type=int)
    parser.set_defaults(handler=run_fiber)

    parser = subparsers.add_parser("check-gradients", parents=[common],
                                   help="assembled derivatives against central differences")
    parser.add_argument("--E", type=float)
    parser.add_argument("--functional", choices=("all",) + FUNCTIONALS)
    parser.add_argument("--samples", dest="gradient_samples", type=int, help="random (u, v) pairs per functional")
    parser.add_argument("--h", type=float, help="difference step")
    parser.set_defaults(handler=run_check_gradients)

    parser = subparsers.add_parser("check-assumptions", parents=[common],
                                   help="growth assumptions of the nonlinearity on a grid")
    parser.set_defaults(handler=run_check_assumptions)

    parser = subparsers.add_parser("embed", parents=[common], help="embedding constant S_r in the norm ||.||_1")
    parser.add_argument("--r", type=float)
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--subspace", choices=("all", "Wplus"))
    parser.set_defaults(handler=run_embed)


def run_fiber(args, context) -> int:
    p = context.problem()
    task = context.config.section("task")
    E = context.config.get("task", "E")
    u = p.spectral.unit_mode(p.k)
    t_grid = np.linspace(task["t_min"], task["t_max"], task["t_points"])
    profile = fibering_profile(p, u, np.zeros(p.mesh.n), E, t_grid)

    context.writer.write_csv("fiber.csv", ("t", "value", "skipped"),
                             zip(profile.t_grid, profile.values, profile.skipped))
    print(f"R^E(t e_{p.k + 1}) at E={E:g}: peak {profile.peak_value:.10g} at t={profile.peak_t:.6g}, "
          f"tail {profile.values[-1]:.6g} at t={profile.t_grid[-1]:.6g}")
    return 0


def run_check_gradients(args, context) -> int:
    p = context.problem()
    task = context.config.section("task")
    rng = np.random.default_rng(context.config.get("solver", "seed"))
    selected = FUNCTIONALS if task["functional"] == "all" else (task["functional"],)
    count = task["gradient_samples"]

    rows, failed = [], False
    for functional in selected:
        worst = 0.0
        for sample in range(count):
            u, v = random_fields(p.spectral, rng.uniform(0.5, 2.0, 2), rng)
            tp = TruncationParams(norm1(p.spectral, u)[2] / 0.75)
            error = fd_gradient_check(p, functional, u, v, task["h"], mu=1.0, E=task["E"], tp=tp)
            rows.append((functional, sample, error))
            worst = max(worst, error)
        ok = worst <= GRADIENT_TOLERANCES[functional]
        failed |= not ok
        print(f"{functional:<15} {'PASS' if ok else 'FAIL'}  worst relative error {worst:.3e} "
              f"(tolerance {GRADIENT_TOLERANCES[functional]:g})")

    context.writer.write_csv("gradients.csv", ("functional", "sample", "rel_error"), rows)
    return 1 if failed else 0


def run_check_assumptions(args, context) -> int:
    report = check_assumptions(context.nonlinearity())
    context.writer.write_json("assumptions.json", {
        "nonlinearity": report.nonlinearity,
        "passed": report.passed,
        "checks": [vars(check) for check in report.checks],
    })
    print(report.format())
    return 0 if report.passed else 1


def run_embed(args, context) -> int:
    p = context.problem()
    task = context.config.section("task")
    value = embedding_constant(p.spectral, task["r"], restarts=task["restarts"], subspace=task["subspace"],
                               mesh=p.mesh, seed=context.config.get("solver", "seed"))
    payload = {"r": task["r"], "subspace": task["subspace"], "S_r": value, "k": p.k}
    if task["r"] == 2.0:
        first = p.k if task["subspace"] == "Wplus" else 0
        payload["spectral_value"] = float(1.0 / np.sqrt(p.spectral.weights[first:].min()))
    context.writer.write_json("embed.json", payload)
    print(f"S_{task['r']:g} on {task['subspace']}: {value:.12g}")
    if "spectral_value" in payload:
        print(f"  spectral value 1/sqrt(min |lambda_i - lambda|): {payload['spectral_value']:.12g}")
    return 0
