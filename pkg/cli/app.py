"""
Command line front end: argument parsing, configuration resolution and exit codes
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from core.errors import ConfigError, SaddleError
from core.functionals import ProblemSpec, build_problem, discrete_eigenvalues
from core.mesh import build_mesh
from core.minimax import Constants, SolverOptions, estimate_constants
from core.presets import PresetLibrary
from core.spectral import resolve_lambda
from utils.config_manager import ConfigManager, output_dir
from utils.output_writer import OutputWriter

logger = logging.getLogger(__name__)

# (flag dest, section, key)
FLAG_MAP = [
    ("lambda_frac", "problem", "lambda_frac"),
    ("lam", "problem", "lambda"),
    ("q", "problem", "q"),
    ("gamma", "problem", "gamma"),
    ("c", "problem", "c"),
    ("nonlinearity", "problem", "nonlinearity"),
    ("n", "problem", "n"),
    ("quad_order", "problem", "quad_order"),
    ("algo", "solver", "algo"),
    ("metric", "solver", "metric"),
    ("seed", "solver", "seed"),
    ("multi_start", "solver", "multi_start"),
    ("workers", "solver", "workers"),
    ("k_check", "solver", "k_check"),
    ("max_outer", "solver", "max_outer"),
    ("E", "task", "E"),
    ("E_frac", "task", "E_frac"),
    ("E_list", "task", "E_list"),
    ("E_count", "task", "E_count"),
    ("cold", "task", "cold"),
    ("E_start", "task", "E_start"),
    ("steps", "task", "zero_energy_steps"),
    ("t_max", "task", "t_max"),
    ("t_points", "task", "t_points"),
    ("samples", "task", "samples"),
    ("gradient_samples", "task", "gradient_samples"),
    ("restarts", "task", "restarts"),
    ("r", "task", "r"),
    ("subspace", "task", "subspace"),
    ("functional", "task", "functional"),
    ("h", "task", "h"),
    ("eig_count", "task", "eig_count"),
]


@dataclass
class RunContext:
    """Resolved configuration plus lazily built problem data shared by the commands"""
    config: ConfigManager
    writer: OutputWriter
    presets: PresetLibrary
    _problem: Optional[ProblemSpec] = field(default=None, repr=False)
    _constants: Optional[Constants] = field(default=None, repr=False)

    def options(self) -> SolverOptions:
        solver = self.config.section("solver")
        return SolverOptions.from_config(solver)

    def nonlinearity(self):
        problem = self.config.section("problem")
        params = dict(problem["nonlinearity_params"])
        for key in ("gamma", "c"):
            if problem[key] is not None:
                params[key] = problem[key]
        return self.presets.build_nonlinearity(problem["nonlinearity"], params)

    def problem(self) -> ProblemSpec:
        if self._problem is None:
            problem = self.config.section("problem")
            mesh = build_mesh(problem["n"], problem["quad_order"])
            if problem["lambda"] is not None:
                lam = problem["lambda"]
            else:
                try:
                    lam = resolve_lambda(discrete_eigenvalues(mesh), problem["lambda_frac"])
                except ValueError as e:
                    raise ConfigError(str(e)) from e
            self._problem = build_problem(mesh, lam, problem["q"], self.nonlinearity(),
                                          tol_res=self.config.get("solver", "tol_res"))
            k_check = self.config.get("solver", "k_check")
            if k_check is not None and self._problem.k != k_check:
                raise ConfigError(f"lambda={lam!r} gives k={self._problem.k}, expected {k_check}",
                                  witness={"k": self._problem.k, "k_check": k_check})
        return self._problem

    def constants(self) -> Constants:
        if self._constants is None:
            opts = self.options()
            self._constants = estimate_constants(self.problem(), restarts=opts.embed_restarts, seed=opts.seed)
        return self._constants

    def target_energy(self) -> float:
        """task.E, or task.E_frac times E_k_lambda when E_frac is set"""
        fraction = self.config.get("task", "E_frac")
        if fraction > 0.0:
            return fraction * self.constants().E_k_lambda
        return self.config.get("task", "E")


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from e


def common_arguments() -> argparse.ArgumentParser:
    """Flags shared by every subcommand"""
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("problem")
    group.add_argument("--preset", help="named parameter set from data/presets.json")
    group.add_argument("--config", type=Path, help="JSON configuration file (overrides flags)")
    group.add_argument("--lambda-frac", dest="lambda_frac",
                       help="lambda as a fraction of lambda_1 ('0.5') or 'gap:k:theta'")
    group.add_argument("--lambda", dest="lam", type=float, help="lambda as a plain value")
    group.add_argument("--q", type=float)
    group.add_argument("--gamma", type=float)
    group.add_argument("--c", type=float, help="constant coefficient of the power term")
    group.add_argument("--nonlinearity", help="registry name (pure_power, power_sum)")
    group.add_argument("--n", type=int, help="interior mesh nodes")
    group.add_argument("--quad-order", dest="quad_order", type=int)

    group = common.add_argument_group("solver")
    group.add_argument("--algo", choices=("lmm", "mpa"))
    group.add_argument("--metric", choices=("h1", "norm1"))
    group.add_argument("--seed", type=int)
    group.add_argument("--multi-start", dest="multi_start", type=int)
    group.add_argument("--workers", type=int)
    group.add_argument("--k-check", dest="k_check", type=int, help="expected dimension of W-")
    group.add_argument("--max-outer", dest="max_outer", type=int)

    group = common.add_argument_group("output")
    group.add_argument("--out", help="output directory (default $SADDLE_OUTPUT_DIR or ./output)")
    group.add_argument("--verbose", action="store_true")
    group.add_argument("--quiet", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    from cli.commands import diagnostics, solve, spectrum, sweep

    parser = argparse.ArgumentParser(
        prog="saddle",
        description="Prescribed-energy saddle points of -u'' - lambda u = mu |u|^(q-2) u + g(x, u) on (0, 1)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = common_arguments()
    for module in (spectrum, solve, sweep, diagnostics):
        module.register(subparsers, common)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")


def flag_overrides(args: argparse.Namespace) -> Dict[str, Dict[str, object]]:
    overrides: Dict[str, Dict[str, object]] = {}
    for dest, section, key in FLAG_MAP:
        value = getattr(args, dest, None)
        if value is not None and value is not False:
            overrides.setdefault(section, {})[key] = value
    return overrides


def resolve_config(args: argparse.Namespace, presets: PresetLibrary) -> ConfigManager:
    """Defaults, then preset, then flags, then the --config file"""
    config = ConfigManager()
    if args.preset:
        try:
            config.update(presets.get(args.preset))
        except ValueError as e:
            if isinstance(e, SaddleError):
                raise
            raise ConfigError(str(e)) from e
    config.update(flag_overrides(args))
    if args.config is not None:
        config.load_config(args.config)
    return config


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.verbose, args.quiet)
    try:
        presets = PresetLibrary()
        config = resolve_config(args, presets)
        writer = OutputWriter(output_dir(args.out), config.as_dict())
        context = RunContext(config=config, writer=writer, presets=presets)
        writer.write_config()
        return args.handler(args, context)
    except SaddleError as e:
        logger.error("%s: %s", e.code, e)
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        if e.witness:
            print(f"  witness: {e.witness}", file=sys.stderr)
        return e.exit_code
    except (RuntimeError, ValueError) as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return 2
