#!/usr/bin/env python3

"""
Command-line front end for the weighted interpolation inequality toolkit.

Commands: validate, exponents, solve, verify, eigen, sweep.
Settings precedence: flags > --config JSON file > CKN_* environment > built-in defaults.
Exit codes: 0 success, 1 validation failure or non-convergence, 2 malformed input.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src import __version__
from src.config.settings import BaseConfig, get_config
from src.core import artifacts
from src.core.exponents import (
    CknParams,
    classify_regime,
    corollary_sharp_exponent,
    derive_exponents,
    identity_residuals,
    map_to_general_form,
    validate_ckn,
)
from src.core.radial import FULL_SPHERE, build_grid
from src.core.solver import (
    SolverOptions,
    first_eigenvalue,
    minimize_rho,
    parameter_sweep,
    radial_dirichlet_eigenvalue,
    verify_inequality,
)
from src.utils.exceptions import (
    BaseToolkitException,
    ConfigurationException,
    DegenerateParametersException,
    InputFormatException,
    ParameterValidationException,
    SolverDivergenceException,
)
from src.utils.logging import configure_logging, correlation_scope

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2

COMMANDS = ("validate", "exponents", "solve", "verify", "eigen", "sweep")
PARAM_KEYS = ("N", "p", "q", "r", "mu", "sigma", "s")
SOLVER_KEYS = ("max_iters", "step0", "armijo_c", "armijo_shrink", "tol_energy", "tol_grad",
               "rescale_every", "eps_reg", "seed")
RUN_KEYS = ("tau_min", "tau_max", "n", "solid_angle", "radius", "samples", "C", "workers", "trace")
KNOWN_KEYS = set(PARAM_KEYS) | set(SOLVER_KEYS) | set(RUN_KEYS)

logger = logging.getLogger("ckn_toolkit.cli")


class CLIError(Exception):
    """Base class for CLI errors."""
    def __init__(self, message: str, code: int = EXIT_FAILURE):
        super().__init__(message)
        self.code = code


class InputError(CLIError):
    """Raised for missing or malformed input."""
    def __init__(self, message: str):
        super().__init__(message, code=EXIT_INPUT)


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau_min: float
    tau_max: float
    n: int
    solid_angle: Union[float, Literal["full"]] = FULL_SPHERE


class EigenSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int
    p: float
    q: float
    mu: float = 0.0
    sigma: float = 0.0
    radius: float = 1.0


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Literal["validate", "exponents", "solve", "verify", "eigen", "sweep"]
    params: Optional[CknParams] = None
    eigen: Optional[EigenSpec] = None
    grid: Optional[GridSpec] = None
    solver: SolverOptions
    output: Optional[Path] = None
    format: Literal["json", "csv"] = "json"
    seed: int = 0
    samples: int = 500
    verify_tol: float = 1e-3
    C: Optional[float] = None
    input: Optional[Path] = None
    trace: bool = False
    workers: int = 4

    @model_validator(mode="after")
    def _check_command_inputs(self) -> "RunConfig":
        if self.command in ("validate", "exponents", "solve", "verify") and self.params is None:
            raise ValueError(f"'{self.command}' needs --N --p --q --r")
        if self.command == "eigen" and self.eigen is None:
            raise ValueError("'eigen' needs --N --p --q")
        if self.command == "sweep" and self.input is None:
            raise ValueError("'sweep' needs --input")
        if self.command in ("solve", "verify", "eigen", "sweep") and self.grid is None:
            raise ValueError(f"'{self.command}' needs grid settings")
        return self


def _solid_angle(raw: str) -> Union[float, str]:
    if raw == FULL_SPHERE:
        return raw
    try:
        return float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"solid angle must be a number or 'full', got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("parameters")
    for name in PARAM_KEYS:
        group.add_argument(f"--{name}", type=int if name == "N" else float, default=None)

    group = common.add_argument_group("grid and solver")
    group.add_argument("--tau-min", type=float, default=None)
    group.add_argument("--tau-max", type=float, default=None)
    group.add_argument("--n", type=int, default=None, help="Number of grid nodes.")
    group.add_argument("--solid-angle", type=_solid_angle, default=None,
                       help="Cone cross-section measure, or 'full'.")
    group.add_argument("--seed", type=int, default=None)
    group.add_argument("--max-iters", type=int, default=None)

    group = common.add_argument_group("run")
    group.add_argument("--out", type=Path, default=None, help="Output path; stdout if omitted.")
    group.add_argument("--format", choices=["json", "csv"], default=None)
    group.add_argument("--config", type=Path, default=None, help="JSON file with default settings.")
    group.add_argument("--radius", type=float, default=None, help="Ball radius for 'eigen'.")
    group.add_argument("--samples", type=int, default=None, help="Sample count for 'verify'.")
    group.add_argument("--C", type=float, default=None, help="Candidate constant for 'verify'.")
    group.add_argument("--input", type=Path, default=None, help="JSON array of tuples for 'sweep'.")
    group.add_argument("--trace", action="store_true", default=None, help="Include the energy trace.")
    group.add_argument("--workers", type=int, default=None, help="Threads for 'sweep'.")
    group.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL.")

    parser = argparse.ArgumentParser(
        prog="ckn-toolkit",
        description="Weighted interpolation inequalities: validation, exponents and sharp-constant solves.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(title="Commands", dest="command", required=True)
    helps = {
        "validate": "Check the attainment hypotheses for a parameter tuple.",
        "exponents": "Print every closed-form exponent of a valid tuple.",
        "solve": "Minimize the constrained functional and report rho and the sharp constant.",
        "verify": "Check a candidate constant against seeded radial test functions.",
        "eigen": "First eigenvalue of the power-weight problem on a ball.",
        "sweep": "Solve every tuple in a JSON file and write a CSV table.",
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=helps[command])
    return parser


def merged_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Settings from --config overlaid with explicitly given flags.
    """
    settings: Dict[str, Any] = artifacts.read_config_file(args.config) if args.config else {}
    unknown = sorted(set(settings) - KNOWN_KEYS - {"out", "format", "input"})
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    for key in KNOWN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if args.input is not None:
        settings["input"] = args.input
    return settings


def build_run_config(args: argparse.Namespace, config: BaseConfig) -> RunConfig:
    settings = merged_settings(args)
    command = args.command

    params = None
    if command in ("validate", "exponents", "solve", "verify"):
        missing = [key for key in ("N", "p", "q", "r") if settings.get(key) is None]
        if missing:
            raise InputError(f"'{command}' needs --{' --'.join(missing)}")
        params = CknParams(**{key: settings[key] for key in PARAM_KEYS if settings.get(key) is not None})

    eigen = None
    if command == "eigen":
        missing = [key for key in ("N", "p", "q") if settings.get(key) is None]
        if missing:
            raise InputError(f"'eigen' needs --{' --'.join(missing)}")
        eigen = EigenSpec(**{key: settings[key] for key in ("N", "p", "q", "mu", "sigma", "radius")
                             if settings.get(key) is not None})

    grid_defaults = config.grid_defaults()
    grid = GridSpec(
        tau_min=settings.get("tau_min", grid_defaults["tau_min"]),
        tau_max=settings.get("tau_max", grid_defaults["tau_max"]),
        n=settings.get("n", grid_defaults["n"]),
        solid_angle=settings.get("solid_angle", FULL_SPHERE),
    )
    solver = SolverOptions.from_config(config, **{key: settings.get(key) for key in SOLVER_KEYS})

    output = args.out if args.out is not None else settings.get("out")
    if output is not None and not Path(output).is_absolute():
        output = Path(config.OUTPUT_DIR) / output
    return RunConfig(
        command=command,
        params=params,
        eigen=eigen,
        grid=grid,
        solver=solver,
        output=output,
        format=args.format or settings.get("format", "csv" if command == "sweep" else "json"),
        seed=solver.seed,
        samples=settings.get("samples", config.VERIFY_SAMPLES),
        verify_tol=config.VERIFY_TOL,
        C=settings.get("C"),
        input=settings.get("input"),
        trace=bool(settings.get("trace", False)),
        workers=settings.get("workers", config.SWEEP_WORKERS),
    )


def log_operation(operation: str, details: Dict[str, Any]) -> None:
    logger.info(f"Running {operation}", extra={"context": details})


def _emit(payload: Dict[str, Any], frame: pd.DataFrame, run: RunConfig) -> None:
    if run.format == "csv":
        artifacts.write_table_csv(frame, run.output)
    else:
        artifacts.write_json(payload, run.output)


def _profile_path(output: Path) -> Path:
    return output.with_name(f"{output.stem}_profile.csv")


def run_validate(run: RunConfig) -> int:
    report = validate_ckn(run.params)
    payload = {"command": "validate", "params": run.params.as_dict(), **report.to_dict()}
    _emit(payload, pd.DataFrame([c.to_dict() for c in report.checks]), run)
    return EXIT_OK if report.valid else EXIT_FAILURE


def run_exponents(run: RunConfig) -> int:
    exponents = derive_exponents(run.params)
    payload = {
        "command": "exponents",
        "params": run.params.as_dict(),
        "exponents": exponents.to_dict(),
        "general_form": map_to_general_form(run.params).model_dump(),
        "identity_residuals": identity_residuals(run.params),
        "corollary_sharp_exponent": corollary_sharp_exponent(run.params),
        "regime": classify_regime(run.params),
    }
    frame = pd.DataFrame(sorted(exponents.to_dict().items()), columns=["name", "value"])
    _emit(payload, frame, run)
    return EXIT_OK


def _grid(run: RunConfig, N: int):
    spec = run.grid
    return build_grid(spec.tau_min, spec.tau_max, spec.n, N, spec.solid_angle)


def run_solve(run: RunConfig) -> int:
    result = minimize_rho(run.params, _grid(run, run.params.N), run.solver)
    if run.format == "csv":
        if run.output is None:
            artifacts.write_table_csv(pd.DataFrame({"tau": result.profile.grid.tau,
                                                    "value": result.profile.values}))
        else:
            artifacts.write_profile_csv(result.profile, run.output)
    else:
        artifacts.write_json(artifacts.result_payload(result, run.trace), run.output)
        if run.output is not None:
            artifacts.write_profile_csv(result.profile, _profile_path(run.output))
    if not result.converged:
        print(f"error: minimization did not converge ({result.stop_reason})", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def run_verify(run: RunConfig) -> int:
    grid = _grid(run, run.params.N)
    witnesses: List = []
    C = run.C
    if C is None:
        solved = minimize_rho(run.params, grid, run.solver)
        C = solved.c_sharp
        witnesses.append(solved.profile)
    report = verify_inequality(run.params, C, run.samples, run.seed, grid, run.verify_tol, witnesses)
    payload = {"command": "verify", "params": run.params.as_dict(), **report.to_dict()}
    _emit(payload, pd.DataFrame([report.to_dict()]), run)
    return EXIT_OK if report.violations == 0 else EXIT_FAILURE


def run_eigen(run: RunConfig) -> int:
    spec = run.eigen
    result = first_eigenvalue(spec.N, spec.p, spec.q, spec.mu, spec.sigma, spec.radius, run.grid.n,
                              run.solver, tau_min=run.grid.tau_min, solid_angle=run.grid.solid_angle)
    payload = artifacts.result_payload(result, run.trace)
    payload["problem"] = spec.model_dump()
    if spec.p == 2 and spec.q == 2 and run.grid.solid_angle == FULL_SPHERE:
        payload["oracle_lambda1"] = radial_dirichlet_eigenvalue(spec.N, spec.mu, spec.sigma, spec.radius)
    frame = pd.DataFrame({"tau": result.phi1.grid.tau, "value": result.phi1.values})
    _emit(payload, frame, run)
    return EXIT_OK if result.converged else EXIT_FAILURE


def run_sweep(run: RunConfig) -> int:
    tuples = artifacts.read_params_list(run.input)
    first_n = next((t.get("N") for t in tuples if isinstance(t, dict) and isinstance(t.get("N"), int)), 3)
    outcomes = parameter_sweep(tuples, _grid(run, first_n), run.solver, run.workers)
    table = artifacts.sweep_table(outcomes)
    if run.format == "json":
        artifacts.write_json({"command": "sweep", "rows": table.to_dict(orient="records")}, run.output)
    else:
        artifacts.write_table_csv(table, run.output)
    clean = all(o.ok and o.result.converged for o in outcomes)
    return EXIT_OK if clean else EXIT_FAILURE


HANDLERS = {
    "validate": run_validate,
    "exponents": run_exponents,
    "solve": run_solve,
    "verify": run_verify,
    "eigen": run_eigen,
    "sweep": run_sweep,
}


def run(config: RunConfig) -> int:
    log_operation(config.command, {"output": str(config.output) if config.output else None,
                                   "format": config.format})
    return HANDLERS[config.command](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    with correlation_scope():
        try:
            config = get_config()
            configure_logging(args.log_level or config.LOG_LEVEL)
            return run(build_run_config(args, config))
        except CLIError as e:
            print(f"error: {e}", file=sys.stderr)
            return e.code
        except (ParameterValidationException, DegenerateParametersException, SolverDivergenceException) as e:
            print(f"error: {e.message}", file=sys.stderr)
            return EXIT_FAILURE
        except (ConfigurationException, InputFormatException) as e:
            print(f"error: {e.message}", file=sys.stderr)
            return EXIT_INPUT
        except ValidationError as e:
            print(f"error: invalid input: {e}", file=sys.stderr)
            return EXIT_INPUT
        except (BaseToolkitException, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        except KeyboardInterrupt:
            logger.info("Interrupted")
            return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
