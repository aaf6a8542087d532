"""
Command Line Interface for vtruncem

Commands: validate, simulate, converge, moments, stability and
list-models. Each command builds a RunConfig from an optional config file
and its flags (flags win) and hands it to ``run``, whose return value is
the process exit code.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import typer
from rich.logging import RichHandler

from .config import RunConfig, build_run_config, load_config_file
from .core.truncation import policy_feasibility
from .core.validation import probe_higher_derivatives
from .errors import (
    ConfigError,
    DegenerateInput,
    DomainError,
    NumericFailure,
    PolicyViolation,
    ValidationError,
)
from .models.bundle import ModelBundle
from .models.examples import BUILTIN_MODELS, build_model
from .models.polynomial import build_polynomial_model
from .montecarlo.brownian import brownian_grid
from .montecarlo.estimators import estimate_moment_sup, estimate_strong_error, stability_experiment
from .montecarlo.executor import PathExecutor
from .schemes.simulation import SchemeConfig, SchemeKind, simulate
from .stdout import OutputMode, STDOUTHandler, get_stdout_handler, set_output_mode
from .utils.reporter import Reporter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

app = typer.Typer(
    name="vtruncem",
    help="V-truncated Euler-Maruyama schemes with a Monte Carlo harness",
    add_completion=False,
    rich_markup_mode="rich",
)

ModelOption = typer.Option(None, "--model", "-m", help="Built-in model name or path to a polynomial description")
ConfigOption = typer.Option(None, "--config", "-c", help="Config file; flags override its values")
DtOption = typer.Option(None, "--dt", help="Step size, e.g. 0.005 or 2^-8")
DtListOption = typer.Option(None, "--dt-list", help="Step sizes: 2^-6..2^-12 or a comma list")
DtRefOption = typer.Option(None, "--dt-ref", help="Reference step size, dividing every step in --dt-list")
HorizonOption = typer.Option(None, "--T", "-T", help="Time horizon")
PathsOption = typer.Option(None, "--paths", "-M", help="Number of Monte Carlo paths")
SeedOption = typer.Option(None, "--seed", help="Experiment seed (default VTRUNCEM_SEED or 0)")
X0Option = typer.Option(None, "--x0", help="Initial state as a comma list; it must be feasible for the truncation policy")
DeltaStarOption = typer.Option(None, "--delta-star", help="Largest step size of a built-in model's policy")
OutOption = typer.Option(None, "--out", "-o", help="CSV output path")
WorkersOption = typer.Option(None, "--workers", "-w", help="Worker threads (default VTRUNCEM_WORKERS or 1)")
ChunkOption = typer.Option(None, "--chunk-size", help="Paths per work item")
QuietOption = typer.Option(False, "--quiet", "-q", help="Only print errors")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log progress messages")
DebugOption = typer.Option(False, "--debug", help="Log everything")


def configure_logging(handler: STDOUTHandler) -> None:
    logging.basicConfig(
        level=handler.mode.log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=handler.console.rich, show_path=False)],
        force=True,
    )


def resolve_model(config: RunConfig) -> ModelBundle:
    """
    Built-in model by name, otherwise a polynomial description file

    Raises:
        ConfigError: unknown name, unreadable file or invalid override
        ValidationError: the model fails its checks
    """
    name = config.model
    if name in BUILTIN_MODELS:
        if config.x0 is not None and _is_classical_simulate(config):
            # classical EM ignores the policy, so x0 need not be feasible for it
            return build_model(name, delta_star=config.delta_star).with_initial_state(config.x0)
        return build_model(name, x0=config.x0, delta_star=config.delta_star)
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"'{name}' is neither a built-in model ({', '.join(BUILTIN_MODELS)}) nor a file")
    if config.delta_star is not None:
        raise ConfigError("set delta_star inside the polynomial description")
    bundle = build_polynomial_model(path.read_text(encoding="utf-8"))
    if config.x0 is not None:
        if len(config.x0) != bundle.state_dim:
            raise ConfigError(f"--x0 has {len(config.x0)} entries, the model has d={bundle.state_dim}")
        bundle = bundle.with_initial_state(config.x0)
        lhs, rhs, ok = policy_feasibility(bundle.policy, bundle.initial_state)
        if not ok and not _is_classical_simulate(config):
            raise ConfigError(f"--x0 is infeasible for the policy: φ(|x0| ∨ 1) = {rhs:.6g} > K(Δ*)^(−θ) = {lhs:.6g}")
    return bundle


def _is_classical_simulate(config: RunConfig) -> bool:
    return config.command == "simulate" and SchemeKind.parse(config.scheme) is SchemeKind.CLASSICAL


def _check_steps(config: RunConfig, bundle: ModelBundle) -> None:
    if _is_classical_simulate(config):
        return
    cap = bundle.policy.delta_star
    for step in config.step_sizes():
        if step > cap * (1.0 + 1e-12):
            raise ConfigError(
                f"step size {step:g} exceeds Δ*={cap:g} of {bundle.name}; "
                "use --delta-star with an --x0 the policy is feasible for"
            )


def _executor(config: RunConfig, handler: STDOUTHandler) -> PathExecutor:
    return PathExecutor(config.workers, config.chunk_size, progress=handler.update_progress)


def _run_validate(config: RunConfig, bundle: ModelBundle, handler: STDOUTHandler) -> None:
    reports = bundle.validation_reports()
    probe = probe_higher_derivatives(bundle.spec, bundle.sample_points())
    handler.print_validation(bundle.name, reports)
    if probe.passed:
        handler.print_info(f"{probe.name}: passed on {probe.checked} samples")
    else:
        handler.print_warning(f"{probe.name} (informational): {probe.summary()}")
    if config.out is not None:
        Reporter().write(reports + [probe], config.out)
    for report in reports:
        report.raise_if_failed()


def _run_simulate(config: RunConfig, bundle: ModelBundle, handler: STDOUTHandler) -> None:
    kind = SchemeKind.parse(config.scheme)
    policy = bundle.policy if kind is SchemeKind.TRUNCATED else None
    scheme = SchemeConfig(kind, config.dt, config.horizon, bundle.initial_state, policy)
    grid = brownian_grid(config.seed, config.path_id, config.horizon, config.dt, bundle.noise_dim)
    path = simulate(scheme, bundle.system, bundle.spec, grid)
    handler.print_path(path)
    if path.diverged:
        handler.print_warning(f"classical EM diverged at step {path.diverged_at}")
    if config.out is not None:
        Reporter().write(path, config.out)


def _run_converge(config: RunConfig, bundle: ModelBundle, handler: STDOUTHandler) -> None:
    handler.start_progress(config.paths, "Coupled paths")
    report = estimate_strong_error(
        bundle,
        config.q,
        config.dt_list,
        config.dt_ref,
        config.horizon,
        config.paths,
        config.seed,
        executor=_executor(config, handler),
    )
    handler.stop_progress()
    handler.print_error_report(report)
    if config.out is not None:
        Reporter().write(report, config.out)


def _run_moments(config: RunConfig, bundle: ModelBundle, handler: STDOUTHandler) -> None:
    rho = config.rho if config.rho is not None else bundle.spec.rho
    handler.start_progress(config.paths * len(config.dt_list), "Moment paths")
    report = estimate_moment_sup(
        bundle, rho, config.dt_list, config.horizon, config.paths, config.seed, executor=_executor(config, handler)
    )
    handler.stop_progress()
    handler.print_moment_report(report)
    if config.out is not None:
        Reporter().write(report, config.out)


def _run_stability(config: RunConfig, bundle: ModelBundle, handler: STDOUTHandler) -> None:
    handler.start_progress(config.paths, "Path pairs")
    report = stability_experiment(
        bundle,
        config.dt,
        config.horizon,
        config.paths,
        config.seed,
        config.threshold,
        executor=_executor(config, handler),
        burn_in_fraction=config.burn_in,
    )
    handler.stop_progress()
    handler.print_stability_report(report)
    if config.out is not None:
        Reporter().write(report, config.out)


COMMANDS: Dict[str, Callable[[RunConfig, ModelBundle, STDOUTHandler], None]] = {
    "validate": _run_validate,
    "simulate": _run_simulate,
    "converge": _run_converge,
    "moments": _run_moments,
    "stability": _run_stability,
}


def run(config: RunConfig, handler: Optional[STDOUTHandler] = None) -> int:
    """
    Execute one command and return its exit code

    0 success, 1 invalid configuration, 2 validation failure, 3 numeric failure.
    """
    handler = handler if handler is not None else get_stdout_handler()
    try:
        if config.command == "list-models":
            handler.print_models(factory() for factory in BUILTIN_MODELS.values())
            return EXIT_OK
        bundle = resolve_model(config)
        _check_steps(config, bundle)
        logger.info("running %s on %s", config.command, bundle.name)
        handler.print_debug(f"run config: {config.model_dump(exclude_none=True)}")
        COMMANDS[config.command](config, bundle, handler)
        handler.print_elapsed()
        return EXIT_OK
    except ValidationError as exc:
        handler.print_error(str(exc), exc)
        return EXIT_VALIDATION
    except NumericFailure as exc:
        handler.print_error(str(exc), exc)
        return EXIT_NUMERIC
    except (ConfigError, PolicyViolation, DomainError, DegenerateInput) as exc:
        handler.print_error(str(exc), exc)
        return EXIT_CONFIG
    finally:
        handler.stop_progress()


def _output_mode(quiet: bool, verbose: bool, debug: bool) -> OutputMode:
    if debug:
        return OutputMode.DEBUG
    if verbose:
        return OutputMode.VERBOSE
    if quiet:
        return OutputMode.QUIET
    return OutputMode.NORMAL


def _execute(command: str, flags: Dict[str, Any], config_file: Optional[Path], quiet: bool, verbose: bool, debug: bool) -> None:
    set_output_mode(_output_mode(quiet, verbose, debug))
    handler = get_stdout_handler()
    configure_logging(handler)
    flags = dict(flags, command=command)
    try:
        if config_file is not None:
            config = load_config_file(config_file, flags)
        else:
            config = build_run_config(flags)
    except ConfigError as exc:
        handler.print_error(str(exc))
        raise typer.Exit(EXIT_CONFIG)
    handler.print_banner()
    code = run(config, handler)
    if code != EXIT_OK:
        raise typer.Exit(code)


@app.command("validate")
def validate_cmd(
    model: Optional[str] = ModelOption,
    x0: Optional[str] = X0Option,
    delta_star: Optional[str] = DeltaStarOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
    debug: bool = DebugOption,
):
    """Run every hypothesis check of a model"""
    _execute("validate", dict(model=model, x0=x0, delta_star=delta_star, out=out), config, quiet, verbose, debug)


@app.command("simulate")
def simulate_cmd(
    model: Optional[str] = ModelOption,
    scheme: Optional[str] = typer.Option(None, "--scheme", help="truncated or classical"),
    dt: Optional[str] = DtOption,
    horizon: Optional[float] = HorizonOption,
    seed: Optional[int] = SeedOption,
    path_id: Optional[int] = typer.Option(None, "--path-id", help="Path index of the Brownian stream"),
    x0: Optional[str] = X0Option,
    delta_star: Optional[str] = DeltaStarOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
    debug: bool = DebugOption,
):
    """Simulate one path and write step, t, y, V(y) and the truncation flag"""
    flags = dict(model=model, scheme=scheme, dt=dt, horizon=horizon, seed=seed, path_id=path_id, x0=x0, delta_star=delta_star, out=out)
    _execute("simulate", flags, config, quiet, verbose, debug)


@app.command("converge")
def converge_cmd(
    model: Optional[str] = ModelOption,
    dt_list: Optional[str] = DtListOption,
    dt_ref: Optional[str] = DtRefOption,
    horizon: Optional[float] = HorizonOption,
    paths: Optional[int] = PathsOption,
    seed: Optional[int] = SeedOption,
    q: Optional[float] = typer.Option(None, "--q", help="Error exponent q (default 1)"),
    x0: Optional[str] = X0Option,
    delta_star: Optional[str] = DeltaStarOption,
    workers: Optional[int] = WorkersOption,
    chunk_size: Optional[int] = ChunkOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
    debug: bool = DebugOption,
):
    """Estimate the strong error against a fine coupled reference and fit its order"""
    flags = dict(
        model=model, dt_list=dt_list, dt_ref=dt_ref, horizon=horizon, paths=paths, seed=seed, q=q,
        x0=x0, delta_star=delta_star, workers=workers, chunk_size=chunk_size, out=out,
    )
    _execute("converge", flags, config, quiet, verbose, debug)


@app.command("moments")
def moments_cmd(
    model: Optional[str] = ModelOption,
    dt_list: Optional[str] = DtListOption,
    horizon: Optional[float] = HorizonOption,
    paths: Optional[int] = PathsOption,
    seed: Optional[int] = SeedOption,
    rho: Optional[float] = typer.Option(None, "--rho", help="Moment exponent (default: the model's ρ)"),
    x0: Optional[str] = X0Option,
    delta_star: Optional[str] = DeltaStarOption,
    workers: Optional[int] = WorkersOption,
    chunk_size: Optional[int] = ChunkOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
    debug: bool = DebugOption,
):
    """Report sup_k of the sample mean of V^ρ(Y_k) for each step size"""
    flags = dict(
        model=model, dt_list=dt_list, horizon=horizon, paths=paths, seed=seed, rho=rho,
        x0=x0, delta_star=delta_star, workers=workers, chunk_size=chunk_size, out=out,
    )
    _execute("moments", flags, config, quiet, verbose, debug)


@app.command("stability")
def stability_cmd(
    model: Optional[str] = ModelOption,
    dt: Optional[str] = DtOption,
    horizon: Optional[float] = HorizonOption,
    paths: Optional[int] = PathsOption,
    seed: Optional[int] = SeedOption,
    threshold: Optional[float] = typer.Option(None, "--threshold", help="Convergence threshold on the terminal metric"),
    burn_in: Optional[float] = typer.Option(None, "--burn-in", help="Share of the horizon left out of slope fits"),
    x0: Optional[str] = X0Option,
    delta_star: Optional[str] = DeltaStarOption,
    workers: Optional[int] = WorkersOption,
    chunk_size: Optional[int] = ChunkOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    quiet: bool = QuietOption,
    verbose: bool = VerboseOption,
    debug: bool = DebugOption,
):
    """Run truncated and classical EM on shared noise and compare long-run behaviour"""
    flags = dict(
        model=model, dt=dt, horizon=horizon, paths=paths, seed=seed, threshold=threshold, burn_in=burn_in,
        x0=x0, delta_star=delta_star, workers=workers, chunk_size=chunk_size, out=out,
    )
    _execute("stability", flags, config, quiet, verbose, debug)


@app.command("list-models")
def list_models_cmd(quiet: bool = QuietOption):
    """List the built-in models"""
    _execute("list-models", {}, None, quiet, False, False)


def main():
    app()


if __name__ == "__main__":
    main()
