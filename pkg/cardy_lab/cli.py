"""Command-line surface of the laboratory.

`run_cli(argv)` returns the exit code: 0 on success, 1 when the arguments, the
configuration or a manifest are invalid, 2 when an experiment or a check fails.
"""

from __future__ import annotations
import argparse
import json
import os

from rich.console import Console
from rich.table import Table

from cardy_lab import __version__
from cardy_lab.config import (
    DomainConfig,
    ExperimentConfig,
    InvalidConfiguration,
    load_config,
    with_overrides,
)
from cardy_lab.conformal.maps import (
    carleson_probability,
    cross_ratio,
    crossing_limit,
    corner_ratio_constants,
    triangle_map,
)
from cardy_lab.conformal.special import cardy_probability
from cardy_lab.experiments import verification
from cardy_lab.experiments.driver import OutputPaths, resume_experiment, run_experiment, sample_domain
from cardy_lab.logs import LabLogger as _LabLogger, LOGGER_NAME as _LOGGER_NAME, configure_logging
from cardy_lab.models.exceptions import (
    ConfigValidationError,
    ManifestMismatch,
    OutOfDomain,
    OutOfRange,
    ParseError,
)
from cardy_lab.results import RunManifest, RunOutcome, fmt


logger = _LabLogger(_LOGGER_NAME)
COMPONENT_NAME = "Cardy Lab"
EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2
EXPERIMENT_COMMANDS = ("crossing", "observable", "arm", "onearm")
VERIFICATIONS = ("enumeration", "switching", "switching-sampled", "duality", "kernel", "maps")
_INVALID_INPUT = (
    argparse.ArgumentError,
    InvalidConfiguration,
    ConfigValidationError,
    ParseError,
    ManifestMismatch,
    OutOfRange,
    OutOfDomain,
)


class _ArgumentParser(argparse.ArgumentParser):
    """Parser reporting usage errors as `argparse.ArgumentError` instead of exiting."""

    def error(self, message: str):
        raise argparse.ArgumentError(None, message)


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", type=str, required=True, help="path to the experiment configuration file")
    parser.add_argument("--seed", type=int, help="master seed, overrides the configuration")
    parser.add_argument("--trials", type=int, help="trials per scale point")
    parser.add_argument("--out", type=str, help="output directory")
    parser.add_argument("--workers", type=int, help="number of worker threads")
    parser.add_argument("--resume", type=str, metavar="PATH", help="manifest of an interrupted run")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="cardy_lab", description="Critical site percolation laboratory.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sample = commands.add_parser("sample", help="sample one configuration of a discretized domain")
    _add_run_arguments(sample)
    sample.add_argument("--delta", type=float, required=True, help="mesh of the lattice")
    sample.add_argument("--trial", type=int, default=0, help="trial index within the seed")

    for name in EXPERIMENT_COMMANDS:
        _add_run_arguments(commands.add_parser(name, help=f"run the {name} experiment"))
    _add_run_arguments(commands.add_parser("converge", help="run the experiment named in the configuration"))

    cardy = commands.add_parser("cardy", help="limit crossing probabilities")
    group = cardy.add_mutually_exclusive_group(required=True)
    group.add_argument("--cross-ratio", type=float, dest="cross_ratio", help="cross-ratio m in (0, 1)")
    group.add_argument("--corner-ratios", action="store_true", help="ratios of the half-annulus corner value")
    group.add_argument("-c", "--config", type=str, help="configuration with a four-pointed domain")

    map_ = commands.add_parser("map", help="evaluate the conformal map of a three-pointed domain")
    map_.add_argument("-c", "--config", type=str, required=True, help="configuration with the domain")
    map_.add_argument("--point", type=float, nargs=2, required=True, metavar=("X", "Y"))

    verify = commands.add_parser("verify", help="exact and numerical self-checks")
    verify.add_argument("check", choices=VERIFICATIONS)
    verify.add_argument("--max-sites", type=int, default=18, dest="max_sites")

    resume = commands.add_parser("resume", help="continue an interrupted run")
    resume.add_argument("manifest", type=str, help="path to the run manifest")
    resume.add_argument("-c", "--config", type=str, help="configuration the manifest must match")
    return parser


def parsed_cli_args(argv: list[str]) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    config = getattr(args, "config", None)
    if config is not None and not os.path.isfile(config):
        raise argparse.ArgumentError(None, f"Config file {os.path.abspath(config)} not found.")
    return args


def _configured(path: str, args: argparse.Namespace, experiment: str | None = None) -> ExperimentConfig:
    config = with_overrides(
        load_config(path),
        experiment=experiment,
        seed=getattr(args, "seed", None),
        trials=getattr(args, "trials", None),
        output=getattr(args, "out", None),
        workers=getattr(args, "workers", None),
    )
    configure_logging(COMPONENT_NAME, config.logging)
    logger.info(f"Loaded config:\n{config.model_dump_json(indent=4)}")
    return config


def _domain(path: str) -> DomainConfig:
    domain = load_config(path).domain
    if domain is None:
        raise ConfigValidationError(f"{path} has no domain section")
    return domain


def _print_json(console: Console, data: dict) -> None:
    console.print_json(json.dumps(data, default=str))


def _print_outcome(console: Console, outcome: RunOutcome, config: ExperimentConfig) -> None:
    table = Table(title=f"{outcome.experiment} (seed {config.seed})")
    for column in ("scale", "estimate", "stderr", "trials"):
        table.add_column(column, justify="right")
    for point in sorted(outcome.points, key=lambda p: p.scale):
        table.add_row(fmt(point.scale), f"{point.estimate:.6g}", f"{point.stderr:.3g}", str(point.trials))
    console.print(table)
    if outcome.fit is not None:
        fit = outcome.fit
        console.print(
            f"slope {fit.slope:.4f} ± {fit.stderr:.4f}, exponent {fit.exponent:.4f}, r² {fit.r_squared:.4f}"
        )
    console.print(f"results in {OutputPaths.of(config).directory}")


def _finished(console: Console, err: Console, outcome: RunOutcome, config: ExperimentConfig) -> int:
    _print_outcome(console, outcome, config)
    if outcome.error is not None:
        err.print(f"{type(outcome.error).__name__}: {outcome.error}", markup=False)
        return EXIT_FAILED
    return EXIT_OK


def _run(args: argparse.Namespace, console: Console, err: Console) -> int:
    command = args.command
    if command == "cardy":
        if args.cross_ratio is not None:
            console.print(f"{cardy_probability(args.cross_ratio):.12g}")
        elif args.corner_ratios:
            constants = corner_ratio_constants()
            table = Table(title="corner value over r^(1/3)")
            table.add_column("quantity")
            table.add_column("value", justify="right")
            table.add_row("max over radii", f"{constants.max_ratio:.6f}")
            table.add_row("min over radii", f"{constants.min_ratio:.6f}")
            table.add_row(f"r = {constants.small_radius:g}", f"{constants.small_ratio:.6f}")
            table.add_row("small-r limit", f"{constants.limit:.6f}")
            console.print(table)
        else:
            spec = _domain(args.config).to_spec()
            _print_json(
                console,
                {
                    "cross_ratio": cross_ratio(spec),
                    "limit": crossing_limit(spec),
                    "carleson": carleson_probability(spec),
                },
            )
        return EXIT_OK

    if command == "map":
        z = complex(*args.point)
        value = triangle_map(_domain(args.config).to_spec()).evaluate(z, check=True)
        _print_json(console, {"z": [z.real, z.imag], "phi": [value.real, value.imag]})
        return EXIT_OK

    if command == "verify":
        checks = {
            "enumeration": lambda: verification.verify_enumeration(args.max_sites),
            "switching": verification.verify_color_switching,
            "switching-sampled": lambda: verification.verify_switching_sampled(verification.sampled_switching_domain()),
            "duality": verification.verify_duality,
            "kernel": verification.verify_kernel,
            "maps": verification.verify_maps,
        }
        report = checks[args.check]()
        _print_json(console, report.as_dict())
        console.print(f"{report.name}: {report.checks} checks, {report.mismatches} mismatches")
        return EXIT_OK if report.passed else EXIT_FAILED

    if command == "resume":
        manifest = RunManifest.load(args.manifest, load_config(args.config) if args.config else None)
        configure_logging(COMPONENT_NAME, manifest.config.logging)
        outcome = run_experiment(manifest.config, manifest)
        return _finished(console, err, outcome, manifest.config)

    if command == "sample":
        config = _configured(args.config, args)
        if config.domain is None:
            raise ConfigValidationError("sample needs a configuration with a domain")
        os.makedirs(config.output, exist_ok=True)
        path = os.path.join(config.output, f"sample_delta={fmt(args.delta)}_trial={args.trial}.csv")
        _, report = sample_domain(config.domain, args.delta, config.seed, args.trial, path)
        _print_json(console, {**report, "path": path})
        return EXIT_OK

    config = _configured(args.config, args, None if command == "converge" else command)
    if args.resume:
        outcome = resume_experiment(args.resume, config)
    else:
        outcome = run_experiment(config)
    return _finished(console, err, outcome, config)


def run_cli(argv: list[str], console: Console | None = None, err: Console | None = None) -> int:
    """Execute one command line and return its exit code."""
    console = console or Console()
    err = err or Console(stderr=True)
    try:
        args = parsed_cli_args(argv)
    except argparse.ArgumentError as exc:
        logger.error(f"Invalid arguments. {exc}")
        err.print(f"Invalid arguments. {exc}", markup=False)
        return EXIT_INVALID
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    try:
        return _run(args, console, err)
    except _INVALID_INPUT as exc:
        logger.error(f"Invalid input: {exc}")
        err.print(f"Invalid input: {exc}", markup=False)
        return EXIT_INVALID
    except Exception as exc:
        logger.log_on_exception(exc)
        err.print(f"{type(exc).__name__}: {exc}", markup=False)
        return EXIT_FAILED
