import sys
import typing as ty
from pathlib import Path
import click
from ..experiments import load_config, run_config
from ..utils import LoggerConfig, logger
from .base import cli, command_errors, logging_options


@cli.command(
    help="""Runs the experiment described by a TOML configuration file.

CONFIG names the experiment kind and its settings. Results are written as CSV and
JSON to the configured output directory. Exits with 0 when every run succeeded, 1
when a run failed and 2 when the configuration is invalid.
""",
)
@click.argument("config", type=click.Path(exists=True, path_type=Path))
@logging_options
def run(
    config: Path,
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        code, files = run_config(config, raise_errors=raise_errors)
    for path in files:
        click.echo(str(path))
    sys.exit(code)


@cli.command(
    help="""Runs a learning sweep over numbers of modes and training-set sizes from a
TOML configuration file of kind 'sweep', then fits how the samples needed scale with
the number of modes and how the held-out gap decays with the number of samples.

CONFIG is the sweep configuration.
""",
)
@click.argument("config", type=click.Path(exists=True, path_type=Path))
@logging_options
def sweep(
    config: Path,
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        kind = load_config(config).kind
        if kind != "sweep":
            logger.error("'%s' describes a '%s' experiment, not a sweep", config, kind)
            sys.exit(2)
        code, files = run_config(config, raise_errors=raise_errors)
    for path in files:
        click.echo(str(path))
    sys.exit(code)


if __name__ == "__main__":
    run()
