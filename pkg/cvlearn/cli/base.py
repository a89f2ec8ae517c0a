import contextlib
import json
import sys
import typing as ty
from pathlib import Path
import click
from .. import __version__
from ..exceptions import ConfigError
from ..experiments import ResultRecord, execute, parse_config
from ..utils import LoggerConfig, logger, set_logger_handling


@click.group(help="Outcome probabilities and learning experiments for continuous-variable circuits")
@click.version_option(version=__version__)
def cli() -> None:
    pass


F = ty.TypeVar("F", bound=ty.Callable[..., ty.Any])


def logging_options(func: F) -> F:
    """The logger and error-handling options shared by every sub-command"""
    func = click.option(
        "--raise-errors/--dont-raise-errors",
        default=False,
        type=bool,
        help="Whether to raise errors instead of logging them and exiting with an error code",
    )(func)
    func = click.option(
        "--additional-logger",
        "additional_loggers",
        type=str,
        multiple=True,
        default=(),
        envvar="CVLEARN_ADDITIONALLOGGERS",
        help=(
            "The loggers to use for logging. By default just the 'cvlearn' logger is used. "
            "But additional loggers can be included (e.g. 'py.warnings') here"
        ),
    )(func)
    func = click.option(
        "--logger",
        "loggers",
        multiple=True,
        type=LoggerConfig.cli_type,
        envvar="CVLEARN_LOGGER",
        nargs=3,
        default=(),
        metavar="<logtype> <loglevel> <location>",
        help=("Setup handles to capture logs that are generated"),
    )(func)
    return func


@contextlib.contextmanager
def command_errors(
    loggers: ty.Sequence[LoggerConfig],
    additional_loggers: ty.Sequence[str],
    raise_errors: bool,
) -> ty.Iterator[None]:
    """Sets up logging, then maps errors raised in the block to exit codes: 2 for
    invalid configuration, 1 for anything else"""
    set_logger_handling(logger_configs=loggers, additional_loggers=additional_loggers)
    try:
        yield
    except ConfigError as e:
        if raise_errors:
            raise
        logger.error(f"Invalid configuration: {e}")
        sys.exit(2)
    except Exception as e:
        if raise_errors:
            raise
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        sys.exit(1)


def object_spec(value: str) -> ty.Any:
    "A path to a JSON document, or a shorthand name"
    path = Path(value)
    if path.suffix == ".json" or path.exists():
        return {"file": str(path.absolute())}
    return value


def run_experiment(
    raw: dict[str, ty.Any], out: Path | None = None, raise_errors: bool = False
) -> ResultRecord:
    """Runs a configuration assembled from command-line options and prints where its
    results went. `out` names the JSON report; the CSV is written next to it."""
    if out is not None:
        raw["output_dir"] = str(out.parent.absolute())
        raw["name"] = out.stem
    config = parse_config(raw, base_dir=Path.cwd())
    record, files = execute(config, raise_errors=raise_errors)
    report = {
        "kind": record.kind,
        "config_hash": record.config_hash,
        "files": [str(f) for f in files],
        "failures": record.failures,
        "summary": record.summary,
    }
    if len(record.rows) <= 20:
        report["rows"] = record.rows
    click.echo(json.dumps(report, default=str))
    if record.failures:
        logger.error("%d of the runs failed", record.failures)
        sys.exit(1)
    return record
