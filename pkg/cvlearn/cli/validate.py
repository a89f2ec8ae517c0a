import json
import sys
import typing as ty
from pathlib import Path
import click
from ..fock import FockOperator
from ..gg import GGChannel, GGEffect, GGState
from ..learner import HypothesisParam
from ..photodetection import PhotoCountEffect
from ..serialization import load
from ..symplectic import (
    Diagnostic,
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    HalfSpaceEffect,
    validate_channel,
    validate_effect,
    validate_state,
)
from ..utils import LoggerConfig, logger
from .base import cli, command_errors, logging_options


def diagnose(obj: ty.Any, tol: float = 1e-9) -> Diagnostic:
    "Validity diagnostic of any serializable object"
    if isinstance(obj, HypothesisParam):
        return diagnose(obj.decode(), tol)
    if isinstance(obj, GaussianState):
        return validate_state(obj, tol)
    if isinstance(obj, GaussianChannel):
        return validate_channel(obj, tol)
    if isinstance(obj, GeneralDyneEffect):
        return validate_effect(obj, tol)
    if isinstance(obj, HalfSpaceEffect):
        return validate_effect(GeneralDyneEffect(obj.direction * 0, obj.cov), tol)
    if isinstance(obj, (GGState, GGEffect, GGChannel)):
        return obj.validate(tol)
    if isinstance(obj, FockOperator):
        if abs(obj.trace - 1) < 1e-6:
            return obj.validate_density()
        return obj.validate_effect()
    if isinstance(obj, PhotoCountEffect):
        return Diagnostic(True, float("nan"))
    raise TypeError(f"Cannot validate objects of type {type(obj).__name__}")


@cli.command(
    help="""Checks the physical validity of a serialized state, channel, effect or
hypothesis and prints the diagnostic as JSON.

FILE is the JSON document to check. Exits with code 1 when the object is invalid.
""",
)
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--tol",
    type=float,
    default=1e-9,
    envvar="CVLEARN_TOL",
    help="Tolerance on the smallest eigenvalue of the validity conditions",
)
@logging_options
def validate(
    file: Path,
    tol: float,
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        obj = load(file)
        diag = diagnose(obj, tol)
    click.echo(json.dumps({"type": type(obj).__name__, **diag.to_dict()}))
    if not diag.ok:
        logger.warning("'%s' is not valid: %s", file, diag.message)
        sys.exit(1)


if __name__ == "__main__":
    validate()
