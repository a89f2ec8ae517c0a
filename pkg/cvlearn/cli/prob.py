import json
import typing as ty
from pathlib import Path
import click
from ..experiments import resolve_object
from ..fock import oracle_probability
from ..learner import circuit_probability
from ..symplectic import ClampLog
from ..utils import LoggerConfig, logger
from .base import cli, command_errors, logging_options, object_spec


@cli.command(
    help="""Computes the outcome probability tr(M Phi(rho)) of a circuit made of a state,
a channel and an effect, and prints it as JSON.

Each of the state, channel and effect is either a path to a serialized JSON document
or a shorthand: 'vacuum', 'random', 'cat+', 'cat-' or 'gkp' for states, 'identity'
for channels and 'heterodyne' for effects.
""",
)
@click.option(
    "--state",
    type=str,
    default="vacuum",
    envvar="CVLEARN_STATE",
    help="The input state, a JSON file or a shorthand",
)
@click.option(
    "--channel",
    type=str,
    default="identity",
    envvar="CVLEARN_CHANNEL",
    help="The channel, a JSON file or a shorthand",
)
@click.option(
    "--effect",
    type=str,
    default="heterodyne",
    envvar="CVLEARN_EFFECT",
    help="The measurement effect, a JSON file or a shorthand",
)
@click.option(
    "--n",
    "n_modes",
    type=int,
    default=1,
    help="Number of modes assumed by the shorthands",
)
@click.option(
    "--seed",
    type=int,
    default=None,
    help="Seed used by the 'random' shorthand",
)
@click.option(
    "--oracle-cutoff",
    type=int,
    default=None,
    help=(
        "Also compute the probability in a Fock space truncated at this number of "
        "levels and report the difference. Use 0 to pick the cutoff automatically"
    ),
)
@logging_options
def prob(
    state: str,
    channel: str,
    effect: str,
    n_modes: int,
    seed: ty.Optional[int],
    oracle_cutoff: ty.Optional[int],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        base = Path.cwd()
        rho = resolve_object(object_spec(state), "state", n_modes, base, seed=seed)
        ch = resolve_object(object_spec(channel), "channel", n_modes, base)
        eff = resolve_object(object_spec(effect), "effect", n_modes, base)
        clamp_log = ClampLog()
        value = circuit_probability(rho, ch, eff, clamp_log=clamp_log)
        result: dict[str, ty.Any] = {
            "probability": value,
            "state": type(rho).__name__,
            "channel": type(ch).__name__,
            "effect": type(eff).__name__,
            "clamped": clamp_log.count,
        }
        if oracle_cutoff is not None:
            reference = oracle_probability(rho, ch, eff, cutoff=oracle_cutoff or None)
            result["oracle_probability"] = reference
            result["oracle_difference"] = abs(value - reference)
            logger.info(
                "Phase-space and Fock-space probabilities differ by %.3g",
                result["oracle_difference"],
            )
    click.echo(json.dumps(result))


if __name__ == "__main__":
    prob()
