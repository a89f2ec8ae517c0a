import typing as ty
from pathlib import Path
import click
from ..learner import DISTRIBUTION_KINDS, ROLES
from ..utils import LoggerConfig
from .base import cli, command_errors, logging_options, object_spec, run_experiment


def distribution_options(func: ty.Callable[..., ty.Any]) -> ty.Callable[..., ty.Any]:
    """Options describing the distribution that probes are drawn from"""
    for decorator in reversed(
        [
            click.option(
                "--dist",
                type=click.Choice(DISTRIBUTION_KINDS),
                default="heterodyne",
                envvar="CVLEARN_DIST",
                help="The family of probes training examples are drawn from",
            ),
            click.option(
                "--energy-bound",
                type=float,
                default=1.0,
                help="Bound on the displacement and noise energy of drawn probes",
            ),
            click.option(
                "--outcome-range",
                type=float,
                default=2.0,
                help="Half-width of the box general-dyne outcomes are drawn from",
            ),
            click.option(
                "--cutoff",
                type=int,
                default=4,
                help="Largest photon number of drawn photo-count effects",
            ),
            click.option(
                "--random-channel/--identity-channel",
                default=False,
                help="Whether probes also carry a randomly drawn channel",
            ),
        ]
    ):
        func = decorator(func)
    return func


def distribution_table(
    dist: str, energy_bound: float, outcome_range: float, cutoff: int, random_channel: bool
) -> dict[str, ty.Any]:
    return {
        "kind": dist,
        "energy-bound": energy_bound,
        "outcome-range": outcome_range,
        "cutoff": cutoff,
        "random-channel": random_channel,
    }


@cli.command(
    help="""Draws labelled training examples (probe, outcome) from a target object and
writes them as CSV with the probes in the JSON report.

The target is a JSON document or a state shorthand ('vacuum', 'random', 'cat+',
'cat-', 'gkp') and plays the role given by --role inside each probe.
""",
)
@click.option(
    "--target",
    type=str,
    default="vacuum",
    help="The target object, a JSON file or a shorthand",
)
@click.option("--n", "n_modes", type=int, default=1, help="Number of modes")
@click.option(
    "--role",
    type=click.Choice(ROLES),
    default="state",
    help="Which part of the circuit the target fills",
)
@distribution_options
@click.option("--T", "count", type=int, default=100, help="Number of examples to draw")
@click.option(
    "--seed",
    "seeds",
    type=int,
    multiple=True,
    default=(0,),
    help="Seeds to draw with, one independent training set per seed",
)
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="The JSON report to write, with the CSV next to it",
)
@logging_options
def sample(
    target: str,
    n_modes: int,
    role: str,
    dist: str,
    energy_bound: float,
    outcome_range: float,
    cutoff: int,
    random_channel: bool,
    count: int,
    seeds: ty.Sequence[int],
    out: ty.Optional[Path],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        raw = {
            "kind": "sample",
            "seeds": list(seeds),
            "sample": {
                "target": object_spec(target),
                "n": n_modes,
                "role": role,
                "T": count,
                "distribution": distribution_table(
                    dist, energy_bound, outcome_range, cutoff, random_channel
                ),
            },
        }
        run_experiment(raw, out, raise_errors)


if __name__ == "__main__":
    sample()
