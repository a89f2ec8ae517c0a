import typing as ty
from pathlib import Path
import click
from ..dimensions import METRICS
from ..experiments import DIMENSION_CLASSES
from ..utils import LoggerConfig
from .base import cli, command_errors, logging_options, run_experiment


@cli.command(
    help="""Certifies a lower bound on the fat-shattering dimension of a function class
by searching for shattered point sets, and estimates its covering numbers.

Writes the certificates and covers as JSON and a CSV summary with the columns
class, n, gamma, k_certified and bound_value, where bound_value is the analytic
pseudo-dimension upper bound of the class when one is known.
""",
)
@click.option(
    "--class",
    "class_",
    type=click.Choice(sorted(DIMENSION_CLASSES)),
    default="f_g-displacement",
    help="The function class",
)
@click.option("--n", "n_modes", type=int, default=1, help="Number of modes")
@click.option("--gamma", type=float, default=0.1, help="Fat-shattering margin")
@click.option("--kmax", "k_max", type=int, default=4, help="Largest point set tried")
@click.option(
    "--budget",
    type=float,
    default=20_000,
    help="Function evaluations allowed in the witness search",
)
@click.option(
    "--eps",
    type=float,
    multiple=True,
    default=(0.1,),
    help="Cover radii, repeat for a profile",
)
@click.option("--k", "k_points", type=int, default=8, help="Number of points the cover restricts to")
@click.option(
    "--sample-budget",
    type=int,
    default=1000,
    help="Parameters sampled for the cover estimate",
)
@click.option(
    "--metric",
    type=click.Choice(METRICS),
    default="euclidean",
    help="Distance between restricted outputs",
)
@click.option(
    "--seed",
    "seeds",
    type=int,
    multiple=True,
    default=(0,),
    help="Seeds of independent searches",
)
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="The JSON report to write, with the CSV next to it",
)
@logging_options
def dims(
    class_: str,
    n_modes: int,
    gamma: float,
    k_max: int,
    budget: float,
    eps: ty.Sequence[float],
    k_points: int,
    sample_budget: int,
    metric: str,
    seeds: ty.Sequence[int],
    out: ty.Optional[Path],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        raw = {
            "kind": "dims",
            "seeds": list(seeds),
            "dims": {
                "class": class_,
                "n": n_modes,
                "gamma": gamma,
                "k-max": k_max,
                "budget": int(budget),
                "eps": list(eps),
                "k": k_points,
                "sample-budget": sample_budget,
                "metric": metric,
            },
        }
        run_experiment(raw, out, raise_errors)


if __name__ == "__main__":
    dims()
