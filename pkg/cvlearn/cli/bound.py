import json
import typing as ty
from pathlib import Path
import click
from ..bounds import DIMENSION_FORMS, SETTINGS, sample_complexity_bound
from ..gg import GGConstraintConstants, gg_b_constants, gkp_b_constants
from ..serialization import load
from ..utils import LoggerConfig, logger
from .base import cli, command_errors, logging_options


@cli.command(
    help="""Evaluates the sample-complexity upper bound T(eps, delta) of a learning
setting and prints it as JSON with the terms it is made of.

The 'gg' setting needs the b-constants of the circuit family, given directly with
--b, measured from a GG state with --state or read off the GKP lattice with --gkp.
""",
)
@click.option(
    "--setting",
    type=click.Choice(SETTINGS),
    default="g",
    help="The learning setting",
)
@click.option(
    "--n",
    "n_modes",
    type=int,
    multiple=True,
    default=(1,),
    help="Number of modes, repeat to tabulate several",
)
@click.option("--eps", type=float, default=0.1, help="Accuracy")
@click.option("--delta", type=float, default=0.01, help="Failure probability")
@click.option("--gamma", type=float, default=None, help="Margin of the fat-shattering scale")
@click.option("--K", "photons", type=int, default=None, help="Photon-number cutoff")
@click.option("--ell", type=int, default=None, help="Degree of the input encoding")
@click.option("--nu", type=float, default=1.0, help="Agnostic slack")
@click.option(
    "--dimension",
    type=click.Choice(DIMENSION_FORMS),
    default="table",
    help="Which form of the pseudo-dimension bound to use",
)
@click.option(
    "--b",
    "b_constants",
    type=GGConstraintConstants.cli_type,
    nargs=3,
    default=None,
    metavar="<b1> <b2> <b3>",
    help="b-constants of the GG circuit family",
)
@click.option(
    "--state",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="GG state JSON to measure the b-constants from",
)
@click.option(
    "--gkp",
    type=(float, int),
    default=None,
    metavar="<eps> <L>",
    help="Use the lattice constants of the finite-energy GKP family",
)
@logging_options
def bound(
    setting: str,
    n_modes: ty.Sequence[int],
    eps: float,
    delta: float,
    gamma: ty.Optional[float],
    photons: ty.Optional[int],
    ell: ty.Optional[int],
    nu: float,
    dimension: str,
    b_constants: ty.Optional[GGConstraintConstants],
    state: ty.Optional[Path],
    gkp: ty.Optional[ty.Tuple[float, int]],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        constants = b_constants
        if constants is None and state is not None:
            constants = gg_b_constants(load(state))
            logger.info("Measured b-constants %s from '%s'", constants, state)
        if constants is None and gkp is not None:
            constants = gkp_b_constants(*gkp)
            logger.info("GKP family constants %s for eps=%s, L=%s", constants, *gkp)
        results = [
            sample_complexity_bound(
                setting,
                n,
                eps,
                delta,
                gamma=gamma,
                K=photons,
                ell=ell,
                constants=constants,
                nu=nu,
                dimension=dimension,
            ).to_dict()
            for n in n_modes
        ]
    click.echo(json.dumps(results[0] if len(results) == 1 else results, default=float))


if __name__ == "__main__":
    bound()
