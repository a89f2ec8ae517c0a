import json
import typing as ty
from pathlib import Path
import click
import numpy as np
from ..gg import GGEffect, make_cat_state, make_fock_approx, make_gkp_state
from ..serialization import dump, to_dict
from ..symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    random_gaussian_channel,
    random_gaussian_state,
)
from ..utils import LoggerConfig, logger
from .base import cli, command_errors, logging_options

OBJECT_KINDS = (
    "cat",
    "gkp",
    "fock",
    "coherent",
    "squeezed",
    "thermal",
    "random-state",
    "random-channel",
    "loss",
    "heterodyne",
    "homodyne",
    "cat-projector",
)


def build_object(
    kind: str,
    n: int = 1,
    alpha: float = 1.0,
    sign: int = 1,
    epsilon: float = 0.1,
    lattice: int = 2,
    photons: int = 1,
    radius: float = 0.2,
    squeezing: float = 0.5,
    nbar: float = 0.5,
    eta: float = 0.8,
    energy_bound: float = 1.0,
    seed: int | None = None,
) -> ty.Any:
    """Builds one of the named states, channels or effects; single-mode kinds ignore `n`"""
    rng = np.random.default_rng(seed)
    if kind == "cat":
        return make_cat_state(alpha, sign)
    if kind == "gkp":
        return make_gkp_state(epsilon, lattice)
    if kind == "fock":
        return make_fock_approx(photons, radius)
    if kind == "coherent":
        return GaussianState.coherent([alpha] * n)
    if kind == "squeezed":
        return GaussianState.squeezed(squeezing, alpha=alpha)
    if kind == "thermal":
        return GaussianState.thermal([nbar] * n)
    if kind == "random-state":
        return random_gaussian_state(n, energy_bound, rng)
    if kind == "random-channel":
        return random_gaussian_channel(n, energy_bound, rng)
    if kind == "loss":
        return GaussianChannel.loss(eta, nbar, n)
    if kind == "heterodyne":
        return GeneralDyneEffect.heterodyne(np.zeros(2 * n))
    if kind == "homodyne":
        return GeneralDyneEffect.homodyne(np.zeros(2), squeezing)
    if kind == "cat-projector":
        return GGEffect.from_state(make_cat_state(alpha, sign))
    raise ValueError(f"Unknown object kind '{kind}'")


@cli.command(
    help="""Builds a named state, channel or effect and writes it as JSON.

KIND is one of cat, gkp, fock, coherent, squeezed, thermal, random-state,
random-channel, loss, heterodyne, homodyne or cat-projector.

The JSON document is written to --out, or printed when no file is given
""",
)
@click.argument("kind", type=click.Choice(OBJECT_KINDS))
@click.option("--n", "n_modes", type=int, default=1, help="Number of modes")
@click.option("--alpha", type=float, default=1.0, help="Coherent amplitude")
@click.option(
    "--sign",
    type=click.Choice(["plus", "minus", "+", "-"]),
    default="plus",
    help="Relative sign of the cat superposition",
)
@click.option("--eps", "epsilon", type=float, default=0.1, help="GKP peak width, in (0, 0.5)")
@click.option(
    "--L",
    "lattice",
    type=int,
    default=2,
    help="GKP lattice extent: peaks sit at |x| <= 2 L, floor(L / sqrt(pi)) on each side",
)
@click.option("--K", "photons", type=int, default=1, help="Photon number of the Fock approximation")
@click.option("--r", "radius", type=float, default=0.2, help="Ring radius of the Fock approximation")
@click.option("--squeezing", type=float, default=0.5, help="Squeezing parameter")
@click.option("--nbar", type=float, default=0.5, help="Thermal photon number")
@click.option("--eta", type=float, default=0.8, help="Transmissivity of the loss channel")
@click.option(
    "--energy-bound",
    type=float,
    default=1.0,
    help="Energy bound of randomly drawn states and channels",
)
@click.option("--seed", type=int, default=None, help="Seed of randomly drawn objects")
@click.option(
    "--out",
    "output",
    type=click.Path(path_type=Path),
    default=None,
    help="The JSON file to write, printed to stdout when omitted",
)
@logging_options
def make(
    kind: str,
    n_modes: int,
    alpha: float,
    sign: str,
    epsilon: float,
    lattice: int,
    photons: int,
    radius: float,
    squeezing: float,
    nbar: float,
    eta: float,
    energy_bound: float,
    seed: ty.Optional[int],
    output: ty.Optional[Path],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        obj = build_object(
            kind,
            n=n_modes,
            alpha=alpha,
            sign=1 if sign in ("plus", "+") else -1,
            epsilon=epsilon,
            lattice=lattice,
            photons=photons,
            radius=radius,
            squeezing=squeezing,
            nbar=nbar,
            eta=eta,
            energy_bound=energy_bound,
            seed=seed,
        )
        if output is None:
            click.echo(json.dumps(to_dict(obj), indent=2))
        else:
            dump(obj, output)
            logger.info("Wrote %s to '%s'", type(obj).__name__, output)


if __name__ == "__main__":
    make()
