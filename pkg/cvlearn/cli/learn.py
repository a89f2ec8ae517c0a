import json
import typing as ty
from pathlib import Path
import click
from ..bounds import SETTINGS
from ..exceptions import ConfigError
from ..learner import HYPOTHESIS_KINDS, LOSS_KINDS, OBJECTIVES, ROLES
from ..utils import LoggerConfig
from .base import cli, command_errors, logging_options, object_spec, run_experiment
from .sample import distribution_options, distribution_table


def optimizer_options(func: ty.Callable[..., ty.Any]) -> ty.Callable[..., ty.Any]:
    """Budget of the empirical risk minimisation shared by the learning commands"""
    for decorator in reversed(
        [
            click.option(
                "--population",
                type=int,
                default=24,
                help="Candidates drawn per generation of the search",
            ),
            click.option(
                "--generations",
                type=int,
                default=60,
                help="Generations per restart of the search",
            ),
            click.option(
                "--restarts",
                type=int,
                default=2,
                help="Independent restarts of the search",
            ),
            click.option(
                "--max-evaluations",
                type=int,
                default=20_000,
                help="Hard limit on empirical-loss evaluations per run",
            ),
            click.option(
                "--time-budget",
                type=float,
                default=None,
                envvar="CVLEARN_TIMEBUDGET",
                help="Wall-clock limit in seconds per run, after which the best point is kept",
            ),
            click.option(
                "--threads",
                type=int,
                default=None,
                help="Runs to execute in parallel, bounded by CVLEARN_THREADS",
            ),
        ]
    ):
        func = decorator(func)
    return func


def optimizer_table(
    population: int, generations: int, restarts: int, max_evaluations: int
) -> dict[str, ty.Any]:
    return {
        "population": population,
        "parents": max(1, population // 4),
        "generations": generations,
        "restarts": restarts,
        "max-evaluations": max_evaluations,
    }


@cli.command(
    name="learn-state",
    help="""Learns a state, channel or measurement from labelled examples by empirical
risk minimisation and reports its held-out generalization gap.

Examples are drawn from the target (a JSON document or a state shorthand) through
probes from the --dist family. The report lists the empirical loss eta reached, the
quantiles of the held-out gap and the fraction of test points exceeding --gamma.
""",
)
@click.option(
    "--target",
    type=str,
    default="random",
    help="The target object, a JSON file or a shorthand",
)
@click.option("--n", "n_modes", type=int, default=1, help="Number of modes")
@click.option(
    "--role",
    type=click.Choice(ROLES),
    default="state",
    help="Which part of the circuit the target fills",
)
@click.option(
    "--class",
    "hypothesis",
    type=click.Choice(HYPOTHESIS_KINDS),
    default="gaussian-state",
    help="The hypothesis class searched",
)
@distribution_options
@click.option("--T", "count", type=int, default=2000, help="Number of training examples")
@click.option(
    "--loss",
    type=click.Choice(LOSS_KINDS),
    default="quadratic",
    help="Per-example loss minimised",
)
@click.option(
    "--objective",
    type=click.Choice(OBJECTIVES),
    default="sum",
    help="Whether the worst or the summed per-example loss is minimised",
)
@click.option("--n-test", type=int, default=500, help="Held-out examples for the gap")
@click.option("--gamma", type=float, default=0.1, help="Margin of the exceedance fraction")
@click.option(
    "--eta-ref",
    type=float,
    default=0.0,
    help="Reference empirical loss the held-out gap is measured against",
)
@click.option(
    "--setting",
    type=click.Choice(SETTINGS),
    default="g",
    help="Label of the learning setting recorded with the results",
)
@optimizer_options
@click.option(
    "--seed",
    "seeds",
    type=int,
    multiple=True,
    default=(0,),
    help="Seeds of independent runs",
)
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="The JSON report to write, with the CSV next to it",
)
@logging_options
def learn_state(
    target: str,
    n_modes: int,
    role: str,
    hypothesis: str,
    dist: str,
    energy_bound: float,
    outcome_range: float,
    cutoff: int,
    random_channel: bool,
    count: int,
    loss: str,
    objective: str,
    n_test: int,
    gamma: float,
    eta_ref: float,
    setting: str,
    population: int,
    generations: int,
    restarts: int,
    max_evaluations: int,
    time_budget: ty.Optional[float],
    threads: ty.Optional[int],
    seeds: ty.Sequence[int],
    out: ty.Optional[Path],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        raw: dict[str, ty.Any] = {
            "kind": "learn-state",
            "seeds": list(seeds),
            "threads": threads,
            "time-budget": time_budget,
            "learn-state": {
                "target": object_spec(target),
                "n": n_modes,
                "role": role,
                "hypothesis": hypothesis,
                "T": count,
                "loss": loss,
                "objective": objective,
                "n-test": n_test,
                "gamma": gamma,
                "eta-ref": eta_ref,
                "setting": setting,
                "distribution": distribution_table(
                    dist, energy_bound, outcome_range, cutoff, random_channel
                ),
                "optimizer": optimizer_table(
                    population, generations, restarts, max_evaluations
                ),
            },
        }
        run_experiment(raw, out, raise_errors)


def _task_table(task: Path | None) -> dict[str, ty.Any]:
    if task is None:
        return {}
    try:
        table = json.loads(task.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Could not parse task '{task}' as JSON: {e}")
    if not isinstance(table, dict):
        raise ConfigError(f"Task '{task}' must hold a JSON object")
    return table


@cli.command(
    name="learn-task",
    help="""Learns a channel that solves an encoded discrimination task, minimising the
summed failure probability over sampled inputs, and reports its exact success
probability.

--task is a JSON object with the keys 'alpha', 'n', 'encoding' and 'grid-axes'; without
it the task discriminates the coherent states of amplitude -alpha and alpha.
""",
)
@click.option(
    "--task",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="JSON description of the encoded task",
)
@click.option(
    "--alpha",
    type=float,
    default=None,
    help="Amplitude of the default coherent-state task",
)
@click.option(
    "--class",
    "hypothesis",
    type=click.Choice(HYPOTHESIS_KINDS),
    default="gaussian-channel",
    help="The hypothesis class searched",
)
@click.option("--T", "count", type=int, default=500, help="Number of sampled inputs")
@optimizer_options
@click.option(
    "--seed",
    "seeds",
    type=int,
    multiple=True,
    default=(0,),
    help="Seeds of independent runs",
)
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="The JSON report to write, with the CSV next to it",
)
@logging_options
def learn_task(
    task: ty.Optional[Path],
    alpha: ty.Optional[float],
    hypothesis: str,
    count: int,
    population: int,
    generations: int,
    restarts: int,
    max_evaluations: int,
    time_budget: ty.Optional[float],
    threads: ty.Optional[int],
    seeds: ty.Sequence[int],
    out: ty.Optional[Path],
    loggers: ty.List[LoggerConfig],
    additional_loggers: ty.List[str],
    raise_errors: bool,
) -> None:
    with command_errors(loggers, additional_loggers, raise_errors):
        table = _task_table(task)
        if alpha is not None:
            table["alpha"] = alpha
        table.update(
            hypothesis=hypothesis,
            T=count,
            optimizer=optimizer_table(population, generations, restarts, max_evaluations),
        )
        raw: dict[str, ty.Any] = {
            "kind": "learn-task",
            "seeds": list(seeds),
            "threads": threads,
            "time-budget": time_budget,
            "learn-task": table,
        }
        run_experiment(raw, out, raise_errors)


if __name__ == "__main__":
    learn_state()
