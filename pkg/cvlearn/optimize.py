"""Derivative-free minimisation used for empirical risk minimisation and for searching
shattering witnesses"""
import time
import typing as ty
import attrs
import numpy as np
import scipy.optimize
from .exceptions import BudgetExhaustedError
from .utils import logger


@attrs.define
class OptimizerConfig:
    """Budget and shape of the evolutionary search

    Parameters
    ----------
    population : int
        candidates drawn per generation
    parents : int
        best-ranked candidates recombined into the next search centre
    generations : int
        generations per restart
    restarts : int
        independent restarts from fresh random centres (the first starts from `x0`
        when given)
    sigma0 : float
        initial mutation scale
    refine : bool
        polish the best point with Powell's direction-set method
    max_evaluations : int
        hard limit on objective evaluations over all stages
    time_budget : float or None
        wall-clock limit in seconds, after which the best point so far is returned
    tol : float
        stop a restart once the objective improves by less than this over a generation
        window, or reaches `target`
    target : float or None
        objective value that counts as solved and stops the search early
    """

    population: int = 24
    parents: int = 6
    generations: int = 60
    restarts: int = 2
    sigma0: float = 0.5
    refine: bool = True
    max_evaluations: int = 20_000
    time_budget: ty.Optional[float] = None
    tol: float = 1e-7
    target: ty.Optional[float] = None

    def __attrs_post_init__(self) -> None:
        if self.parents < 1 or self.parents > self.population:
            raise ValueError(
                f"Need 1 <= parents <= population, found {self.parents}, {self.population}"
            )


@attrs.define
class OptimizeResult:

    x: np.ndarray
    value: float
    converged: bool
    evaluations: int
    trace: list[float] = attrs.field(factory=list)
    wall_time: float = 0.0


class _Budget:
    """Counts evaluations and keeps the best point seen"""

    def __init__(self, objective: ty.Callable[[np.ndarray], float], config: OptimizerConfig):
        self.objective = objective
        self.config = config
        self.evaluations = 0
        self.best_x: np.ndarray | None = None
        self.best_value = np.inf
        self.start = time.monotonic()

    @property
    def exhausted(self) -> bool:
        if self.evaluations >= self.config.max_evaluations:
            return True
        budget = self.config.time_budget
        return budget is not None and time.monotonic() - self.start > budget

    @property
    def solved(self) -> bool:
        return self.config.target is not None and self.best_value <= self.config.target

    def __call__(self, x: np.ndarray) -> float:
        if self.exhausted:
            raise BudgetExhaustedError(
                f"Objective budget of {self.config.max_evaluations} evaluations spent"
            )
        self.evaluations += 1
        value = float(self.objective(x))
        if not np.isfinite(value):
            value = np.inf
        if value < self.best_value:
            self.best_value = value
            self.best_x = np.array(x, dtype=float)
        return value


def _rank_weights(parents: int) -> np.ndarray:
    weights = np.log(parents + 0.5) - np.log(np.arange(1, parents + 1))
    return weights / weights.sum()  # type: ignore[no-any-return]


def _evolve(
    budget: _Budget,
    centre: np.ndarray,
    rng: np.random.Generator,
    trace: list[float],
) -> bool:
    """One restart of a (mu/mu_w, lambda) evolution strategy with rank-weighted
    recombination and success-based step-size control. Returns whether it stalled
    (converged) rather than ran out of generations or budget."""
    config = budget.config
    weights = _rank_weights(config.parents)
    sigma = config.sigma0
    centre_value = budget(centre)
    window: list[float] = [centre_value]
    for _ in range(config.generations):
        steps = rng.normal(size=(config.population, centre.size))
        candidates = centre + sigma * steps
        values = np.array([budget(c) for c in candidates])
        order = np.argsort(values, kind="stable")[: config.parents]
        new_centre = weights @ candidates[order]
        successes = np.mean(values < centre_value)
        # aim for a success rate near one fifth
        sigma *= np.exp((successes - 0.2) / 0.8)
        centre = new_centre
        centre_value = budget(centre)
        trace.append(budget.best_value)
        window.append(budget.best_value)
        if budget.solved:
            return True
        if len(window) > 10 and window[-11] - window[-1] < config.tol:
            return True
        if sigma < 1e-9:
            return True
    return False


def minimize(
    objective: ty.Callable[[np.ndarray], float],
    dim: int,
    config: OptimizerConfig | None = None,
    rng: np.random.Generator | None = None,
    x0: np.ndarray | None = None,
) -> OptimizeResult:
    """Evolutionary search with restarts followed by a Powell refinement of the best
    point. The best point seen is returned even when the budget runs out, flagged as
    not converged."""
    config = config or OptimizerConfig()
    rng = rng or np.random.default_rng()
    budget = _Budget(objective, config)
    trace: list[float] = []
    converged = False
    try:
        for restart in range(config.restarts + 1):
            if restart == 0 and x0 is not None:
                centre = np.asarray(x0, dtype=float)
            else:
                centre = rng.normal(size=dim)
            converged = _evolve(budget, centre, rng, trace) or converged
            logger.debug(
                "Restart %d finished at %.6g after %d evaluations",
                restart,
                budget.best_value,
                budget.evaluations,
            )
            if budget.solved:
                break
        if config.refine and not budget.solved and budget.best_x is not None:
            remaining = config.max_evaluations - budget.evaluations
            if remaining > 0:
                scipy.optimize.minimize(
                    budget,
                    budget.best_x,
                    method="Powell",
                    options={"maxfev": remaining, "xtol": 1e-6, "ftol": config.tol},
                )
                trace.append(budget.best_value)
    except BudgetExhaustedError:
        logger.warning(
            "Optimisation stopped after %d evaluations without converging (best %.6g)",
            budget.evaluations,
            budget.best_value,
        )
        converged = False
    assert budget.best_x is not None
    return OptimizeResult(
        x=budget.best_x,
        value=budget.best_value,
        converged=converged or budget.solved,
        evaluations=budget.evaluations,
        trace=trace,
        wall_time=time.monotonic() - budget.start,
    )
