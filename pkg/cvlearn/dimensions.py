"""Empirical complexity measures of small function classes: certified fat-shattering
lower bounds and greedy covering-number estimates of sampled restrictions.

Everything computed here is a lower estimate; upper bounds come from `cvlearn.bounds`.
"""
import itertools
import math
import typing as ty
from concurrent.futures import ThreadPoolExecutor
import attrs
import numpy as np
from .exceptions import ValidationError
from .gg import GGConstraintConstants, gg_b_constants, gg_outcome_probability, make_cat_state
from .learner import HypothesisParam, SampleDistribution, param_count
from .optimize import OptimizerConfig, minimize
from .serialization import to_dict
from .symplectic import (
    GaussianChannel,
    GeneralDyneEffect,
    gaussian_effect_probability,
)
from .utils import logger, worker_count

METRICS = ("euclidean", "scaled-1-norm")
MAX_SHATTER_SIZE = 12

Evaluator = ty.Callable[[np.ndarray, ty.Any], float]
InputSampler = ty.Callable[[np.random.Generator, int], list[ty.Any]]
ParamSampler = ty.Callable[[np.random.Generator, int], np.ndarray]


@attrs.frozen(eq=False)
class FunctionClassHandle:
    """A parametrised class of real functions f_theta(x) with samplers for its
    parameters and inputs

    Parameters
    ----------
    tag : str
        name of the class
    param_dim : int
        length of theta
    evaluator : callable
        (theta, x) -> f_theta(x), defined for every real theta
    sample_inputs : callable
        (rng, count) -> list of inputs
    sample_params : callable
        (rng, count) -> array of shape (count, param_dim)
    output_range : tuple[float, float]
        declared range of the values
    pdim_tag : str, optional
        tag of `cvlearn.bounds.pdim_upper_bound` bounding this class
    n : int
        number of modes of the circuits behind the class
    constants : callable, optional
        (theta, x) -> GGConstraintConstants for GG classes
    """

    tag: str
    param_dim: int
    evaluator: Evaluator
    sample_inputs: InputSampler
    sample_params: ParamSampler
    output_range: tuple[float, float] = (0.0, 1.0)
    pdim_tag: ty.Optional[str] = None
    n: int = 1
    constants: ty.Optional[ty.Callable[[np.ndarray, ty.Any], GGConstraintConstants]] = None

    @property
    def sup_norm(self) -> float:
        return max(abs(self.output_range[0]), abs(self.output_range[1]))

    def evaluate(self, theta: np.ndarray, inputs: ty.Sequence[ty.Any]) -> np.ndarray:
        return np.array([self.evaluator(theta, x) for x in inputs])

    def restrict(self, thetas: np.ndarray, inputs: ty.Sequence[ty.Any]) -> np.ndarray:
        "Values on `inputs` of every sampled function, shape (len(thetas), len(inputs))"
        return np.array([self.evaluate(t, inputs) for t in thetas]).reshape(len(thetas), len(inputs))


def _scalar_inputs(low: float, high: float) -> InputSampler:
    def sample(rng: np.random.Generator, count: int) -> list[ty.Any]:
        return list(rng.uniform(low, high, count))

    return sample


def constant_class() -> FunctionClassHandle:
    "f_c(x) = c for c in [0, 1] (theta clipped into the unit interval)"
    return FunctionClassHandle(
        tag="constant",
        param_dim=1,
        evaluator=lambda theta, x: float(np.clip(theta[0], 0.0, 1.0)),
        sample_inputs=_scalar_inputs(-1.0, 1.0),
        sample_params=lambda rng, count: rng.uniform(-0.5, 1.5, (count, 1)),
        pdim_tag="f_const",
    )


def synthetic_class(
    func: ty.Callable[[np.ndarray, float], float],
    param_dim: int,
    input_range: tuple[float, float] = (-1.0, 1.0),
    param_scale: float = 1.0,
    output_range: tuple[float, float] = (0.0, 1.0),
    tag: str = "synthetic",
) -> FunctionClassHandle:
    "Class of an arbitrary bounded function of scalar inputs"
    return FunctionClassHandle(
        tag=tag,
        param_dim=param_dim,
        evaluator=lambda theta, x: float(func(theta, x)),
        sample_inputs=_scalar_inputs(*input_range),
        sample_params=lambda rng, count: param_scale * rng.normal(size=(count, param_dim)),
        output_range=output_range,
    )


def sine_class(frequency_scale: float = 5.0) -> FunctionClassHandle:
    "(1 + sin(a x)) / 2, a class of unbounded pseudo-dimension with one parameter"
    return synthetic_class(
        lambda theta, x: (1 + math.sin(theta[0] * x)) / 2,
        1,
        input_range=(0.1, 1.0),
        param_scale=frequency_scale,
        tag="sine",
    )


def _heterodyne_inputs(n: int, span: float) -> InputSampler:
    def sample(rng: np.random.Generator, count: int) -> list[ty.Any]:
        return list(rng.uniform(-span, span, (count, 2 * n)))

    return sample


def displacement_class(n: int = 1, span: float = 2.0) -> FunctionClassHandle:
    """Coherent states |m> probed by heterodyne effects at points m': the Gaussian
    class restricted to displacements, f_m(m') = exp(-|m - m'|^2 / 2)"""
    return FunctionClassHandle(
        tag="f_g-displacement",
        param_dim=2 * n,
        evaluator=lambda theta, x: float(np.exp(-np.sum((theta - x) ** 2) / 2)),
        sample_inputs=_heterodyne_inputs(n, span),
        sample_params=lambda rng, count: rng.uniform(-span, span, (count, 2 * n)),
        pdim_tag="f_g",
        n=n,
    )


def gaussian_state_class(n: int = 1, energy_bound: float = 1.0) -> FunctionClassHandle:
    """Full Gaussian state class probed by random general-dyne effects after the
    identity channel"""
    dist = SampleDistribution("gaussian-general-dyne", n=n, energy_bound=energy_bound)
    identity = GaussianChannel.identity(n)

    def evaluate(theta: np.ndarray, effect: GeneralDyneEffect) -> float:
        state = HypothesisParam("gaussian-state", n, theta).decode()
        return gaussian_effect_probability(state, identity, effect)  # type: ignore[arg-type]

    def inputs(rng: np.random.Generator, count: int) -> list[ty.Any]:
        return [dist.draw_probe(rng, "state").effect for _ in range(count)]

    size = param_count("gaussian-state", n)
    return FunctionClassHandle(
        tag="f_g",
        param_dim=size,
        evaluator=evaluate,
        sample_inputs=inputs,
        sample_params=lambda rng, count: rng.normal(size=(count, size)),
        pdim_tag="f_g",
        n=n,
    )


def cat_family_class(alpha: float = 1.0, sign: int = 1, span: float = 2.0) -> FunctionClassHandle:
    """Fixed-coefficient GG states: Gaussian unitaries applied to a single-mode cat,
    probed by heterodyne effects"""
    template = make_cat_state(alpha, sign)
    size = param_count("gg-fixed-coeff", 1)

    def decode(theta: np.ndarray) -> ty.Any:
        return HypothesisParam("gg-fixed-coeff", 1, theta, template).decode()

    def evaluate(theta: np.ndarray, point: np.ndarray) -> float:
        return gg_outcome_probability(decode(theta), None, GeneralDyneEffect.heterodyne(point))

    def constants(theta: np.ndarray, point: np.ndarray) -> GGConstraintConstants:
        return gg_b_constants(decode(theta), None, GeneralDyneEffect.heterodyne(point))

    return FunctionClassHandle(
        tag="f_gg-cat",
        param_dim=size,
        evaluator=evaluate,
        sample_inputs=_heterodyne_inputs(1, span),
        sample_params=lambda rng, count: 0.5 * rng.normal(size=(count, size)),
        constants=constants,
    )


def product_class(first: FunctionClassHandle, second: FunctionClassHandle) -> FunctionClassHandle:
    """f(x) = f1(x) f2(x) with the parameters of both classes concatenated; inputs are
    drawn from the first class"""
    split = first.param_dim
    corners = [a * b for a in first.output_range for b in second.output_range]
    return FunctionClassHandle(
        tag=f"{first.tag}*{second.tag}",
        param_dim=first.param_dim + second.param_dim,
        evaluator=lambda theta, x: first.evaluator(theta[:split], x)
        * second.evaluator(theta[split:], x),
        sample_inputs=first.sample_inputs,
        sample_params=lambda rng, count: np.hstack(
            [first.sample_params(rng, count), second.sample_params(rng, count)]
        ),
        output_range=(min(corners), max(corners)),
        n=first.n,
    )


def measured_constants(
    handle: FunctionClassHandle, thetas: np.ndarray, inputs: ty.Sequence[ty.Any]
) -> GGConstraintConstants:
    "Worst-case b-constants over sampled functions and inputs"
    if handle.constants is None:
        raise ValidationError(f"Class '{handle.tag}' has no GG constraint constants")
    measured = [handle.constants(t, x) for t in thetas for x in inputs]
    return GGConstraintConstants(
        b1=max(c.b1 for c in measured),
        b2=max(c.b2 for c in measured),
        b3=min(c.b3 for c in measured),
    )


Pattern = tuple[int, ...]


def _margin_violation(values: np.ndarray, pattern: Pattern, thresholds: np.ndarray, gamma: float) -> float:
    bits = np.asarray(pattern, dtype=bool)
    above = np.maximum(0.0, thresholds + gamma - values)
    below = np.maximum(0.0, values - thresholds + gamma)
    return float(np.max(np.where(bits, above, below)))


@attrs.define
class ShatterCertificate:
    """Inputs, thresholds and one witness parameter vector per sign pattern"""

    inputs: list[ty.Any]
    thresholds: np.ndarray
    gamma: float
    witnesses: dict[Pattern, np.ndarray]

    @property
    def k(self) -> int:
        return len(self.inputs)

    def verify(self, handle: FunctionClassHandle, gamma: float | None = None) -> bool:
        "Re-evaluates every witness and checks its margins"
        gamma = self.gamma if gamma is None else gamma
        patterns = set(itertools.product((0, 1), repeat=self.k))
        if set(self.witnesses) != patterns:
            return False
        return all(
            _margin_violation(handle.evaluate(theta, self.inputs), pattern, self.thresholds, gamma)
            <= 0
            for pattern, theta in self.witnesses.items()
        )

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "k": self.k,
            "gamma": self.gamma,
            "inputs": [
                np.asarray(x).tolist() if isinstance(x, (np.ndarray, float)) else to_dict(x)
                for x in self.inputs
            ],
            "thresholds": self.thresholds.tolist(),
            "witnesses": {
                "".join(map(str, p)): theta.tolist() for p, theta in sorted(self.witnesses.items())
            },
        }


@attrs.define
class FatShatteringResult:

    tag: str
    gamma: float
    k_certified: int
    certificates: dict[int, ShatterCertificate]
    budget_exhausted: bool
    evaluations: int

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "class": self.tag,
            "gamma": self.gamma,
            "k_certified": self.k_certified,
            "budget_exhausted": self.budget_exhausted,
            "evaluations": self.evaluations,
            "certificates": {str(k): c.to_dict() for k, c in self.certificates.items()},
        }


def _pattern_codes(values: np.ndarray, thresholds: np.ndarray, gamma: float) -> np.ndarray:
    "Integer code of the pattern realised by each row, -1 where a margin fails"
    high = values >= thresholds + gamma
    low = values <= thresholds - gamma
    codes = high.astype(int) @ (1 << np.arange(values.shape[1]))[::-1]
    return np.where(np.all(high | low, axis=1), codes, -1)  # type: ignore[no-any-return]


def _realised(values: np.ndarray, thresholds: np.ndarray, gamma: float) -> int:
    codes = _pattern_codes(values, thresholds, gamma)
    return int(np.unique(codes[codes >= 0]).size)


def _fit_thresholds(values: np.ndarray, gamma: float, sweeps: int = 2, grid: int = 21) -> np.ndarray:
    """Thresholds maximising the number of patterns realised by the sampled functions,
    by coordinate search from the midranges"""
    lows, highs = values.min(axis=0), values.max(axis=0)
    thresholds = (lows + highs) / 2
    best = _realised(values, thresholds, gamma)
    for _ in range(sweeps):
        for i in range(values.shape[1]):
            if highs[i] - lows[i] <= 2 * gamma:
                continue
            for candidate in np.linspace(lows[i] + gamma, highs[i] - gamma, grid):
                trial = thresholds.copy()
                trial[i] = candidate
                count = _realised(values, trial, gamma)
                if count > best:
                    best, thresholds = count, trial
    return thresholds  # type: ignore[no-any-return]


def _search_witness(
    handle: FunctionClassHandle,
    inputs: list[ty.Any],
    pattern: Pattern,
    thresholds: np.ndarray,
    gamma: float,
    config: OptimizerConfig,
    rng: np.random.Generator,
    x0: np.ndarray,
) -> tuple[np.ndarray | None, int, bool]:
    def objective(theta: np.ndarray) -> float:
        return _margin_violation(handle.evaluate(theta, inputs), pattern, thresholds, gamma)

    result = minimize(objective, handle.param_dim, config, rng, x0=x0)
    found = result.value <= 0
    exhausted = not found and result.evaluations >= config.max_evaluations
    return (result.x if found else None), result.evaluations, exhausted


def _try_shatter(
    handle: FunctionClassHandle,
    inputs: list[ty.Any],
    gamma: float,
    pool: np.ndarray,
    budget: int,
    rng: np.random.Generator,
    workers: int,
) -> tuple[ShatterCertificate | None, int, bool]:
    k = len(inputs)
    values = handle.restrict(pool, inputs)
    evaluations = len(pool)
    thresholds = _fit_thresholds(values, gamma)
    codes = _pattern_codes(values, thresholds, gamma)
    witnesses: dict[Pattern, np.ndarray] = {}
    for row, code in enumerate(codes):
        if code >= 0:
            pattern = tuple(int(b) for b in format(code, f"0{k}b"))
            witnesses.setdefault(pattern, pool[row])
    missing = [p for p in itertools.product((0, 1), repeat=k) if p not in witnesses]
    exhausted = False
    if missing:
        per_pattern = max(budget // len(missing), 50)
        config = OptimizerConfig(
            population=16,
            parents=4,
            generations=40,
            restarts=1,
            sigma0=0.5,
            refine=False,
            max_evaluations=per_pattern,
            target=0.0,
        )
        seeds = rng.integers(2**32, size=len(missing))
        starts = []
        for pattern in missing:
            violations = [
                _margin_violation(v, pattern, thresholds, gamma) for v in values
            ]
            starts.append(pool[int(np.argmin(violations))])
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(
                    _search_witness,
                    handle,
                    inputs,
                    pattern,
                    thresholds,
                    gamma,
                    config,
                    np.random.default_rng(seed),
                    start,
                )
                for pattern, seed, start in zip(missing, seeds, starts)
            ]
            for pattern, future in zip(missing, futures):
                theta, used, ran_out = future.result()
                evaluations += used
                exhausted |= ran_out
                if theta is not None:
                    witnesses[pattern] = theta
    certificate = ShatterCertificate(list(inputs), thresholds, gamma, witnesses)
    if certificate.verify(handle):
        return certificate, evaluations, exhausted
    return None, evaluations, exhausted


def fat_shattering_lower_bound(
    handle: FunctionClassHandle,
    gamma: float,
    k_max: int = 6,
    budget: int = 100_000,
    seed: int | None = None,
    candidate_inputs: ty.Sequence[ty.Any] | None = None,
    attempts: int = 3,
    pool_size: int = 256,
    workers: int | None = None,
) -> FatShatteringResult:
    """Largest k <= k_max for which a gamma-shattered input set was found and
    re-verified

    For every k, input sets are drawn (or taken from `candidate_inputs`), thresholds
    are fitted to a random pool of functions, and every sign pattern the pool does not
    realise is searched for with the evolutionary optimiser on the largest margin
    violation. The search stops at the first k without a certificate.

    Parameters
    ----------
    handle : FunctionClassHandle
        the class
    gamma : float
        margin
    k_max : int
        largest set size tried, at most 12
    budget : int
        evaluations of the restricted class per input set
    seed : int, optional
        seed of the search
    candidate_inputs : sequence, optional
        fixed inputs to use instead of sampled ones (the first k are used)
    attempts : int
        input sets tried per k
    pool_size : int
        random functions evaluated before the targeted search
    workers : int, optional
        threads searching missing patterns, bounded by CVLEARN_THREADS
    """
    if not 1 <= k_max <= MAX_SHATTER_SIZE:
        raise ValidationError(f"Need 1 <= k_max <= {MAX_SHATTER_SIZE}, found {k_max}")
    if gamma <= 0:
        raise ValidationError(f"Margin must be positive, found {gamma}")
    rng = np.random.default_rng(seed)
    workers = worker_count(workers)
    certificates: dict[int, ShatterCertificate] = {}
    evaluations = 0
    exhausted = False
    for k in range(1, k_max + 1):
        if candidate_inputs is not None and len(candidate_inputs) < k:
            break
        certificate = None
        for attempt in range(attempts if candidate_inputs is None else 1):
            if candidate_inputs is not None:
                inputs = list(candidate_inputs[:k])
            else:
                inputs = handle.sample_inputs(rng, k)
            pool = handle.sample_params(rng, pool_size)
            certificate, used, ran_out = _try_shatter(
                handle, inputs, gamma, pool, budget, rng, workers
            )
            evaluations += used
            exhausted |= ran_out
            if certificate is not None:
                break
            logger.debug("No %d-point certificate for '%s' on attempt %d", k, handle.tag, attempt)
        if certificate is None:
            break
        certificates[k] = certificate
        logger.debug("Certified %d points of '%s' at margin %s", k, handle.tag, gamma)
    k_certified = max(certificates, default=0)
    logger.info(
        "Fat-shattering search on '%s' (gamma=%s) certified k=%d using %d evaluations",
        handle.tag,
        gamma,
        k_certified,
        evaluations,
    )
    return FatShatteringResult(
        tag=handle.tag,
        gamma=gamma,
        k_certified=k_certified,
        certificates=certificates,
        budget_exhausted=exhausted,
        evaluations=evaluations,
    )


def _distances(points: np.ndarray, centres: np.ndarray, metric: str) -> np.ndarray:
    diff = points[:, None, :] - centres[None, :, :]
    if metric == "euclidean":
        return np.sqrt(np.mean(diff**2, axis=-1))  # type: ignore[no-any-return]
    return np.mean(np.abs(diff), axis=-1)  # type: ignore[no-any-return]


@attrs.define
class CoverEstimate:
    """Greedy eps-cover of a sampled restriction of a class to k inputs.

    The greedy centres are eps-separated, so `size` is a lower estimate of the covering
    number of the whole class."""

    k: int
    eps: float
    size: int
    metric: str
    verified: bool
    samples: int
    centres: np.ndarray = attrs.field(repr=False)

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "k": self.k,
            "eps": self.eps,
            "size": self.size,
            "metric": self.metric,
            "verified": self.verified,
            "samples": self.samples,
        }


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ValidationError(f"Unknown metric '{metric}', expected one of {METRICS}")


def greedy_cover(points: np.ndarray, eps: float, metric: str = "euclidean") -> np.ndarray:
    "Indices of centres chosen greedily so that every point lies within eps of one"
    _check_metric(metric)
    centres: list[int] = []
    nearest = np.full(len(points), np.inf)
    for i in range(len(points)):
        if nearest[i] <= eps:
            continue
        centres.append(i)
        nearest = np.minimum(nearest, _distances(points, points[i : i + 1], metric)[:, 0])
    return np.array(centres, dtype=int)


def is_cover(points: np.ndarray, centres: np.ndarray, eps: float, metric: str, chunk: int = 1024) -> bool:
    for start in range(0, len(points), chunk):
        block = _distances(points[start : start + chunk], centres, metric)
        if np.any(block.min(axis=1) > eps + 1e-12):
            return False
    return True


def _restricted_sample(
    handle: FunctionClassHandle, k: int, sample_budget: int, rng: np.random.Generator
) -> np.ndarray:
    if k < 1 or sample_budget < 1:
        raise ValidationError(f"Need k >= 1 and a positive sample budget, found {k}, {sample_budget}")
    inputs = handle.sample_inputs(rng, k)
    return handle.restrict(handle.sample_params(rng, sample_budget), inputs)


def _estimate(points: np.ndarray, eps: float, metric: str) -> CoverEstimate:
    if eps <= 0:
        raise ValidationError(f"Cover radius must be positive, found {eps}")
    idx = greedy_cover(points, eps, metric)
    centres = points[idx]
    return CoverEstimate(
        k=points.shape[1],
        eps=eps,
        size=len(idx),
        metric=metric,
        verified=is_cover(points, centres, eps, metric),
        samples=len(points),
        centres=centres,
    )


def covering_number_estimate(
    handle: FunctionClassHandle,
    eps: float,
    k: int,
    sample_budget: int = 2000,
    seed: int | None = None,
    metric: str = "euclidean",
) -> CoverEstimate:
    """Greedy cover of `sample_budget` functions restricted to k random inputs, with the
    normalised distances sqrt(mean (f - g)^2) ("euclidean") or mean |f - g|
    ("scaled-1-norm")"""
    _check_metric(metric)
    points = _restricted_sample(handle, k, sample_budget, np.random.default_rng(seed))
    estimate = _estimate(points, eps, metric)
    logger.debug("Cover of '%s' at eps=%s, k=%d: %d centres", handle.tag, eps, k, estimate.size)
    return estimate


def cover_profile(
    handle: FunctionClassHandle,
    eps_grid: ty.Sequence[float],
    k: int,
    sample_budget: int = 2000,
    seed: int | None = None,
    metric: str = "euclidean",
) -> list[CoverEstimate]:
    """Covers of one sampled restriction over a grid of radii, in grid order. A cover
    found at a finer radius is reused at coarser ones when it is smaller, so sizes never
    increase with eps."""
    _check_metric(metric)
    points = _restricted_sample(handle, k, sample_budget, np.random.default_rng(seed))
    by_eps: dict[float, CoverEstimate] = {}
    best: CoverEstimate | None = None
    for eps in sorted(set(float(e) for e in eps_grid)):
        estimate = _estimate(points, eps, metric)
        if best is not None and best.size < estimate.size:
            estimate = attrs.evolve(best, eps=eps)
        by_eps[eps] = best = estimate
    return [by_eps[float(e)] for e in eps_grid]


@attrs.define
class ProductCoverCheck:
    """Covers of two classes combined into a cover of their product at radius
    B2 eps1 + B1 eps2, with B1, B2 the sup-norms of the factors"""

    eps: float
    first_size: int
    second_size: int
    product_size: int
    holds: bool

    def to_dict(self) -> dict[str, ty.Any]:
        return attrs.asdict(self)


def check_product_cover(
    first: FunctionClassHandle,
    second: FunctionClassHandle,
    eps1: float,
    eps2: float,
    k: int,
    sample_budget: int = 1000,
    seed: int | None = None,
    metric: str = "euclidean",
) -> ProductCoverCheck:
    """Builds eps1- and eps2-covers of the factors on shared inputs and checks that
    their pairwise products cover the sampled product functions"""
    _check_metric(metric)
    rng = np.random.default_rng(seed)
    inputs = first.sample_inputs(rng, k)
    values1 = first.restrict(first.sample_params(rng, sample_budget), inputs)
    values2 = second.restrict(second.sample_params(rng, sample_budget), inputs)
    centres1 = values1[greedy_cover(values1, eps1, metric)]
    centres2 = values2[greedy_cover(values2, eps2, metric)]
    eps = second.sup_norm * eps1 + first.sup_norm * eps2
    products = (centres1[:, None, :] * centres2[None, :, :]).reshape(-1, k)
    holds = is_cover(values1 * values2, products, eps, metric)
    return ProductCoverCheck(
        eps=eps,
        first_size=len(centres1),
        second_size=len(centres2),
        product_size=len(products),
        holds=holds,
    )
